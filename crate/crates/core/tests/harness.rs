use covlab::harness::config::Tolerances;
use covlab::harness::report::{Comparison, Margin};
use covlab::harness::schlieder::spectral_projection;
use covlab::harness::{run_spinstat, schlieder_check, verify, FactorModel, RunConfig, SchliederOutcome, SpinStatReport};
use covlab::linalg::{cx, CMat};
use covlab::Error;
use proptest::prelude::*;

fn diag(values: &[f64]) -> CMat {
    CMat::from_fn(values.len(), values.len(), |r, c| if r == c { cx(values[r]) } else { cx(0.0) })
}

#[test]
fn factor_model_is_faithful_and_its_factors_commute() {
    let m = FactorModel::new(3, 4, 0.5).unwrap();
    assert_eq!(m.dim(), 12);
    assert!(m.faithfulness() > 0.0);
    let x = diag(&[1.0, -2.0, 0.5]);
    let y = diag(&[0.0, 1.0, 3.0, -1.0]);
    assert_eq!(m.commutation_defect(std::slice::from_ref(&x), std::slice::from_ref(&y)), 0.0);
    let one = m.expectation(&CMat::identity(12, 12));
    assert!((one.re - 1.0).abs() < 1e-14 && one.im.abs() < 1e-14);
    assert!(FactorModel::new(0, 2, 0.5).is_err());
    assert!(FactorModel::new(2, 2, 0.0).is_err());
}

#[test]
fn schlieder_names_the_vanishing_factor() {
    let m = FactorModel::new(3, 3, 0.5).unwrap();
    let zero = CMat::zeros(3, 3);
    let p = diag(&[1.0, 0.0, 1.0]);
    assert_eq!(schlieder_check(&m, &m.left(&zero), &m.right(&p)).unwrap(), SchliederOutcome::A1Zero);
    assert_eq!(schlieder_check(&m, &m.left(&p), &m.right(&zero)).unwrap(), SchliederOutcome::A2Zero);
}

#[test]
fn schlieder_rejects_a_nonvanishing_product() {
    let m = FactorModel::new(3, 3, 0.5).unwrap();
    let p = spectral_projection(&diag(&[0.2, -1.0, 3.0]), 0.0, 1.0);
    assert_eq!(p, diag(&[1.0, 0.0, 0.0]));
    let r = schlieder_check(&m, &m.left(&p), &m.right(&p));
    assert!(matches!(r, Err(Error::Precondition(_))));
}

#[test]
fn schlieder_rejects_operators_outside_the_factors() {
    let m = FactorModel::new(2, 2, 0.5).unwrap();
    let swap = CMat::from_fn(4, 4, |r, c| {
        let (a, b) = (r / 2, r % 2);
        cx(f64::from(u8::from(c == b * 2 + a)))
    });
    assert!(schlieder_check(&m, &swap, &CMat::zeros(4, 4)).is_err());
}

#[test]
fn config_defaults_roundtrip_through_toml_and_json() {
    let cfg = RunConfig::from_toml("").unwrap();
    assert_eq!(cfg, RunConfig::default());
    let back: RunConfig = serde_json::from_str(&cfg.to_json()).unwrap();
    assert_eq!(back, cfg);
    let text = toml::to_string(&cfg).unwrap();
    assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
}

#[test]
fn config_rejects_unknown_keys_and_bad_values() {
    assert!(matches!(RunConfig::from_toml("seed = 1\nbogus = 2\n"), Err(Error::Config(_))));
    assert!(matches!(RunConfig::from_toml("[fields]\nscalar_mass = -1.0\n"), Err(Error::Config(_))));
    assert!(matches!(RunConfig::from_toml("tol_scale = 0.0\n"), Err(Error::Config(_))));
    let cfg = RunConfig::from_toml("seed = 9\n[lattice]\nnx = 128\n").unwrap();
    assert_eq!((cfg.seed, cfg.lattice.nx, cfg.lattice.nt), (9, 128, RunConfig::default().lattice.nt));
}

#[test]
fn tolerance_scaling_loosens_every_check() {
    let t = Tolerances::default();
    let s = t.scaled(10.0);
    assert_eq!(s.locality, 10.0 * t.locality);
    assert_eq!(s.witness, t.witness / 10.0);
    assert_eq!(s.car, 10.0 * t.car);
}

#[test]
fn verify_detects_tampering() {
    let report = run_spinstat(&RunConfig::default()).unwrap().report;
    assert!(report.confirmed());
    assert!(verify(&report).is_empty());

    let mut flipped = report.clone();
    flipped.stages[2].margins[0].pass = !flipped.stages[2].margins[0].pass;
    assert!(!verify(&flipped).is_empty());

    let mut moved = report.clone();
    let m = &mut moved.stages[3].margins[0];
    m.value = m.threshold * 10.0 + 1.0;
    assert!(!verify(&moved).is_empty());

    let mut relabelled = report.clone();
    relabelled.verdict = "failed at stage 1 (geometry): nothing".into();
    assert!(!verify(&relabelled).is_empty());

    let back = SpinStatReport::from_json(&report.to_json()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn sabotage_stops_the_pipeline_at_the_deformation() {
    let cfg = RunConfig::from_toml("[deformation]\nsabotage = \"future-leak\"\n").unwrap();
    let report = run_spinstat(&cfg).unwrap().report;
    assert!(!report.confirmed());
    assert!(report.verdict.starts_with("failed at stage 2"), "{}", report.verdict);
    assert!(verify(&report).is_empty());
}

fn comparison() -> impl Strategy<Value = Comparison> {
    prop_oneof![Just(Comparison::Lt), Just(Comparison::Le), Just(Comparison::Gt), Just(Comparison::Ge)]
}

proptest! {
    #[test]
    fn margins_record_their_own_comparison(v in -1e3..1e3_f64, t in -1e3..1e3_f64, c in comparison()) {
        let m = Margin::new("m", v, c, t);
        prop_assert_eq!(m.pass, c.holds(v, t));
        let strict = matches!(c, Comparison::Lt | Comparison::Gt);
        prop_assert_eq!(c.holds(t, t), !strict);
        let back: Margin = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn schlieder_finds_the_zero_factor(
        d in 2usize..5,
        q in 0.1..1.0_f64,
        entries in proptest::collection::vec(-1.0..1.0_f64, 16),
        left in any::<bool>(),
    ) {
        let m = FactorModel::new(d, d, q).unwrap();
        let x = CMat::from_fn(d, d, |r, c| cx(entries[(r * d + c) % entries.len()]));
        prop_assume!(x.norm() > 1e-3);
        let zero = CMat::zeros(d, d);
        let (a1, a2) = if left { (m.left(&zero), m.right(&x)) } else { (m.left(&x), m.right(&zero)) };
        let expected = if left { SchliederOutcome::A1Zero } else { SchliederOutcome::A2Zero };
        prop_assert_eq!(schlieder_check(&m, &a1, &a2).unwrap(), expected);
    }
}
