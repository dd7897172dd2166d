use super::*;
use crate::geometry::{build_lattice_with_cfl, SandwichParams};

fn sandwich_spec() -> DeformationSpec {
    let model = Arc::new(MetricModel::sandwich(SandwichParams::default(), 0.0, 4.5, 24.0).unwrap());
    let lat = build_lattice_with_cfl(&model, 91, 384, 0.95).unwrap();
    let p1 = lat.nearest_site(4.0, 6.0);
    let p2 = lat.nearest_site(4.0, 18.0);
    DeformationSpec::new(model, lat, p1, p2).unwrap()
}

#[test]
fn default_slice_times_follow_the_future_band() {
    let spec = sandwich_spec();
    assert!((spec.t_sigma - 3.75).abs() < 1e-12);
    assert!((spec.t_sigma2 - 2.85).abs() < 1e-12);
    assert!((spec.t_sigma1 - 1.95).abs() < 1e-12);
}

#[test]
fn sandwich_deformation_is_certified() {
    let d = build_deformation(&sandwich_spec()).unwrap();
    let cert = certify(&d);
    assert!(cert.certified(), "{:#?}", cert);
    assert_eq!(cert.clause("a").unwrap().margin, 0.0);
    assert!(cert.clause("c").unwrap().margin < FLATNESS_TOL);
    for j in 0..2 {
        assert!(d.atlas.u[j].contains(d.p_tilde[j]));
    }
}

#[test]
fn metric_is_untouched_above_sigma_and_flat_in_the_pocket() {
    let spec = sandwich_spec();
    let d = build_deformation(&spec).unwrap();
    let lat = &d.lattice;
    for i in [d.slice_sigma, d.slice_sigma + 3, lat.nt - 1] {
        for j in (0..lat.nx).step_by(7) {
            let (t, x) = (lat.t(i), lat.x(j));
            assert_eq!(d.model.lapse(t, x).to_bits(), spec.source.lapse(t, x).to_bits());
            assert_eq!(d.model.scale(t, x).to_bits(), spec.source.scale(t, x).to_bits());
            let src_site = spec.lattice.site(i + d.offset, j);
            assert_eq!(spec.lattice.t(spec.lattice.coords(src_site).0).to_bits(), t.to_bits());
        }
    }
    let gamma = d.metric.gamma;
    for i in 0..=d.slice_sigma2 {
        for j in (0..lat.nx).step_by(5) {
            let (t, x) = (lat.t(i), lat.x(j));
            assert_eq!(d.model.lapse(t, x), 1.0);
            assert_eq!(d.model.scale(t, x), gamma.sqrt());
        }
    }
    // The pocket replaces a curved part of the source.
    let src_ricci = ricci_scalar(&spec.source, &spec.lattice);
    let pocket_source: Vec<bool> = (0..spec.lattice.len())
        .map(|q| d.from_source(q).is_some_and(|r| d.atlas.g_hat.contains(r)))
        .collect();
    assert!(src_ricci.max_abs_on(&pocket_source) > 1e-3);
}

#[test]
fn gamma_narrows_cones_and_lapse_stays_below_one() {
    let d = build_deformation(&sandwich_spec()).unwrap();
    assert!(d.gamma_scale > 1.0);
    let lat = &d.lattice;
    for i in 0..d.slice_sigma {
        for j in 0..lat.nx {
            let (t, x) = (lat.t(i), lat.x(j));
            let b = d.model.lapse(t, x);
            assert!(b > 0.0 && b <= 1.0);
            assert!(d.model.light_speed(t, x) <= d.spec.source.light_speed(t, x) * (1.0 + 1e-12));
        }
    }
    for i in 0..lat.nt {
        let f = d.metric.profile(lat.t(i));
        assert!((0.0..=1.0).contains(&f));
    }
}

#[test]
fn minkowski_source_gives_minkowski() {
    let model = Arc::new(MetricModel::minkowski(0.0, 4.0, 24.0));
    let lat = build_lattice_with_cfl(&model, 81, 384, 0.95).unwrap();
    let (p1, p2) = (lat.nearest_site(2.3, 6.0), lat.nearest_site(2.3, 18.0));
    let d = build_deformation(&DeformationSpec::new(model, lat, p1, p2).unwrap()).unwrap();
    assert_eq!(d.metric.gamma, 1.0);
    assert_eq!(d.gamma_scale, 1.0);
    for i in 0..d.lattice.nt {
        let t = d.lattice.t(i);
        assert_eq!(d.model.lapse(t, 1.0), 1.0);
        assert_eq!(d.model.scale(t, 1.0), 1.0);
    }
    assert!(certify(&d).certified());
}

#[test]
fn future_leak_fails_clause_a() {
    let mut spec = sandwich_spec();
    spec.sabotage = Sabotage::FutureLeak;
    let cert = certify(&build_deformation(&spec).unwrap());
    assert_eq!(cert.failed(), vec!["a".to_string()]);
}

#[test]
fn shrunk_hat_fails_clause_f() {
    let mut spec = sandwich_spec();
    spec.sabotage = Sabotage::ShrinkHat;
    let cert = certify(&build_deformation(&spec).unwrap());
    assert_eq!(cert.failed(), vec!["f".to_string()]);
    assert!(cert.clause("f").unwrap().margin < 0.0);
}

#[test]
fn timelike_points_are_rejected() {
    let mut spec = sandwich_spec();
    spec.p2 = spec.lattice.nearest_site(4.3, 6.1);
    assert!(matches!(build_deformation(&spec), Err(Error::Precondition(_))));
}

#[test]
fn points_below_sigma_are_rejected() {
    let mut spec = sandwich_spec();
    spec.p1 = spec.lattice.nearest_site(3.0, 6.0);
    assert!(matches!(build_deformation(&spec), Err(Error::Precondition(_))));
}

#[test]
fn wrapping_past_cone_is_uncertifiable() {
    let model = Arc::new(MetricModel::minkowski(0.0, 4.0, 1.0));
    let lat = build_lattice_with_cfl(&model, 161, 16, 0.95).unwrap();
    let (p1, p2) = (lat.nearest_site(3.9, 0.0), lat.nearest_site(3.9, 0.5));
    let spec = DeformationSpec::new(model, lat, p1, p2).unwrap();
    assert!(matches!(build_deformation(&spec), Err(Error::Atlas(_))));
}

#[test]
fn bad_slice_order_is_a_config_error() {
    let mut spec = sandwich_spec();
    spec.t_sigma2 = spec.t_sigma + 0.1;
    assert!(matches!(build_deformation(&spec), Err(Error::Config(_))));
}
