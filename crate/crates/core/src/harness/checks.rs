//! Stand-alone checks behind the single-purpose subcommands. Each returns
//! a stage-shaped result plus the files to write.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::config::RunConfig;
use super::pipeline::stage_deformation;
use super::plots;
use super::report::{Branch, Comparison, Margin, StageResult};
use crate::causal::{
    causal_complement, future, future_domain, past, past_domain, domain_of_dependence, CausalGraph, Region,
};
use crate::deformation::build_deformation;
use crate::diracfield::{CARSpace, DiracKernel, SpinorTestFunction};
use crate::error::{Error, Result};
use crate::geometry::{Lattice, MetricModel};
use crate::netfunctor::{
    compose, compose_nets, localized_sources, random_local_iso, translate_region, Functor, LocalIso,
    SpacetimeObject, Theory,
};
use crate::scalarfield::{build_quasifree_state, mass_outside, FockRep, ScalarKernel, SymplecticSpace, TestFunction};

pub struct CheckOutput {
    pub result: StageResult,
    /// `(file name, contents)` pairs.
    pub files: Vec<(String, String)>,
}

impl CheckOutput {
    fn new(result: StageResult) -> Self {
        Self { result: result.seal(), files: Vec::new() }
    }

    fn with(mut self, name: &str, contents: String) -> Self {
        self.files.push((name.into(), contents));
        self
    }
}

/// Region query: explicit `[slice, column]` sites or an arc slab.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum RegionQuery {
    Sites { name: String, sites: Vec<[usize; 2]> },
    Arc { name: String, slices: [usize; 2], center: usize, half_width: usize },
}

#[derive(Clone, Debug, Deserialize)]
pub struct QueryFile {
    pub regions: Vec<RegionQuery>,
}

impl RegionQuery {
    fn build(&self, lat: &Lattice) -> Result<(String, Region)> {
        match self {
            RegionQuery::Sites { name, sites } => {
                let mut r = Region::empty(lat);
                for &[i, j] in sites {
                    if i >= lat.nt || j >= lat.nx {
                        return Err(Error::Config(format!("site ({i}, {j}) of {name} is off the lattice")));
                    }
                    r.insert(lat.site(i, j));
                }
                Ok((name.clone(), r))
            }
            RegionQuery::Arc { name, slices: [lo, hi], center, half_width } => {
                if lo > hi || *hi >= lat.nt || *center >= lat.nx {
                    return Err(Error::Config(format!("arc {name} is off the lattice")));
                }
                Ok((name.clone(), Region::arc_slab(lat, *lo, *hi, *center, *half_width)))
            }
        }
    }
}

fn model_and_lattice(cfg: &RunConfig) -> Result<(Arc<MetricModel>, Lattice)> {
    let model = Arc::new(cfg.build_model()?);
    let lattice = cfg.build_lattice(&model)?;
    Ok((model, lattice))
}

/// `J±`, `D±` and `O⊥` memberships of the queried regions, as CSV.
pub fn causal(cfg: &RunConfig, queries: Option<QueryFile>) -> Result<CheckOutput> {
    let (model, lat) = model_and_lattice(cfg)?;
    let graph = CausalGraph::new(&model, &lat);
    let regions: Vec<(String, Region)> = match queries {
        Some(q) => q.regions.iter().map(|r| r.build(&lat)).collect::<Result<_>>()?,
        None => {
            let [t1, x1] = cfg.points.p1;
            let [t2, x2] = cfg.points.p2;
            let p2 = lat.nearest_site(t2, x2);
            let (i2, j2) = lat.coords(p2);
            vec![
                ("p1".into(), Region::single(&lat, lat.nearest_site(t1, x1))),
                ("arc-p2".into(), Region::arc_slab(&lat, i2.saturating_sub(1), (i2 + 1).min(lat.nt - 1), j2, 4)),
            ]
        }
    };
    let mut s = StageResult::new(0, "causal", Branch::Both);
    let mut csv = String::from("region,slice,column,in_region,j_plus,j_minus,d_plus,d_minus,complement\n");
    for (name, o) in &regions {
        let (jp, jm) = (future(&graph, o), past(&graph, o));
        let (dp, dm) = (future_domain(&graph, o), past_domain(&graph, o));
        let perp = causal_complement(&graph, o);
        for site in 0..lat.len() {
            let row = [o.contains(site), jp.contains(site), jm.contains(site), dp.contains(site), dm.contains(site)];
            if row.iter().any(|&b| b) {
                let (i, j) = lat.coords(site);
                let b = |v: bool| u8::from(v);
                csv.push_str(&format!(
                    "{name},{i},{j},{},{},{},{},{},{}\n",
                    b(row[0]), b(row[1]), b(row[2]), b(row[3]), b(row[4]), b(perp.contains(site))
                ));
            }
        }
        s.push(Margin::flag(format!("{name} inside J+ and J-"), o.is_subset(&jp.intersection(&jm))));
        s.push(Margin::flag(format!("{name} inside D"), o.is_subset(&domain_of_dependence(&graph, o))));
        s.push(Margin::flag(format!("{name} disjoint from its complement"), o.is_disjoint(&perp)));
        s.note(format!("{name}: {} sites, |J+| = {}, |J-| = {}", o.count(), jp.count(), jm.count()));
    }
    Ok(CheckOutput::new(s).with("causal.csv", csv).with("regions.svg", plots::regions(&regions, "queried regions")))
}

pub fn regions_csv(list: &[(String, Region)]) -> String {
    let mut out = String::from("region,slice,column\n");
    for (name, r) in list {
        for site in r.sites() {
            out.push_str(&format!("{name},{},{}\n", site / r.nx, site % r.nx));
        }
    }
    out
}

/// Builds and certifies the deformation.
pub fn deform(cfg: &RunConfig) -> Result<CheckOutput> {
    let (model, lat) = model_and_lattice(cfg)?;
    let spec = cfg.deformation_spec(model, &lat)?;
    let d = match build_deformation(&spec) {
        Ok(d) => d,
        Err(e @ Error::Config(_)) => return Err(e),
        Err(e) => {
            let mut s = StageResult::new(2, "deformation", Branch::Both);
            s.error = Some(e.to_string());
            return Ok(CheckOutput::new(s));
        }
    };
    let s = stage_deformation(&d, &cfg.tolerances());
    let at = &d.atlas;
    let list: Vec<(String, Region)> = vec![
        ("N-".into(), at.n_minus.clone()),
        ("G^".into(), at.g_hat.clone()),
        ("G".into(), at.g.clone()),
        ("U^1".into(), at.u_hat[0].clone()),
        ("U^2".into(), at.u_hat[1].clone()),
        ("U1".into(), at.u[0].clone()),
        ("U2".into(), at.u[1].clone()),
        ("U~1".into(), at.u_tilde[0].clone()),
        ("U~2".into(), at.u_tilde[1].clone()),
    ];
    let cert = crate::deformation::certify(&d);
    Ok(CheckOutput { result: s, files: Vec::new() }
        .with("certificate.json", serde_json::to_string_pretty(&cert)?)
        .with("regions.csv", regions_csv(&list))
        .with("atlas.svg", plots::regions(&list, "deformation atlas")))
}

/// Time window of the first flat band, padded away from the lattice ends.
fn initial_band(model: &MetricModel, lat: &Lattice) -> Result<(f64, f64)> {
    let (lo, hi) = model
        .flat_bands()
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::Config("model has no flat band".into()))?;
    let lo = lo.max(lat.t(0) + 4.0 * lat.dt);
    let hi = hi.min(lat.t_max() - 4.0 * lat.dt);
    if hi - lo < 4.0 * lat.dt {
        return Err(Error::Config("first flat band is too thin for sources".into()));
    }
    Ok((lo, hi))
}

/// `E±` and `S±` of bumps at `p1` on the source spacetime.
pub fn propagate(cfg: &RunConfig) -> Result<CheckOutput> {
    let (model, lat) = model_and_lattice(cfg)?;
    let graph = CausalGraph::new(&model, &lat);
    let [t, x] = cfg.points.p1;
    let t = t.min(lat.t_max() - 6.0 * lat.dt);
    let (rt, rx) = (cfg.fields.source_cells_t * lat.dt, cfg.fields.source_cells_x * lat.dx);
    let mut s = StageResult::new(0, "propagate", Branch::Both);
    let f = TestFunction::bump(&lat, t, x, rt, rx);
    let supp = f.support();
    let (jp, jm) = (future(&graph, &supp), past(&graph, &supp));
    let k = ScalarKernel::new(&model, &lat, cfg.fields.scalar_mass)?;
    let ret = k.solve_retarded(&f)?;
    let adv = k.solve_advanced(&f)?;
    let tol = cfg.tolerances();
    s.push(Margin::new("scalar E+ outside J+", mass_outside(&ret, &jp), Comparison::Lt, tol.support));
    s.push(Margin::new("scalar E- outside J-", mass_outside(&adv, &jm), Comparison::Lt, tol.support));
    let causal: Vec<f64> = ret.iter().zip(&adv).map(|(a, b)| a - b).collect();
    let h = SpinorTestFunction::bump(&lat, t, x, rt, rx, [1.0, 0.4]);
    let hs = h.support();
    let dk = DiracKernel::new(&model, &lat, cfg.fields.dirac_mass)?;
    let sret = dk.solve_retarded(&h)?.magnitude();
    let sadv = dk.solve_advanced(&h)?.magnitude();
    s.push(Margin::new("dirac S+ outside J+", mass_outside(&sret, &future(&graph, &hs)), Comparison::Lt, tol.support));
    s.push(Margin::new("dirac S- outside J-", mass_outside(&sadv, &past(&graph, &hs)), Comparison::Lt, tol.support));
    let smag: Vec<f64> = sret.iter().zip(&sadv).map(|(a, b)| a.max(*b)).collect();
    Ok(CheckOutput::new(s)
        .with("scalar_E.svg", plots::heatmap(&causal, lat.nt, lat.nx, "|E f| (log scale)"))
        .with("dirac_S.svg", plots::heatmap(&smag, lat.nt, lat.nx, "|S± h| (log scale)")))
}

fn band_bumps(lat: &Lattice, band: (f64, f64), n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let x = lat.circumference * (i as f64 + 0.25) / n as f64;
            let t = band.0 + (band.1 - band.0) * (0.35 + 0.3 * ((i % 3) as f64) / 2.0);
            (t, x)
        })
        .collect()
}

fn matrix_csv(m: &[Vec<f64>]) -> String {
    m.iter().map(|row| row.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",") + "\n").collect()
}

/// CCR on the truncated Fock space of the first flat band's quasifree state.
pub fn ccr_check(cfg: &RunConfig) -> Result<CheckOutput> {
    let (model, lat) = model_and_lattice(cfg)?;
    let band = initial_band(&model, &lat)?;
    let k = ScalarKernel::new(&model, &lat, cfg.fields.scalar_mass)?;
    let n = cfg.fields.ccr_modes;
    let (rt, rx) = (cfg.fields.source_cells_t * lat.dt, 0.3 * lat.circumference / n as f64);
    let basis: Vec<TestFunction> = band_bumps(&lat, band, n).into_iter().map(|(t, x)| TestFunction::bump(&lat, t, x, rt, rx)).collect();
    let space = SymplecticSpace::new(&k, basis)?;
    let state = build_quasifree_state(&k, &space)?;
    let idx: Vec<usize> = (0..n).collect();
    let fock = FockRep::new(&state, &idx, cfg.fields.ccr_cutoff)?;
    let mut worst = 0.0_f64;
    let mut table = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i < j {
                table[i][j] = fock.ccr_defect(i, j);
                table[j][i] = table[i][j];
                worst = worst.max(table[i][j]);
            }
        }
    }
    let mut s = StageResult::new(0, "ccr-check", Branch::Integer);
    s.push(Margin::new("max CCR defect below cutoff", worst, Comparison::Lt, cfg.tolerances().ccr));
    s.note(format!("{} Fock modes, cutoff {}, dimension {}", fock.n_modes(), cfg.fields.ccr_cutoff, fock.dim()));
    Ok(CheckOutput::new(s).with("ccr_defects.csv", matrix_csv(&table)))
}

/// CAR relations on the Jordan-Wigner representation.
pub fn car_check(cfg: &RunConfig) -> Result<CheckOutput> {
    let (model, lat) = model_and_lattice(cfg)?;
    let band = initial_band(&model, &lat)?;
    let k = DiracKernel::new(&model, &lat, cfg.fields.dirac_mass)?;
    let n = cfg.fields.car_modes;
    let (rt, rx) = (cfg.fields.source_cells_t * lat.dt, 0.3 * lat.circumference / n as f64);
    let basis: Vec<SpinorTestFunction> = band_bumps(&lat, band, n)
        .into_iter()
        .enumerate()
        .map(|(i, (t, x))| SpinorTestFunction::bump(&lat, t, x, rt, rx, [(i as f64).cos(), (1.3 * i as f64).sin() + 0.5]))
        .collect();
    let space = CARSpace::new(&k, basis)?;
    let rep = space.car_operators()?;
    let scale = space.gram.abs().max().max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut vec_of = || (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect::<Vec<_>>();
    let mut random_worst = 0.0_f64;
    for _ in 0..4 {
        let (v, w) = (vec_of(), vec_of());
        random_worst = random_worst.max(rep.anticommutator_defect(&v, &w));
    }
    let tol = cfg.tolerances().car;
    let mut s = StageResult::new(0, "car-check", Branch::HalfInteger);
    s.push(Margin::new("max basis CAR defect / scale", rep.basis_defect() / scale, Comparison::Lt, tol));
    s.push(Margin::new("random-vector CAR defect / scale", random_worst / scale, Comparison::Lt, tol));
    s.note(format!("{} modes, Fock dimension {}", rep.n_modes, rep.dim));
    let gram: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| space.gram[(i, j)]).collect()).collect();
    Ok(CheckOutput::new(s).with("car_gram.csv", matrix_csv(&gram)))
}

/// Category and functor laws on random morphisms, plus pairing transport
/// across the future identification with the deformed spacetime.
pub fn functor_check(cfg: &RunConfig) -> Result<CheckOutput> {
    let (model, lat) = model_and_lattice(cfg)?;
    let spec = cfg.deformation_spec(model.clone(), &lat)?;
    let d = build_deformation(&spec)?;
    let (t0, t1, l) = (model.t_min, model.t_max, model.circumference);
    let windows = [(t0, t1), (t0 - 0.5 * (t1 - t0), t1), (t0, t1 + 0.5 * (t1 - t0))];
    let mut objects = vec![
        SpacetimeObject::new(0, model.clone(), lat.clone()),
        SpacetimeObject::new(1, Arc::new(d.model.clone()), d.lattice.clone()),
    ];
    for (lo, hi) in windows {
        let flat = MetricModel::minkowski(lo, hi, l);
        let nt = ((hi - lo) / lat.dt).round() as usize + 1;
        let flat_lat = Lattice { t_min: lo, nt, first_slice: 0, ..lat.clone() };
        objects.push(SpacetimeObject::new(objects.len(), Arc::new(flat), flat_lat));
    }
    let scalar = Functor::new(&objects, Theory::Scalar { mass: cfg.fields.scalar_mass })?;
    let dirac = Functor::new(&objects, Theory::Dirac { mass: cfg.fields.dirac_mass })?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut assoc, mut functorial, mut unit, mut absorb, mut nontrivial) = (0usize, 0usize, 0usize, 0usize, 0usize);
    // Every fourth triple runs between M and the deformed spacetime, the rest between flat windows.
    let pick = |rng: &mut ChaCha8Rng, n: usize| if n % 4 == 3 { rng.random_range(0..2) } else { rng.random_range(2..5) };
    for n in 0..cfg.functor_triples {
        let (a, b, c, e) = (pick(&mut rng, n), pick(&mut rng, n), pick(&mut rng, n), pick(&mut rng, n));
        let m1 = random_local_iso(&mut rng, &objects[a], &objects[b], 0.1);
        let m2 = random_local_iso(&mut rng, &objects[b], &objects[c], 0.1);
        let m3 = random_local_iso(&mut rng, &objects[c], &objects[e], 0.1);
        assoc += usize::from(compose(&m3, &compose(&m2, &m1)) != compose(&compose(&m3, &m2), &m1));
        for f in [&scalar, &dirac] {
            functorial += usize::from(f.morphism(&compose(&m2, &m1)) != compose_nets(&f.morphism(&m2), &f.morphism(&m1)));
        }
        unit += usize::from(compose(&LocalIso::identity(&objects[b]), &m1) != m1);
        unit += usize::from(compose(&m1, &LocalIso::identity(&objects[a])) != m1);
        absorb += usize::from(!compose(&LocalIso::Trivial, &m1).is_trivial() || !compose(&m1, &LocalIso::Trivial).is_trivial());
        nontrivial += usize::from(!compose(&m2, &m1).is_trivial());
    }
    let mut s = StageResult::new(0, "functor-check", Branch::Both);
    s.push(Margin::new("associativity failures", assoc as f64, Comparison::Le, 0.0));
    s.push(Margin::new("functor-law failures", functorial as f64, Comparison::Le, 0.0));
    s.push(Margin::new("identity-law failures", unit as f64, Comparison::Le, 0.0));
    s.push(Margin::new("zero-absorption failures", absorb as f64, Comparison::Le, 0.0));
    s.note(format!("{} triples, {nontrivial} with a nonzero composite m2 m1", cfg.functor_triples));

    let ini = translate_region(&d.atlas.g, lat.nt, d.offset as i64, 0).ok_or_else(|| Error::Domain("G does not fit into M".into()))?;
    let iso = LocalIso::translation(&objects[0], &objects[1], (-(d.offset as i64), 0), 1, ini.clone())?;
    let tol = cfg.tolerances().pairing;
    for (name, f, theory) in [("scalar", &scalar, scalar.theory), ("dirac", &dirac, dirac.theory)] {
        let basis = localized_sources(&mut rng, theory, &lat, &ini, 4);
        let r = f.pairing_report(&iso, &basis)?;
        s.push(Margin::new(format!("{name} pairing transport (relative)"), r.max_rel_error, Comparison::Lt, tol));
        s.push(Margin::flag(format!("{name} covariance on G"), f.covariance_holds(&iso, std::slice::from_ref(&ini))));
    }
    Ok(CheckOutput::new(s))
}
