//! Spacetime objects with local isomorphisms, nets of field algebras with
//! net morphisms, and the functor between them.
//!
//! Local isomorphisms between lattice spacetimes are translations by whole
//! slices and columns, restricted to a causally convex localization on
//! which they carry the metric onto the target metric. The composite of two
//! morphisms lives on the pullback of the overlap of their localizations,
//! and an empty overlap gives the trivial morphism `𝟎`.
//!
//! A net assigns to each region `O` the algebra generated by the field at
//! the sites of `O`. It is presented by its generators and the Gram data
//! of the field (`κ` for the scalar, `s` for the Dirac field), so a net
//! morphism is a relabelling of sites with a frame sign, and it is well
//! defined exactly when the transported Gram data agree.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::causal::{future, past, truncated_diamond, CausalGraph, Region};
use crate::diracfield::{DiracKernel, SpinorTestFunction};
use crate::error::{Error, Result};
use crate::geometry::{Lattice, MetricModel};
use crate::scalarfield::{ScalarKernel, TestFunction, BOUNDARY_MARGIN};

/// Tolerance on the metric pushforward.
pub const METRIC_TOL: f64 = 1e-12;

/// Relative tolerance on transported Gram data.
pub const PAIRING_TOL: f64 = 1e-6;

/// Object of the spacetime category: a model on a lattice with its causal graph.
#[derive(Clone, Debug)]
pub struct SpacetimeObject {
    pub id: usize,
    pub model: Arc<MetricModel>,
    pub lattice: Lattice,
    pub graph: Arc<CausalGraph>,
}

impl SpacetimeObject {
    pub fn new(id: usize, model: Arc<MetricModel>, lattice: Lattice) -> Self {
        let graph = Arc::new(CausalGraph::new(&model, &lattice));
        Self { id, model, lattice, graph }
    }

    pub fn full_region(&self) -> Region {
        Region::full(&self.lattice)
    }
}

/// Image of `r` under `(i, j) ↦ (i + di, j + dj)` on a lattice with `nt`
/// slices, or `None` if a site leaves it.
pub fn translate_region(r: &Region, nt: usize, di: i64, dj: i64) -> Option<Region> {
    let nx = r.nx;
    let mut mask = vec![false; nt * nx];
    for s in r.sites() {
        let (i, j) = (s / nx, s % nx);
        let ti = i as i64 + di;
        if ti < 0 || ti >= nt as i64 {
            return None;
        }
        mask[ti as usize * nx + (j as i64 + dj).rem_euclid(nx as i64) as usize] = true;
    }
    Some(Region::from_parts(nt, nx, mask))
}

/// Non-trivial local isomorphism: a translation with a frame sign.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsoMap {
    pub src: usize,
    pub dst: usize,
    pub shift: (i64, i64),
    /// `±1`, the 1+1 remnant of the bundle map.
    pub sign: i8,
    pub ini: Region,
    pub fin: Region,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocalIso {
    Trivial,
    Map(IsoMap),
}

impl LocalIso {
    pub fn identity(obj: &SpacetimeObject) -> Self {
        LocalIso::Map(IsoMap {
            src: obj.id,
            dst: obj.id,
            shift: (0, 0),
            sign: 1,
            ini: obj.full_region(),
            fin: obj.full_region(),
        })
    }

    /// Translation by `shift` localized on `ini`, checked to be an
    /// orientation-preserving isometry onto its image.
    pub fn translation(
        src: &SpacetimeObject,
        dst: &SpacetimeObject,
        shift: (i64, i64),
        sign: i8,
        ini: Region,
    ) -> Result<Self> {
        if src.lattice.nx != dst.lattice.nx || src.lattice.dt != dst.lattice.dt || src.lattice.dx != dst.lattice.dx {
            return Err(Error::Domain("translations need lattices with equal spacings and widths".into()));
        }
        if sign.abs() != 1 {
            return Err(Error::Domain(format!("frame sign must be ±1 (got {sign})")));
        }
        if ini.is_empty() {
            return Err(Error::Domain("empty localization".into()));
        }
        let fin = translate_region(&ini, dst.lattice.nt, shift.0, shift.1)
            .ok_or_else(|| Error::Domain("localization leaves the target lattice".into()))?;
        if !causally_convex(&src.graph, &ini) || !causally_convex(&dst.graph, &fin) {
            return Err(Error::Domain("localization is not causally convex".into()));
        }
        let (sl, dl) = (&src.lattice, &dst.lattice);
        let nx = sl.nx;
        for s in ini.sites() {
            let (i, j) = sl.coords(s);
            let (ti, tj) = ((i as i64 + shift.0) as usize, dl.wrap(j, shift.1));
            let (t1, x1, t2, x2) = (sl.t(i), sl.x(j), dl.t(ti), dl.x(tj));
            let db = (src.model.lapse(t1, x1) - dst.model.lapse(t2, x2)).abs();
            let da = (src.model.scale(t1, x1) - dst.model.scale(t2, x2)).abs();
            if db > METRIC_TOL || da > METRIC_TOL {
                return Err(Error::Covariance(format!(
                    "metric not carried over at (t = {t1:.4}, x = {x1:.4}): |Δb| = {db:.3e}, |Δa| = {da:.3e}"
                )));
            }
            for &q in src.graph.successors(s) {
                let q = q as usize;
                if !ini.contains(q) {
                    continue;
                }
                let (qi, qj) = (q / nx, q % nx);
                let image = dl.site((qi as i64 + shift.0) as usize, dl.wrap(qj, shift.1));
                if !dst.graph.successors(dl.site(ti, tj)).contains(&(image as u32)) {
                    return Err(Error::Covariance(format!("causal edge from ({i}, {j}) is not preserved")));
                }
            }
        }
        let shift = (shift.0, shift.1.rem_euclid(nx as i64));
        Ok(LocalIso::Map(IsoMap { src: src.id, dst: dst.id, shift, sign, ini, fin }))
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self, LocalIso::Trivial)
    }
}

fn causally_convex(graph: &CausalGraph, r: &Region) -> bool {
    future(graph, r).intersection(&past(graph, r)).is_subset(r)
}

/// `m2 ∘ m1` for `m1 ∈ hom(M1, M2)`, `m2 ∈ hom(M2, M3)`.
pub fn compose(m2: &LocalIso, m1: &LocalIso) -> LocalIso {
    let (LocalIso::Map(b), LocalIso::Map(a)) = (m2, m1) else {
        return LocalIso::Trivial;
    };
    assert_eq!(a.dst, b.src, "morphisms are not composable");
    let overlap = b.ini.intersection(&a.fin);
    if overlap.is_empty() {
        return LocalIso::Trivial;
    }
    let ini = translate_region(&overlap, a.ini.nt, -a.shift.0, -a.shift.1).expect("overlap lies in the image");
    let fin = translate_region(&overlap, b.fin.nt, b.shift.0, b.shift.1).expect("overlap lies in the domain");
    LocalIso::Map(IsoMap {
        src: a.src,
        dst: b.dst,
        shift: (a.shift.0 + b.shift.0, (a.shift.1 + b.shift.1).rem_euclid(a.ini.nx as i64)),
        sign: a.sign * b.sign,
        ini,
        fin,
    })
}

/// Random morphism between two objects: either `𝟎` or a translation on a
/// truncated diamond of the source that lands inside the target.
pub fn random_local_iso<R: Rng + ?Sized>(
    rng: &mut R,
    src: &SpacetimeObject,
    dst: &SpacetimeObject,
    trivial_prob: f64,
) -> LocalIso {
    if rng.random::<f64>() < trivial_prob {
        return LocalIso::Trivial;
    }
    let (sl, dl) = (&src.lattice, &dst.lattice);
    for _ in 0..100 {
        let i = rng.random_range(2..sl.nt - 2);
        let j = rng.random_range(0..sl.nx);
        let h = rng.random_range(1..=(sl.nt / 4).max(1));
        let w = rng.random_range(2..=(sl.nx / 4).max(2));
        let (lo, hi) = (i.saturating_sub(h), (i + h).min(sl.nt - 1));
        let Ok(ini) = truncated_diamond(&src.graph, &Region::arc_slab(sl, i, i, j, w), lo, hi) else {
            continue;
        };
        let (ilo, ihi) = match ini.slice_range() {
            Some(r) => r,
            None => continue,
        };
        if ihi - ilo >= dl.nt {
            continue;
        }
        let di = rng.random_range(-(ilo as i64)..=dl.nt as i64 - 1 - ihi as i64);
        let dj = rng.random_range(-(sl.nx as i64) / 2..(sl.nx as i64) / 2);
        let sign = if rng.random::<bool>() { 1 } else { -1 };
        if let Ok(m) = LocalIso::translation(src, dst, (di, dj), sign, ini) {
            return m;
        }
    }
    LocalIso::Trivial
}

/// Free field carried by a net.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "field", rename_all = "kebab-case")]
pub enum Theory {
    Scalar { mass: f64 },
    Dirac { mass: f64 },
}

#[derive(Clone, Debug)]
enum Kernel {
    Scalar(Box<ScalarKernel>),
    Dirac(Box<DiracKernel>),
}

/// Localized test function of either field.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldSource {
    Scalar(TestFunction),
    Dirac(SpinorTestFunction),
}

impl FieldSource {
    pub fn support(&self) -> Region {
        match self {
            FieldSource::Scalar(f) => f.support(),
            FieldSource::Dirac(f) => f.support(),
        }
    }
}

/// The net `O ↦ ℱ(O)` of a free field over one spacetime object.
#[derive(Clone, Debug)]
pub struct NetObject {
    pub object: usize,
    pub theory: Theory,
    pub lattice: Lattice,
    kernel: Kernel,
}

impl NetObject {
    pub fn new(obj: &SpacetimeObject, theory: Theory) -> Result<Self> {
        let kernel = match theory {
            Theory::Scalar { mass } => Kernel::Scalar(Box::new(ScalarKernel::new(&obj.model, &obj.lattice, mass)?)),
            Theory::Dirac { mass } => Kernel::Dirac(Box::new(DiracKernel::new(&obj.model, &obj.lattice, mass)?)),
        };
        Ok(Self { object: obj.id, theory, lattice: obj.lattice.clone(), kernel })
    }

    /// Generators of `ℱ(O)`: the field at the sites of `O`.
    pub fn algebra(&self, o: &Region) -> Region {
        o.clone()
    }

    /// `ℱ(O1) ⊆ ℱ(O2)` at generator level.
    pub fn isotone(&self, o1: &Region, o2: &Region) -> bool {
        self.algebra(o1).is_subset(&self.algebra(o2))
    }

    /// `(Σ |f|² dη)^½`, with `dη = Δt Δx` for spinor sources.
    pub fn source_norm(&self, f: &FieldSource) -> f64 {
        match (&self.kernel, f) {
            (Kernel::Scalar(k), FieldSource::Scalar(f)) => k.norm(f),
            (_, FieldSource::Dirac(f)) => {
                let w = self.lattice.dt * self.lattice.dx;
                (f.chi.iter().chain(&f.xi).map(|v| v * v).sum::<f64>() * w).sqrt()
            }
            (_, FieldSource::Scalar(f)) => (f.values.iter().map(|v| v * v).sum::<f64>() * self.lattice.dt * self.lattice.dx).sqrt(),
        }
    }

    /// Gram data `κ(fₐ, f_b)` or `s(fₐ, f_b)`, unsymmetrised.
    pub fn gram(&self, basis: &[FieldSource]) -> Result<DMatrix<f64>> {
        let n = basis.len();
        match &self.kernel {
            Kernel::Scalar(k) => {
                let fs = scalar_sources(basis)?;
                let sols = fs.iter().map(|f| k.solve_causal(f)).collect::<Result<Vec<_>>>()?;
                Ok(DMatrix::from_fn(n, n, |a, b| k.integrate(fs[a], &sols[b])))
            }
            Kernel::Dirac(k) => {
                let fs = dirac_sources(basis)?;
                let sols = fs.iter().map(|f| k.solve_causal(f)).collect::<Result<Vec<_>>>()?;
                Ok(DMatrix::from_fn(n, n, |a, b| k.pairing(fs[a], &sols[b])))
            }
        }
    }
}

fn scalar_sources(basis: &[FieldSource]) -> Result<Vec<&TestFunction>> {
    basis
        .iter()
        .map(|f| match f {
            FieldSource::Scalar(f) => Ok(f),
            FieldSource::Dirac(_) => Err(Error::Domain("spinor source given to a scalar net".into())),
        })
        .collect()
}

fn dirac_sources(basis: &[FieldSource]) -> Result<Vec<&SpinorTestFunction>> {
    basis
        .iter()
        .map(|f| match f {
            FieldSource::Dirac(f) => Ok(f),
            FieldSource::Scalar(_) => Err(Error::Domain("scalar source given to a Dirac net".into())),
        })
        .collect()
}

/// Morphism of nets: a site relabelling with a frame sign, or `𝟎`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NetMorphism {
    Trivial,
    Map {
        src: usize,
        dst: usize,
        /// Sorted pairs `(site, image)`.
        sites: Vec<(u32, u32)>,
        sign: i8,
    },
}

impl NetMorphism {
    fn image_of(&self, site: usize) -> Option<usize> {
        match self {
            NetMorphism::Trivial => None,
            NetMorphism::Map { sites, .. } => sites
                .binary_search_by_key(&(site as u32), |&(s, _)| s)
                .ok()
                .map(|k| sites[k].1 as usize),
        }
    }

    /// `α(ℱ₁(O))` as the generators of the image net, or `None` if `O`
    /// leaves the domain.
    pub fn image(&self, o: &Region, target: &Lattice) -> Option<Region> {
        let mut r = Region::empty(target);
        for s in o.sites() {
            r.insert(self.image_of(s)?);
        }
        Some(r)
    }

    /// Transported test function `f ∘ ϑ⁻¹`, times the frame sign for spinors.
    pub fn transport(&self, f: &FieldSource, target: &Lattice) -> Result<FieldSource> {
        let NetMorphism::Map { sign, .. } = self else {
            return Err(Error::Domain("the trivial morphism transports nothing".into()));
        };
        let supp = f.support();
        let mut map = Vec::new();
        for s in supp.sites() {
            let t = self.image_of(s).ok_or_else(|| Error::Domain("source leaves the localization".into()))?;
            map.push((s, t));
        }
        Ok(match f {
            FieldSource::Scalar(f) => {
                let mut out = TestFunction::zeros(target);
                for (s, t) in map {
                    out.values[t] = f.values[s];
                }
                FieldSource::Scalar(out)
            }
            FieldSource::Dirac(f) => {
                let mut out = SpinorTestFunction::zeros(target);
                let sg = *sign as f64;
                for (s, t) in map {
                    out.chi[t] = sg * f.chi[s];
                    out.xi[t] = sg * f.xi[s];
                }
                FieldSource::Dirac(out)
            }
        })
    }
}

/// `β ∘ α` on site maps.
pub fn compose_nets(beta: &NetMorphism, alpha: &NetMorphism) -> NetMorphism {
    let (
        NetMorphism::Map { src, dst: mid, sites: a, sign: sa },
        NetMorphism::Map { src: mid2, dst, sites: _, sign: sb },
    ) = (alpha, beta)
    else {
        return NetMorphism::Trivial;
    };
    assert_eq!(mid, mid2, "net morphisms are not composable");
    let mut sites: Vec<(u32, u32)> =
        a.iter().filter_map(|&(s, t)| beta.image_of(t as usize).map(|u| (s, u as u32))).collect();
    if sites.is_empty() {
        return NetMorphism::Trivial;
    }
    sites.sort_unstable();
    NetMorphism::Map { src: *src, dst: *dst, sites, sign: sa * sb }
}

/// The functor `F` on objects (nets) and morphisms.
#[derive(Clone, Debug)]
pub struct Functor {
    pub theory: Theory,
    pub nets: Vec<NetObject>,
}

impl Functor {
    /// Nets over `objects`, which must carry ids `0..n` in order.
    pub fn new(objects: &[SpacetimeObject], theory: Theory) -> Result<Self> {
        for (k, o) in objects.iter().enumerate() {
            if o.id != k {
                return Err(Error::Domain(format!("object ids must be 0..n in order (position {k} has id {})", o.id)));
            }
        }
        let nets = objects.iter().map(|o| NetObject::new(o, theory)).collect::<Result<_>>()?;
        Ok(Self { theory, nets })
    }

    pub fn object(&self, id: usize) -> &NetObject {
        &self.nets[id]
    }

    /// `F(Θ)` at generator level.
    pub fn morphism(&self, iso: &LocalIso) -> NetMorphism {
        let LocalIso::Map(m) = iso else {
            return NetMorphism::Trivial;
        };
        let (sl, dl) = (&self.nets[m.src].lattice, &self.nets[m.dst].lattice);
        let sites = m
            .ini
            .sites()
            .into_iter()
            .map(|s| {
                let (i, j) = sl.coords(s);
                let t = dl.site((i as i64 + m.shift.0) as usize, dl.wrap(j, m.shift.1));
                (s as u32, t as u32)
            })
            .collect();
        NetMorphism::Map { src: m.src, dst: m.dst, sites, sign: m.sign }
    }

    /// `F(Θ)` after checking that the transported Gram data on `basis`
    /// (sources inside `ℓ_ini`) agree with the original ones.
    pub fn apply(&self, iso: &LocalIso, basis: &[FieldSource]) -> Result<NetMorphism> {
        let alpha = self.morphism(iso);
        if alpha != NetMorphism::Trivial && !basis.is_empty() {
            let report = self.pairing_report(iso, basis)?;
            if !report.pass {
                return Err(Error::Covariance(format!(
                    "transported Gram data differ by {:.3e} (relative)",
                    report.max_rel_error
                )));
            }
        }
        Ok(alpha)
    }

    /// Compares the Gram data of `basis` on the source with that of the
    /// transported basis on the target.
    pub fn pairing_report(&self, iso: &LocalIso, basis: &[FieldSource]) -> Result<PairingReport> {
        let LocalIso::Map(m) = iso else {
            return Err(Error::Domain("pairings are not transported by 𝟎".into()));
        };
        let alpha = self.morphism(iso);
        let dst = &self.nets[m.dst];
        let moved = basis.iter().map(|f| alpha.transport(f, &dst.lattice)).collect::<Result<Vec<_>>>()?;
        let g1 = self.nets[m.src].gram(basis)?;
        let g2 = dst.gram(&moved)?;
        // Mutually spacelike sources have vanishing Gram data, so the scale
        // also includes the product of the largest source norms.
        let src = &self.nets[m.src];
        let norm = basis.iter().map(|f| src.source_norm(f)).fold(0.0_f64, f64::max);
        let scale = g1.abs().max().max(norm * norm);
        let diff = (&g1 - &g2).abs().max();
        let max_rel_error = if scale > 0.0 { diff / scale } else { diff };
        Ok(PairingReport { n: basis.len(), scale, max_abs_error: diff, max_rel_error, pass: max_rel_error < PAIRING_TOL })
    }

    /// Covariance: `α(ℱ₁(O)) = ℱ₂(ϑ(O))` for each `O ⊆ ℓ_ini`.
    pub fn covariance_holds(&self, iso: &LocalIso, regions: &[Region]) -> bool {
        let LocalIso::Map(m) = iso else {
            return true;
        };
        let alpha = self.morphism(iso);
        let (src, dst) = (&self.nets[m.src], &self.nets[m.dst]);
        regions.iter().all(|o| {
            let Some(image) = alpha.image(&src.algebra(o), &dst.lattice) else {
                return false;
            };
            translate_region(o, dst.lattice.nt, m.shift.0, m.shift.1)
                .is_some_and(|t| image == dst.algebra(&t))
        })
    }
}

/// Transported versus original Gram data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingReport {
    pub n: usize,
    pub scale: f64,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    pub pass: bool,
}

/// Small bump sources of the given theory centred on random interior sites
/// of `region`, cut off outside it.
pub fn localized_sources<R: Rng + ?Sized>(
    rng: &mut R,
    theory: Theory,
    lattice: &Lattice,
    region: &Region,
    count: usize,
) -> Vec<FieldSource> {
    let pad = BOUNDARY_MARGIN + 4;
    let away = Region::slab(lattice, pad, lattice.nt.saturating_sub(pad + 1));
    let core = region.interior().interior().intersection(&away);
    let sites = if core.is_empty() { region.intersection(&away).sites() } else { core.sites() };
    assert!(!sites.is_empty(), "region has no sites away from the time boundary");
    let (rt, rx) = (3.0 * lattice.dt, 3.0 * lattice.dx);
    (0..count)
        .map(|_| {
            let s = sites[rng.random_range(0..sites.len())];
            let (i, j) = lattice.coords(s);
            let (t, x) = (lattice.t(i), lattice.x(j));
            match theory {
                Theory::Scalar { .. } => {
                    let mut f = TestFunction::bump(lattice, t, x, rt, rx);
                    for (k, v) in f.values.iter_mut().enumerate() {
                        if !region.contains(k) {
                            *v = 0.0;
                        }
                    }
                    FieldSource::Scalar(f)
                }
                Theory::Dirac { .. } => {
                    let spinor = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                    let mut f = SpinorTestFunction::bump(lattice, t, x, rt, rx, spinor);
                    for k in 0..lattice.len() {
                        if !region.contains(k) {
                            f.chi[k] = 0.0;
                            f.xi[k] = 0.0;
                        }
                    }
                    FieldSource::Dirac(f)
                }
            }
        })
        .collect()
}
