//! Deformation of a spacetime into one that agrees with it to the future of
//! a Cauchy slice Σ and is flat in a past pocket, plus the region atlas and
//! its certificate.

//!
//! The profile `f` is a quintic step in `t` alone, so the flat pocket below
//! `t_Σ2` is a whole band; the simply connected pocket `Ĝ` is cut out of it
//! as a truncated diamond over an arc. All atlas regions live on the
//! deformed lattice, which is the source lattice restricted to `t ≥ t_Σ1`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::causal::{
    causal_complement, causally_determined, domain_of_dependence, double_cone, future, past, truncated_diamond,
    CausalGraph, Region,
};
use crate::error::{Error, Result};
use crate::geometry::{ricci_scalar, smoothstep, Lattice, MetricModel};

/// Curvature tolerance on the flat pocket.
pub const FLATNESS_TOL: f64 = 1e-8;

/// Slices between a Ũ cone's tips.
const CONE_HEIGHT: usize = 6;

/// Half-height in slices of the truncated diamonds `Uⱼ`.
const U_HALF_HEIGHT: usize = 2;

/// Smallest half-width in columns of `Uⱼ`.
const U_MIN_HALF_WIDTH: usize = 3;

/// Profile value forced onto `t ≥ t_Σ` by the leak sabotage.
const LEAK: f64 = 0.25;

/// Metric `b̃ dt² − (f γ + (1 − f) a²) dx²` with `f` a quintic step in `t`:
/// `f = 1` for `t ≤ t_Σ2`, `f = 0` for `t ≥ t_Σ`. For `t ≥ t_Σ` the source
/// functions are called directly.
#[derive(Clone, Debug)]
pub struct DeformedMetric {
    pub source: Arc<MetricModel>,
    pub t_sigma: f64,
    pub t_sigma2: f64,
    pub gamma: f64,
    /// Nonzero value forces `f = leak` on `t ≥ t_Σ` (sabotage).
    pub leak: f64,
}

impl DeformedMetric {
    /// Interpolation profile `f(t)`.
    pub fn profile(&self, t: f64) -> f64 {
        if t >= self.t_sigma {
            return self.leak;
        }
        1.0 - smoothstep((t - self.t_sigma2) / (self.t_sigma - self.t_sigma2))
    }

    pub fn lapse(&self, t: f64, x: f64) -> f64 {
        let f = self.profile(t);
        if f == 0.0 && t >= self.t_sigma {
            return self.source.lapse(t, x);
        }
        let b = self.source.lapse(t, x);
        (1.0 - f) * b.min(1.0) + f
    }

    pub fn scale(&self, t: f64, x: f64) -> f64 {
        let f = self.profile(t);
        if f == 0.0 && t >= self.t_sigma {
            return self.source.scale(t, x);
        }
        let a = self.source.scale(t, x);
        (f * self.gamma + (1.0 - f) * a * a).sqrt()
    }

    /// Flat bands: the pocket below `t_Σ2` and the source's flat bands above `t_Σ`.
    pub fn flat_bands(&self) -> Vec<(f64, f64)> {
        let mut v = vec![(f64::NEG_INFINITY, self.t_sigma2)];
        if self.leak == 0.0 {
            for (lo, hi) in self.source.flat_bands() {
                let lo = lo.max(self.t_sigma);
                if hi > lo {
                    v.push((lo, hi));
                }
            }
        }
        v
    }
}

/// Forced violations, used to check that the certificate catches them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sabotage {
    #[default]
    None,
    /// `f ≢ 0` on `t ≥ t_Σ`.
    FutureLeak,
    /// `Ûⱼ` shrunk below the past cone of `Uⱼ`.
    ShrinkHat,
}

/// Input of the construction. Points are sites of the source lattice.
#[derive(Clone, Debug)]
pub struct DeformationSpec {
    pub source: Arc<MetricModel>,
    pub lattice: Lattice,
    pub p1: usize,
    pub p2: usize,
    pub t_sigma: f64,
    pub t_sigma1: f64,
    pub t_sigma2: f64,
    /// Flat spatial metric of the pocket; `None` picks it from the `Σ₂` slice.
    pub gamma: Option<f64>,
    pub sabotage: Sabotage,
}

/// Default slice times: `t_Σ` at the middle of the source's final flat band,
/// `t_Σ2 = t_Σ − 0.2 T`, `t_Σ1 = t_Σ − 0.4 T` with `T = t_max − t_min`.
pub fn default_slice_times(model: &MetricModel) -> Result<(f64, f64, f64)> {
    let band = model
        .flat_bands()
        .into_iter()
        .find(|&(_, hi)| hi >= model.t_max)
        .ok_or_else(|| Error::Config(format!("{} model has no flat band reaching t_max", model.label())))?;
    let t_sigma = 0.5 * (band.0.max(model.t_min) + band.1.min(model.t_max));
    let span = model.t_max - model.t_min;
    let (t2, t1) = (t_sigma - 0.2 * span, t_sigma - 0.4 * span);
    if t1 <= model.t_min {
        return Err(Error::Config(format!("default t_Σ1 = {t1:.4} falls below t_min = {:.4}", model.t_min)));
    }
    Ok((t_sigma, t1, t2))
}

impl DeformationSpec {
    /// Spec with the default slice times and automatic `γ`.
    pub fn new(source: Arc<MetricModel>, lattice: Lattice, p1: usize, p2: usize) -> Result<Self> {
        let (t_sigma, t_sigma1, t_sigma2) = default_slice_times(&source)?;
        Ok(Self { source, lattice, p1, p2, t_sigma, t_sigma1, t_sigma2, gamma: None, sabotage: Sabotage::None })
    }
}

/// The regions of the construction, as sites of the deformed lattice.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Atlas {
    pub u: [Region; 2],
    pub u_tilde: [Region; 2],
    pub u_hat: [Region; 2],
    pub g: Region,
    pub g_hat: Region,
    pub n_plus: Region,
    pub n_minus: Region,
}

impl Atlas {
    pub fn chain(&self, j: usize) -> [&Region; 3] {
        [&self.u[j], &self.u_tilde[j], &self.u_hat[j]]
    }
}

/// Deformed spacetime on `[t_Σ1, t_max]` with its atlas.
#[derive(Clone, Debug)]
pub struct DeformedSpacetime {
    pub spec: DeformationSpec,
    pub metric: Arc<DeformedMetric>,
    pub model: MetricModel,
    pub lattice: Lattice,
    pub graph: CausalGraph,
    /// Source slice of deformed row 0.
    pub offset: usize,
    /// Deformed slice of `Σ̃`.
    pub slice_sigma: usize,
    /// Deformed slice of `Σ₂`.
    pub slice_sigma2: usize,
    pub p_tilde: [usize; 2],
    /// Factor by which `γ` was raised above the `Σ₂` average.
    pub gamma_scale: f64,
    pub atlas: Atlas,
}

impl DeformedSpacetime {
    /// Source site corresponding to a deformed site.
    pub fn to_source(&self, site: usize) -> usize {
        site + self.offset * self.lattice.nx
    }

    /// Deformed site of a source site, if it lies in `t ≥ t_Σ1`.
    pub fn from_source(&self, site: usize) -> Option<usize> {
        site.checked_sub(self.offset * self.lattice.nx)
    }
}

/// Builds `(M̃, g̃)` and its atlas.
pub fn build_deformation(spec: &DeformationSpec) -> Result<DeformedSpacetime> {
    let lat = &spec.lattice;
    let src = &spec.source;
    if !(spec.t_sigma1 < spec.t_sigma2 && spec.t_sigma2 < spec.t_sigma) {
        return Err(Error::Config(format!(
            "slice times must satisfy t_Σ1 < t_Σ2 < t_Σ (got {}, {}, {})",
            spec.t_sigma1, spec.t_sigma2, spec.t_sigma
        )));
    }
    let (i1, i2, is) = (lat.slice_of(spec.t_sigma1), lat.slice_of(spec.t_sigma2), lat.slice_of(spec.t_sigma));
    if i1 < 1 || i2 < i1 + CONE_HEIGHT + 4 || is <= i2 {
        return Err(Error::Atlas(format!(
            "pocket between t_Σ1 and t_Σ2 spans slices {i1}..{i2}; it needs at least {} slices above slice 0",
            CONE_HEIGHT + 4
        )));
    }
    let src_graph = CausalGraph::new(src, lat);
    let p = [spec.p1, spec.p2];
    if !causal_complement(&src_graph, &Region::single(lat, p[1])).contains(p[0]) {
        return Err(Error::Precondition("p1 is not causally separated from p2".into()));
    }
    for (k, &q) in p.iter().enumerate() {
        let (iq, _) = lat.coords(q);
        if iq <= is {
            return Err(Error::Precondition(format!(
                "p{} at t = {:.4} is not in the future band t > t_Σ = {:.4}",
                k + 1,
                lat.t(iq),
                lat.t(is)
            )));
        }
    }

    let t2 = lat.t(i2);
    let nx = lat.nx;
    let avg = (0..nx).map(|j| src.scale(t2, lat.x(j)).powi(2)).sum::<f64>() / nx as f64;
    let base = spec.gamma.unwrap_or(avg);
    if !(base > 0.0 && base.is_finite()) {
        return Err(Error::Config(format!("γ must be positive (got {base})")));
    }
    // η-cones inside g-cones on the band below Σ: γ ≥ a²/b there.
    let mut need = 0.0_f64;
    for i in i1..=is {
        for j in 0..nx {
            let (t, x) = (lat.t(i), lat.x(j));
            need = need.max(src.scale(t, x).powi(2) / src.lapse(t, x));
        }
    }
    let gamma_scale = (need / base).max(1.0);
    let leak = if spec.sabotage == Sabotage::FutureLeak { LEAK } else { 0.0 };
    let metric = Arc::new(DeformedMetric {
        source: src.clone(),
        t_sigma: lat.t(is),
        t_sigma2: t2,
        gamma: base * gamma_scale,
        leak,
    });
    let dlat = lat.future_part(i1);
    let model = MetricModel::deformed(metric.clone(), dlat.t(0), src.t_max, src.circumference);
    let graph = CausalGraph::new(&model, &dlat);
    let p_tilde = p.map(|q| q - i1 * nx);
    let atlas = build_atlas(&graph, is - i1, i2 - i1, p_tilde, spec.sabotage)?;
    Ok(DeformedSpacetime {
        spec: spec.clone(),
        metric,
        model,
        lattice: dlat,
        graph,
        offset: i1,
        slice_sigma: is - i1,
        slice_sigma2: i2 - i1,
        p_tilde,
        gamma_scale,
        atlas,
    })
}

/// Shortest arc `(center, half_width)` covering every occupied column, or
/// `None` if all columns are occupied.
fn covering_arc(r: &Region) -> Option<(usize, usize)> {
    let nx = r.nx;
    let mut used = vec![false; nx];
    for s in r.sites() {
        used[s % nx] = true;
    }
    if used.iter().all(|&u| u) || !used.iter().any(|&u| u) {
        return None;
    }
    // Longest circular run of free columns.
    let (mut best_len, mut best_end, mut run) = (0, 0, 0);
    for k in 0..2 * nx {
        if used[k % nx] {
            run = 0;
        } else {
            run += 1;
            if run > best_len && run <= nx {
                best_len = run;
                best_end = k % nx;
            }
        }
    }
    let len = nx - best_len;
    let start = (best_end + 1) % nx;
    Some(((start + len / 2) % nx, len / 2))
}

/// Truncated diamond over an arc on slice `base` that contains `target`,
/// widened greedily while the arc leaves a gap in the circle.
fn hull(graph: &CausalGraph, target: &Region, base: usize, lo: usize, hi: usize, name: &str) -> Result<Region> {
    let lat = &graph.lattice;
    let (center, hw0) =
        covering_arc(target).ok_or_else(|| Error::Atlas(format!("{name} would wrap around the circle")))?;
    for hw in hw0..lat.nx.saturating_sub(3) / 2 {
        let arc = Region::arc_slab(lat, base, base, center, hw);
        let r = truncated_diamond(graph, &arc, lo, hi)?;
        if target.is_subset(&r) {
            return Ok(r);
        }
    }
    Err(Error::Atlas(format!("{name} cannot contain its regions without wrapping around the circle; use a larger circumference")))
}

/// Highest small double cone on column `c` lying in `dom` below `top`.
fn pocket_cone(graph: &CausalGraph, dom: &Region, c: usize, top: usize) -> Result<Option<Region>> {
    let lat = &graph.lattice;
    if dom.columns_on(top).is_empty() {
        return Ok(None);
    }
    for k in (CONE_HEIGHT + 1..=top).rev() {
        let cone = double_cone(graph, lat.site(k, c), lat.site(k - CONE_HEIGHT, c))?;
        if !cone.is_empty() && cone.is_subset(dom) {
            return Ok(Some(cone));
        }
    }
    Ok(None)
}

fn build_atlas(graph: &CausalGraph, s: usize, s2: usize, p: [usize; 2], sabotage: Sabotage) -> Result<Atlas> {
    let lat = &graph.lattice;
    let (nx, top) = (lat.nx, lat.nt - 1);
    let n_plus = Region::slab(lat, s, top).interior();
    let n_minus = Region::slab(lat, 0, s).interior();
    // Keep the curvature stencil off the transition band; Ĝ may reach one
    // slice higher since the hull's top row is eroded.
    let pocket_top = s2 - 3;
    let mut u = Vec::new();
    let mut u_tilde = Vec::new();
    let mut u_hat = Vec::new();
    for (k, &pj) in p.iter().enumerate() {
        let (ip, cp) = lat.coords(pj);
        if past(graph, &Region::single(lat, pj)).columns_on(s).len() == nx {
            return Err(Error::Atlas(format!(
                "J⁻(p{}) ∩ Σ wraps around the circle; move t_Σ up towards t = {:.4}",
                k + 1,
                lat.t(ip)
            )));
        }
        if ip < s + U_HALF_HEIGHT + 2 || ip + U_HALF_HEIGHT > top {
            return Err(Error::Atlas(format!(
                "p{} is too close to Σ or to t_max for a double cone; try t_Σ ≤ {:.4}",
                k + 1,
                lat.t(ip.saturating_sub(U_HALF_HEIGHT + 2))
            )));
        }
        let (lo, hi) = (ip - U_HALF_HEIGHT, ip + U_HALF_HEIGHT);
        let mut found = None;
        for w in U_MIN_HALF_WIDTH..nx / 2 {
            let uj = truncated_diamond(graph, &Region::arc_slab(lat, ip, ip, cp, w), lo, hi)?;
            let dom = domain_of_dependence(graph, &uj).interior();
            if let Some(cone) = pocket_cone(graph, &dom, cp, pocket_top)? {
                found = Some((w, uj, cone));
                break;
            }
        }
        let (w, uj, cone) = found.ok_or_else(|| {
            Error::Atlas(format!(
                "D(U{}) never reaches the flat pocket; move t_Σ2 up or p{} closer to Σ",
                k + 1,
                k + 1
            ))
        })?;
        let mut hat = None;
        for hw in w..nx / 2 {
            let cand = Region::arc_slab(lat, pocket_top - 1, pocket_top, cp, hw);
            if causally_determined(graph, &uj, &cand) {
                hat = Some((hw, cand));
                break;
            }
        }
        let (hw, mut hat) =
            hat.ok_or_else(|| Error::Atlas(format!("no arc in the pocket determines U{}", k + 1)))?;
        if sabotage == Sabotage::ShrinkHat {
            hat = Region::arc_slab(lat, pocket_top - 1, pocket_top, cp, hw / 2);
        }
        u.push(uj);
        u_tilde.push(cone);
        u_hat.push(hat);
    }
    let us = u[0].union(&u[1]);
    let (ulo, uhi) = us.slice_range().expect("nonempty double cones");
    let g = hull(graph, &us, (ulo + uhi) / 2, s + 1, top, "G")?;
    let pocket = u_tilde[0].union(&u_tilde[1]).union(&u_hat[0]).union(&u_hat[1]);
    let (plo, _) = pocket.slice_range().expect("nonempty pocket regions");
    let g_hat = hull(graph, &pocket, pocket_top, plo.saturating_sub(1).max(1), pocket_top + 1, "Ĝ")?;
    let pair = |v: Vec<Region>| -> [Region; 2] { v.try_into().expect("two regions") };
    Ok(Atlas { u: pair(u), u_tilde: pair(u_tilde), u_hat: pair(u_hat), g, g_hat, n_plus, n_minus })
}

/// Outcome of one certificate clause.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClauseResult {
    pub clause: String,
    pub pass: bool,
    /// Clause-specific slack: residual size for metric and curvature
    /// checks, spare cells for region relations (negative on failure).
    pub margin: f64,
    pub detail: String,
}

impl ClauseResult {
    fn new(clause: &str, pass: bool, margin: f64, detail: String) -> Self {
        Self { clause: clause.into(), pass, margin, detail }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformationCertificate {
    /// Clauses `a` to `f` in order.
    pub clauses: Vec<ClauseResult>,
    /// Edge-by-edge check that deformed cones sit inside source cones below `Σ`.
    pub narrowing: ClauseResult,
}

impl DeformationCertificate {
    pub fn certified(&self) -> bool {
        self.clauses.iter().all(|c| c.pass) && self.narrowing.pass
    }

    /// Ids of the failing clauses.
    pub fn failed(&self) -> Vec<String> {
        self.clauses
            .iter()
            .chain([&self.narrowing])
            .filter(|c| !c.pass)
            .map(|c| c.clause.clone())
            .collect()
    }

    pub fn clause(&self, id: &str) -> Option<&ClauseResult> {
        self.clauses.iter().chain([&self.narrowing]).find(|c| c.clause == id)
    }
}

/// Largest `k ≤ cap` with `inner ⊆ outer` eroded `k` times, or `−|inner ∖ outer|`.
fn containment_margin(inner: &Region, outer: &Region, cap: usize) -> f64 {
    if !inner.is_subset(outer) {
        return -(inner.difference(outer).count() as f64);
    }
    let mut r = outer.interior();
    let mut k = 0;
    while k < cap && inner.is_subset(&r) {
        k += 1;
        r = r.interior();
    }
    k as f64
}

/// `J⁺(R) ∩ J⁻(R) ⊆ R`.
fn causally_convex(graph: &CausalGraph, r: &Region) -> bool {
    future(graph, r).intersection(&past(graph, r)).is_subset(r)
}

/// Some column is free on every slice.
fn leaves_gap(r: &Region) -> bool {
    let mut used = vec![false; r.nx];
    for s in r.sites() {
        used[s % r.nx] = true;
    }
    !used.iter().all(|&u| u)
}

const MARGIN_CAP: usize = 32;

/// Evaluates clauses (a)–(f) of the construction on the lattice.
pub fn certify(d: &DeformedSpacetime) -> DeformationCertificate {
    let lat = &d.lattice;
    let src_lat = &d.spec.lattice;
    let src = &d.spec.source;
    let src_graph = CausalGraph::new(src, src_lat);
    let at = &d.atlas;
    let (s, top, nx) = (d.slice_sigma, lat.nt - 1, lat.nx);

    // (a) bitwise metric and edge identity on t ≥ t_Σ.
    let (mut mismatched, mut worst, mut edges) = (0usize, 0.0_f64, 0usize);
    for i in s..=top {
        for j in 0..nx {
            let (t, x) = (lat.t(i), lat.x(j));
            for (g, h) in [(d.model.lapse(t, x), src.lapse(t, x)), (d.model.scale(t, x), src.scale(t, x))] {
                if g.to_bits() != h.to_bits() {
                    mismatched += 1;
                    worst = worst.max((g - h).abs());
                }
            }
            let site = lat.site(i, j);
            let mapped: Vec<usize> = d.graph.successors(site).iter().map(|&q| d.to_source(q as usize)).collect();
            let expected: Vec<usize> = src_graph.successors(d.to_source(site)).iter().map(|&q| q as usize).collect();
            if i < top && mapped != expected {
                edges += 1;
            }
        }
    }
    let a = ClauseResult::new(
        "a",
        mismatched == 0 && edges == 0,
        worst,
        format!("{mismatched} metric values and {edges} edge lists differ on slices ≥ {s}"),
    );

    // (b) p̃ⱼ ∈ Ñ₊.
    let depth = d.p_tilde.iter().map(|&q| lat.coords(q).0 as f64 - s as f64).fold(f64::INFINITY, f64::min);
    let b = ClauseResult::new(
        "b",
        d.p_tilde.iter().all(|&q| at.n_plus.contains(q)),
        depth,
        format!("p̃ⱼ lie at least {depth} slices above Σ̃"),
    );

    // (c) Ĝ flat, simply connected, globally hyperbolic, inside Ñ₋.
    let ricci = ricci_scalar(&d.model, lat);
    let r_max = ricci.max_abs_on(at.g_hat.mask());
    let c_ok = !at.g_hat.is_empty()
        && r_max < FLATNESS_TOL
        && at.g_hat.is_subset(&at.n_minus)
        && leaves_gap(&at.g_hat)
        && causally_convex(&d.graph, &at.g_hat);
    let c = ClauseResult::new("c", c_ok, r_max, format!("max |R| on Ĝ = {r_max:.3e} over {} sites", at.g_hat.count()));

    // (d) G ⊆ Ñ₊ contains p̃ⱼ.
    let d_ok = !at.g.is_empty()
        && at.g.is_subset(&at.n_plus)
        && d.p_tilde.iter().all(|&q| at.g.contains(q))
        && leaves_gap(&at.g)
        && causally_convex(&d.graph, &at.g);
    let g_margin = containment_margin(&at.g, &at.n_plus, MARGIN_CAP);
    let dd = ClauseResult::new("d", d_ok, g_margin, format!("G has {} sites", at.g.count()));

    // (e) separation across indices and placement of the chains.
    let mut sep = f64::INFINITY;
    for a1 in at.chain(0) {
        for a2 in at.chain(1) {
            for (x, y) in [(a1, a2), (a2, a1)] {
                sep = sep.min(containment_margin(x, &causal_complement(&d.graph, y), MARGIN_CAP));
            }
        }
    }
    let placed = (0..2).all(|j| {
        at.chain(j).iter().all(|r| !r.is_empty() && causally_convex(&d.graph, r))
            && at.u[j].contains(d.p_tilde[j])
            && at.u[j].is_subset(&at.g)
            && at.u_tilde[j].is_subset(&at.g_hat)
            && at.u_hat[j].is_subset(&at.g_hat)
    });
    let e = ClauseResult::new("e", placed && sep >= 0.0, sep, format!("chains placed: {placed}; separation margin {sep}"));

    // (f) Ũⱼ ◁ Uⱼ ◁ Ûⱼ.
    let mut f_margin = f64::INFINITY;
    let mut f_ok = true;
    for j in 0..2 {
        for (inner, outer) in [(&at.u_tilde[j], &at.u[j]), (&at.u[j], &at.u_hat[j])] {
            f_ok &= causally_determined(&d.graph, inner, outer);
            let dom = domain_of_dependence(&d.graph, outer).interior();
            f_margin = f_margin.min(containment_margin(inner, &dom, MARGIN_CAP));
        }
    }
    let f = ClauseResult::new("f", f_ok, f_margin, format!("determination margin {f_margin}"));

    // Deformed edges below Σ are source edges, and deformed speeds do not exceed source speeds.
    let (mut extra, mut faster) = (0usize, 0usize);
    for i in 0..s {
        for j in 0..nx {
            let site = lat.site(i, j);
            let src_succ = src_graph.successors(d.to_source(site));
            extra += d
                .graph
                .successors(site)
                .iter()
                .filter(|&&q| src_succ.binary_search(&(d.to_source(q as usize) as u32)).is_err())
                .count();
            let (t, x) = (lat.t(i), lat.x(j));
            if d.model.light_speed(t, x) > src.light_speed(t, x) * (1.0 + 1e-12) {
                faster += 1;
            }
        }
    }
    let narrowing = ClauseResult::new(
        "narrowing",
        extra == 0 && faster == 0,
        (extra + faster) as f64,
        format!("{extra} edges outside source cones, {faster} sites with faster light"),
    );

    DeformationCertificate { clauses: vec![a, b, c, dd, e, f], narrowing }
}

#[cfg(test)]
mod tests;
