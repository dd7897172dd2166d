//! Foliated 1+1 spacetimes `ds² = b(t,x) dt² − a(t,x)² dx²` on a spatial
//! circle, their lattice discretisation, curvature and local light cones.
//!
//! Increasing `t` is the future. Every constant-`t` slice is a compact
//! Cauchy surface, so no spatial boundary conditions are ever needed.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::deformation::DeformedMetric;
use crate::error::{Error, Result};

/// Smallest lattice extent accepted in either direction.
pub const MIN_SITES: usize = 8;

/// Quintic smoothstep, `0` for `s ≤ 0`, `1` for `s ≥ 1`, C² at both ends.
pub fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
    }
}

/// `64 s³ (1 − s)³` on `[0, 1]`, zero outside. Peak value 1 at `s = ½`.
pub fn bump(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        let q = s * (1.0 - s);
        64.0 * q * q * q
    }
}

/// Parameters of the sandwich family: flat for `t ≤ t_past` and `t ≥ t_fut`,
/// curved (time- and space-dependent) in between.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SandwichParams {
    pub t_past: f64,
    pub t_fut: f64,
    /// Constant spatial factor on the past band.
    pub a_past: f64,
    /// Constant spatial factor on the future band.
    pub a_fut: f64,
    /// Amplitude of the x-dependent bulge of `a` in the middle band.
    pub amp_a: f64,
    /// Amplitude of the x-dependent modulation of `b` in the middle band.
    pub amp_b: f64,
    /// Spatial wave number (number of periods around the circle).
    pub mode: u32,
}

impl Default for SandwichParams {
    fn default() -> Self {
        Self {
            t_past: 1.0,
            t_fut: 3.0,
            a_past: 1.0,
            a_fut: 1.0,
            amp_a: 0.5,
            amp_b: 0.3,
            mode: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub enum ModelKind {
    Minkowski,
    /// Constant `b = lapse`, `a = scale`.
    Static { lapse: f64, scale: f64 },
    /// `b = 1`, `a = exp(rate · t)`.
    Expanding { rate: f64 },
    Sandwich(SandwichParams),
    Deformed(Arc<DeformedMetric>),
    /// `t ↦ t_min + t_max − t` applied to the inner model.
    Reflected(Arc<MetricModel>),
}

/// Analytic 1+1 metric on `[t_min, t_max] × S¹(L)`.
#[derive(Clone, Debug)]
pub struct MetricModel {
    pub kind: ModelKind,
    pub t_min: f64,
    pub t_max: f64,
    pub circumference: f64,
}

impl MetricModel {
    pub fn minkowski(t_min: f64, t_max: f64, circumference: f64) -> Self {
        Self { kind: ModelKind::Minkowski, t_min, t_max, circumference }
    }

    pub fn static_model(lapse: f64, scale: f64, t_min: f64, t_max: f64, circumference: f64) -> Result<Self> {
        if !(lapse > 0.0 && scale > 0.0) {
            return Err(Error::Config(format!("static model needs b, a > 0 (got b = {lapse}, a = {scale})")));
        }
        Ok(Self { kind: ModelKind::Static { lapse, scale }, t_min, t_max, circumference })
    }

    pub fn expanding(rate: f64, t_min: f64, t_max: f64, circumference: f64) -> Self {
        Self { kind: ModelKind::Expanding { rate }, t_min, t_max, circumference }
    }

    pub fn sandwich(params: SandwichParams, t_min: f64, t_max: f64, circumference: f64) -> Result<Self> {
        let p = &params;
        if !(p.t_past < p.t_fut) {
            return Err(Error::Config("sandwich model needs t_past < t_fut".into()));
        }
        if !(p.a_past > 0.0 && p.a_fut > 0.0 && p.amp_a >= 0.0) {
            return Err(Error::Config("sandwich model needs a_past, a_fut > 0 and amp_a ≥ 0".into()));
        }
        if !(p.amp_b.abs() < 1.0) {
            return Err(Error::Config("sandwich model needs |amp_b| < 1 so that b > 0".into()));
        }
        Ok(Self { kind: ModelKind::Sandwich(params), t_min, t_max, circumference })
    }

    pub fn deformed(metric: Arc<DeformedMetric>, t_min: f64, t_max: f64, circumference: f64) -> Self {
        Self { kind: ModelKind::Deformed(metric), t_min, t_max, circumference }
    }

    /// Same spacetime with the time orientation reversed.
    pub fn time_reflected(&self) -> Self {
        Self {
            kind: ModelKind::Reflected(Arc::new(self.clone())),
            t_min: self.t_min,
            t_max: self.t_max,
            circumference: self.circumference,
        }
    }

    /// Coefficient `b` of `dt²`.
    pub fn lapse(&self, t: f64, x: f64) -> f64 {
        match &self.kind {
            ModelKind::Minkowski => 1.0,
            ModelKind::Static { lapse, .. } => *lapse,
            ModelKind::Expanding { .. } => 1.0,
            ModelKind::Sandwich(p) => {
                let s = (t - p.t_past) / (p.t_fut - p.t_past);
                let phase = self.phase(x, p.mode);
                1.0 + p.amp_b * bump(s) * phase.sin()
            }
            ModelKind::Deformed(d) => d.lapse(t, x),
            ModelKind::Reflected(m) => m.lapse(m.t_min + m.t_max - t, x),
        }
    }

    /// Spatial factor `a` (so that `g_xx = −a²`).
    pub fn scale(&self, t: f64, x: f64) -> f64 {
        match &self.kind {
            ModelKind::Minkowski => 1.0,
            ModelKind::Static { scale, .. } => *scale,
            ModelKind::Expanding { rate } => (rate * t).exp(),
            ModelKind::Sandwich(p) => {
                let s = (t - p.t_past) / (p.t_fut - p.t_past);
                let phase = self.phase(x, p.mode);
                p.a_past + (p.a_fut - p.a_past) * smoothstep(s) + p.amp_a * bump(s) * 0.5 * (1.0 + phase.cos())
            }
            ModelKind::Deformed(d) => d.scale(t, x),
            ModelKind::Reflected(m) => m.scale(m.t_min + m.t_max - t, x),
        }
    }

    /// Coordinate light speed `√b / a`.
    pub fn light_speed(&self, t: f64, x: f64) -> f64 {
        self.lapse(t, x).sqrt() / self.scale(t, x)
    }

    fn phase(&self, x: f64, mode: u32) -> f64 {
        2.0 * std::f64::consts::PI * mode as f64 * x / self.circumference
    }

    /// Time intervals on which the model is exactly flat with `b ≡ 1` and
    /// constant `a`, as declared by the model family.
    pub fn flat_bands(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            ModelKind::Minkowski => vec![(self.t_min, self.t_max)],
            ModelKind::Static { lapse, .. } if *lapse == 1.0 => vec![(self.t_min, self.t_max)],
            ModelKind::Static { .. } | ModelKind::Expanding { .. } => vec![],
            ModelKind::Sandwich(p) => {
                let mut v = Vec::new();
                if p.t_past > self.t_min {
                    v.push((self.t_min, p.t_past));
                }
                if p.t_fut < self.t_max {
                    v.push((p.t_fut, self.t_max));
                }
                v
            }
            ModelKind::Deformed(d) => d.flat_bands(),
            ModelKind::Reflected(m) => m
                .flat_bands()
                .into_iter()
                .map(|(lo, hi)| (m.t_min + m.t_max - hi, m.t_min + m.t_max - lo))
                .rev()
                .collect(),
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            ModelKind::Minkowski => "minkowski".into(),
            ModelKind::Static { .. } => "static".into(),
            ModelKind::Expanding { .. } => "expanding".into(),
            ModelKind::Sandwich(_) => "sandwich".into(),
            ModelKind::Deformed(_) => "deformed".into(),
            ModelKind::Reflected(m) => format!("reflected-{}", m.label()),
        }
    }
}

/// Uniform lattice over `[t_min, t_max] × [0, L)`, periodic in `x`.
///
/// Sites are indexed row-major: `site = i * nx + j` with `i` the time slice.
/// A lattice cut from a larger one keeps the parent's `t_min` and records
/// the parent slice of its row 0 in `first_slice`, so that `t(i)` is
/// bitwise the parent's `t(first_slice + i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub nt: usize,
    pub nx: usize,
    pub dt: f64,
    pub dx: f64,
    pub t_min: f64,
    pub circumference: f64,
    #[serde(default)]
    pub first_slice: usize,
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.nt * self.nx
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t_min + (self.first_slice + i) as f64 * self.dt
    }

    /// Slices `first..nt` of this lattice as a lattice of their own.
    pub fn future_part(&self, first: usize) -> Lattice {
        assert!(first < self.nt, "slice {first} outside lattice of {} slices", self.nt);
        Lattice { nt: self.nt - first, first_slice: self.first_slice + first, ..self.clone() }
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    pub fn site(&self, i: usize, j: usize) -> usize {
        i * self.nx + j
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site / self.nx, site % self.nx)
    }

    /// Spatial index `j + d` wrapped around the circle.
    pub fn wrap(&self, j: usize, d: i64) -> usize {
        (j as i64 + d).rem_euclid(self.nx as i64) as usize
    }

    /// Closest time slice to `t` (clamped to the lattice).
    pub fn slice_of(&self, t: f64) -> usize {
        let i = ((t - self.t_min) / self.dt).round() - self.first_slice as f64;
        i.clamp(0.0, (self.nt - 1) as f64) as usize
    }

    /// Closest spatial column to `x` (wrapped onto the circle).
    pub fn column_of(&self, x: f64) -> usize {
        let j = (x.rem_euclid(self.circumference) / self.dx).round() as i64;
        j.rem_euclid(self.nx as i64) as usize
    }

    pub fn nearest_site(&self, t: f64, x: f64) -> usize {
        self.site(self.slice_of(t), self.column_of(x))
    }

    /// Signed periodic distance in columns from `j0` to `j1`, in `(−nx/2, nx/2]`.
    pub fn column_offset(&self, j0: usize, j1: usize) -> i64 {
        let n = self.nx as i64;
        let mut d = (j1 as i64 - j0 as i64).rem_euclid(n);
        if d > n / 2 {
            d -= n;
        }
        d
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.nt - 1)
    }
}

/// Lattice with the default CFL factor of 1.
pub fn build_lattice(model: &MetricModel, nt: usize, nx: usize) -> Result<Lattice> {
    build_lattice_with_cfl(model, nt, nx, 1.0)
}

/// Discretise `model` with `nt × nx` sites, requiring
/// `Δt ≤ cfl · Δx · min(a/√b)` over the grid.
pub fn build_lattice_with_cfl(model: &MetricModel, nt: usize, nx: usize, cfl: f64) -> Result<Lattice> {
    if nt < MIN_SITES || nx < MIN_SITES {
        return Err(Error::Config(format!("lattice needs at least {MIN_SITES}×{MIN_SITES} sites (got {nt}×{nx})")));
    }
    if !(model.t_max > model.t_min) || !(model.circumference > 0.0) {
        return Err(Error::Config("model needs t_max > t_min and L > 0".into()));
    }
    if !(cfl > 0.0) {
        return Err(Error::Config("CFL factor must be positive".into()));
    }
    let lattice = Lattice {
        nt,
        nx,
        dt: (model.t_max - model.t_min) / (nt - 1) as f64,
        dx: model.circumference / nx as f64,
        t_min: model.t_min,
        circumference: model.circumference,
        first_slice: 0,
    };
    let mut worst: Option<(f64, usize, usize)> = None;
    for i in 0..nt {
        let t = lattice.t(i);
        for j in 0..nx {
            let x = lattice.x(j);
            let b = model.lapse(t, x);
            let a = model.scale(t, x);
            if !(b > 0.0 && a > 0.0) || !b.is_finite() || !a.is_finite() {
                return Err(Error::Config(format!(
                    "metric is not Lorentzian at (t = {t:.6}, x = {x:.6}): b = {b}, a = {a}"
                )));
            }
            let r = a / b.sqrt();
            if worst.is_none_or(|(w, _, _)| r < w) {
                worst = Some((r, i, j));
            }
        }
    }
    let (ratio, wi, wj) = worst.expect("non-empty lattice");
    let bound = cfl * lattice.dx * ratio;
    if lattice.dt > bound * (1.0 + 1e-12) {
        return Err(Error::Cfl { t: lattice.t(wi), x: lattice.x(wj), dt: lattice.dt, bound });
    }
    Ok(lattice)
}

/// Largest stable time step `cfl · Δx · min(a/√b)` sampled on the grid.
pub fn cfl_bound(model: &MetricModel, lattice: &Lattice, cfl: f64) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..lattice.nt {
        for j in 0..lattice.nx {
            let (t, x) = (lattice.t(i), lattice.x(j));
            m = m.min(model.scale(t, x) / model.lapse(t, x).sqrt());
        }
    }
    cfl * lattice.dx * m
}

/// Ricci scalar sampled on the lattice, row-major like the sites.
#[derive(Clone, Debug)]
pub struct CurvatureField {
    pub nt: usize,
    pub nx: usize,
    pub values: Vec<f64>,
}

impl CurvatureField {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.nx + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Maximum of `|R|` over the sites selected by `mask`.
    pub fn max_abs_on(&self, mask: &[bool]) -> f64 {
        self.values
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .fold(0.0_f64, |m, (v, _)| m.max(v.abs()))
    }

    /// Max `|R|` over slices lying in `[lo, hi]` at least one cell from either end.
    pub fn max_abs_in_band(&self, lattice: &Lattice, lo: f64, hi: f64) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..self.nt {
            let t = lattice.t(i);
            if t >= lo + lattice.dt * (1.0 - 1e-9) && t <= hi - lattice.dt * (1.0 - 1e-9) {
                for j in 0..self.nx {
                    m = m.max(self.at(i, j).abs());
                }
            }
        }
        m
    }
}

/// Ricci scalar of `ds² = N² dt² − a² dx²` with `N = √b`:
///
/// ```text
/// R = −(2 / (N a)) [ ∂_t(∂_t a / N) − ∂_x(∂_x N / a) ]
/// ```
///
/// (sign for signature (+,−), `R^ρ_σμν = ∂_μ Γ^ρ_νσ − …`). The nested
/// derivatives are central differences with the lattice spacings as steps,
/// evaluated through the analytic model one cell around each site.
pub fn ricci_scalar(model: &MetricModel, lattice: &Lattice) -> CurvatureField {
    let (h, k) = (lattice.dt, lattice.dx);
    let n = |t: f64, x: f64| model.lapse(t, x).sqrt();
    let a = |t: f64, x: f64| model.scale(t, x);
    let mut values = Vec::with_capacity(lattice.len());
    for i in 0..lattice.nt {
        let t = lattice.t(i);
        for j in 0..lattice.nx {
            let x = lattice.x(j);
            let (a0, am, ap) = (a(t, x), a(t - h, x), a(t + h, x));
            let da_up = (ap - a0) / h / n(t + 0.5 * h, x);
            let da_dn = (a0 - am) / h / n(t - 0.5 * h, x);
            let time_part = (da_up - da_dn) / h;
            let (n0, nm, np) = (n(t, x), n(t, x - k), n(t, x + k));
            let dn_up = (np - n0) / k / a(t, x + 0.5 * k);
            let dn_dn = (n0 - nm) / k / a(t, x - 0.5 * k);
            let space_part = (dn_up - dn_dn) / k;
            values.push(-2.0 / (n0 * a0) * (time_part - space_part));
        }
    }
    CurvatureField { nt: lattice.nt, nx: lattice.nx, values }
}

/// Local light-cone slopes `dx/dt = ±√b / a` at a lattice site.
pub fn lightcone_slopes(model: &MetricModel, lattice: &Lattice, site: usize) -> (f64, f64) {
    let (i, j) = lattice.coords(site);
    let s = model.light_speed(lattice.t(i), lattice.x(j));
    (s, -s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sandwich() -> MetricModel {
        MetricModel::sandwich(SandwichParams::default(), 0.0, 4.0, 4.0).unwrap()
    }

    #[test]
    fn minkowski_lattice_spacing() {
        let m = MetricModel::minkowski(0.0, 63.0 * 2.0 * PI / 64.0, 2.0 * PI);
        let l = build_lattice(&m, 64, 64).unwrap();
        assert!((l.dx - 2.0 * PI / 64.0).abs() < 1e-15);
        assert!(l.dt <= l.dx * (1.0 + 1e-12));
    }

    #[test]
    fn too_few_sites_is_rejected() {
        let m = MetricModel::minkowski(0.0, 1.0, 1.0);
        assert!(matches!(build_lattice(&m, 4, 64), Err(Error::Config(_))));
    }

    #[test]
    fn cfl_violation_names_limiting_site() {
        let m = sandwich();
        // dt = 0.01 but dx = 0.005: far beyond the bound.
        match build_lattice(&m, 401, 800) {
            Err(Error::Cfl { bound, dt, .. }) => assert!(dt > bound),
            other => panic!("expected CFL error, got {other:?}"),
        }
    }

    #[test]
    fn sandwich_cfl_bound_matches_grid_minimum() {
        let m = sandwich();
        let l = build_lattice_with_cfl(&m, 401, 320, 0.95).unwrap();
        let mut r = f64::INFINITY;
        for i in 0..l.nt {
            for j in 0..l.nx {
                let (t, x) = (l.t(i), l.x(j));
                r = r.min(m.scale(t, x) / m.lapse(t, x).sqrt());
            }
        }
        assert!((cfl_bound(&m, &l, 0.95) - 0.95 * l.dx * r).abs() < 1e-15);
        assert!(r < 1.0, "the curved band must tighten the bound");
    }

    #[test]
    fn minkowski_is_flat() {
        let m = MetricModel::minkowski(0.0, 31.0 / 32.0, 1.0);
        let l = build_lattice(&m, 32, 32).unwrap();
        assert!(ricci_scalar(&m, &l).max_abs() < 1e-10);
    }

    #[test]
    fn expanding_curvature_matches_closed_form() {
        // a = e^t, b = 1: ä/a = 1 so R = −2 everywhere.
        let m = MetricModel::expanding(1.0, 0.0, 1.0, 2.0 * PI);
        let l = build_lattice_with_cfl(&m, 64, 64, 1.0).unwrap();
        let r = ricci_scalar(&m, &l);
        for &(i, j) in &[(5, 3), (10, 40), (32, 32), (50, 1), (60, 63)] {
            let rel = (r.at(i, j) + 2.0).abs() / 2.0;
            assert!(rel < 0.01, "R({i},{j}) = {}", r.at(i, j));
        }
    }

    #[test]
    fn sandwich_flat_bands_and_curved_middle() {
        let m = sandwich();
        let l = build_lattice_with_cfl(&m, 401, 320, 0.95).unwrap();
        let r = ricci_scalar(&m, &l);
        for (lo, hi) in m.flat_bands() {
            assert!(r.max_abs_in_band(&l, lo, hi) < 1e-8);
        }
        assert!(r.max_abs_in_band(&l, 1.2, 2.8) > 1e-3);
    }

    #[test]
    fn slopes() {
        let m = MetricModel::minkowski(0.0, 15.0 / 16.0, 1.0);
        let l = build_lattice(&m, 16, 16).unwrap();
        assert_eq!(lightcone_slopes(&m, &l, 17), (1.0, -1.0));
        let s = MetricModel::static_model(4.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(lightcone_slopes(&s, &l, 3), (2.0, -2.0));
        let sw = sandwich();
        let ls = build_lattice_with_cfl(&sw, 401, 320, 0.95).unwrap();
        let site = ls.nearest_site(2.0, 0.7);
        let (i, j) = ls.coords(site);
        let (t, x) = (ls.t(i), ls.x(j));
        let expect = (sw.lapse(t, x) / sw.scale(t, x).powi(2)).sqrt();
        assert!((lightcone_slopes(&sw, &ls, site).0 - expect).abs() < 1e-14);
    }

    #[test]
    fn reflection_swaps_bands() {
        let m = sandwich();
        let r = m.time_reflected();
        assert_eq!(r.scale(0.5, 1.3), m.scale(3.5, 1.3));
        let bands = r.flat_bands();
        assert!((bands[0].0 - 0.0).abs() < 1e-15 && (bands[0].1 - 1.0).abs() < 1e-15);
    }
}
