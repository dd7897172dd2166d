//! Klein-Gordon field on a lattice spacetime: retarded and advanced
//! solutions, the causal propagator `E = E⁺ − E⁻`, the symplectic form
//! `κ(f, h) = Σ f · Eh dη`, the quasifree state and its truncated Fock
//! representation, and the strict causal dynamical law.
//!
//! The discrete operator is `K = N a (□ + m²)` in conservative form,
//!
//! ```text
//! (Ku)_ij = [A_{i+½,j}(u_{i+1,j} − u_ij) − A_{i−½,j}(u_ij − u_{i−1,j})] / Δt²
//!         − [B_{i,j+½}(u_{i,j+1} − u_ij) − B_{i,j−½}(u_ij − u_{i,j−1})] / Δx²
//!         + m² (Na)_ij u_ij
//! ```
//!
//! with `A = a/N` on half time steps and `B = N/a` on half space steps, so
//! that `K u = Na f` is the lattice form of `(□ + m²) u = f`. `K` is
//! symmetric, which makes `κ` exactly antisymmetric.

pub mod fock;
pub mod state;

use crate::causal::{causally_determined, CausalGraph, Region};
use crate::error::{Error, Result};
use crate::geometry::{cfl_bound, Lattice, MetricModel};

pub use fock::{FockRep, LocalAlgebra, SparseMatrix};
pub use state::{build_quasifree_state, QuasifreeState, SymplecticSpace};

/// Slices at either end of the lattice that a source may not touch.
pub const BOUNDARY_MARGIN: usize = 2;

/// Real grid function, row-major over the lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub nt: usize,
    pub nx: usize,
    pub values: Vec<f64>,
}

/// Periodic offset `x − x0` folded into `[−L/2, L/2)`.
pub fn periodic_offset(x: f64, x0: f64, circumference: f64) -> f64 {
    (x - x0 + 0.5 * circumference).rem_euclid(circumference) - 0.5 * circumference
}

impl TestFunction {
    pub fn zeros(lattice: &Lattice) -> Self {
        Self { nt: lattice.nt, nx: lattice.nx, values: vec![0.0; lattice.len()] }
    }

    /// Tensor bump `cos²(π Δt / 2r_t) cos²(π Δx / 2r_x)` centred at `(t0, x0)`.
    pub fn bump(lattice: &Lattice, t0: f64, x0: f64, rt: f64, rx: f64) -> Self {
        let mut f = Self::zeros(lattice);
        for i in 0..lattice.nt {
            let dt = lattice.t(i) - t0;
            if dt.abs() >= rt {
                continue;
            }
            let ft = (0.5 * std::f64::consts::PI * dt / rt).cos().powi(2);
            for j in 0..lattice.nx {
                let dx = periodic_offset(lattice.x(j), x0, lattice.circumference);
                if dx.abs() < rx {
                    f.values[lattice.site(i, j)] = ft * (0.5 * std::f64::consts::PI * dx / rx).cos().powi(2);
                }
            }
        }
        f
    }

    /// Unit value at one site.
    pub fn delta(lattice: &Lattice, site: usize) -> Self {
        let mut f = Self::zeros(lattice);
        f.values[site] = 1.0;
        f
    }

    pub fn from_values(lattice: &Lattice, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), lattice.len());
        Self { nt: lattice.nt, nx: lattice.nx, values }
    }

    pub fn support(&self) -> Region {
        Region::from_parts(self.nt, self.nx, self.values.iter().map(|&v| v != 0.0).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { nt: self.nt, nx: self.nx, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { nt: self.nt, nx: self.nx, values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() }
    }

    /// Image under `i ↦ nt − 1 − i`.
    pub fn time_reflected(&self) -> Self {
        Self { nt: self.nt, nx: self.nx, values: reflect_rows(&self.values, self.nt, self.nx) }
    }

    /// Same values on another lattice of equal width, shifted by `di` slices
    /// and `dj` columns. Sites falling off in time are dropped.
    pub fn shifted(&self, target: &Lattice, di: i64, dj: i64) -> Self {
        let mut out = TestFunction::zeros(target);
        for (s, &v) in self.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let (i, j) = (s / self.nx, s % self.nx);
            let ti = i as i64 + di;
            if ti < 0 || ti >= target.nt as i64 {
                continue;
            }
            out.values[target.site(ti as usize, target.wrap(j, dj))] = v;
        }
        out
    }
}

pub fn reflect_rows(values: &[f64], nt: usize, nx: usize) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for i in 0..nt {
        let k = nt - 1 - i;
        out[k * nx..(k + 1) * nx].copy_from_slice(&values[i * nx..(i + 1) * nx]);
    }
    out
}

/// Solver for `(□_g + m²) u = f` on a fixed model and lattice.
#[derive(Clone, Debug)]
pub struct ScalarKernel {
    pub model: MetricModel,
    pub lattice: Lattice,
    pub mass: f64,
    /// `A = a/N` at `(t_i + Δt/2, x_j)`, `(nt − 1) × nx`.
    a_half: Vec<f64>,
    /// `B = N/a` at `(t_i, x_j + Δx/2)`, `nt × nx`.
    b_half: Vec<f64>,
    /// Volume weight `N a` at the sites.
    na: Vec<f64>,
}

impl ScalarKernel {
    pub fn new(model: &MetricModel, lattice: &Lattice, mass: f64) -> Result<Self> {
        if !(mass >= 0.0) {
            return Err(Error::Config(format!("mass must be ≥ 0 (got {mass})")));
        }
        let bound = cfl_bound(model, lattice, 1.0);
        if lattice.dt > bound * (1.0 + 1e-12) {
            return Err(Error::Cfl { t: lattice.t(0), x: 0.0, dt: lattice.dt, bound });
        }
        let (nt, nx) = (lattice.nt, lattice.nx);
        let mut a_half = Vec::with_capacity((nt - 1) * nx);
        for i in 0..nt - 1 {
            let t = lattice.t(i) + 0.5 * lattice.dt;
            for j in 0..nx {
                let x = lattice.x(j);
                a_half.push(model.scale(t, x) / model.lapse(t, x).sqrt());
            }
        }
        let mut b_half = Vec::with_capacity(nt * nx);
        let mut na = Vec::with_capacity(nt * nx);
        for i in 0..nt {
            let t = lattice.t(i);
            for j in 0..nx {
                let x = lattice.x(j);
                let xh = x + 0.5 * lattice.dx;
                b_half.push(model.lapse(t, xh).sqrt() / model.scale(t, xh));
                na.push(model.lapse(t, x).sqrt() * model.scale(t, x));
            }
        }
        Ok(Self { model: model.clone(), lattice: lattice.clone(), mass, a_half, b_half, na })
    }

    pub fn volume_weight(&self, site: usize) -> f64 {
        self.na[site]
    }

    /// `A_{i+½, j}`.
    pub fn a_half(&self, i: usize, j: usize) -> f64 {
        self.a_half[i * self.lattice.nx + j]
    }

    /// Spatial part plus mass term at slice `i`: `S_ij − m² Na_ij u_ij`.
    fn spatial(&self, u: &[f64], i: usize, j: usize) -> f64 {
        let nx = self.lattice.nx;
        let row = i * nx;
        let (jm, jp) = ((j + nx - 1) % nx, (j + 1) % nx);
        let uc = u[row + j];
        let flux_r = self.b_half[row + j] * (u[row + jp] - uc);
        let flux_l = self.b_half[row + jm] * (uc - u[row + jm]);
        (flux_r - flux_l) / (self.lattice.dx * self.lattice.dx) - self.mass * self.mass * self.na[row + j] * uc
    }

    /// `K u` on slices `1..nt−1`; boundary slices are left at zero.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let (nt, nx) = (self.lattice.nt, self.lattice.nx);
        let dt2 = self.lattice.dt * self.lattice.dt;
        let mut out = vec![0.0; u.len()];
        for i in 1..nt - 1 {
            for j in 0..nx {
                let s = i * nx + j;
                let up = self.a_half[i * nx + j] * (u[s + nx] - u[s]);
                let dn = self.a_half[(i - 1) * nx + j] * (u[s] - u[s - nx]);
                out[s] = (up - dn) / dt2 - self.spatial(u, i, j);
            }
        }
        out
    }

    /// `max |K u / Na − f|` over the interior slices.
    pub fn residual(&self, u: &[f64], f: &TestFunction) -> f64 {
        let ku = self.apply(u);
        let (nt, nx) = (self.lattice.nt, self.lattice.nx);
        (nx..(nt - 1) * nx).map(|s| (ku[s] / self.na[s] - f.values[s]).abs()).fold(0.0, f64::max)
    }

    fn check_source(&self, f: &TestFunction) -> Result<()> {
        let (nt, nx) = (self.lattice.nt, self.lattice.nx);
        if f.nt != nt || f.nx != nx {
            return Err(Error::Domain(format!("test function is {}×{}, lattice is {nt}×{nx}", f.nt, f.nx)));
        }
        for i in (0..BOUNDARY_MARGIN).chain(nt - BOUNDARY_MARGIN..nt) {
            if f.values[i * nx..(i + 1) * nx].iter().any(|&v| v != 0.0) {
                return Err(Error::Boundary(format!("slice {i} of {nt}")));
            }
        }
        Ok(())
    }

    /// `E⁺ f`: zero data below the support, stepped forward.
    pub fn solve_retarded(&self, f: &TestFunction) -> Result<Vec<f64>> {
        self.check_source(f)?;
        let (nt, nx) = (self.lattice.nt, self.lattice.nx);
        let dt2 = self.lattice.dt * self.lattice.dt;
        let mut u = vec![0.0; nt * nx];
        let first = (0..nt).find(|&i| f.values[i * nx..(i + 1) * nx].iter().any(|&v| v != 0.0));
        let Some(first) = first else { return Ok(u) };
        for i in first..nt - 1 {
            for j in 0..nx {
                let s = i * nx + j;
                let rhs = dt2 * (self.spatial(&u, i, j) + self.na[s] * f.values[s]);
                let dn = self.a_half[(i - 1) * nx + j] * (u[s] - u[s - nx]);
                u[s + nx] = u[s] + (dn + rhs) / self.a_half[i * nx + j];
            }
        }
        Ok(u)
    }

    /// `E⁻ f`: zero data above the support, stepped backward.
    pub fn solve_advanced(&self, f: &TestFunction) -> Result<Vec<f64>> {
        self.check_source(f)?;
        let (nt, nx) = (self.lattice.nt, self.lattice.nx);
        let dt2 = self.lattice.dt * self.lattice.dt;
        let mut u = vec![0.0; nt * nx];
        let last = (0..nt).rev().find(|&i| f.values[i * nx..(i + 1) * nx].iter().any(|&v| v != 0.0));
        let Some(last) = last else { return Ok(u) };
        for i in (1..=last).rev() {
            for j in 0..nx {
                let s = i * nx + j;
                let rhs = dt2 * (self.spatial(&u, i, j) + self.na[s] * f.values[s]);
                let up = self.a_half[i * nx + j] * (u[s + nx] - u[s]);
                u[s - nx] = u[s] - (up - rhs) / self.a_half[(i - 1) * nx + j];
            }
        }
        Ok(u)
    }

    /// `E f = E⁺ f − E⁻ f`.
    pub fn solve_causal(&self, f: &TestFunction) -> Result<Vec<f64>> {
        let r = self.solve_retarded(f)?;
        let a = self.solve_advanced(f)?;
        Ok(r.iter().zip(&a).map(|(x, y)| x - y).collect())
    }

    /// `Σ f u dη` with `dη = Na Δt Δx`.
    pub fn integrate(&self, f: &TestFunction, u: &[f64]) -> f64 {
        let w = self.lattice.dt * self.lattice.dx;
        f.values.iter().zip(u).zip(&self.na).filter(|((&fv, _), _)| fv != 0.0).map(|((fv, uv), n)| fv * uv * n).sum::<f64>() * w
    }

    /// `‖f‖ = (Σ f² dη)^½`.
    pub fn norm(&self, f: &TestFunction) -> f64 {
        self.integrate(f, &f.values).sqrt()
    }

    /// `σ_s(u, v) = (Δx/Δt) Σ_j A_{s+½,j} (u_{s+1,j} v_{s,j} − u_{s,j} v_{s+1,j})`, conserved
    /// in `s` for homogeneous solutions; `κ(f, h) = σ_s(Ef, Eh)`.
    pub fn cauchy_form(&self, u: &[f64], v: &[f64], s: usize) -> f64 {
        let nx = self.lattice.nx;
        let mut acc = 0.0;
        for j in 0..nx {
            let (a, b) = (s * nx + j, (s + 1) * nx + j);
            acc += self.a_half[s * nx + j] * (u[b] * v[a] - u[a] * v[b]);
        }
        acc * self.lattice.dx / self.lattice.dt
    }

    /// Values of `u` on slices `s` and `s + 1`.
    pub fn cauchy_data(&self, u: &[f64], s: usize) -> Vec<f64> {
        let nx = self.lattice.nx;
        u[s * nx..(s + 2) * nx].to_vec()
    }
}

/// `κ(f, h) = Σ f · Eh dη`.
pub fn symplectic_pairing(kernel: &ScalarKernel, f: &TestFunction, h: &TestFunction) -> Result<f64> {
    let eh = kernel.solve_causal(h)?;
    Ok(kernel.integrate(f, &eh))
}

/// Mass fraction of `u` outside a region.
pub fn mass_outside(u: &[f64], region: &Region) -> f64 {
    let total: f64 = u.iter().map(|v| v.abs()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let out: f64 = u.iter().zip(region.mask()).filter(|(_, &m)| !m).map(|(v, _)| v.abs()).sum();
    out / total
}

/// Result of the strict causal law construction.
#[derive(Clone, Debug)]
pub struct StrictLaw {
    pub f2: TestFunction,
    /// `χ` jumps from 0 to 1 between slices `cut` and `cut + 1`; `None` on the identity path.
    pub cut: Option<usize>,
    /// Relative max difference of the Cauchy data of `E f2` and `E f1` on the reference slice pair.
    pub cauchy_error: f64,
    pub reference_slice: usize,
}

/// Builds `f2` with `supp f2 ⊂ O2` and `E f2 = E f1`, given `supp f1 ◁ O2`.
///
/// With `u = E f1` and `χ` the step that is 0 up to slice `s` and 1 above,
/// `f2 = K(χ u) / Na`. Because `K u = 0`, `f2` lives on slices `s` and `s + 1`:
/// `f2_s = A_{s+½} u_{s+1} / (Δt² Na)` and `f2_{s+1} = −A_{s+½} u_s / (Δt² Na)`.
/// Then `E⁺ f2 = χ u`, `E⁻ f2 = (χ − 1) u`, hence `E f2 = u`. The first slice
/// pair (from the top) on which this support fits inside `O2` and which does
/// not cut through `supp f1` is used.
pub fn strict_causal_law(kernel: &ScalarKernel, graph: &CausalGraph, f1: &TestFunction, o2: &Region) -> Result<StrictLaw> {
    let lat = &kernel.lattice;
    let supp = f1.support();
    if supp.is_empty() {
        return Err(Error::Domain("f1 vanishes".into()));
    }
    if !causally_determined(graph, &supp, o2) {
        return Err(Error::Domain("supp f1 is not causally determined by O2".into()));
    }
    let u = kernel.solve_causal(f1)?;
    let reference_slice = BOUNDARY_MARGIN;
    if supp.is_subset(o2) {
        return Ok(StrictLaw { f2: f1.clone(), cut: None, cauchy_error: 0.0, reference_slice });
    }
    let (nt, nx) = (lat.nt, lat.nx);
    let (lo, hi) = o2.slice_range().ok_or_else(|| Error::Domain("O2 is empty".into()))?;
    let lo = lo.max(BOUNDARY_MARGIN);
    let hi = hi.min(nt - 1 - BOUNDARY_MARGIN);
    let (f_lo, f_hi) = supp.slice_range().expect("nonempty support");
    let c = 1.0 / (lat.dt * lat.dt);
    for s in (lo..hi).rev() {
        if s < f_hi && s + 1 > f_lo {
            continue;
        }
        let fits = (0..nx).all(|j| {
            let (a, b) = (s * nx + j, (s + 1) * nx + j);
            (u[b] == 0.0 || o2.contains(a)) && (u[a] == 0.0 || o2.contains(b))
        });
        if !fits {
            continue;
        }
        let mut f2 = TestFunction::zeros(lat);
        for j in 0..nx {
            let (a, b) = (s * nx + j, (s + 1) * nx + j);
            let ah = kernel.a_half(s, j);
            f2.values[a] = c * ah * u[b] / kernel.na[a];
            f2.values[b] = -c * ah * u[a] / kernel.na[b];
        }
        let u2 = kernel.solve_causal(&f2)?;
        let d1 = kernel.cauchy_data(&u, reference_slice);
        let d2 = kernel.cauchy_data(&u2, reference_slice);
        let scale = d1.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let diff = d1.iter().zip(&d2).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        let cauchy_error = if scale > 0.0 { diff / scale } else { diff };
        return Ok(StrictLaw { f2, cut: Some(s), cauchy_error, reference_slice });
    }
    Err(Error::Precondition(format!(
        "no slice pair inside O2 (slices {lo}..={hi}) holds the cut; refine the lattice or enlarge O2"
    )))
}
