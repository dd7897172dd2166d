//! Majorana-Dirac field in 1+1: staggered solver for `S±`, the inner product
//! `s(f, h) = ∫ dη (Sf)⁺ h` and an exact self-dual CAR representation.
//!
//! Gamma matrices are real: `γ₀ = [[0,1],[1,0]]`, `γ₁ = [[0,1],[−1,0]]`, and
//! the mass enters through `Γ = γ₀γ₁`, so `(γᵃ∇ₐ + mΓ)² = □ + m²`. With
//! `φ = √a ψ`, `q = √(N/a)` and the null frame `χ = (φ₁ + φ₂)/√2`,
//! `ξ = (φ₂ − φ₁)/√2`, the equation becomes
//!
//! ```text
//! ∂ₜχ + K ξ = w fχ,    ∂ₜξ − Kᵀχ = w fξ,    K = q∂ₓq + Nm,  w = N√a,
//! ```
//!
//! with `(fχ, fξ)` the null-frame components of `γ₀f`. `χ` lives at
//! `(tₙ, xⱼ)` and `ξ` at `(tₙ + Δt/2, xⱼ + Δx/2)`, so the update is explicit
//! with a one-cell stencil. Site `(i, j)` stores `χ` at `(tᵢ, xⱼ)` and `ξ` at
//! `(tᵢ + Δt/2, xⱼ + Δx/2)`; source slots are `fχ` at `(tᵢ + Δt/2, xⱼ)` and
//! `fξ` at `(tᵢ, xⱼ + Δx/2)`.
//!
//! The pairing `s(f, h) = ΔtΔx Σ w f · (Sh averaged onto the slot)` equals the
//! conserved form `‖χⁿ‖² + ‖ξ^{n−½}‖² + Δt⟨χⁿ, Kξ^{n−½}⟩` of `(Sf, Sh)` whenever the
//! coefficients do not depend on time across the supports (flat and static
//! bands). There it is exactly symmetric and positive semidefinite.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::causal::Region;
use crate::error::{Error, Result};
use crate::geometry::{Lattice, MetricModel};
use crate::linalg::{cx, symmetric_eigen};
use crate::scalarfield::{periodic_offset, SparseMatrix, BOUNDARY_MARGIN};

pub const GAMMA0: [[f64; 2]; 2] = [[0.0, 1.0], [1.0, 0.0]];
pub const GAMMA1: [[f64; 2]; 2] = [[0.0, 1.0], [-1.0, 0.0]];

fn mat_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// `Γ = γ₀γ₁`.
pub fn mass_matrix() -> [[f64; 2]; 2] {
    mat_mul(GAMMA0, GAMMA1)
}

/// Max entry deviation of `γ₀γ₁ + γ₁γ₀ = 0`, `γ₀² = 1`, `γ₁² = −1`.
pub fn clifford_defect() -> f64 {
    let ac = {
        let (x, y) = (mat_mul(GAMMA0, GAMMA1), mat_mul(GAMMA1, GAMMA0));
        [[x[0][0] + y[0][0], x[0][1] + y[0][1]], [x[1][0] + y[1][0], x[1][1] + y[1][1]]]
    };
    let g00 = mat_mul(GAMMA0, GAMMA0);
    let g11 = mat_mul(GAMMA1, GAMMA1);
    let mut d = 0.0_f64;
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { 1.0 } else { 0.0 };
            d = d.max(ac[i][j].abs()).max((g00[i][j] - id).abs()).max((g11[i][j] + id).abs());
        }
    }
    d
}

/// Null-frame components `(fχ, fξ)` of `γ₀ f` for a spinor `f` in the gamma basis.
pub fn null_frame(f: [f64; 2]) -> [f64; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [(f[0] + f[1]) * s, (f[0] - f[1]) * s]
}

/// Real spinor source in slot form (see the module docs).
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorTestFunction {
    pub nt: usize,
    pub nx: usize,
    pub chi: Vec<f64>,
    pub xi: Vec<f64>,
}

impl SpinorTestFunction {
    pub fn zeros(lattice: &Lattice) -> Self {
        Self { nt: lattice.nt, nx: lattice.nx, chi: vec![0.0; lattice.len()], xi: vec![0.0; lattice.len()] }
    }

    /// `cos²` tensor bump times the constant spinor `f` (gamma basis),
    /// sampled at the slot positions.
    pub fn bump(lattice: &Lattice, t0: f64, x0: f64, rt: f64, rx: f64, f: [f64; 2]) -> Self {
        let [fc, fx] = null_frame(f);
        let prof = |t: f64, x: f64| {
            let dt = t - t0;
            let dx = periodic_offset(x, x0, lattice.circumference);
            if dt.abs() >= rt || dx.abs() >= rx {
                return 0.0;
            }
            let h = 0.5 * std::f64::consts::PI;
            (h * dt / rt).cos().powi(2) * (h * dx / rx).cos().powi(2)
        };
        let mut out = Self::zeros(lattice);
        for i in 0..lattice.nt {
            for j in 0..lattice.nx {
                let s = lattice.site(i, j);
                let (t, x) = (lattice.t(i), lattice.x(j));
                out.chi[s] = fc * prof(t + 0.5 * lattice.dt, x);
                out.xi[s] = fx * prof(t, x + 0.5 * lattice.dx);
            }
        }
        out
    }

    pub fn support(&self) -> Region {
        Region::from_parts(self.nt, self.nx, self.chi.iter().zip(&self.xi).map(|(a, b)| *a != 0.0 || *b != 0.0).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.chi.iter().chain(&self.xi).all(|&v| v == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            nt: self.nt,
            nx: self.nx,
            chi: self.chi.iter().map(|v| v * c).collect(),
            xi: self.xi.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            nt: self.nt,
            nx: self.nx,
            chi: self.chi.iter().zip(&other.chi).map(|(a, b)| a + b).collect(),
            xi: self.xi.iter().zip(&other.xi).map(|(a, b)| a + b).collect(),
        }
    }

    /// Same slot values on another lattice of equal width, shifted by `di`
    /// slices and `dj` columns and multiplied by `sign`. Sites falling off in
    /// time are dropped.
    pub fn shifted(&self, target: &Lattice, di: i64, dj: i64, sign: f64) -> Self {
        let mut out = Self::zeros(target);
        for s in 0..self.chi.len() {
            let (c, x) = (self.chi[s], self.xi[s]);
            if c == 0.0 && x == 0.0 {
                continue;
            }
            let (i, j) = (s / self.nx, s % self.nx);
            let ti = i as i64 + di;
            if ti < 0 || ti >= target.nt as i64 {
                continue;
            }
            let t = target.site(ti as usize, target.wrap(j, dj));
            out.chi[t] = sign * c;
            out.xi[t] = sign * x;
        }
        out
    }

    /// Source for the time-reflected model: `fχ` slot `i ↦ nt−2−i` with a sign
    /// flip, `fξ` slot `i ↦ nt−1−i`.
    pub fn time_reflected(&self) -> Self {
        let (nt, nx) = (self.nt, self.nx);
        let mut out = Self { nt, nx, chi: vec![0.0; nt * nx], xi: vec![0.0; nt * nx] };
        for i in 0..nt {
            for j in 0..nx {
                if i + 1 < nt {
                    out.chi[(nt - 2 - i) * nx + j] = -self.chi[i * nx + j];
                }
                out.xi[(nt - 1 - i) * nx + j] = self.xi[i * nx + j];
            }
        }
        out
    }
}

/// Staggered spinor solution: `χ` per site, `ξ` per site (half-shifted).
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField {
    pub nt: usize,
    pub nx: usize,
    pub chi: Vec<f64>,
    pub xi: Vec<f64>,
}

impl SpinorField {
    fn zeros(nt: usize, nx: usize) -> Self {
        Self { nt, nx, chi: vec![0.0; nt * nx], xi: vec![0.0; nt * nx] }
    }

    /// `|χ| + |ξ|` per site.
    pub fn magnitude(&self) -> Vec<f64> {
        self.chi.iter().zip(&self.xi).map(|(a, b)| a.abs() + b.abs()).collect()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            nt: self.nt,
            nx: self.nx,
            chi: self.chi.iter().zip(&other.chi).map(|(a, b)| a - b).collect(),
            xi: self.xi.iter().zip(&other.xi).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.chi.iter().chain(&self.xi).fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Image under time reflection: `χ` row `i ↦ nt−1−i`, `ξ` row `i ↦ nt−2−i` negated.
    pub fn time_reflected(&self) -> Self {
        let (nt, nx) = (self.nt, self.nx);
        let mut out = Self::zeros(nt, nx);
        for i in 0..nt {
            for j in 0..nx {
                out.chi[(nt - 1 - i) * nx + j] = self.chi[i * nx + j];
                if i + 1 < nt {
                    out.xi[(nt - 2 - i) * nx + j] = -self.xi[i * nx + j];
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Retarded,
    Advanced,
}

/// Metric samples on one time level (`tₙ` or `tₙ + Δt/2`).
#[derive(Clone, Debug)]
struct Level {
    /// `q` at `xⱼ` and `xⱼ + Δx/2`.
    q_int: Vec<f64>,
    q_half: Vec<f64>,
    /// `N` at `xⱼ`.
    n_int: Vec<f64>,
    /// Source weight `N√a` at `xⱼ` and at `xⱼ + Δx/2`.
    w_int: Vec<f64>,
    w_half: Vec<f64>,
}

/// Solver for `(γᵃ∇ₐ + mΓ) ψ = f` on a fixed model and lattice.
#[derive(Clone, Debug)]
pub struct DiracKernel {
    pub model: MetricModel,
    pub lattice: Lattice,
    pub mass: f64,
    /// Level `2n` is `tₙ`, level `2n + 1` is `tₙ + Δt/2`.
    levels: Vec<Level>,
}

impl DiracKernel {
    pub fn new(model: &MetricModel, lattice: &Lattice, mass: f64) -> Result<Self> {
        if !(mass >= 0.0) {
            return Err(Error::Config(format!("mass must be ≥ 0 (got {mass})")));
        }
        let (nt, nx) = (lattice.nt, lattice.nx);
        let mut levels = Vec::with_capacity(2 * nt);
        let mut worst = (0.0_f64, 0.0, 0.0);
        for l in 0..2 * nt {
            let t = lattice.t_min + (lattice.first_slice as f64 + 0.5 * l as f64) * lattice.dt;
            let mut lev = Level {
                q_int: Vec::with_capacity(nx),
                q_half: Vec::with_capacity(nx),
                n_int: Vec::with_capacity(nx),
                w_int: Vec::with_capacity(nx),
                w_half: Vec::with_capacity(nx),
            };
            for j in 0..nx {
                for (half, x) in [(false, lattice.x(j)), (true, lattice.x(j) + 0.5 * lattice.dx)] {
                    let n = model.lapse(t, x).sqrt();
                    let a = model.scale(t, x);
                    let q = (n / a).sqrt();
                    let w = n * a.sqrt();
                    if half {
                        lev.q_half.push(q);
                        lev.w_half.push(w);
                    } else {
                        lev.q_int.push(q);
                        lev.n_int.push(n);
                        lev.w_int.push(w);
                    }
                    // The explicit scheme needs Δt‖K‖ < 2.
                    let rate = 2.0 * q * q / lattice.dx + mass * n;
                    if rate > worst.0 {
                        worst = (rate, t, x);
                    }
                }
            }
            levels.push(lev);
        }
        let bound = 2.0 / worst.0;
        if lattice.dt >= bound {
            return Err(Error::Cfl { t: worst.1, x: worst.2, dt: lattice.dt, bound });
        }
        Ok(Self { model: model.clone(), lattice: lattice.clone(), mass, levels })
    }

    /// `(Kξ)ⱼ` on level `l`.
    fn k(&self, l: usize, xi: &[f64], j: usize) -> f64 {
        let lev = &self.levels[l];
        let nx = self.lattice.nx;
        let jm = (j + nx - 1) % nx;
        lev.q_int[j] * (lev.q_half[j] * xi[j] - lev.q_half[jm] * xi[jm]) / self.lattice.dx
            + 0.5 * self.mass * lev.n_int[j] * (xi[j] + xi[jm])
    }

    /// `(Kᵀχ)ⱼ₊½` on level `l`.
    fn kt(&self, l: usize, chi: &[f64], j: usize) -> f64 {
        let lev = &self.levels[l];
        let nx = self.lattice.nx;
        let jp = (j + 1) % nx;
        lev.q_half[j] * (lev.q_int[j] * chi[j] - lev.q_int[jp] * chi[jp]) / self.lattice.dx
            + 0.5 * self.mass * (lev.n_int[j] * chi[j] + lev.n_int[jp] * chi[jp])
    }

    fn check_source(&self, f: &SpinorTestFunction) -> Result<()> {
        let (nt, nx) = (self.lattice.nt, self.lattice.nx);
        if f.nt != nt || f.nx != nx {
            return Err(Error::Domain(format!("spinor source is {}×{}, lattice is {nt}×{nx}", f.nt, f.nx)));
        }
        for i in (0..BOUNDARY_MARGIN).chain(nt - BOUNDARY_MARGIN..nt) {
            let row = i * nx..(i + 1) * nx;
            if f.chi[row.clone()].iter().chain(&f.xi[row]).any(|&v| v != 0.0) {
                return Err(Error::Boundary(format!("slice {i} of {nt}")));
            }
        }
        Ok(())
    }

    pub fn solve(&self, f: &SpinorTestFunction, direction: Direction) -> Result<SpinorField> {
        self.check_source(f)?;
        let (nt, nx) = (self.lattice.nt, self.lattice.nx);
        let dt = self.lattice.dt;
        let mut u = SpinorField::zeros(nt, nx);
        let mut buf = vec![0.0; nx];
        match direction {
            Direction::Retarded => {
                for n in 0..nt - 1 {
                    // ξ^{n+½} = ξ^{n−½} + Δt (Kₙᵀ χⁿ + w fξⁿ)
                    let (lo, hi) = (n * nx, (n + 1) * nx);
                    for j in 0..nx {
                        let prev = if n == 0 { 0.0 } else { u.xi[lo - nx + j] };
                        buf[j] = prev + dt * (self.kt(2 * n, &u.chi[lo..hi], j) + self.levels[2 * n].w_half[j] * f.xi[lo + j]);
                    }
                    u.xi[lo..hi].copy_from_slice(&buf);
                    // χ^{n+1} = χⁿ + Δt (−K_{n+½} ξ^{n+½} + w fχ^{n+½})
                    for j in 0..nx {
                        buf[j] = u.chi[lo + j]
                            + dt * (-self.k(2 * n + 1, &u.xi[lo..hi], j) + self.levels[2 * n + 1].w_int[j] * f.chi[lo + j]);
                    }
                    u.chi[hi..hi + nx].copy_from_slice(&buf);
                }
            }
            Direction::Advanced => {
                for n in (0..nt - 1).rev() {
                    let (lo, hi) = (n * nx, (n + 1) * nx);
                    // ξ^{n+½} = ξ^{n+3/2} − Δt (K_{n+1}ᵀ χ^{n+1} + w fξ^{n+1})
                    for j in 0..nx {
                        let next = if n + 2 < nt { u.xi[hi + j] } else { 0.0 };
                        buf[j] = next
                            - dt * (self.kt(2 * n + 2, &u.chi[hi..hi + nx], j) + self.levels[2 * n + 2].w_half[j] * f.xi[hi + j]);
                    }
                    u.xi[lo..hi].copy_from_slice(&buf);
                    // χⁿ = χ^{n+1} + Δt (K_{n+½} ξ^{n+½} − w fχ^{n+½})
                    for j in 0..nx {
                        buf[j] = u.chi[hi + j]
                            + dt * (self.k(2 * n + 1, &u.xi[lo..hi], j) - self.levels[2 * n + 1].w_int[j] * f.chi[lo + j]);
                    }
                    u.chi[lo..hi].copy_from_slice(&buf);
                }
            }
        }
        Ok(u)
    }

    pub fn solve_retarded(&self, f: &SpinorTestFunction) -> Result<SpinorField> {
        self.solve(f, Direction::Retarded)
    }

    pub fn solve_advanced(&self, f: &SpinorTestFunction) -> Result<SpinorField> {
        self.solve(f, Direction::Advanced)
    }

    /// `S f = S⁺ f − S⁻ f`.
    pub fn solve_causal(&self, f: &SpinorTestFunction) -> Result<SpinorField> {
        Ok(self.solve_retarded(f)?.sub(&self.solve_advanced(f)?))
    }

    /// Discrete Dirac operator divided by the slot weight, evaluated on the
    /// slots of slices `1..nt−1` (others are zero).
    pub fn apply(&self, u: &SpinorField) -> SpinorTestFunction {
        let (nt, nx) = (self.lattice.nt, self.lattice.nx);
        let dt = self.lattice.dt;
        let mut out = SpinorTestFunction { nt, nx, chi: vec![0.0; nt * nx], xi: vec![0.0; nt * nx] };
        for n in 1..nt - 1 {
            let (lo, hi) = (n * nx, (n + 1) * nx);
            for j in 0..nx {
                let dchi = (u.chi[hi + j] - u.chi[lo + j]) / dt + self.k(2 * n + 1, &u.xi[lo..hi], j);
                out.chi[lo + j] = dchi / self.levels[2 * n + 1].w_int[j];
                let dxi = (u.xi[lo + j] - u.xi[lo - nx + j]) / dt - self.kt(2 * n, &u.chi[lo..hi], j);
                out.xi[lo + j] = dxi / self.levels[2 * n].w_half[j];
            }
        }
        out
    }

    /// `ΔtΔx Σ w f · ū`, with `ū` the solution averaged in time onto each slot.
    pub fn pairing(&self, f: &SpinorTestFunction, u: &SpinorField) -> f64 {
        let (nt, nx) = (self.lattice.nt, self.lattice.nx);
        let mut acc = 0.0;
        for n in 1..nt - 1 {
            for j in 0..nx {
                let s = n * nx + j;
                if f.chi[s] != 0.0 {
                    acc += self.levels[2 * n + 1].w_int[j] * f.chi[s] * 0.5 * (u.chi[s] + u.chi[s + nx]);
                }
                if f.xi[s] != 0.0 {
                    acc += self.levels[2 * n].w_half[j] * f.xi[s] * 0.5 * (u.xi[s - nx] + u.xi[s]);
                }
            }
        }
        acc * self.lattice.dt * self.lattice.dx
    }

    /// Form `Δx (‖χⁿ‖² + ‖ξ^{n−½}‖² + Δt⟨χⁿ, K ξ^{n−½}⟩)` of two homogeneous
    /// solutions on slice `n ≥ 1`, symmetrised, with `K` taken at `tₙ`.
    /// Conserved wherever `K` does not depend on time.
    pub fn cauchy_form(&self, u: &SpinorField, v: &SpinorField, n: usize) -> f64 {
        let nx = self.lattice.nx;
        let (cur, prev) = (n * nx..(n + 1) * nx, (n - 1) * nx..n * nx);
        let (uc, vc) = (&u.chi[cur.clone()], &v.chi[cur]);
        let (up, vp) = (&u.xi[prev.clone()], &v.xi[prev]);
        let mut acc = 0.0;
        for j in 0..nx {
            acc += uc[j] * vc[j] + up[j] * vp[j];
            acc += 0.5 * self.lattice.dt * (uc[j] * self.k(2 * n, vp, j) + vc[j] * self.k(2 * n, up, j));
        }
        acc * self.lattice.dx
    }

    /// `s(f, h) = pairing(f, S h)`.
    pub fn inner_product(&self, f: &SpinorTestFunction, h: &SpinorTestFunction) -> Result<f64> {
        Ok(self.pairing(f, &self.solve_causal(h)?))
    }
}

/// Basis spinor sources with their causal solutions and Gram matrix `s`.
#[derive(Clone, Debug)]
pub struct CARSpace {
    pub basis: Vec<SpinorTestFunction>,
    pub solutions: Vec<SpinorField>,
    /// Symmetrised Gram matrix.
    pub gram: DMatrix<f64>,
    /// `max |s_ij − s_ji|` before symmetrisation.
    pub asymmetry: f64,
}

impl CARSpace {
    pub fn new(kernel: &DiracKernel, basis: Vec<SpinorTestFunction>) -> Result<Self> {
        let solutions = basis.iter().map(|f| kernel.solve_causal(f)).collect::<Result<Vec<_>>>()?;
        let n = basis.len();
        let raw = DMatrix::from_fn(n, n, |i, j| kernel.pairing(&basis[i], &solutions[j]));
        let asymmetry = (&raw - raw.transpose()).abs().max();
        let gram = (&raw + raw.transpose()) * 0.5;
        Ok(Self { basis, solutions, gram, asymmetry })
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// `s(v, w) = Σ conj(vᵢ) wⱼ sᵢⱼ`.
    pub fn inner(&self, v: &[Complex64], w: &[Complex64]) -> Complex64 {
        let mut acc = cx(0.0);
        for i in 0..self.len() {
            for j in 0..self.len() {
                acc += v[i].conj() * w[j] * self.gram[(i, j)];
            }
        }
        acc
    }

    /// `s` from `car_gram`.
    pub fn car_gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn car_operators(&self) -> Result<CARRep> {
        CARRep::new(&self.gram)
    }
}

/// Componentwise complex conjugation.
pub fn conjugate(v: &[Complex64]) -> Vec<Complex64> {
    v.iter().map(|z| z.conj()).collect()
}

/// Majorana operators `Bᵢ = Σₖ Lᵢₖ Mₖ/√2` with `L Lᵀ = s` on `(ℂ²)^{⊗n}`,
/// `Mₖ = Z ⊗ … ⊗ Z ⊗ X ⊗ 1 ⊗ …` (Jordan-Wigner).
#[derive(Clone, Debug)]
pub struct CARRep {
    pub n_modes: usize,
    pub dim: usize,
    /// `sᵢⱼ` the representation realises.
    pub gram: DMatrix<f64>,
    /// Row `i`: `Lᵢ`.
    pub factor: DMatrix<f64>,
    pub majoranas: Vec<SparseMatrix>,
    pub ops: Vec<SparseMatrix>,
}

/// Eigenvalues of `s` below this fraction of the largest are null.
pub const CAR_NULL_TOL: f64 = 1e-12;

impl CARRep {
    pub fn new(gram: &DMatrix<f64>) -> Result<Self> {
        let (vals, vecs) = symmetric_eigen(gram);
        let top = vals.last().copied().unwrap_or(0.0).max(0.0);
        if let Some(&low) = vals.first() {
            if low < -1e-8 * top.max(1.0) {
                return Err(Error::Solver(format!("inner product has eigenvalue {low:.3e}")));
            }
        }
        let kept: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > CAR_NULL_TOL * top).collect();
        let n_modes = kept.len();
        if n_modes > 12 {
            return Err(Error::Config(format!("{n_modes} modes exceed the limit of 12")));
        }
        let factor = DMatrix::from_fn(gram.nrows(), n_modes, |i, k| vecs[(i, kept[k])] * vals[kept[k]].sqrt());
        let dim = 1usize << n_modes;
        let majoranas: Vec<SparseMatrix> = (0..n_modes).map(|k| jordan_wigner(n_modes, k)).collect();
        let mut rep = Self { n_modes, dim, gram: gram.clone(), factor, majoranas, ops: Vec::new() };
        rep.ops = (0..gram.nrows()).map(|i| rep.b_real(&rep.factor.row(i).iter().copied().collect::<Vec<_>>())).collect();
        Ok(rep)
    }

    fn b_real(&self, coeffs: &[f64]) -> SparseMatrix {
        let parts: Vec<(&SparseMatrix, Complex64)> =
            self.majoranas.iter().zip(coeffs).map(|(m, &c)| (m, cx(c * std::f64::consts::FRAC_1_SQRT_2))).collect();
        if parts.is_empty() {
            return SparseMatrix::zeros(self.dim);
        }
        SparseMatrix::linear_combination(&parts)
    }

    /// `B(v) = Σᵢ vᵢ Bᵢ`.
    pub fn b(&self, v: &[Complex64]) -> SparseMatrix {
        let parts: Vec<(&SparseMatrix, Complex64)> = self.ops.iter().zip(v).map(|(m, &c)| (m, c)).collect();
        if parts.is_empty() {
            return SparseMatrix::zeros(self.dim);
        }
        SparseMatrix::linear_combination(&parts)
    }

    /// `max |{B(v)*, B(w)} − s(v, w) 1|` entrywise.
    pub fn anticommutator_defect(&self, v: &[Complex64], w: &[Complex64]) -> f64 {
        let bv = self.b(v).to_dense().adjoint();
        let bw = self.b(w).to_dense();
        let mut ac = &bv * &bw + &bw * &bv;
        let mut s = cx(0.0);
        for i in 0..v.len() {
            for j in 0..w.len() {
                s += v[i].conj() * w[j] * self.gram[(i, j)];
            }
        }
        for d in 0..self.dim {
            ac[(d, d)] -= s;
        }
        ac.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    /// Largest `|{Bᵢ*, Bⱼ} − sᵢⱼ 1|` over all basis pairs.
    pub fn basis_defect(&self) -> f64 {
        let n = self.ops.len();
        let dense: Vec<_> = self.ops.iter().map(|b| b.to_dense()).collect();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let ac = dense[i].adjoint() * &dense[j] + &dense[j] * dense[i].adjoint();
                for r in 0..self.dim {
                    for c in 0..self.dim {
                        let expect = if r == c { self.gram[(i, j)] } else { 0.0 };
                        worst = worst.max((ac[(r, c)] - cx(expect)).norm());
                    }
                }
            }
        }
        worst
    }

    /// Normalised Hilbert-Schmidt norm `(tr(A* A)/dim)^½` of `[B(f_i), B(f_j)]`,
    /// a lower bound for the operator norm.
    pub fn commutator_norm(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.ops[i].to_dense(), self.ops[j].to_dense());
        let c = &a * &b - &b * &a;
        (c.norm_squared() / self.dim as f64).sqrt()
    }
}

/// `Z^{⊗k} ⊗ X ⊗ 1^{⊗(n−k−1)}`, mode 0 the most significant bit.
fn jordan_wigner(n: usize, k: usize) -> SparseMatrix {
    let dim = 1usize << n;
    let mut m = SparseMatrix::zeros(dim);
    let bit = n - 1 - k;
    for col in 0..dim {
        let row = col ^ (1 << bit);
        let higher = col >> (bit + 1);
        let sign = if higher.count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        m.push(row, col, cx(sign));
    }
    m
}

/// Locality witnesses for a pair of sources.
#[derive(Clone, Debug)]
pub struct AnticommutatorReport {
    /// `|s(f, h)| + |s(Cf, h)|`.
    pub anticommutator: f64,
    /// Normalised norm of `[B(f), B(h)]`.
    pub commutator_norm: f64,
    /// `(s(f, f) s(h, h))^½`.
    pub scale: f64,
}

pub fn spacelike_anticommutator(kernel: &DiracKernel, f: &SpinorTestFunction, h: &SpinorTestFunction) -> Result<AnticommutatorReport> {
    let space = CARSpace::new(kernel, vec![f.clone(), h.clone()])?;
    let s = &space.gram;
    // Real sources are their own conjugates.
    let anticommutator = 2.0 * s[(0, 1)].abs();
    let scale = (s[(0, 0)] * s[(1, 1)]).max(0.0).sqrt();
    let rep = space.car_operators()?;
    let commutator_norm = if rep.ops.len() == 2 { rep.commutator_norm(0, 1) } else { 0.0 };
    Ok(AnticommutatorReport { anticommutator, commutator_norm, scale })
}
