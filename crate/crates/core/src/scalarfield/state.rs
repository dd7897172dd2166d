//! Symplectic space over a basis of test functions and the quasifree state
//! built from the mode decomposition on a flat initial slice pair.
//!
//! On a flat band (`N = 1`, `a = a0`) the real Fourier modes decouple. Mode
//! `k` evolves by `q_{i+1} − 2 q_i + q_{i−1} = −Ω_k² Δt² q_i`, with
//! `Ω_k² = 4 sin²(π n / Nx) / (a0 Δx)² + m²`, i.e. with phase `θ_k` per step,
//! `cos θ_k = 1 − Ω_k² Δt² / 2`. The positive-frequency functional of the
//! data `(q_s, q_{s+1})` is `ℓ_k = c (e^{−iθ_k} q_s − q_{s+1})`, `c = a0 Δx / Δt`, and
//!
//! ```text
//! W(f, h) = Σ_k conj(ℓ_k(Ef)) ℓ_k(Eh) / (2 c sin θ_k)
//! ```
//!
//! is positive and satisfies `Im W = κ / 2` identically.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{ScalarKernel, TestFunction, BOUNDARY_MARGIN};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, rank, CMat};

/// Basis test functions with their causal solutions and Gram matrix.
#[derive(Clone, Debug)]
pub struct SymplecticSpace {
    pub basis: Vec<TestFunction>,
    pub solutions: Vec<Vec<f64>>,
    /// `κ_ij = κ(f_i, f_j)`.
    pub kappa: DMatrix<f64>,
    /// Slice `s` of the Cauchy data `(Ef|_s, Ef|_{s+1})`.
    pub reference_slice: usize,
}

impl SymplecticSpace {
    pub fn new(kernel: &ScalarKernel, basis: Vec<TestFunction>) -> Result<Self> {
        let solutions = basis.iter().map(|f| kernel.solve_causal(f)).collect::<Result<Vec<_>>>()?;
        let n = basis.len();
        let kappa = DMatrix::from_fn(n, n, |i, j| kernel.integrate(&basis[i], &solutions[j]));
        Ok(Self { basis, solutions, kappa, reference_slice: BOUNDARY_MARGIN })
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// `max |κ + κᵀ|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        (&self.kappa + self.kappa.transpose()).abs().max()
    }

    /// Columns are the Cauchy data of `E f_i` on the reference slice pair.
    pub fn cauchy_matrix(&self, kernel: &ScalarKernel) -> DMatrix<f64> {
        let rows = 2 * kernel.lattice.nx;
        DMatrix::from_fn(rows, self.len(), |r, c| kernel.cauchy_data(&self.solutions[c], self.reference_slice)[r])
    }

    /// Columns are the full solutions `E f_i`.
    pub fn solution_matrix(&self) -> DMatrix<f64> {
        let rows = self.solutions.first().map_or(0, |s| s.len());
        DMatrix::from_fn(rows, self.len(), |r, c| self.solutions[c][r])
    }

    /// Rank of the Cauchy-data map restricted to the basis span.
    pub fn cauchy_rank(&self, kernel: &ScalarKernel, tol: f64) -> usize {
        rank(&self.cauchy_matrix(kernel), tol)
    }

    /// Rank of `E` restricted to the basis span.
    pub fn solution_rank(&self, tol: f64) -> usize {
        rank(&self.solution_matrix(), tol)
    }
}

/// One decoupled mode of the flat slice pair.
#[derive(Clone, Debug)]
pub struct Mode {
    /// Fourier index `n`.
    pub index: usize,
    /// Whether this is the sine member of the pair.
    pub sine: bool,
    /// Physical wave number `2π n / (a0 L)`.
    pub wavenumber: f64,
    /// Lattice frequency `θ / Δt`.
    pub lattice_frequency: f64,
    /// `√(k² + m²)`.
    pub continuum_frequency: f64,
    pub theta: f64,
    /// Whether the frequency was replaced by the infrared regulator.
    pub regulated: bool,
}

/// Mode decomposition on the flat slice pair `(s, s + 1)`.
#[derive(Clone, Debug)]
pub struct ModeDecomposition {
    pub slice: usize,
    pub a0: f64,
    pub modes: Vec<Mode>,
    c: f64,
    nx: usize,
}

impl ModeDecomposition {
    pub fn new(kernel: &ScalarKernel) -> Result<Self> {
        let lat = &kernel.lattice;
        let model = &kernel.model;
        let bands = model.flat_bands();
        let (lo, hi) = bands
            .iter()
            .copied()
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .ok_or_else(|| Error::Precondition("model has no flat initial band".into()))?;
        let eps = 1e-9 * lat.dt;
        let slice = (1..lat.nt.saturating_sub(2))
            .find(|&i| lat.t(i - 1) >= lo - eps && lat.t(i + 2) <= hi + eps)
            .ok_or_else(|| Error::Precondition("flat initial band is thinner than four slices".into()))?;
        let t = lat.t(slice);
        let a0 = model.scale(t, 0.0);
        for j in 0..lat.nx {
            if model.scale(t, lat.x(j)) != a0 || model.lapse(t, lat.x(j)) != 1.0 {
                return Err(Error::Precondition(format!("slice {slice} is not flat")));
            }
        }
        let nx = lat.nx;
        let m = kernel.mass;
        let mut modes = Vec::with_capacity(nx);
        let mut push = |n: usize, sine: bool| -> Result<()> {
            let k = 2.0 * std::f64::consts::PI * n as f64 / (a0 * lat.circumference);
            let s = (std::f64::consts::PI * n as f64 / nx as f64).sin();
            let mut omega2 = 4.0 * s * s / (a0 * lat.dx).powi(2) + m * m;
            let regulated = omega2 == 0.0;
            if regulated {
                omega2 = (2.0 * std::f64::consts::PI / (a0 * lat.circumference)).powi(2);
            }
            let cos_theta = 1.0 - 0.5 * omega2 * lat.dt * lat.dt;
            if cos_theta <= -1.0 + 1e-12 {
                return Err(Error::Precondition(format!(
                    "mode {n} sits at the stability edge (ΩΔt = {:.6}); use a CFL factor below 1",
                    omega2.sqrt() * lat.dt
                )));
            }
            let theta = cos_theta.acos();
            modes.push(Mode {
                index: n,
                sine,
                wavenumber: k,
                lattice_frequency: theta / lat.dt,
                continuum_frequency: (k * k + m * m).sqrt(),
                theta,
                regulated,
            });
            Ok(())
        };
        push(0, false)?;
        for n in 1..nx.div_ceil(2) {
            push(n, false)?;
            push(n, true)?;
        }
        if nx.is_multiple_of(2) {
            push(nx / 2, false)?;
        }
        Ok(Self { slice, a0, modes, c: a0 * lat.dx / lat.dt, nx })
    }

    fn basis_vector(&self, mode: &Mode) -> Vec<f64> {
        let nx = self.nx;
        let n = mode.index;
        if n == 0 {
            return vec![1.0 / (nx as f64).sqrt(); nx];
        }
        if 2 * n == nx {
            return (0..nx).map(|j| (if j % 2 == 0 { 1.0 } else { -1.0 }) / (nx as f64).sqrt()).collect();
        }
        let norm = (2.0 / nx as f64).sqrt();
        (0..nx)
            .map(|j| {
                let ph = 2.0 * std::f64::consts::PI * (n * j % nx) as f64 / nx as f64;
                norm * if mode.sine { ph.sin() } else { ph.cos() }
            })
            .collect()
    }

    /// `ℓ_k(u)` for every mode, from a solution on the full lattice.
    pub fn coefficients(&self, u: &[f64]) -> Vec<Complex64> {
        let nx = self.nx;
        let (r0, r1) = (&u[self.slice * nx..(self.slice + 1) * nx], &u[(self.slice + 1) * nx..(self.slice + 2) * nx]);
        self.modes
            .iter()
            .map(|mode| {
                let phi = self.basis_vector(mode);
                let q0: f64 = phi.iter().zip(r0).map(|(p, v)| p * v).sum();
                let q1: f64 = phi.iter().zip(r1).map(|(p, v)| p * v).sum();
                Complex64::from_polar(1.0, -mode.theta) * (self.c * q0) - self.c * q1
            })
            .collect()
    }

    /// `1 / (2 c sin θ_k)`.
    pub fn weights(&self) -> Vec<f64> {
        self.modes.iter().map(|m| 1.0 / (2.0 * self.c * m.theta.sin())).collect()
    }

    /// `W(f, h)` from the mode coefficients of `Ef` and `Eh`.
    pub fn two_point(&self, lf: &[Complex64], lh: &[Complex64]) -> Complex64 {
        self.weights().iter().zip(lf.iter().zip(lh)).map(|(g, (a, b))| a.conj() * b * *g).sum()
    }
}

/// Two-point matrix `W_ij = ω(Φ(f_i) Φ(f_j))` of the quasifree state.
#[derive(Clone, Debug)]
pub struct QuasifreeState {
    pub w: CMat,
    pub kappa: DMatrix<f64>,
    pub modes: ModeDecomposition,
    /// Per basis function, the mode coefficients `ℓ_k(E f_i)`.
    pub coefficients: Vec<Vec<Complex64>>,
    /// `max |W − Wᵀ − iκ|`.
    pub ccr_defect: f64,
    pub min_eigenvalue: f64,
}

/// Quasifree state from the flat initial band, evaluated on the basis.
pub fn build_quasifree_state(kernel: &ScalarKernel, space: &SymplecticSpace) -> Result<QuasifreeState> {
    let modes = ModeDecomposition::new(kernel)?;
    let coefficients: Vec<Vec<Complex64>> = space.solutions.iter().map(|u| modes.coefficients(u)).collect();
    let n = space.len();
    let w = CMat::from_fn(n, n, |i, j| modes.two_point(&coefficients[i], &coefficients[j]));
    let mut ccr_defect = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let d = w[(i, j)] - w[(j, i)] - Complex64::new(0.0, space.kappa[(i, j)]);
            ccr_defect = ccr_defect.max(d.norm());
        }
    }
    let (vals, _) = hermitian_eigen(&w);
    let min_eigenvalue = vals.first().copied().unwrap_or(0.0);
    let scale = vals.last().copied().unwrap_or(0.0).max(1e-300);
    if min_eigenvalue < -1e-10 * scale.max(1.0) {
        return Err(Error::Solver(format!("two-point matrix has eigenvalue {min_eigenvalue:.3e}")));
    }
    Ok(QuasifreeState { w, kappa: space.kappa.clone(), modes, coefficients, ccr_defect, min_eigenvalue })
}

impl QuasifreeState {
    /// `W(f, h)` for arbitrary solutions `Ef`, `Eh`.
    pub fn two_point_of(&self, ef: &[f64], eh: &[f64]) -> Complex64 {
        self.modes.two_point(&self.modes.coefficients(ef), &self.modes.coefficients(eh))
    }
}
