//! Finite-dimensional surrogate for the Schlieder step: two commuting
//! matrix factors `ℳ ⊗ 1` and `1 ⊗ 𝒩` with a faithful product state.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cx, hermitian_eigen, CMat};

/// Tolerance on `A1 A2 = 0` and on operator vanishing.
pub const PRODUCT_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct FactorModel {
    pub d1: usize,
    pub d2: usize,
    /// Faithful product density `ρ₁ ⊗ ρ₂`.
    pub rho: CMat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchliederOutcome {
    A1Zero,
    A2Zero,
    /// Both factors nonzero although their product vanishes; only reachable
    /// from malformed input.
    Violation,
}

/// Thermal-like density `diag(qⁿ) / Z`, full rank for `0 < q`.
fn geometric_density(d: usize, q: f64) -> CMat {
    let w: Vec<f64> = (0..d).map(|n| q.powi(n as i32)).collect();
    let z: f64 = w.iter().sum();
    CMat::from_fn(d, d, |r, c| if r == c { cx(w[r] / z) } else { cx(0.0) })
}

/// Largest entry modulus.
pub fn max_entry(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

fn op_norm(m: &CMat) -> f64 {
    let h = m.adjoint() * m;
    let (vals, _) = hermitian_eigen(&h);
    vals.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

impl FactorModel {
    pub fn new(d1: usize, d2: usize, q: f64) -> Result<Self> {
        if d1 == 0 || d2 == 0 || !(q > 0.0 && q <= 1.0) {
            return Err(Error::Config("factor model needs positive dimensions and 0 < q ≤ 1".into()));
        }
        let rho = geometric_density(d1, q).kronecker(&geometric_density(d2, q));
        Ok(Self { d1, d2, rho })
    }

    pub fn dim(&self) -> usize {
        self.d1 * self.d2
    }

    pub fn left(&self, x: &CMat) -> CMat {
        x.kronecker(&CMat::identity(self.d2, self.d2))
    }

    pub fn right(&self, y: &CMat) -> CMat {
        CMat::identity(self.d1, self.d1).kronecker(y)
    }

    pub fn expectation(&self, a: &CMat) -> Complex64 {
        (&self.rho * a).trace()
    }

    /// Smallest eigenvalue of the density; positive means faithful.
    pub fn faithfulness(&self) -> f64 {
        hermitian_eigen(&self.rho).0[0]
    }

    /// `max ‖[X ⊗ 1, 1 ⊗ Y]‖` over the given generators.
    pub fn commutation_defect(&self, xs: &[CMat], ys: &[CMat]) -> f64 {
        let mut d = 0.0_f64;
        for x in xs {
            for y in ys {
                let (a, b) = (self.left(x), self.right(y));
                d = d.max(max_entry(&(&a * &b - &b * &a)));
            }
        }
        d
    }

    /// `X` with `a = X ⊗ 1`, or a domain error.
    fn left_factor(&self, a: &CMat) -> Result<CMat> {
        self.check_shape(a)?;
        let (d1, d2) = (self.d1, self.d2);
        let x = CMat::from_fn(d1, d1, |r, c| (0..d2).map(|k| a[(r * d2 + k, c * d2 + k)]).sum::<Complex64>() / cx(d2 as f64));
        let dev = max_entry(&(a - self.left(&x)));
        if dev > PRODUCT_TOL * max_entry(a).max(1.0) {
            return Err(Error::Domain(format!("A1 is not in ℳ ⊗ 1 (deviation {dev:.3e})")));
        }
        Ok(x)
    }

    /// `Y` with `a = 1 ⊗ Y`, or a domain error.
    fn right_factor(&self, a: &CMat) -> Result<CMat> {
        self.check_shape(a)?;
        let (d1, d2) = (self.d1, self.d2);
        let y = CMat::from_fn(d2, d2, |r, c| (0..d1).map(|k| a[(k * d2 + r, k * d2 + c)]).sum::<Complex64>() / cx(d1 as f64));
        let dev = max_entry(&(a - self.right(&y)));
        if dev > PRODUCT_TOL * max_entry(a).max(1.0) {
            return Err(Error::Domain(format!("A2 is not in 1 ⊗ 𝒩 (deviation {dev:.3e})")));
        }
        Ok(y)
    }

    fn check_shape(&self, a: &CMat) -> Result<()> {
        if a.nrows() != self.dim() || a.ncols() != self.dim() {
            return Err(Error::Domain(format!("operator is {}×{}, model is {}", a.nrows(), a.ncols(), self.dim())));
        }
        Ok(())
    }
}

/// Given `A1 ∈ ℳ ⊗ 1`, `A2 ∈ 1 ⊗ 𝒩` with `A1 A2 = 0`, reports which factor
/// vanishes. Vanishing is decided through the faithful state: `ω(A*A) = 0`
/// forces `A = 0`.
pub fn schlieder_check(model: &FactorModel, a1: &CMat, a2: &CMat) -> Result<SchliederOutcome> {
    let x = model.left_factor(a1)?;
    let y = model.right_factor(a2)?;
    let product = op_norm(&(a1 * a2));
    if product > PRODUCT_TOL {
        return Err(Error::Precondition(format!("A1 A2 has norm {product:.3e}; the product must vanish")));
    }
    let weight = |a: &CMat| model.expectation(&(a.adjoint() * a)).re;
    let floor = PRODUCT_TOL * PRODUCT_TOL * model.faithfulness();
    if weight(&model.left(&x)) <= floor {
        Ok(SchliederOutcome::A1Zero)
    } else if weight(&model.right(&y)) <= floor {
        Ok(SchliederOutcome::A2Zero)
    } else {
        Ok(SchliederOutcome::Violation)
    }
}

/// Spectral projection of a Hermitian matrix onto eigenvalues in `(lo, hi]`.
pub fn spectral_projection(h: &CMat, lo: f64, hi: f64) -> CMat {
    let (vals, vecs) = hermitian_eigen(h);
    let n = h.nrows();
    let mut p = CMat::zeros(n, n);
    for (k, &l) in vals.iter().enumerate() {
        if l > lo && l <= hi {
            let v = vecs.column(k);
            p += v * v.adjoint();
        }
    }
    p
}
