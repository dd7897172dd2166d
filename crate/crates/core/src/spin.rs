//! SL(2,ℂ), its covering map onto the proper orthochronous Lorentz group,
//! and the finite-dimensional representations `D^(k,l)`.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DET_TOL: f64 = 1e-12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The Pauli matrices `σ_0 = 1, σ_1, σ_2, σ_3`.
pub fn pauli() -> [Matrix2<Complex64>; 4] {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    [
        Matrix2::new(o, z, z, o),
        Matrix2::new(z, o, o, z),
        Matrix2::new(z, -i, i, z),
        Matrix2::new(o, z, z, -o),
    ]
}

/// `η = diag(+1, −1, −1, −1)`.
pub fn minkowski_metric() -> Matrix4<f64> {
    Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, -1.0, -1.0, -1.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SL2CElement(Matrix2<Complex64>);

impl SL2CElement {
    pub fn new(s: Matrix2<Complex64>) -> Result<Self> {
        let det = s.determinant();
        if (det - c(1.0, 0.0)).norm() > DET_TOL {
            return Err(Error::Domain(format!("det s = {det} is not 1")));
        }
        Ok(Self(s))
    }

    pub fn identity() -> Self {
        Self(Matrix2::identity())
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self(self.0 * other.0)
    }

    pub fn neg(&self) -> Self {
        Self(-self.0)
    }

    /// `exp(i θ σ_k / 2)` for `axis = k ∈ {1, 2, 3}`.
    pub fn rotation(axis: usize, theta: f64) -> Self {
        let s = pauli()[axis];
        Self(Matrix2::identity() * c((theta / 2.0).cos(), 0.0) + s * c(0.0, (theta / 2.0).sin()))
    }

    /// `exp(φ σ_k / 2)` for `axis = k ∈ {1, 2, 3}`.
    pub fn boost(axis: usize, rapidity: f64) -> Self {
        let s = pauli()[axis];
        Self(Matrix2::identity() * c((rapidity / 2.0).cosh(), 0.0) + s * c((rapidity / 2.0).sinh(), 0.0))
    }

    /// Gaussian complex matrix rescaled to unit determinant.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let mut g = || c(rng.sample(StandardNormal), rng.sample(StandardNormal));
            let m = Matrix2::new(g(), g(), g(), g());
            let det = m.determinant();
            if det.norm() > 1e-3 {
                return Self(m / det.sqrt());
            }
        }
    }
}

/// Real 4×4 Lorentz transformation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LorentzMatrix(pub Matrix4<f64>);

impl LorentzMatrix {
    /// `max |ΛᵀηΛ − η|`.
    pub fn metric_defect(&self) -> f64 {
        let eta = minkowski_metric();
        (self.0.transpose() * eta * self.0 - eta).abs().max()
    }

    pub fn is_orthochronous(&self) -> bool {
        self.0[(0, 0)] > 0.0
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }
}

/// `Λ_ab(s) = ½ Tr(s* σ_a s σ_b)`.
pub fn covering_map(s: &SL2CElement) -> LorentzMatrix {
    let p = pauli();
    let sd = s.0.adjoint();
    let mut l = Matrix4::zeros();
    for a in 0..4 {
        let m = sd * p[a] * s.0;
        for b in 0..4 {
            l[(a, b)] = 0.5 * (m * p[b]).trace().re;
        }
    }
    LorentzMatrix(l)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RepKind {
    /// `D^(k,l)`.
    ComplexIrreducible,
    /// `D^(k,l) ⊕ D^(l,k)` with `k ≠ l`.
    RealIrreducible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpinType {
    Integer,
    HalfInteger,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinRep {
    pub k: u32,
    pub l: u32,
    pub kind: RepKind,
}

impl SpinRep {
    pub fn complex(k: u32, l: u32) -> Self {
        Self { k, l, kind: RepKind::ComplexIrreducible }
    }

    pub fn real(k: u32, l: u32) -> Result<Self> {
        if k == l {
            return Err(Error::Domain(format!("D^({k},{l}) ⊕ D^({l},{k}) needs k ≠ l")));
        }
        Ok(Self { k, l, kind: RepKind::RealIrreducible })
    }

    pub fn dimension(&self) -> usize {
        let d = (self.k as usize + 1) * (self.l as usize + 1);
        match self.kind {
            RepKind::ComplexIrreducible => d,
            RepKind::RealIrreducible => 2 * d,
        }
    }
}

pub fn spin_type(rep: &SpinRep) -> SpinType {
    if (rep.k + rep.l).is_multiple_of(2) {
        SpinType::Integer
    } else {
        SpinType::HalfInteger
    }
}

/// Symmetric power on the monomial basis `x^k, x^(k−1) y, …, y^k`.
/// Column `m` holds the coefficients of `(s e₁)^(k−m) (s e₂)^m`.
pub fn symmetric_power(s: &Matrix2<Complex64>, k: u32) -> DMatrix<Complex64> {
    let k = k as usize;
    let e1 = [s[(0, 0)], s[(1, 0)]];
    let e2 = [s[(0, 1)], s[(1, 1)]];
    let mut out = DMatrix::zeros(k + 1, k + 1);
    for m in 0..=k {
        // coefficients indexed by the power of y
        let mut poly = vec![c(1.0, 0.0)];
        for step in 0..k {
            let f = if step < k - m { e1 } else { e2 };
            let mut next = vec![c(0.0, 0.0); poly.len() + 1];
            for (n, &p) in poly.iter().enumerate() {
                next[n] += p * f[0];
                next[n + 1] += p * f[1];
            }
            poly = next;
        }
        for (n, &p) in poly.iter().enumerate() {
            out[(n, m)] = p;
        }
    }
    out
}

fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

/// `D^(k,l)(s) = Sym^k(s) ⊗ Sym^l(s̄)`, block-diagonal with `D^(l,k)` for the real kind.
pub fn rep_matrix(rep: &SpinRep, s: &SL2CElement) -> DMatrix<Complex64> {
    let sbar = s.0.map(|z| z.conj());
    let d = |k, l| kron(&symmetric_power(&s.0, k), &symmetric_power(&sbar, l));
    match rep.kind {
        RepKind::ComplexIrreducible => d(rep.k, rep.l),
        RepKind::RealIrreducible => {
            let (a, b) = (d(rep.k, rep.l), d(rep.l, rep.k));
            let n = a.nrows();
            let mut out = DMatrix::zeros(2 * n, 2 * n);
            out.view_mut((0, 0), (n, n)).copy_from(&a);
            out.view_mut((n, n), (n, n)).copy_from(&b);
            out
        }
    }
}

/// Generators used in every equivalence sample: rotations and boosts about
/// the three axes.
pub fn generator_sample() -> Vec<SL2CElement> {
    let mut v = Vec::new();
    for axis in 1..=3 {
        v.push(SL2CElement::rotation(axis, 0.7));
        v.push(SL2CElement::boost(axis, 0.4));
    }
    v
}

/// Whether `T ρ₁(s) T⁻¹ = ρ₂(s)` on the generators and 20 seeded random
/// elements, to `1e−9` relative to `‖ρ₂(s)‖`.
pub fn check_equivalence(rep1: &SpinRep, rep2: &SpinRep, t: &DMatrix<Complex64>, seed: u64) -> Result<bool> {
    let n = rep1.dimension();
    if rep2.dimension() != n || t.nrows() != n || t.ncols() != n {
        return Err(Error::Domain(format!(
            "dimension mismatch: {} vs {} with T {}×{}",
            n,
            rep2.dimension(),
            t.nrows(),
            t.ncols()
        )));
    }
    let tinv = t.clone().try_inverse().ok_or_else(|| Error::Domain("T is not invertible".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = generator_sample();
    sample.extend((0..20).map(|_| SL2CElement::random(&mut rng)));
    Ok(sample.iter().all(|s| {
        let r2 = rep_matrix(rep2, s);
        let lhs = t * rep_matrix(rep1, s) * &tinv;
        (lhs - &r2).norm() <= 1e-9 * r2.norm().max(1.0)
    }))
}
