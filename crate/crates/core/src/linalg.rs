//! Small dense linear-algebra helpers: Hermitian eigensolves, numerical
//! rank, and incrementally built orthonormal subspaces.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn cx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
/// The input is symmetrised first so round-off asymmetry does not matter.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()) * cx(0.5);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Eigen-decomposition of a real symmetric matrix, ascending.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let h = (m + m.transpose()) * 0.5;
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Number of singular values above `tol · σ_max`.
pub fn rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * top).count()
}

/// `exp(i H)` for Hermitian `H`.
pub fn exp_i_hermitian(h: &CMat) -> CMat {
    let (vals, vecs) = hermitian_eigen(h);
    let d = CMat::from_diagonal(&CVec::from_iterator(vals.len(), vals.iter().map(|&l| Complex64::new(0.0, l).exp())));
    &vecs * d * vecs.adjoint()
}

/// Orthonormal basis grown by Gram-Schmidt with one re-orthogonalisation pass.
#[derive(Clone, Debug)]
pub struct Subspace {
    dim_ambient: usize,
    basis: Vec<CVec>,
    tol: f64,
}

impl Subspace {
    pub fn new(dim_ambient: usize, tol: f64) -> Self {
        Self { dim_ambient, basis: Vec::new(), tol }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient(&self) -> usize {
        self.dim_ambient
    }

    pub fn basis(&self) -> &[CVec] {
        &self.basis
    }

    fn residual(&self, v: &CVec) -> CVec {
        let mut r = v.clone();
        for _ in 0..2 {
            for b in &self.basis {
                let p = b.dotc(&r);
                r -= b * p;
            }
        }
        r
    }

    /// Adds `v` if it is independent of the current span (relative to `‖v‖`).
    pub fn insert(&mut self, v: &CVec) -> bool {
        let n = v.norm();
        if n == 0.0 || self.basis.len() == self.dim_ambient {
            return false;
        }
        let r = self.residual(v);
        let rn = r.norm();
        if rn <= self.tol * n {
            return false;
        }
        self.basis.push(r / cx(rn));
        true
    }

    pub fn contains(&self, v: &CVec) -> bool {
        let n = v.norm();
        n == 0.0 || self.residual(v).norm() <= self.tol * n
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.basis.iter().all(|b| other.contains(b))
    }

    pub fn same_span(&self, other: &Subspace) -> bool {
        self.dim() == other.dim() && self.is_subspace_of(other) && other.is_subspace_of(self)
    }
}

/// Column-major flattening of a square matrix.
pub fn vectorize(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &CVec, n: usize) -> CMat {
    CMat::from_column_slice(n, n, v.as_slice())
}
