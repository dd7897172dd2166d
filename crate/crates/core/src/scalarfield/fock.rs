//! Truncated bosonic Fock representation of the quasifree state and the
//! matrix algebras generated by field operators.
//!
//! The Fock space keeps occupation vectors with total occupation `≤ N`.
//! With `W = U Λ U*` on the chosen basis functions, mode `m` enters `Φ(f_i)`
//! with `c_m(i) = √λ_m conj(U_im)`:
//! `Φ(f) = Σ_m (conj(c_m(f)) a_m + c_m(f) a_m†)`. Then
//! `⟨Ω, Φ(f) Φ(h) Ω⟩ = W(f, h)` and `[Φ(f), Φ(h)] = iκ(f, h)` on every state
//! with total occupation `≤ N − 1`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::state::QuasifreeState;
use crate::error::{Error, Result};
use crate::linalg::{cx, exp_i_hermitian, hermitian_eigen, unvectorize, vectorize, CMat, CVec, Subspace};

/// Column-oriented sparse complex matrix.
#[derive(Clone, Debug, Default)]
pub struct SparseMatrix {
    pub dim: usize,
    cols: Vec<Vec<(usize, Complex64)>>,
}

impl SparseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, cols: vec![Vec::new(); dim] }
    }

    pub fn push(&mut self, row: usize, col: usize, v: Complex64) {
        self.cols[col].push((row, v));
    }

    pub fn column(&self, col: usize) -> &[(usize, Complex64)] {
        &self.cols[col]
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for (c, entries) in self.cols.iter().enumerate() {
            if v[c] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for &(r, x) in entries {
                out[r] += x * v[c];
            }
        }
        out
    }

    /// `Σ_k w_k M_k` for matrices on the same space.
    pub fn linear_combination(parts: &[(&SparseMatrix, Complex64)]) -> SparseMatrix {
        let dim = parts.first().map_or(0, |p| p.0.dim);
        let mut out = SparseMatrix::zeros(dim);
        for c in 0..dim {
            let mut acc: Vec<(usize, Complex64)> = Vec::new();
            for (m, w) in parts {
                for &(r, x) in m.column(c) {
                    match acc.iter_mut().find(|e| e.0 == r) {
                        Some(e) => e.1 += x * w,
                        None => acc.push((r, x * w)),
                    }
                }
            }
            acc.sort_by_key(|e| e.0);
            out.cols[c] = acc;
        }
        out
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (c, entries) in self.cols.iter().enumerate() {
            for &(r, x) in entries {
                m[(r, c)] += x;
            }
        }
        m
    }

    /// `max |M − M*|` over stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.to_dense();
        (&d - d.adjoint()).iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }
}

/// Occupation-number basis with total occupation `≤ cutoff`.
#[derive(Clone, Debug)]
pub struct FockSpace {
    pub n_modes: usize,
    pub cutoff: usize,
    pub states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl FockSpace {
    pub fn new(n_modes: usize, cutoff: usize) -> Self {
        let mut states = Vec::new();
        for total in 0..=cutoff {
            let mut cur = vec![0u8; n_modes];
            compositions(total, 0, &mut cur, &mut states);
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self { n_modes, cutoff, states, index }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn total(&self, idx: usize) -> usize {
        self.states[idx].iter().map(|&n| n as usize).sum()
    }

    fn lowering(&self, m: usize) -> SparseMatrix {
        let mut op = SparseMatrix::zeros(self.dim());
        for (c, s) in self.states.iter().enumerate() {
            if s[m] > 0 {
                let mut t = s.clone();
                t[m] -= 1;
                op.push(self.index[&t], c, cx((s[m] as f64).sqrt()));
            }
        }
        op
    }

    fn raising(&self, m: usize) -> SparseMatrix {
        let mut op = SparseMatrix::zeros(self.dim());
        for (c, s) in self.states.iter().enumerate() {
            let mut t = s.clone();
            t[m] += 1;
            if let Some(&r) = self.index.get(&t) {
                op.push(r, c, cx(((s[m] + 1) as f64).sqrt()));
            }
        }
        op
    }
}

fn compositions(left: usize, pos: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if pos + 1 == cur.len() {
        cur[pos] = left as u8;
        out.push(cur.clone());
        return;
    }
    if cur.is_empty() {
        if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for n in (0..=left).rev() {
        cur[pos] = n as u8;
        compositions(left - n, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// Field operators `Φ(f_i)` for a chosen subset of basis functions.
#[derive(Clone, Debug)]
pub struct FockRep {
    pub space: FockSpace,
    /// Indices into the state's basis.
    pub basis_indices: Vec<usize>,
    /// Row `i`: coefficients `c_m(f_i)`.
    pub coefficients: CMat,
    /// `κ` restricted to the chosen basis functions.
    pub kappa: DMatrix<f64>,
    /// `W` restricted to the chosen basis functions.
    pub w: CMat,
    pub fields: Vec<SparseMatrix>,
    lowering: Vec<SparseMatrix>,
    raising: Vec<SparseMatrix>,
}

/// Eigenvalues of `W` below this fraction of the largest are treated as null.
pub const NULL_TOL: f64 = 1e-12;

impl FockRep {
    pub fn new(state: &QuasifreeState, basis_indices: &[usize], cutoff: usize) -> Result<Self> {
        if cutoff == 0 || cutoff > 8 {
            return Err(Error::Config(format!("occupation cutoff must be in 1..=8 (got {cutoff})")));
        }
        let n = basis_indices.len();
        let w = CMat::from_fn(n, n, |i, j| state.w[(basis_indices[i], basis_indices[j])]);
        let kappa = DMatrix::from_fn(n, n, |i, j| state.kappa[(basis_indices[i], basis_indices[j])]);
        let (vals, vecs) = hermitian_eigen(&w);
        let top = vals.last().copied().unwrap_or(0.0);
        let kept: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > NULL_TOL * top).collect();
        if kept.len() > 10 {
            return Err(Error::Config(format!("{} modes exceed the limit of 10", kept.len())));
        }
        let coefficients = CMat::from_fn(n, kept.len(), |i, m| vecs[(i, kept[m])].conj() * vals[kept[m]].sqrt());
        let space = FockSpace::new(kept.len(), cutoff);
        let lowering: Vec<SparseMatrix> = (0..kept.len()).map(|m| space.lowering(m)).collect();
        let raising: Vec<SparseMatrix> = (0..kept.len()).map(|m| space.raising(m)).collect();
        let mut rep = Self {
            space,
            basis_indices: basis_indices.to_vec(),
            coefficients,
            kappa,
            w,
            fields: Vec::new(),
            lowering,
            raising,
        };
        rep.fields = (0..n).map(|i| rep.field_of_coefficients(&rep.coefficients.row(i).transpose())).collect();
        Ok(rep)
    }

    pub fn n_modes(&self) -> usize {
        self.space.n_modes
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    fn field_of_coefficients(&self, c: &CVec) -> SparseMatrix {
        let mut parts: Vec<(&SparseMatrix, Complex64)> = Vec::new();
        for m in 0..self.n_modes() {
            parts.push((&self.lowering[m], c[m].conj()));
            parts.push((&self.raising[m], c[m]));
        }
        SparseMatrix::linear_combination(&parts)
    }

    /// `Φ(f_i)` for the `i`-th chosen basis function.
    pub fn field(&self, i: usize) -> &SparseMatrix {
        &self.fields[i]
    }

    /// `Φ(Σ_i r_i f_i)` for real weights.
    pub fn field_of(&self, weights: &[f64]) -> SparseMatrix {
        let c = self.coefficients.transpose() * CVec::from_iterator(weights.len(), weights.iter().map(|&r| cx(r)));
        self.field_of_coefficients(&c)
    }

    /// Vacuum vector `Ω` (all occupations zero).
    pub fn vacuum(&self) -> CVec {
        let mut v = CVec::zeros(self.dim());
        v[0] = cx(1.0);
        v
    }

    /// Frobenius norm of `([Φ(f_i), Φ(f_j)] − iκ_ij) P`, `P` the projector onto total occupation `≤ N − 1`.
    pub fn ccr_defect(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.fields[i], &self.fields[j]);
        let k = Complex64::new(0.0, self.kappa[(i, j)]);
        let mut acc = 0.0;
        let dim = self.dim();
        for col in 0..dim {
            if self.space.total(col) + 1 > self.space.cutoff {
                continue;
            }
            let mut e = vec![cx(0.0); dim];
            e[col] = cx(1.0);
            let ab = a.apply(&b.apply(&e));
            let ba = b.apply(&a.apply(&e));
            for r in 0..dim {
                let mut d = ab[r] - ba[r];
                if r == col {
                    d -= k;
                }
                acc += d.norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// `⟨Ω, Φ(f_i) Φ(f_j) Ω⟩`.
    pub fn vacuum_two_point(&self, i: usize, j: usize) -> Complex64 {
        let omega: Vec<Complex64> = self.vacuum().iter().copied().collect();
        let v = self.fields[i].apply(&self.fields[j].apply(&omega));
        v[0]
    }

    /// Weyl operator `exp(i Φ(f_i))` on the truncation.
    pub fn weyl(&self, i: usize) -> CMat {
        exp_i_hermitian(&self.fields[i].to_dense())
    }

    /// Algebra generated by `Φ(f_i)` for the given chosen-basis positions.
    pub fn local_algebra(&self, generators: &[usize]) -> Result<LocalAlgebra> {
        if generators.is_empty() {
            return Err(Error::Domain("no basis function is supported in the region".into()));
        }
        let gens: Vec<CMat> = generators.iter().map(|&g| self.fields[g].to_dense()).collect();
        Ok(LocalAlgebra::generate(self.dim(), &gens))
    }
}

/// Unital *-algebra generated by Hermitian matrices, as a span of matrices.
#[derive(Clone, Debug)]
pub struct LocalAlgebra {
    pub dim_space: usize,
    pub span: Subspace,
    elements: Vec<CMat>,
}

impl LocalAlgebra {
    /// Closure of `{1} ∪ generators` under right multiplication by generators,
/// grown Arnoldi-style from the orthonormal basis.
    pub fn generate(dim_space: usize, generators: &[CMat]) -> Self {
        let mut span = Subspace::new(dim_space * dim_space, 1e-10);
        let mut elements = Vec::new();
        let mut frontier = Vec::new();
        let id = CMat::identity(dim_space, dim_space);
        span.insert(&vectorize(&id));
        elements.push(id.clone());
        frontier.push(id);
        let gens: Vec<CMat> = generators.iter().map(|g| g * cx(1.0 / g.norm().max(1e-300))).collect();
        while let Some(a) = frontier.pop() {
            for g in &gens {
                if span.insert(&vectorize(&(&a * g))) {
                    // Continue from the orthonormalised element, not the raw product.
                    let q = unvectorize(span.basis().last().expect("just inserted"), dim_space);
                    elements.push(q.clone());
                    frontier.push(q);
                }
            }
        }
        Self { dim_space, span, elements }
    }

    pub fn dim(&self) -> usize {
        self.span.dim()
    }

    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    pub fn contains(&self, m: &CMat) -> bool {
        self.span.contains(&vectorize(m))
    }

    pub fn is_subalgebra_of(&self, other: &LocalAlgebra) -> bool {
        self.span.is_subspace_of(&other.span)
    }

    pub fn same_as(&self, other: &LocalAlgebra) -> bool {
        self.span.same_span(&other.span)
    }

    /// Dimension of `span{A v : A ∈ algebra}`.
    pub fn orbit_dim(&self, v: &CVec) -> usize {
        let mut s = Subspace::new(self.dim_space, 1e-10);
        for a in &self.elements {
            s.insert(&(a * v));
        }
        s.dim()
    }

    /// Image under `A ↦ U A U*`.
    pub fn conjugated(&self, u: &CMat) -> LocalAlgebra {
        let mut span = Subspace::new(self.dim_space * self.dim_space, 1e-10);
        let mut elements = Vec::new();
        for a in &self.elements {
            let b = u * a * u.adjoint();
            span.insert(&vectorize(&b));
            elements.push(b);
        }
        LocalAlgebra { dim_space: self.dim_space, span, elements }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fock_dimensions() {
        assert_eq!(FockSpace::new(8, 6).dim(), 3003);
        assert_eq!(FockSpace::new(2, 3).dim(), 10);
        assert_eq!(FockSpace::new(1, 4).dim(), 5);
    }

    #[test]
    fn ladder_commutator_below_cutoff() {
        let s = FockSpace::new(2, 3);
        let (a, ad) = (s.lowering(0).to_dense(), s.raising(0).to_dense());
        let c = &a * &ad - &ad * &a;
        for col in 0..s.dim() {
            if s.total(col) < 3 {
                for r in 0..s.dim() {
                    let expect = if r == col { 1.0 } else { 0.0 };
                    assert!((c[(r, col)] - cx(expect)).norm() < 1e-14);
                }
            }
        }
        assert!((ad.adjoint() - a).norm() < 1e-15);
    }

    #[test]
    fn full_matrix_algebra_from_two_generators() {
        // Pauli x and z generate all of M_2.
        let x = CMat::from_row_slice(2, 2, &[cx(0.0), cx(1.0), cx(1.0), cx(0.0)]);
        let z = CMat::from_row_slice(2, 2, &[cx(1.0), cx(0.0), cx(0.0), cx(-1.0)]);
        let alg = LocalAlgebra::generate(2, &[x.clone(), z]);
        assert_eq!(alg.dim(), 4);
        let only_x = LocalAlgebra::generate(2, &[x]);
        assert_eq!(only_x.dim(), 2);
        assert!(only_x.is_subalgebra_of(&alg));
        assert!(!alg.is_subalgebra_of(&only_x));
    }
}
