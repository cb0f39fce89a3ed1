//! Dense symmetric-matrix primitives shared by every estimator in the crate.
//!
//! Vertices are zero-based. A [`HemispherePartition`] on `p = 2q` vertices puts
//! `0..q` in the left block and `q..p` in the right block, with vertex `i` of the
//! left block homologous to `i + q`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Symmetric matrix stored as a packed lower triangle, one value per unordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    packed: Vec<f64>,
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "SymMatrix needs at least one row");
        SymMatrix {
            dim,
            packed: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds a matrix by calling `f(i, j)` for every `i >= j`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                m.packed[packed_index(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Takes the lower triangle of a square matrix; the upper triangle is ignored.
    pub fn from_lower(a: &DMatrix<f64>) -> Self {
        assert!(a.is_square(), "matrix must be square");
        Self::from_fn(a.nrows(), |i, j| a[(i, j)])
    }

    /// Converts a square matrix, rejecting it when the two triangles disagree by
    /// more than `1e-8` relative to the largest entry.
    pub fn try_from_dmatrix(a: &DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::invalid(format!(
                "expected a non-empty square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        let scale = a.amax().max(1.0);
        for i in 0..a.nrows() {
            for j in 0..i {
                if (a[(i, j)] - a[(j, i)]).abs() > 1e-8 * scale {
                    return Err(Error::invalid(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::from_fn(a.nrows(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)])))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[packed_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.packed[packed_index(i, j)] = value;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    pub fn is_finite(&self) -> bool {
        self.packed.iter().all(|x| x.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..=i {
                let v = self.get(i, j);
                acc += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        acc.sqrt()
    }

    /// Largest entry-wise absolute difference.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.packed
            .iter()
            .zip(&other.packed)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Sum of absolute values over all `p * p` entries.
    pub fn l1_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..=i {
                let v = self.get(i, j).abs();
                acc += if i == j { v } else { 2.0 * v };
            }
        }
        acc
    }

    pub fn scaled(&self, factor: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            packed: self.packed.iter().map(|x| x * factor).collect(),
        }
    }

    /// `tr(self * other)` for symmetric arguments.
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..=i {
                let v = self.get(i, j) * other.get(i, j);
                acc += if i == j { v } else { 2.0 * v };
            }
        }
        acc
    }

    /// Lower Cholesky factor, or `None` when the matrix is not positive definite.
    pub fn cholesky(&self) -> Option<DMatrix<f64>> {
        if !self.is_finite() {
            return None;
        }
        nalgebra::Cholesky::new(self.to_dmatrix()).map(|c| c.unpack())
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_some()
    }

    /// `log det` of a positive definite matrix.
    pub fn log_det(&self) -> Result<f64> {
        let l = self
            .cholesky()
            .ok_or_else(|| Error::domain("matrix is not positive definite"))?;
        Ok(2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>())
    }

    /// Inverse of a positive definite matrix.
    pub fn inverse(&self) -> Result<SymMatrix> {
        let chol = nalgebra::Cholesky::new(self.to_dmatrix())
            .ok_or_else(|| Error::domain("matrix is not positive definite"))?;
        Ok(SymMatrix::from_lower(&chol.inverse()))
    }
}

/// The left/right split of `p = 2q` vertices with homolog map `i -> i + q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HemispherePartition {
    p: usize,
}

impl HemispherePartition {
    pub fn new(p: usize) -> Result<Self> {
        if p < 2 || p % 2 != 0 {
            return Err(Error::invalid(format!(
                "hemisphere partition needs an even p >= 2, got {p}"
            )));
        }
        Ok(HemispherePartition { p })
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.p / 2
    }

    pub fn left(&self) -> std::ops::Range<usize> {
        0..self.q()
    }

    pub fn right(&self) -> std::ops::Range<usize> {
        self.q()..self.p
    }

    #[inline]
    pub fn is_left(&self, i: usize) -> bool {
        i < self.q()
    }

    /// Homolog of a left vertex.
    #[inline]
    pub fn homolog(&self, i: usize) -> usize {
        debug_assert!(self.is_left(i));
        i + self.q()
    }

    /// Mirror image of any vertex.
    #[inline]
    pub fn mirror(&self, i: usize) -> usize {
        if self.is_left(i) {
            i + self.q()
        } else {
            i - self.q()
        }
    }

    /// Positions `(i, j)` with `i >= j` of a `q x q` block in half-vectorization
    /// order: column-major lower triangle, diagonal included.
    pub fn vech_positions(&self) -> Vec<(usize, usize)> {
        let q = self.q();
        let mut out = Vec::with_capacity(q * (q + 1) / 2);
        for j in 0..q {
            for i in j..q {
                out.push((i, j));
            }
        }
        out
    }

    /// Number of off-diagonal within-block positions, i.e. candidate homolog edge pairs.
    pub fn homolog_edge_pairs(&self) -> usize {
        let q = self.q();
        q * (q - 1) / 2
    }
}

/// `myvec(Q)`: `[vech(Q_LL) | vech(Q_RR) | vec(Q_LR)]`.
///
/// Position `k` of the first block and position `k` of the second block hold
/// `Q[i, j]` and `Q[i + q, j + q]` for the same `(i, j)`, so fusing equal
/// offsets pairs each entry with its homolog.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedVector {
    q: usize,
    values: Vec<f64>,
}

impl StackedVector {
    pub fn expected_len(q: usize) -> usize {
        q * (q + 1) + q * q
    }

    pub fn zeros(q: usize) -> Self {
        StackedVector {
            q,
            values: vec![0.0; Self::expected_len(q)],
        }
    }

    pub fn from_values(q: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != Self::expected_len(q) {
            return Err(Error::invalid(format!(
                "stacked vector for q={q} needs {} values, got {}",
                Self::expected_len(q),
                values.len()
            )));
        }
        Ok(StackedVector { q, values })
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.q
    }

    /// Length of each half-vectorized block, `q(q+1)/2`.
    #[inline]
    pub fn half_len(&self) -> usize {
        self.q * (self.q + 1) / 2
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Mutable views of the LL, RR and LR blocks.
    pub fn blocks_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64]) {
        let h = self.half_len();
        let (ll, rest) = self.values.split_at_mut(h);
        let (rr, lr) = rest.split_at_mut(h);
        (ll, rr, lr)
    }

    pub fn blocks(&self) -> (&[f64], &[f64], &[f64]) {
        let h = self.half_len();
        (&self.values[..h], &self.values[h..2 * h], &self.values[2 * h..])
    }

    pub fn stack(m: &SymMatrix, part: &HemispherePartition) -> Result<Self> {
        if m.dim() != part.p() {
            return Err(Error::invalid(format!(
                "matrix dimension {} does not match partition p={}",
                m.dim(),
                part.p()
            )));
        }
        let q = part.q();
        let mut values = Vec::with_capacity(Self::expected_len(q));
        let vech = part.vech_positions();
        values.extend(vech.iter().map(|&(i, j)| m.get(i, j)));
        values.extend(vech.iter().map(|&(i, j)| m.get(i + q, j + q)));
        for c in 0..q {
            for r in 0..q {
                values.push(m.get(r, c + q));
            }
        }
        Ok(StackedVector { q, values })
    }

    pub fn unstack(&self) -> SymMatrix {
        let q = self.q;
        let part = HemispherePartition { p: 2 * q };
        let mut m = SymMatrix::zeros(2 * q);
        let (ll, rr, lr) = self.blocks();
        for (k, (i, j)) in part.vech_positions().into_iter().enumerate() {
            m.set(i, j, ll[k]);
            m.set(i + q, j + q, rr[k]);
        }
        for c in 0..q {
            for r in 0..q {
                m.set(r, c + q, lr[c * q + r]);
            }
        }
        m
    }
}

/// Stacks `m` as `[vech(LL) | vech(RR) | vec(LR)]`.
pub fn myvec(m: &SymMatrix, part: &HemispherePartition) -> Result<StackedVector> {
    StackedVector::stack(m, part)
}

/// `sign(x) * max(|x| - kappa, 0)`.
#[inline]
pub fn soft_threshold(x: f64, kappa: f64) -> f64 {
    debug_assert!(kappa >= 0.0);
    if x > kappa {
        x - kappa
    } else if x < -kappa {
        x + kappa
    } else {
        0.0
    }
}

/// Partial correlations, partial variances and regression coefficients implied
/// by a concentration matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialStats {
    pub partial_corr: SymMatrix,
    pub partial_var: Vec<f64>,
    /// Row `i` holds the coefficients of `Y_i` regressed on each `Y_j` given the
    /// rest. The diagonal is zero.
    pub reg_coef: DMatrix<f64>,
}

pub fn partial_stats(theta: &SymMatrix) -> Result<PartialStats> {
    let p = theta.dim();
    let diag = theta.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::domain(format!(
            "diagonal entry {i} of the concentration matrix is not positive"
        )));
    }
    if !theta.is_positive_definite() {
        return Err(Error::domain("concentration matrix is not positive definite"));
    }
    let partial_corr = SymMatrix::from_fn(p, |i, j| {
        if i == j {
            1.0
        } else {
            -theta.get(i, j) / (diag[i] * diag[j]).sqrt()
        }
    });
    let reg_coef = DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            0.0
        } else {
            -theta.get(i, j) / diag[i]
        }
    });
    Ok(PartialStats {
        partial_corr,
        partial_var: diag.iter().map(|d| 1.0 / d).collect(),
        reg_coef,
    })
}

/// Eigendecomposition `A = Q diag(d) Q^T` of a symmetric matrix.
pub fn sym_eigen(a: &SymMatrix) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if !a.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let eig = SymmetricEigen::new(a.to_dmatrix());
    Ok((eig.eigenvectors, eig.eigenvalues))
}

/// `n^{-1} sum_t y_t y_t^T` over the rows of `data` (no centering).
pub fn second_moment(data: &DMatrix<f64>) -> Result<SymMatrix> {
    let n = data.nrows();
    if n == 0 || data.ncols() == 0 {
        return Err(Error::invalid("empty data matrix"));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("data matrix has non-finite entries"));
    }
    let gram = data.transpose() * data;
    Ok(SymMatrix::from_lower(&(gram / n as f64)))
}
