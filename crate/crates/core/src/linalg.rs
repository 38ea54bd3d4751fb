//! Dense linear algebra for small matrices: cyclic Jacobi eigendecomposition,
//! one-sided Jacobi SVD, numeric rank and orthonormal nullspace bases.
//!
//! Everything here is O(n^3) on row-major storage and deterministic: vectors
//! returned by [`sym_eigen`] and [`svd`] are sign-normalized so that the entry
//! of largest magnitude is positive (ties go to the lowest index).

use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

pub const DEFAULT_RANK_REL_TOL: f64 = 1e-8;
pub const DEFAULT_RANK_ABS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from rows of equal length. `cols` fixes the width when
    /// `rows` is empty.
    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Self {
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Matrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_columns(columns: &[Vec<f64>], rows: usize) -> Self {
        assert!(columns.iter().all(|c| c.len() == rows), "ragged columns");
        Matrix::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[f64]) {
        for (i, x) in v.iter().enumerate() {
            self[(i, j)] = *x;
        }
    }

    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(idx.len(), self.cols, |i, j| self[(idx[i], j)])
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "dimension mismatch in matvec");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ v`
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "dimension mismatch in tr_matvec");
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += vi * a;
            }
        }
        out
    }

    /// `Bᵀ self B`, symmetrized.
    pub fn congruence(&self, basis: &Matrix) -> Matrix {
        let mut m = basis.transpose().matmul(&self.matmul(basis));
        m.symmetrize();
        m
    }

    /// `vᵀ self v`
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        dot(v, &self.matvec(v))
    }

    pub fn symmetrize(&mut self) {
        assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..i {
                let m = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = m;
                self[(j, i)] = m;
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, s: f64, other: &Matrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        let mut out = self.clone();
        out.add_scaled(-1.0, other);
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    fn check_finite(&self) -> Result<(), LinalgError> {
        match self.data.iter().position(|x| !x.is_finite()) {
            Some(k) => Err(LinalgError::NonFinite {
                row: k / self.cols.max(1),
                col: k % self.cols.max(1),
            }),
            None => Ok(()),
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalized(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    a.iter().map(|x| x / n).collect()
}

/// Angle between the lines spanned by `a` and `b`, in `[0, pi/2]`.
pub fn line_angle(a: &[f64], b: &[f64]) -> f64 {
    let c = dot(a, b).abs() / (norm(a) * norm(b));
    // acos is ill-conditioned near 1; use the sine of the residual instead.
    let c = c.min(1.0);
    let s = {
        let na = norm(a);
        let nb = norm(b);
        let proj = dot(a, b) / (nb * nb);
        let r: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - proj * y).collect();
        (norm(&r) / na).min(1.0)
    };
    s.atan2(c)
}

/// Flip `v` so that its entry of largest magnitude is positive.
fn canonical_sign(v: &mut [f64]) -> bool {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
        true
    } else {
        false
    }
}

#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: Matrix,
}

impl SymEigen {
    pub fn min_value(&self) -> Option<f64> {
        self.values.first().copied()
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }
}

/// Full spectrum of a symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eigen(a: &Matrix) -> Result<SymEigen, LinalgError> {
    if a.rows != a.cols {
        return Err(LinalgError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    a.check_finite()?;
    let n = a.rows;
    let mut m = a.clone();
    m.symmetrize();
    let mut v = Matrix::identity(n);
    let scale = m.frobenius_norm();
    let off = |m: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)] * m[(i, j)];
                }
            }
        }
        s.sqrt()
    };

    for _sweep in 0..100 {
        if off(&m) <= 1e-14 * scale || scale == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = v.select_columns(&order);
    for j in 0..n {
        let mut col = vectors.column(j);
        canonical_sign(&mut col);
        vectors.set_column(j, &col);
    }
    Ok(SymEigen { values, vectors })
}

/// Smallest eigenvalue of a symmetric matrix, `None` for a 0x0 matrix.
pub fn min_eigenvalue(a: &Matrix) -> Result<Option<f64>, LinalgError> {
    Ok(sym_eigen(a)?.min_value())
}

/// Full singular value decomposition `A = U Σ Vᵀ` with square orthogonal
/// `U` (rows x rows) and `V` (cols x cols).
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Matrix,
    /// Descending, length `min(rows, cols)`.
    pub singular_values: Vec<f64>,
    pub v: Matrix,
    pub rank: usize,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        let (m, n) = (self.u.rows, self.v.rows);
        Matrix::from_fn(m, n, |i, j| {
            self.singular_values
                .iter()
                .enumerate()
                .map(|(k, s)| self.u[(i, k)] * s * self.v[(j, k)])
                .sum()
        })
    }

    /// Right singular vectors beyond the numeric rank.
    pub fn nullspace(&self) -> Matrix {
        let idx: Vec<usize> = (self.rank..self.v.cols).collect();
        self.v.select_columns(&idx)
    }

    /// Left singular vectors beyond the numeric rank (basis of `Ker(Aᵀ)`).
    pub fn left_nullspace(&self) -> Matrix {
        let idx: Vec<usize> = (self.rank..self.u.cols).collect();
        self.u.select_columns(&idx)
    }
}

pub fn numeric_rank(singular_values: &[f64], rel_tol: f64, abs_tol: f64) -> usize {
    let top = singular_values.first().copied().unwrap_or(0.0);
    singular_values
        .iter()
        .filter(|&&s| s > rel_tol * top && s > abs_tol)
        .count()
}

/// One-sided Jacobi on the columns of a tall (rows >= cols) matrix.
/// Returns `(W, V)` with `W = A V` having mutually orthogonal columns.
fn one_sided_jacobi(a: &Matrix) -> (Matrix, Matrix) {
    let (m, n) = (a.rows, a.cols);
    let mut w = a.clone();
    let mut v = Matrix::identity(n);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let (wp, wq) = (w[(i, p)], w[(i, q)]);
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (wp, wq) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
                for i in 0..n {
                    let (vp, vq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (w, v)
}

/// Extend the orthonormal columns `cols` (each of length `dim`) to a full
/// orthonormal basis, greedily picking the coordinate vector with the
/// largest residual.
fn complete_basis(mut cols: Vec<Vec<f64>>, dim: usize) -> Vec<Vec<f64>> {
    while cols.len() < dim {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for e in 0..dim {
            let mut r = vec![0.0; dim];
            r[e] = 1.0;
            for _ in 0..2 {
                for c in &cols {
                    let d = dot(&r, c);
                    r.iter_mut().zip(c).for_each(|(x, y)| *x -= d * y);
                }
            }
            let nr = norm(&r);
            if best.as_ref().is_none_or(|(b, _)| nr > *b) {
                best = Some((nr, r));
            }
        }
        let (nr, r) = best.expect("dim > 0");
        cols.push(r.iter().map(|x| x / nr).collect());
    }
    cols
}

/// Tall-case SVD core: `a` has rows >= cols.
fn svd_tall(a: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let (m, n) = (a.rows, a.cols);
    let (w, v) = one_sided_jacobi(a);
    let norms: Vec<f64> = (0..n).map(|j| norm(&w.column(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut v = v.select_columns(&order);
    let top = sigma.first().copied().unwrap_or(0.0);
    let negligible = top * f64::EPSILON * (m.max(n) as f64);

    let mut ucols = Vec::with_capacity(m);
    for (k, &j) in order.iter().enumerate() {
        if sigma[k] > negligible && sigma[k] > 0.0 {
            ucols.push(w.column(j).iter().map(|x| x / sigma[k]).collect::<Vec<_>>());
        } else {
            break;
        }
    }
    let nonzero = ucols.len();
    let ucols = complete_basis(ucols, m);
    let mut u = Matrix::from_columns(&ucols, m);

    for k in 0..n {
        let mut col = v.column(k);
        if canonical_sign(&mut col) {
            v.set_column(k, &col);
            if k < nonzero {
                let uc: Vec<f64> = u.column(k).iter().map(|x| -x).collect();
                u.set_column(k, &uc);
            }
        }
    }
    for k in nonzero..m {
        let mut col = u.column(k);
        canonical_sign(&mut col);
        u.set_column(k, &col);
    }
    (u, sigma, v)
}

/// Singular value decomposition with numeric rank
/// `#{i : σ_i > rel_tol·σ_1 and σ_i > abs_tol}`.
pub fn svd(a: &Matrix, rel_tol: f64, abs_tol: f64) -> Result<SvdResult, LinalgError> {
    a.check_finite()?;
    let (m, n) = (a.rows, a.cols);
    let (u, singular_values, v) = if m >= n {
        svd_tall(a)
    } else {
        // A = (Aᵀ)ᵀ = (U' Σ V'ᵀ)ᵀ = V' Σ U'ᵀ
        let (ut, s, vt) = svd_tall(&a.transpose());
        let mut u = vt;
        let mut v = ut;
        // Re-apply the sign convention to the right vectors.
        for k in 0..m.min(n) {
            let mut col = v.column(k);
            if canonical_sign(&mut col) {
                v.set_column(k, &col);
                let uc: Vec<f64> = u.column(k).iter().map(|x| -x).collect();
                u.set_column(k, &uc);
            }
        }
        for k in m..n {
            let mut col = v.column(k);
            canonical_sign(&mut col);
            v.set_column(k, &col);
        }
        (u, s, v)
    };
    let rank = numeric_rank(&singular_values, rel_tol, abs_tol);
    Ok(SvdResult {
        u,
        singular_values,
        v,
        rank,
    })
}

/// Orthonormal basis of `Ker(A)` (n x (n - rank)), possibly with no columns.
pub fn nullspace(a: &Matrix, rel_tol: f64, abs_tol: f64) -> Result<Matrix, LinalgError> {
    Ok(svd(a, rel_tol, abs_tol)?.nullspace())
}

/// Minimum-norm least-squares solution of `A x = b` via the pseudo-inverse
/// restricted to the numeric rank.
pub fn lstsq(a: &Matrix, b: &[f64], rel_tol: f64, abs_tol: f64) -> Result<(Vec<f64>, usize), LinalgError> {
    let s = svd(a, rel_tol, abs_tol)?;
    let utb = s.u.tr_matvec(b);
    let mut x = vec![0.0; a.cols];
    for (k, (u, sv)) in utb.iter().zip(&s.singular_values).take(s.rank).enumerate() {
        let coef = u / sv;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += coef * s.v[(i, k)];
        }
    }
    Ok((x, s.rank))
}

/// Orthonormal basis for the span of the given columns.
pub fn orthonormal_span(a: &Matrix, rel_tol: f64, abs_tol: f64) -> Result<Matrix, LinalgError> {
    let s = svd(a, rel_tol, abs_tol)?;
    let idx: Vec<usize> = (0..s.rank).collect();
    Ok(s.u.select_columns(&idx))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthonormality_error(q: &Matrix) -> f64 {
        q.transpose().matmul(q).sub(&Matrix::identity(q.cols())).max_abs()
    }

    #[test]
    fn eigen_examples() {
        let e = sym_eigen(&Matrix::from_rows(&[vec![-2.0, 0.0], vec![0.0, -2.0]], 2)).unwrap();
        assert_eq!(e.values, vec![-2.0, -2.0]);
        let e = sym_eigen(&Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], 2)).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
        let e = sym_eigen(&Matrix::identity(5)).unwrap();
        assert!(e.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn eigen_rejects_non_finite() {
        let mut a = Matrix::identity(2);
        a[(1, 0)] = f64::NAN;
        assert!(matches!(sym_eigen(&a), Err(LinalgError::NonFinite { .. })));
        assert!(sym_eigen(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn cosine_jacobian_svd() {
        let j = Matrix::from_rows(
            &[vec![0.0, 0.0, -1.0], vec![0.0, 0.0, -1.0], vec![0.0, 0.0, -2.0]],
            3,
        );
        let s = svd(&j, DEFAULT_RANK_REL_TOL, DEFAULT_RANK_ABS_TOL).unwrap();
        assert!((s.singular_values[0] - 6f64.sqrt()).abs() < 1e-14);
        assert_eq!(s.singular_values[1], 0.0);
        assert_eq!(s.rank, 1);
        let ns = s.nullspace();
        assert_eq!(ns.cols(), 2);
        for k in 0..2 {
            assert!(ns[(2, k)].abs() < 1e-15);
        }
        assert!(orthonormality_error(&ns) < 1e-14);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let s = svd(&Matrix::zeros(3, 3), 1e-8, 1e-12).unwrap();
        assert_eq!(s.rank, 0);
        assert!(orthonormality_error(&s.u) < 1e-15);
        assert!(orthonormality_error(&s.v) < 1e-15);
    }

    #[test]
    fn bilinear_jacobian_second_singular_value() {
        // rows (x2, x1, -1), (-x2, -x1, -1), (0, 0, -1) at x = (s, s, 0);
        // J (1,1,0)/√2 = (√2 s, -√2 s, 0), so σ₂ = 2s.
        let s = 1e-3;
        let j = Matrix::from_rows(
            &[vec![s, s, -1.0], vec![-s, -s, -1.0], vec![0.0, 0.0, -1.0]],
            3,
        );
        let r = svd(&j, 1e-8, 1e-12).unwrap();
        assert_eq!(r.rank, 2);
        assert!((r.singular_values[1] - 2.0 * s).abs() < 1e-15);
        assert!((r.singular_values[0] - 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn nullspace_examples() {
        let full = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 7.0]], 2);
        assert_eq!(nullspace(&full, 1e-8, 1e-12).unwrap().cols(), 0);
        let minchenko = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]], 2);
        let ns = nullspace(&minchenko, 1e-8, 1e-12).unwrap();
        assert_eq!(ns.cols(), 1);
        assert_eq!(ns.column(0), vec![1.0, 0.0]);
    }

    #[test]
    fn wide_and_empty_shapes() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0, 1.0]], 3);
        let s = svd(&a, 1e-8, 1e-12).unwrap();
        assert_eq!((s.u.rows(), s.u.cols(), s.v.rows(), s.v.cols()), (1, 1, 3, 3));
        assert!(s.reconstruct().sub(&a).max_abs() < 1e-15);
        assert_eq!(s.nullspace().cols(), 2);

        let empty = Matrix::zeros(0, 3);
        let s = svd(&empty, 1e-8, 1e-12).unwrap();
        assert_eq!(s.rank, 0);
        assert!(s.singular_values.is_empty());
        let ns = s.nullspace();
        assert_eq!(ns.cols(), 3);
        assert!(orthonormality_error(&ns) < 1e-15);
    }

    #[test]
    fn lstsq_recovers_consistent_solution() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0], vec![0.0, 1.0]], 2);
        let x_true = [0.5, -1.25];
        let b = a.matvec(&x_true);
        let (x, rank) = lstsq(&a, &b, 1e-8, 1e-12).unwrap();
        assert_eq!(rank, 2);
        assert!((x[0] - x_true[0]).abs() < 1e-14 && (x[1] - x_true[1]).abs() < 1e-14);
    }

    #[test]
    fn line_angle_is_sign_insensitive() {
        assert!(line_angle(&[1.0, 0.0], &[-1.0, 0.0]).abs() < 1e-16);
        let a = line_angle(&[1.0, 0.0], &[1.0, 1.0]);
        assert!((a - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!((line_angle(&[0.0, 2.0], &[3.0, 0.0]) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }
}
