//! Dense real-matrix primitives: embedding matrices, rectangular volume and
//! truncated SVD.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Singular values at or below this fraction of the largest one are treated
/// as zero when estimating numerical rank.
pub const RANK_RTOL: f64 = 1e-10;

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} values, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Rows `indices` in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// Leading `k` columns.
    pub fn leading_cols(&self, k: usize) -> Matrix {
        let k = k.min(self.cols);
        let mut data = Vec::with_capacity(self.rows * k);
        for r in self.row_iter() {
            data.extend_from_slice(&r[..k]);
        }
        Matrix {
            rows: self.rows,
            cols: k,
            data,
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a = self.row(i);
            let o = out.row_mut(i);
            for (k, &aik) in a.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                for (oj, &bkj) in o.iter_mut().zip(other.row(k)) {
                    *oj += aik * bkj;
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(p) => Err(Error::InvalidInput(format!(
                "non-finite value at row {}, column {}",
                p / self.cols.max(1),
                p % self.cols.max(1)
            ))),
        }
    }

    fn to_faer(&self) -> faer::Mat<f64> {
        faer::Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

    fn from_faer(m: faer::MatRef<'_, f64>) -> Matrix {
        let mut out = Matrix::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] = m[(i, j)];
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// One row per sampled frame, one column per embedding dimension.
///
/// Always non-empty and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix(Matrix);

impl EmbeddingMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::try_from(Matrix::new(rows, cols, data)?)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::try_from(Matrix::from_rows(rows)?)
    }

    pub fn rows(&self) -> usize {
        self.0.rows
    }

    pub fn cols(&self) -> usize {
        self.0.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// Contiguous block of rows `start..end`.
    pub fn slice_rows(&self, start: usize, end: usize) -> EmbeddingMatrix {
        let c = self.0.cols;
        EmbeddingMatrix(Matrix {
            rows: end - start,
            cols: c,
            data: self.0.data[start * c..end * c].to_vec(),
        })
    }

    pub fn select_rows(&self, indices: &[usize]) -> EmbeddingMatrix {
        EmbeddingMatrix(self.0.select_rows(indices))
    }

    pub fn scaled(&self, factor: f64) -> Result<EmbeddingMatrix> {
        let data = self.0.data.iter().map(|v| v * factor).collect();
        EmbeddingMatrix::new(self.rows(), self.cols(), data)
    }
}

impl TryFrom<Matrix> for EmbeddingMatrix {
    type Error = Error;

    fn try_from(m: Matrix) -> Result<Self> {
        if m.rows == 0 || m.cols == 0 {
            return Err(Error::InvalidInput(format!(
                "embedding matrix must be non-empty, got {}x{}",
                m.rows, m.cols
            )));
        }
        m.check_finite()?;
        Ok(Self(m))
    }
}

/// Rank-`s` reduction of an embedding matrix.
#[derive(Debug, Clone)]
pub struct SvdReduction {
    /// Leading `s` left singular vectors, `n x s`.
    pub basis: Matrix,
    /// Leading `s` right singular vectors, `d x s`.
    pub right: Matrix,
    /// Full spectrum, length `min(n, d)`, non-increasing.
    pub singular_values: Vec<f64>,
}

impl SvdReduction {
    pub fn rank(&self) -> usize {
        self.basis.cols()
    }

    /// Number of singular values above `RANK_RTOL * sigma_1`.
    pub fn numerical_rank(&self) -> usize {
        numerical_rank(&self.singular_values)
    }

    /// `sqrt(sum_{i > s} sigma_i^2)`, the optimal rank-`s` Frobenius error.
    pub fn tail_norm(&self) -> f64 {
        self.singular_values[self.rank()..]
            .iter()
            .map(|s| s * s)
            .sum::<f64>()
            .sqrt()
    }

    /// `|| Q - U_s Sigma_s V_s^T ||_F` for the matrix this reduction came from.
    pub fn reconstruction_error(&self, q: &EmbeddingMatrix) -> f64 {
        let s = self.rank();
        let mut err = 0.0;
        for i in 0..q.rows() {
            let u = self.basis.row(i);
            for (j, &qij) in q.row(i).iter().enumerate() {
                let v = self.right.row(j);
                let approx: f64 = (0..s)
                    .map(|k| u[k] * self.singular_values[k] * v[k])
                    .sum();
                let r = qij - approx;
                err += r * r;
            }
        }
        err.sqrt()
    }
}

pub fn numerical_rank(singular_values: &[f64]) -> usize {
    let top = singular_values.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    singular_values
        .iter()
        .take_while(|&&s| s > RANK_RTOL * top)
        .count()
}

/// Thin SVD `A = U diag(sigma) V^T` with the sign of every singular pair fixed
/// so the first nonzero entry of each right singular vector is non-negative.
pub(crate) fn thin_svd(a: &Matrix) -> Result<(Matrix, Vec<f64>, Matrix)> {
    let svd = a
        .to_faer()
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let mut u = Matrix::from_faer(svd.U());
    let mut v = Matrix::from_faer(svd.V());
    let k = u.cols();
    let sigma: Vec<f64> = (0..k).map(|i| svd.S()[i]).collect();

    for j in 0..k {
        let col_max = (0..v.rows()).fold(0.0f64, |m, i| m.max(v[(i, j)].abs()));
        let cutoff = col_max * f64::EPSILON * 16.0;
        let first = (0..v.rows()).map(|i| v[(i, j)]).find(|x| x.abs() > cutoff);
        if matches!(first, Some(x) if x < 0.0) {
            for i in 0..v.rows() {
                v[(i, j)] = -v[(i, j)];
            }
            for i in 0..u.rows() {
                u[(i, j)] = -u[(i, j)];
            }
        }
    }
    Ok((u, sigma, v))
}

/// Truncated SVD keeping the leading `s` left singular vectors.
pub fn truncated_svd(q: &EmbeddingMatrix, s: usize) -> Result<SvdReduction> {
    let max = q.rows().min(q.cols());
    if s == 0 || s > max {
        return Err(Error::InvalidRank { rank: s, max });
    }
    let (u, sigma, v) = thin_svd(q.as_matrix())?;
    Ok(SvdReduction {
        basis: u.leading_cols(s),
        right: v.leading_cols(s),
        singular_values: sigma,
    })
}

/// Natural log of the rectangular volume; `-inf` when `a` is numerically
/// rank deficient.
///
/// The volume is taken over the smaller Gram matrix, `sqrt(det(A A^T))` for
/// wide inputs and `sqrt(det(A^T A))` for tall ones. It is evaluated as the
/// product of the diagonal of a Householder QR factor of the tall orientation.
pub fn log_rect_vol(a: &Matrix) -> Result<f64> {
    a.check_finite()?;
    let (m, k) = if a.rows() >= a.cols() {
        (a.rows(), a.cols())
    } else {
        (a.cols(), a.rows())
    };
    if k == 0 {
        // empty product
        return Ok(0.0);
    }
    // column-major copy of the tall orientation
    let mut w = vec![0.0; m * k];
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let (r, c) = if a.rows() >= a.cols() { (i, j) } else { (j, i) };
            w[c * m + r] = a[(i, j)];
        }
    }
    let mut diag = Vec::with_capacity(k);
    for j in 0..k {
        let (head, tail) = w.split_at_mut((j + 1) * m);
        let col = &mut head[j * m..];
        let norm = col[j..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            diag.push(0.0);
            continue;
        }
        let alpha = if col[j] > 0.0 { -norm } else { norm };
        col[j] -= alpha;
        let vnorm2: f64 = col[j..].iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for c in tail.chunks_exact_mut(m) {
                let dot: f64 = col[j..].iter().zip(&c[j..]).map(|(v, x)| v * x).sum();
                let f = 2.0 * dot / vnorm2;
                for (x, v) in c[j..].iter_mut().zip(&col[j..]) {
                    *x -= f * v;
                }
            }
        }
        diag.push(alpha.abs());
    }
    let top = diag.iter().fold(0.0f64, |acc, d| acc.max(*d));
    let cutoff = top * f64::EPSILON * (m as f64) * 4.0;
    if top == 0.0 || diag.iter().any(|&d| d <= cutoff) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(diag.iter().map(|d| d.ln()).sum())
}

/// Rectangular volume `sqrt(det(G))` over the smaller Gram matrix.
pub fn rect_vol(a: &Matrix) -> Result<f64> {
    log_rect_vol(a).map(f64::exp)
}

/// LU factorisation with partial pivoting of a small square matrix, used to
/// solve against the selected square submatrix.
pub(crate) struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub(crate) fn factor(a: &Matrix) -> Option<Lu> {
        let n = a.rows();
        debug_assert_eq!(n, a.cols());
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            for i in k + 1..n {
                if lu[i * n + k].abs() > lu[p * n + k].abs() {
                    p = i;
                }
            }
            if lu[p * n + k] == 0.0 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                for j in k + 1..n {
                    lu[i * n + j] -= f * lu[k * n + j];
                }
            }
        }
        Some(Lu { n, lu, perm })
    }

    pub(crate) fn log_abs_det(&self) -> f64 {
        (0..self.n).map(|i| self.lu[i * self.n + i].abs().ln()).sum()
    }

    /// Solves `x A = b` for a row vector `x`.
    #[allow(clippy::needless_range_loop)]
    pub(crate) fn solve_row(&self, b: &[f64]) -> Vec<f64> {
        // x A = b  <=>  A^T x^T = b^T, with P A = L U  =>  A^T = U^T L^T P
        let n = self.n;
        let mut y = b.to_vec();
        // U^T z = b
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.lu[k * n + i] * y[k];
            }
            y[i] = s / self.lu[i * n + i];
        }
        // L^T w = z
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.lu[k * n + i] * y[k];
            }
            y[i] = s;
        }
        // x = P^T w
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn rect_vol_examples() {
        assert!((rect_vol(&Matrix::identity(2)).unwrap() - 1.0).abs() < 1e-14);
        assert!((rect_vol(&m(&[&[3.0, 0.0], &[0.0, 4.0]])).unwrap() - 12.0).abs() < 1e-12);
        let tall = m(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        assert!((rect_vol(&tall).unwrap() - 3f64.sqrt()).abs() < 1e-14);
        // wide orientation uses A A^T
        assert!((rect_vol(&tall.transpose()).unwrap() - 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn log_rect_vol_examples() {
        assert_eq!(log_rect_vol(&Matrix::identity(2)).unwrap(), 0.0);
        let d = log_rect_vol(&m(&[&[3.0, 0.0], &[0.0, 4.0]])).unwrap();
        assert!((d - 12f64.ln()).abs() < 1e-14);
        let singular = m(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(log_rect_vol(&singular).unwrap(), f64::NEG_INFINITY);
        assert_eq!(rect_vol(&singular).unwrap(), 0.0);
        assert_eq!(rect_vol(&Matrix::zeros(3, 2)).unwrap(), 0.0);
    }

    #[test]
    fn rect_vol_rejects_non_finite() {
        let bad = m(&[&[1.0, f64::NAN]]);
        assert!(matches!(rect_vol(&bad), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn svd_rank_one() {
        let q = EmbeddingMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        let r = truncated_svd(&q, 1).unwrap();
        assert!((r.singular_values[0] - 5.0).abs() < 1e-12);
        assert!(r.singular_values[1].abs() < 1e-12);
        assert!(r.reconstruction_error(&q) < 1e-12);
        assert_eq!(r.numerical_rank(), 1);
    }

    #[test]
    fn svd_identity() {
        let q = EmbeddingMatrix::new(3, 3, Matrix::identity(3).into_vec()).unwrap();
        let r = truncated_svd(&q, 3).unwrap();
        for s in &r.singular_values {
            assert!((s - 1.0).abs() < 1e-14);
        }
        let gram = r.basis.transpose().matmul(&r.basis);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn svd_sign_convention() {
        let q = EmbeddingMatrix::from_rows(&[[-1.0, -2.0], [-2.0, -4.0], [0.5, 3.0]]).unwrap();
        let r = truncated_svd(&q, 2).unwrap();
        for j in 0..2 {
            let first = (0..2).map(|i| r.right[(i, j)]).find(|x| x.abs() > 1e-12).unwrap();
            assert!(first > 0.0);
        }
    }

    #[test]
    fn svd_rank_out_of_range() {
        let q = EmbeddingMatrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(truncated_svd(&q, 0), Err(Error::InvalidRank { .. })));
        assert!(matches!(
            truncated_svd(&q, 2),
            Err(Error::InvalidRank { rank: 2, max: 1 })
        ));
    }

    #[test]
    fn embedding_rejects_non_finite_and_empty() {
        assert!(EmbeddingMatrix::new(1, 2, vec![1.0, f64::INFINITY]).is_err());
        assert!(EmbeddingMatrix::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn lu_solve_row() {
        let a = m(&[&[2.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 4.0]]);
        let lu = Lu::factor(&a).unwrap();
        let b = [1.0, 2.0, 3.0];
        let x = lu.solve_row(&b);
        for j in 0..3 {
            let got: f64 = (0..3).map(|i| x[i] * a[(i, j)]).sum();
            assert!((got - b[j]).abs() < 1e-12);
        }
        // det = 2*(12-1) - 1*(4-0) = 18
        assert!((lu.log_abs_det() - 18f64.ln()).abs() < 1e-12);
    }
}
