//! Square and rectangular MaxVol row selection.
//!
//! The square phase finds `r` rows of an `n x r` basis whose submatrix is
//! dominant: every other row is a combination of the selected ones with
//! coefficients bounded by one in magnitude. The rectangular phase then grows
//! the selection one row at a time, always taking the row with the largest
//! coefficient norm, which is the row that increases the volume the most:
//!
//! ```text
//! vol(new) = vol(old) * sqrt(1 + |c_i|^2)
//! ```
//!
//! Coefficients are kept for every row and refreshed by a rank-one update per
//! append, so an append costs `O(n k)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, thin_svd, Lu, Matrix, RANK_RTOL};

/// Slack allowed on coefficient magnitudes before a square-phase swap.
pub const DOMINANCE_SLACK: f64 = 1e-9;

pub const DEFAULT_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxVolParams {
    /// Stop once the best remaining coefficient norm is at most this.
    pub tol: f64,
    pub min_rows: usize,
    pub max_rows: usize,
    /// Swap limit for the square phase.
    pub max_sweeps: usize,
}

impl MaxVolParams {
    pub fn new(tol: f64, min_rows: usize, max_rows: usize) -> Self {
        Self {
            tol,
            min_rows,
            max_rows,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be finite and non-negative, got {}",
                self.tol
            )));
        }
        if self.min_rows == 0 || self.min_rows > self.max_rows || self.max_rows > n {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= min_rows ({}) <= max_rows ({}) <= rows ({n})",
                self.min_rows, self.max_rows
            )));
        }
        Ok(())
    }
}

/// One greedy append.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub coeff_norm: f64,
    pub log_volume: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Every remaining coefficient norm fell to the tolerance.
    Tolerance,
    /// The row budget was reached.
    MaxRows,
    /// No unselected rows remain.
    Exhausted,
}

/// Result of the square phase.
#[derive(Debug, Clone)]
pub struct SquareSelection {
    /// One pivot per basis column, in column order.
    pub pivots: Vec<usize>,
    /// `n x r` coefficients with `coeff * basis[pivots] = basis`.
    pub coeff: Matrix,
    pub swaps: usize,
    /// False when the swap limit was hit before dominance.
    pub converged: bool,
    pub log_abs_det: f64,
}

/// Square MaxVol on an `n x r` basis with `n >= r`.
///
/// Starts from the pivots of Gaussian elimination with row pivoting and then
/// swaps in any row whose coefficient exceeds `1 + DOMINANCE_SLACK` until the
/// submatrix is dominant or `max_sweeps` swaps were made. Ties go to the
/// lowest row index.
pub fn maxvol_square(basis: &Matrix, max_sweeps: usize) -> Result<SquareSelection> {
    let (n, r) = (basis.rows(), basis.cols());
    if r == 0 || n < r {
        return Err(Error::InvalidInput(format!(
            "square maxvol needs rows >= cols >= 1, got {n}x{r}"
        )));
    }
    if !basis.is_finite() {
        return Err(Error::InvalidInput("basis contains non-finite values".into()));
    }

    let mut pivots = initial_pivots(basis)?;
    let lu = Lu::factor(&basis.select_rows(&pivots)).ok_or(Error::RankDeficient {
        rank: r - 1,
        requested: r,
    })?;
    let mut coeff = Matrix::zeros(n, r);
    for i in 0..n {
        let x = lu.solve_row(basis.row(i));
        coeff.row_mut(i).copy_from_slice(&x);
    }
    pin_pivot_rows(&mut coeff, &pivots);

    let mut swaps = 0;
    let mut converged = false;
    loop {
        let (mut bi, mut bj, mut best) = (0, 0, 0.0f64);
        for i in 0..n {
            for (j, &c) in coeff.row(i).iter().enumerate() {
                if c.abs() > best {
                    (bi, bj, best) = (i, j, c.abs());
                }
            }
        }
        if best <= 1.0 + DOMINANCE_SLACK {
            converged = true;
            break;
        }
        if swaps == max_sweeps {
            break;
        }
        // replace pivot j by row bi: C <- C - C[:, j] (C[bi, :] - e_j)^T / C[bi, j]
        let pivot_val = coeff[(bi, bj)];
        let mut delta = coeff.row(bi).to_vec();
        delta[bj] -= 1.0;
        for i in 0..n {
            let f = coeff[(i, bj)] / pivot_val;
            if f != 0.0 {
                for (c, d) in coeff.row_mut(i).iter_mut().zip(&delta) {
                    *c -= f * d;
                }
            }
        }
        pivots[bj] = bi;
        pin_pivot_rows(&mut coeff, &pivots);
        swaps += 1;
    }

    let log_abs_det = Lu::factor(&basis.select_rows(&pivots))
        .map(|lu| lu.log_abs_det())
        .unwrap_or(f64::NEG_INFINITY);
    Ok(SquareSelection {
        pivots,
        coeff,
        swaps,
        converged,
        log_abs_det,
    })
}

fn pin_pivot_rows(coeff: &mut Matrix, pivots: &[usize]) {
    for (j, &p) in pivots.iter().enumerate() {
        let row = coeff.row_mut(p);
        row.fill(0.0);
        row[j] = 1.0;
    }
}

/// Row pivots of Gaussian elimination with partial pivoting.
fn initial_pivots(basis: &Matrix) -> Result<Vec<usize>> {
    let (n, r) = (basis.rows(), basis.cols());
    let mut work = basis.clone();
    let mut taken = vec![false; n];
    let mut pivots = Vec::with_capacity(r);
    let floor = RANK_RTOL * basis.max_abs();
    for j in 0..r {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| !taken[i]) {
            let v = work[(i, j)].abs();
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        let (p, mag) = best.expect("n >= r leaves a candidate");
        if mag <= floor {
            return Err(Error::RankDeficient {
                rank: j,
                requested: r,
            });
        }
        taken[p] = true;
        pivots.push(p);
        let prow = work.row(p)[j..].to_vec();
        for i in (0..n).filter(|&i| !taken[i]) {
            let f = work[(i, j)] / prow[0];
            if f != 0.0 {
                for (w, pv) in work.row_mut(i)[j..].iter_mut().zip(&prow) {
                    *w -= f * pv;
                }
            }
        }
    }
    Ok(pivots)
}

/// Growing row selection over a fixed basis.
#[derive(Debug, Clone)]
pub struct SelectionState {
    basis: Matrix,
    pivots: Vec<usize>,
    selected: Vec<bool>,
    /// Row-major `n x stride`, the first `pivots.len()` columns are live.
    coeff: Vec<f64>,
    stride: usize,
    norms2: Vec<f64>,
    log_volume: f64,
    initial_pivots: usize,
    initial_log_volume: f64,
    swaps: usize,
    square_converged: bool,
    steps: Vec<StepRecord>,
    stop: Option<StopReason>,
}

impl SelectionState {
    /// Starts from a square selection over `basis`.
    pub fn from_square(basis: Matrix, square: SquareSelection) -> Self {
        let n = basis.rows();
        let k = square.pivots.len();
        let stride = (2 * k).max(k + 8);
        let mut coeff = vec![0.0; n * stride];
        let mut norms2 = vec![0.0; n];
        for i in 0..n {
            let src = square.coeff.row(i);
            coeff[i * stride..i * stride + k].copy_from_slice(src);
            norms2[i] = src.iter().map(|c| c * c).sum();
        }
        let mut selected = vec![false; n];
        for &p in &square.pivots {
            selected[p] = true;
        }
        Self {
            basis,
            pivots: square.pivots,
            selected,
            coeff,
            stride,
            norms2,
            log_volume: square.log_abs_det,
            initial_pivots: k,
            initial_log_volume: square.log_abs_det,
            swaps: square.swaps,
            square_converged: square.converged,
            steps: Vec::new(),
            stop: None,
        }
    }

    /// The working basis rows are selected from.
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// Selected rows in insertion order.
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn sorted_pivots(&self) -> Vec<usize> {
        let mut p = self.pivots.clone();
        p.sort_unstable();
        p
    }

    pub fn len(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivots.is_empty()
    }

    pub fn is_selected(&self, i: usize) -> bool {
        self.selected.get(i).copied().unwrap_or(false)
    }

    pub fn log_volume(&self) -> f64 {
        self.log_volume
    }

    /// Pivots chosen by the square phase (a prefix of `pivots`).
    pub fn square_pivots(&self) -> &[usize] {
        &self.pivots[..self.initial_pivots]
    }

    pub fn initial_log_volume(&self) -> f64 {
        self.initial_log_volume
    }

    pub fn swaps(&self) -> usize {
        self.swaps
    }

    pub fn square_converged(&self) -> bool {
        self.square_converged
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.stop
    }

    /// Euclidean norm of row `i`'s coefficient vector.
    pub fn coefficient_norm(&self, i: usize) -> f64 {
        self.norms2[i].sqrt()
    }

    /// Coefficients of every row, `n x k`, columns in pivot insertion order.
    pub fn coefficients(&self) -> Matrix {
        let k = self.pivots.len();
        let mut out = Matrix::zeros(self.basis.rows(), k);
        for i in 0..self.basis.rows() {
            out.row_mut(i)
                .copy_from_slice(&self.coeff[i * self.stride..i * self.stride + k]);
        }
        out
    }

    /// Unselected row indices with their coefficient rows.
    pub fn unselected_coefficients(&self) -> (Vec<usize>, Matrix) {
        let rows: Vec<usize> = (0..self.basis.rows()).filter(|&i| !self.selected[i]).collect();
        (rows.clone(), self.coefficients().select_rows(&rows))
    }

    /// Unselected row with the largest coefficient norm, lowest index on ties.
    pub fn best_candidate(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.norms2.iter().enumerate() {
            if !self.selected[i] && best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best.map(|(i, v)| (i, v.sqrt()))
    }

    /// Appends row `i` and returns its coefficient norm before the append.
    pub fn append_row(&mut self, i: usize) -> Result<f64> {
        let n = self.basis.rows();
        if i >= n {
            return Err(Error::InvalidPivot {
                index: i,
                reason: "row index out of range",
            });
        }
        if self.selected[i] {
            return Err(Error::InvalidPivot {
                index: i,
                reason: "row already selected",
            });
        }
        let k = self.pivots.len();
        if k == self.stride {
            self.grow();
        }
        let stride = self.stride;
        let ci = self.coeff[i * stride..i * stride + k].to_vec();
        let gamma: f64 = ci.iter().map(|c| c * c).sum();
        let denom = 1.0 + gamma;
        for j in 0..n {
            let row = &mut self.coeff[j * stride..j * stride + k + 1];
            let alpha: f64 = row[..k].iter().zip(&ci).map(|(a, b)| a * b).sum();
            let f = alpha / denom;
            for (c, x) in row[..k].iter_mut().zip(&ci) {
                *c -= f * x;
            }
            row[k] = f;
            self.norms2[j] = row.iter().map(|c| c * c).sum();
        }
        self.log_volume += 0.5 * gamma.ln_1p();
        self.pivots.push(i);
        self.selected[i] = true;
        let norm = gamma.sqrt();
        self.steps.push(StepRecord {
            index: i,
            coeff_norm: norm,
            log_volume: self.log_volume,
        });
        Ok(norm)
    }

    fn grow(&mut self) {
        let n = self.basis.rows();
        let k = self.pivots.len();
        let stride = self.stride * 2;
        let mut coeff = vec![0.0; n * stride];
        for i in 0..n {
            coeff[i * stride..i * stride + k]
                .copy_from_slice(&self.coeff[i * self.stride..i * self.stride + k]);
        }
        self.coeff = coeff;
        self.stride = stride;
    }
}

/// Rectangular MaxVol.
///
/// The basis is first reduced to its numerical rank and to at most
/// `max_rows` leading columns; the square phase then picks one row per
/// remaining column and the greedy phase appends rows while the best
/// coefficient norm exceeds `tol`, then keeps appending until `min_rows`.
pub fn rect_maxvol(basis: &Matrix, params: &MaxVolParams) -> Result<SelectionState> {
    let (n, s) = (basis.rows(), basis.cols());
    if n == 0 || s == 0 {
        return Err(Error::InvalidInput(format!(
            "rect_maxvol needs a non-empty basis, got {n}x{s}"
        )));
    }
    if !basis.is_finite() {
        return Err(Error::InvalidInput("basis contains non-finite values".into()));
    }
    params.validate(n)?;

    let working = working_basis(basis, params.max_rows)?;
    let square = maxvol_square(&working, params.max_sweeps)?;
    let mut state = SelectionState::from_square(working, square);

    let stop = loop {
        if state.len() >= params.max_rows {
            break StopReason::MaxRows;
        }
        let Some((i, norm)) = state.best_candidate() else {
            break StopReason::Exhausted;
        };
        if state.len() >= params.min_rows && norm <= params.tol {
            break StopReason::Tolerance;
        }
        state.append_row(i)?;
    };
    state.stop = Some(stop);
    Ok(state)
}

/// Reduces `basis` to full column rank with at most `max_cols` columns.
fn working_basis(basis: &Matrix, max_cols: usize) -> Result<Matrix> {
    let s = basis.cols();
    let (u, sigma, _) = thin_svd(basis)?;
    let rank = numerical_rank(&sigma).max(1);
    let full = if rank < s {
        u.leading_cols(rank)
    } else {
        basis.clone()
    };
    Ok(if full.cols() > max_cols {
        full.leading_cols(max_cols)
    } else {
        full
    })
}
