//! End-to-end selection: truncated SVD, rectangular MaxVol, index
//! post-processing. Fast, slow (oversampled pool) and chunked variants.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::FrameRecord;
use crate::linalg::{truncated_svd, EmbeddingMatrix};
use crate::maxvol::{rect_maxvol, MaxVolParams, StepRecord, StopReason, DEFAULT_MAX_SWEEPS};
use crate::metrics::MetricsBlock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Fast,
    Slow,
    Chunked,
}

/// How the user-facing `tol` maps to the coefficient-norm stopping threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TolConvention {
    /// Stop at `sqrt(1 + tol^2)`: a row only joins if it grows the volume by
    /// more than that factor. Exact duplicates (norm 1) are never added.
    Sqrt1p,
    /// Stop at `tol` itself.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxInfoConfig {
    /// Truncated SVD rank.
    pub rank: usize,
    pub tol: f64,
    pub min_out: usize,
    pub max_out: usize,
    pub mode: Mode,
    /// Slow mode oversampling pool.
    pub pool: usize,
    /// Chunk count for chunked mode.
    pub chunks: usize,
    pub tol_convention: TolConvention,
    pub max_sweeps: usize,
}

impl Default for MaxInfoConfig {
    fn default() -> Self {
        Self {
            rank: 8,
            tol: 0.3,
            min_out: 1,
            max_out: 64,
            mode: Mode::Fast,
            pool: 128,
            chunks: 32,
            tol_convention: TolConvention::Sqrt1p,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }
}

impl MaxInfoConfig {
    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    /// Coefficient-norm threshold handed to rect MaxVol.
    pub fn stop_threshold(&self) -> f64 {
        match self.tol_convention {
            TolConvention::Sqrt1p => (1.0 + self.tol * self.tol).sqrt(),
            TolConvention::Literal => self.tol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidConfig("rank must be at least 1".into()));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tol must be finite and non-negative, got {}",
                self.tol
            )));
        }
        if self.min_out == 0 || self.min_out > self.max_out {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= min ({}) <= max ({})",
                self.min_out, self.max_out
            )));
        }
        match self.mode {
            Mode::Slow if self.pool < self.max_out => Err(Error::InvalidConfig(format!(
                "pool ({}) must be at least max ({})",
                self.pool, self.max_out
            ))),
            Mode::Chunked if self.chunks == 0 => {
                Err(Error::InvalidConfig("chunks must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Output budget for an `n`-row input: `max_out` clamped to `n`.
    fn budget(&self, n: usize) -> Result<(usize, usize)> {
        if self.min_out > n {
            return Err(Error::InvalidConfig(format!(
                "min ({}) exceeds the {n} available frames",
                self.min_out
            )));
        }
        Ok((self.min_out, self.max_out.min(n)))
    }
}

/// Diagnostics for one SVD + MaxVol run. All indices are global frame
/// indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDiagnostics {
    pub offset: usize,
    pub rows: usize,
    pub min_rows: usize,
    pub max_rows: usize,
    pub requested_rank: usize,
    pub numerical_rank: usize,
    /// Columns of the basis MaxVol actually ran on.
    pub working_rank: usize,
    pub leading_singular_values: Vec<f64>,
    pub stop_threshold: f64,
    pub square_pivots: Vec<usize>,
    pub square_swaps: usize,
    pub square_converged: bool,
    pub initial_log_volume: f64,
    pub steps: Vec<StepRecord>,
    pub final_log_volume: f64,
    pub stop_reason: StopReason,
    /// Pivots in selection order.
    pub pivots: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub load_ms: f64,
    pub svd_ms: f64,
    pub maxvol_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub selected_indices: Vec<usize>,
    pub mode: Mode,
    pub config: MaxInfoConfig,
    pub input_rows: usize,
    pub input_cols: usize,
    /// Rows MaxVol saw after slow-mode pool subsampling.
    pub pool_rows: usize,
    /// Slow mode: selection size before temporal downsampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre_downsample_count: Option<usize>,
    pub blocks: Vec<BlockDiagnostics>,
    pub timing: Timing,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_frames: Option<Vec<FrameRecord>>,
}

impl SelectionReport {
    /// Zeroes timing so reports from repeated runs compare byte for byte.
    pub fn canonicalize(&mut self) {
        self.timing = Timing::default();
    }
}

struct BlockRun {
    diag: BlockDiagnostics,
    svd_ms: f64,
    maxvol_ms: f64,
}

/// SVD reduction followed by rect MaxVol on one contiguous block.
fn run_block(
    q: &EmbeddingMatrix,
    offset: usize,
    cfg: &MaxInfoConfig,
    min_rows: usize,
    max_rows: usize,
) -> Result<BlockRun> {
    let t0 = Instant::now();
    let requested = cfg.rank.min(q.rows().min(q.cols()));
    let svd = truncated_svd(q, requested)?;
    let numerical_rank = svd.numerical_rank();
    let s = requested.min(numerical_rank.max(1));
    let basis = svd.basis.leading_cols(s);
    let svd_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = Instant::now();
    let mut params = MaxVolParams::new(cfg.stop_threshold(), min_rows, max_rows);
    params.max_sweeps = cfg.max_sweeps;
    let state = rect_maxvol(&basis, &params)?;
    let maxvol_ms = t1.elapsed().as_secs_f64() * 1e3;

    let global = |v: &[usize]| v.iter().map(|i| i + offset).collect::<Vec<_>>();
    let steps = state
        .steps()
        .iter()
        .map(|st| StepRecord {
            index: st.index + offset,
            ..*st
        })
        .collect();
    let diag = BlockDiagnostics {
        offset,
        rows: q.rows(),
        min_rows,
        max_rows,
        requested_rank: requested,
        numerical_rank,
        working_rank: state.basis().cols(),
        leading_singular_values: svd.singular_values[..(requested + 1).min(svd.singular_values.len())]
            .to_vec(),
        stop_threshold: params.tol,
        square_pivots: global(state.square_pivots()),
        square_swaps: state.swaps(),
        square_converged: state.square_converged(),
        initial_log_volume: state.initial_log_volume(),
        steps,
        final_log_volume: state.log_volume(),
        stop_reason: state.stop_reason().unwrap_or(StopReason::MaxRows),
        pivots: global(state.pivots()),
    };
    Ok(BlockRun {
        diag,
        svd_ms,
        maxvol_ms,
    })
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

/// Runs the mode selected in `cfg`.
pub fn select(q: &EmbeddingMatrix, cfg: &MaxInfoConfig) -> Result<SelectionReport> {
    match cfg.mode {
        Mode::Fast => select_fast(q, cfg),
        Mode::Slow => select_slow(q, cfg),
        Mode::Chunked => select_chunked(q, cfg),
    }
}

/// MaxInfo directly on the given frames with output bounds `min_out..=max_out`.
pub fn select_fast(q: &EmbeddingMatrix, cfg: &MaxInfoConfig) -> Result<SelectionReport> {
    cfg.validate()?;
    let (min_out, max_out) = cfg.budget(q.rows())?;
    let run = run_block(q, 0, cfg, min_out, max_out)?;
    Ok(SelectionReport {
        selected_indices: sorted(run.diag.pivots.clone()),
        mode: Mode::Fast,
        config: cfg.clone(),
        input_rows: q.rows(),
        input_cols: q.cols(),
        pool_rows: q.rows(),
        pre_downsample_count: None,
        blocks: vec![run.diag],
        timing: Timing {
            load_ms: 0.0,
            svd_ms: run.svd_ms,
            maxvol_ms: run.maxvol_ms,
        },
        metrics: None,
        selected_frames: None,
    })
}

/// MaxInfo over an oversampled pool, then temporal downsampling to `max_out`.
///
/// Inputs longer than `pool` are first uniformly subsampled to `pool` rows.
pub fn select_slow(q: &EmbeddingMatrix, cfg: &MaxInfoConfig) -> Result<SelectionReport> {
    cfg.validate()?;
    let n = q.rows();
    let (pool_idx, pool) = if n > cfg.pool {
        let idx = uniform_positions(n, cfg.pool);
        let sub = q.select_rows(&idx);
        (Some(idx), sub)
    } else {
        (None, q.clone())
    };
    let (min_out, max_out) = cfg.budget(pool.rows())?;
    let mut run = run_block(&pool, 0, cfg, min_out, pool.rows())?;
    if let Some(idx) = &pool_idx {
        remap(&mut run.diag, idx);
    }
    let picked = sorted(run.diag.pivots.clone());
    let count = picked.len();
    let selected = if count > max_out {
        uniform_downsample(&picked, max_out)?
    } else {
        picked
    };
    Ok(SelectionReport {
        selected_indices: selected,
        mode: Mode::Slow,
        config: cfg.clone(),
        input_rows: n,
        input_cols: q.cols(),
        pool_rows: pool.rows(),
        pre_downsample_count: Some(count),
        blocks: vec![run.diag],
        timing: Timing {
            load_ms: 0.0,
            svd_ms: run.svd_ms,
            maxvol_ms: run.maxvol_ms,
        },
        metrics: None,
        selected_frames: None,
    })
}

fn remap(diag: &mut BlockDiagnostics, idx: &[usize]) {
    for p in diag
        .pivots
        .iter_mut()
        .chain(diag.square_pivots.iter_mut())
    {
        *p = idx[*p];
    }
    for st in &mut diag.steps {
        st.index = idx[st.index];
    }
}

/// Contiguous chunk ranges; the first `n % m` chunks get one extra row.
pub fn chunk_bounds(n: usize, m: usize) -> Result<Vec<(usize, usize)>> {
    if m == 0 || n < m {
        return Err(Error::InvalidChunking(format!(
            "cannot split {n} frames into {m} chunks"
        )));
    }
    let (base, extra) = (n / m, n % m);
    let mut start = 0;
    Ok((0..m)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = (start, start + len);
            start += len;
            r
        })
        .collect())
}

/// Deals `total` units round-robin over slots, never exceeding a slot's cap.
fn split_budget(total: usize, caps: &[usize]) -> Vec<usize> {
    let mut shares = vec![0; caps.len()];
    let mut left = total.min(caps.iter().sum());
    while left > 0 {
        for (s, &c) in shares.iter_mut().zip(caps) {
            if left > 0 && *s < c {
                *s += 1;
                left -= 1;
            }
        }
    }
    shares
}

/// MaxInfo independently inside each of `chunks` contiguous chunks.
///
/// The output budget is dealt round-robin over chunks, so every chunk
/// contributes at least one frame and the union stays within
/// `min_out..=max_out`.
pub fn select_chunked(q: &EmbeddingMatrix, cfg: &MaxInfoConfig) -> Result<SelectionReport> {
    cfg.validate()?;
    let n = q.rows();
    let bounds = chunk_bounds(n, cfg.chunks)?;
    let (min_out, max_out) = cfg.budget(n)?;
    if max_out < cfg.chunks {
        return Err(Error::InvalidChunking(format!(
            "max ({max_out}) is below the chunk count ({}); a chunk would go unrepresented",
            cfg.chunks
        )));
    }
    let caps: Vec<usize> = bounds.iter().map(|(a, b)| b - a).collect();
    let max_shares = split_budget(max_out, &caps);
    let min_shares = split_budget(min_out.max(cfg.chunks), &caps);

    let mut blocks = Vec::with_capacity(bounds.len());
    let mut timing = Timing::default();
    let mut selected = Vec::new();
    for (c, &(start, end)) in bounds.iter().enumerate() {
        let chunk = q.slice_rows(start, end);
        let run = run_block(&chunk, start, cfg, min_shares[c], max_shares[c])?;
        timing.svd_ms += run.svd_ms;
        timing.maxvol_ms += run.maxvol_ms;
        selected.extend_from_slice(&run.diag.pivots);
        blocks.push(run.diag);
    }
    Ok(SelectionReport {
        selected_indices: sorted(selected),
        mode: Mode::Chunked,
        config: cfg.clone(),
        input_rows: n,
        input_cols: q.cols(),
        pool_rows: n,
        pre_downsample_count: None,
        blocks,
        timing,
        metrics: None,
        selected_frames: None,
    })
}

/// `floor(j (len - 1) / (k - 1))` for `j = 0..k`; `[0]` when `k == 1`.
pub(crate) fn uniform_positions(len: usize, k: usize) -> Vec<usize> {
    if k == 1 {
        return vec![0];
    }
    (0..k).map(|j| j * (len - 1) / (k - 1)).collect()
}

/// Keeps `k` evenly spaced entries of an ascending list, endpoints included.
pub fn uniform_downsample(indices: &[usize], k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > indices.len() {
        return Err(Error::InvalidCount(format!(
            "cannot keep {k} of {} indices",
            indices.len()
        )));
    }
    Ok(uniform_positions(indices.len(), k)
        .into_iter()
        .map(|p| indices[p])
        .collect())
}
