//! Latency harness for the selection step (SVD + rect MaxVol), excluding
//! embedding extraction and file IO.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pipeline::{select, MaxInfoConfig, Mode};
use crate::synth;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub label: String,
    pub rows: usize,
    pub cols: usize,
    pub chunks: usize,
    pub reps: usize,
    pub selected: usize,
    pub svd_median_ms: f64,
    pub maxvol_median_ms: f64,
    pub maxvol_p95_ms: f64,
    pub total_median_ms: f64,
    pub total_p95_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub config: MaxInfoConfig,
    pub rows: Vec<BenchRow>,
}

/// Nearest-rank percentile of `samples` (sorted in place).
pub fn percentile(samples: &mut [f64], p: f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * samples.len() as f64).ceil() as usize;
    samples[rank.clamp(1, samples.len()) - 1]
}

/// Times `reps` selections on a seeded Gaussian `rows x cols` matrix.
pub fn bench_case(
    label: &str,
    rows: usize,
    cols: usize,
    cfg: &MaxInfoConfig,
    reps: usize,
    seed: u64,
) -> Result<BenchRow> {
    let q = synth::gaussian(rows, cols, seed);
    // warm-up, also validates the configuration
    let mut selected = select(&q, cfg)?.selected_indices.len();
    let (mut svd, mut mv, mut total) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..reps.max(1) {
        let r = select(&q, cfg)?;
        selected = r.selected_indices.len();
        svd.push(r.timing.svd_ms);
        mv.push(r.timing.maxvol_ms);
        total.push(r.timing.svd_ms + r.timing.maxvol_ms);
    }
    Ok(BenchRow {
        label: label.to_string(),
        rows,
        cols,
        chunks: if cfg.mode == Mode::Chunked { cfg.chunks } else { 1 },
        reps: reps.max(1),
        selected,
        svd_median_ms: percentile(&mut svd, 50.0),
        maxvol_median_ms: percentile(&mut mv, 50.0),
        maxvol_p95_ms: percentile(&mut mv, 95.0),
        total_median_ms: percentile(&mut total, 50.0),
        total_p95_ms: percentile(&mut total, 95.0),
    })
}

/// The standard table: `sizes x cols` in fast mode plus `32 x 32` chunked.
pub fn run_suite(
    sizes: &[usize],
    cols: usize,
    base: &MaxInfoConfig,
    reps: usize,
    seed: u64,
) -> Result<BenchReport> {
    let fast = MaxInfoConfig {
        mode: Mode::Fast,
        ..base.clone()
    };
    let mut rows = Vec::new();
    for &n in sizes {
        rows.push(bench_case(&format!("fast {n}x{cols}"), n, cols, &fast, reps, seed)?);
    }
    let chunked = MaxInfoConfig {
        mode: Mode::Chunked,
        chunks: 32,
        ..base.clone()
    };
    rows.push(bench_case(
        &format!("chunked 32x32x{cols}"),
        32 * 32,
        cols,
        &chunked,
        reps,
        seed,
    )?);
    Ok(BenchReport {
        seed,
        config: base.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank() {
        let mut v: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(percentile(&mut v, 50.0), 10.0);
        assert_eq!(percentile(&mut v, 95.0), 19.0);
        assert_eq!(percentile(&mut v, 100.0), 20.0);
        assert_eq!(percentile(&mut [3.0], 95.0), 3.0);
    }
}
