//! Baseline selectors (uniform, similarity threshold) and the diversity and
//! relevance metrics used to compare them against MaxInfo.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::EmbeddingMatrix;
use crate::pipeline::{self, uniform_positions, MaxInfoConfig, Mode};

/// Default cosine threshold for the similarity baseline.
pub const DEFAULT_THETA: f64 = 0.5;

/// `k` evenly spaced indices out of `0..n`, both endpoints included.
pub fn uniform_sample(n: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return Err(Error::InvalidCount(format!(
            "cannot sample {k} of {n} frames"
        )));
    }
    Ok(uniform_positions(n, k))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cosine_with_norms(a: &[f64], na: f64, b: &[f64], nb: f64) -> f64 {
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

fn nonzero_norm(q: &EmbeddingMatrix, i: usize) -> Result<f64> {
    let n = norm(q.row(i));
    if n == 0.0 {
        return Err(Error::InvalidInput(format!("row {i} is all zeros")));
    }
    Ok(n)
}

/// Keeps frame 0, then every frame whose cosine to the last kept frame is
/// below `theta`.
pub fn clip_threshold_select(q: &EmbeddingMatrix, theta: f64) -> Result<Vec<usize>> {
    if !(-1.0..=1.0).contains(&theta) {
        return Err(Error::InvalidConfig(format!(
            "theta must lie in [-1, 1], got {theta}"
        )));
    }
    let norms = (0..q.rows())
        .map(|i| nonzero_norm(q, i))
        .collect::<Result<Vec<_>>>()?;
    let mut kept = vec![0];
    let mut last = 0;
    for i in 1..q.rows() {
        if cosine_with_norms(q.row(i), norms[i], q.row(last), norms[last]) < theta {
            kept.push(i);
            last = i;
        }
    }
    Ok(kept)
}

/// Cosine between consecutive selected frames; empty for fewer than two.
pub fn neighbor_cosine(q: &EmbeddingMatrix, indices: &[usize]) -> Result<Vec<f64>> {
    check_indices(q, indices)?;
    indices
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            Ok(cosine_with_norms(
                q.row(a),
                nonzero_norm(q, a)?,
                q.row(b),
                nonzero_norm(q, b)?,
            ))
        })
        .collect()
}

/// Mean cosine between the selected frames and a query embedding.
pub fn clip_score(q: &EmbeddingMatrix, indices: &[usize], query: &[f64]) -> Result<f64> {
    check_indices(q, indices)?;
    if query.len() != q.cols() {
        return Err(Error::InvalidInput(format!(
            "query has {} dims, embeddings have {}",
            query.len(),
            q.cols()
        )));
    }
    if query.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("query contains non-finite values".into()));
    }
    let nq = norm(query);
    if nq == 0.0 {
        return Err(Error::InvalidInput("query embedding is all zeros".into()));
    }
    if indices.is_empty() {
        return Err(Error::InvalidCount("clip score needs at least one frame".into()));
    }
    let mut total = 0.0;
    for &i in indices {
        total += cosine_with_norms(q.row(i), nonzero_norm(q, i)?, query, nq);
    }
    Ok(total / indices.len() as f64)
}

fn check_indices(q: &EmbeddingMatrix, indices: &[usize]) -> Result<()> {
    match indices.iter().find(|&&i| i >= q.rows()) {
        Some(i) => Err(Error::InvalidInput(format!(
            "index {i} out of range for {} frames",
            q.rows()
        ))),
        None => Ok(()),
    }
}

/// Diversity and relevance of one selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsBlock {
    pub selected_count: usize,
    pub neighbor_cosine: Vec<f64>,
    /// Absent for fewer than two frames.
    pub mean_neighbor_cosine: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip_score: Option<f64>,
    /// How per-frame query cosines are aggregated.
    pub clip_aggregation: String,
}

impl MetricsBlock {
    pub fn compute(q: &EmbeddingMatrix, indices: &[usize], query: Option<&[f64]>) -> Result<Self> {
        let cos = neighbor_cosine(q, indices)?;
        let mean = (!cos.is_empty()).then(|| cos.iter().sum::<f64>() / cos.len() as f64);
        let clip = query.map(|qv| clip_score(q, indices, qv)).transpose()?;
        Ok(Self {
            selected_count: indices.len(),
            neighbor_cosine: cos,
            mean_neighbor_cosine: mean,
            clip_score: clip,
            clip_aggregation: "mean".into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Uniform,
    ClipThreshold,
    Maxinfo,
    /// Similarity threshold first, MaxInfo on the survivors.
    ClipThenMaxinfo,
    /// MaxInfo first, similarity threshold on its picks.
    MaxinfoThenClip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub strategy: Strategy,
    pub indices: Vec<usize>,
    pub metrics: MetricsBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub input_rows: usize,
    pub input_cols: usize,
    pub config: MaxInfoConfig,
    pub theta: f64,
    pub strategies: Vec<StrategyResult>,
}

impl ComparisonReport {
    pub fn get(&self, s: Strategy) -> Option<&StrategyResult> {
        self.strategies.iter().find(|r| r.strategy == s)
    }
}

/// MaxInfo on a row subset, indices mapped back to `q`.
fn maxinfo_on(q: &EmbeddingMatrix, rows: &[usize], cfg: &MaxInfoConfig) -> Result<Vec<usize>> {
    let sub = q.select_rows(rows);
    let mut c = cfg.clone();
    c.min_out = c.min_out.min(sub.rows());
    c.max_out = c.max_out.min(sub.rows());
    c.pool = c.pool.max(c.max_out);
    if c.mode == Mode::Chunked && (sub.rows() < c.chunks || c.max_out < c.chunks) {
        c.mode = Mode::Fast;
    }
    let r = pipeline::select(&sub, &c)?;
    Ok(r.selected_indices.iter().map(|&i| rows[i]).collect())
}

/// Runs every strategy on `q`. Uniform sampling gets the same frame count
/// as MaxInfo.
pub fn compare_strategies(
    q: &EmbeddingMatrix,
    cfg: &MaxInfoConfig,
    theta: f64,
    query: Option<&[f64]>,
) -> Result<ComparisonReport> {
    let maxinfo = pipeline::select(q, cfg)?.selected_indices;
    let uniform = uniform_sample(q.rows(), maxinfo.len())?;
    let threshold = clip_threshold_select(q, theta)?;
    let clip_then = maxinfo_on(q, &threshold, cfg)?;
    let then_clip: Vec<usize> = clip_threshold_select(&q.select_rows(&maxinfo), theta)?
        .into_iter()
        .map(|i| maxinfo[i])
        .collect();

    let strategies = [
        (Strategy::Uniform, uniform),
        (Strategy::ClipThreshold, threshold),
        (Strategy::Maxinfo, maxinfo),
        (Strategy::ClipThenMaxinfo, clip_then),
        (Strategy::MaxinfoThenClip, then_clip),
    ]
    .into_iter()
    .map(|(strategy, indices)| {
        Ok(StrategyResult {
            strategy,
            metrics: MetricsBlock::compute(q, &indices, query)?,
            indices,
        })
    })
    .collect::<Result<Vec<_>>>()?;

    Ok(ComparisonReport {
        input_rows: q.rows(),
        input_cols: q.cols(),
        config: cfg.clone(),
        theta,
        strategies,
    })
}

/// Fixed-width histogram over `[-1, 1]`; the last bin is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

pub fn cosine_histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidConfig("histogram needs at least one bin".into()));
    }
    let edges = (0..=bins)
        .map(|i| -1.0 + 2.0 * i as f64 / bins as f64)
        .collect();
    let mut counts = vec![0u64; bins];
    for &v in values {
        let pos = ((v.clamp(-1.0, 1.0) + 1.0) / 2.0 * bins as f64).floor() as usize;
        counts[pos.min(bins - 1)] += 1;
    }
    Ok(Histogram { edges, counts })
}
