//! Seeded synthetic embedding streams for tests, benchmarks and the CLI.
//!
//! Everything is driven by a `ChaCha8Rng`, so a seed reproduces the same
//! matrix on every platform.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::EmbeddingMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal_vec(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// I.i.d. standard normal entries.
pub fn gaussian(n: usize, d: usize, seed: u64) -> EmbeddingMatrix {
    let mut r = rng(seed);
    let data = (0..n * d).map(|_| r.sample(StandardNormal)).collect();
    EmbeddingMatrix::new(n, d, data).expect("finite normal samples")
}

/// `count` random orthonormal vectors in `R^d` (Gram-Schmidt on normals).
pub fn orthonormal_directions(count: usize, d: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    assert!(count <= d, "cannot fit {count} orthonormal vectors in {d} dims");
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);
    while out.len() < count {
        let mut v = normal_vec(rng, d);
        // two passes keep the basis orthogonal to working precision
        for _ in 0..2 {
            for u in &out {
                let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            out.push(v);
        }
    }
    out
}

/// Every row the same random vector.
pub fn constant(n: usize, d: usize, seed: u64) -> EmbeddingMatrix {
    let mut r = rng(seed);
    let v = normal_vec(&mut r, d);
    let rows = vec![v; n];
    EmbeddingMatrix::from_rows(&rows).expect("finite rows")
}

/// One random direction repeated with per-entry noise of scale `eps`.
pub fn near_duplicate(n: usize, d: usize, eps: f64, seed: u64) -> EmbeddingMatrix {
    let mut r = rng(seed);
    let v = normal_vec(&mut r, d);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            v.iter()
                .map(|x| x + eps * r.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    EmbeddingMatrix::from_rows(&rows).expect("finite rows")
}

/// Contiguous scenes in time order.
#[derive(Debug, Clone)]
pub struct SceneStream {
    pub matrix: EmbeddingMatrix,
    /// Scene of each row.
    pub labels: Vec<usize>,
}

/// Scene `k` spans `lengths[k]` consecutive rows, each a unit scene mean plus
/// i.i.d. normal noise of standard deviation `noise`. Scene means are
/// mutually orthogonal.
pub fn scene_stream(lengths: &[usize], d: usize, noise: f64, seed: u64) -> SceneStream {
    let mut r = rng(seed);
    let means = orthonormal_directions(lengths.len(), d, &mut r);
    let mut rows = Vec::with_capacity(lengths.iter().sum());
    let mut labels = Vec::with_capacity(rows.capacity());
    for (k, &len) in lengths.iter().enumerate() {
        for _ in 0..len {
            let row: Vec<f64> = means[k]
                .iter()
                .map(|m| m + noise * r.sample::<f64, _>(StandardNormal))
                .collect();
            rows.push(row);
            labels.push(k);
        }
    }
    SceneStream {
        matrix: EmbeddingMatrix::from_rows(&rows).expect("finite rows"),
        labels,
    }
}

/// Shape of a query-relevance stream.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceSpec {
    pub frames: usize,
    pub answer_frames: usize,
    pub dims: usize,
    /// Static background scenes sharing the non-answer frames.
    pub scenes: usize,
    pub answer_cos: f64,
    pub background_cos: f64,
    pub noise: f64,
}

impl Default for RelevanceSpec {
    fn default() -> Self {
        Self {
            frames: 128,
            answer_frames: 8,
            dims: 64,
            scenes: 3,
            answer_cos: 0.8,
            background_cos: 0.2,
            noise: 0.01,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RelevanceStream {
    pub matrix: EmbeddingMatrix,
    pub query: Vec<f64>,
    pub answer: Range<usize>,
}

/// Long static background scenes with a short, visually varied event that
/// matches the query.
///
/// Background frames sit at cosine `background_cos` to the query and
/// answer frames at `answer_cos` (before noise). Every answer frame has its
/// own direction orthogonal to the rest, so the event is diverse while the
/// background is redundant. The event starts at a random offset.
pub fn relevance_stream(spec: &RelevanceSpec, seed: u64) -> RelevanceStream {
    let mut r = rng(seed);
    let dirs = orthonormal_directions(1 + spec.scenes + spec.answer_frames, spec.dims, &mut r);
    let query = dirs[0].clone();
    let background = &dirs[1..=spec.scenes];
    let answer_dirs = &dirs[1 + spec.scenes..];

    let bg_len = spec.frames - spec.answer_frames;
    let start = r.random_range(0..=bg_len);
    let answer = start..start + spec.answer_frames;

    let mix = |c: f64, dir: &[f64], r: &mut ChaCha8Rng| -> Vec<f64> {
        let s = (1.0 - c * c).sqrt();
        query
            .iter()
            .zip(dir)
            .map(|(qv, dv)| c * qv + s * dv + spec.noise * r.sample::<f64, _>(StandardNormal))
            .collect()
    };

    let (base, extra) = (bg_len / spec.scenes, bg_len % spec.scenes);
    let mut scene_of = Vec::with_capacity(bg_len);
    for k in 0..spec.scenes {
        scene_of.extend(std::iter::repeat_n(k, base + usize::from(k < extra)));
    }

    let mut rows = Vec::with_capacity(spec.frames);
    let mut bg = scene_of.iter();
    for i in 0..spec.frames {
        let row = if answer.contains(&i) {
            mix(spec.answer_cos, &answer_dirs[i - start], &mut r)
        } else {
            let k = *bg.next().expect("background length matches");
            mix(spec.background_cos, &background[k], &mut r)
        };
        rows.push(row);
    }
    RelevanceStream {
        matrix: EmbeddingMatrix::from_rows(&rows).expect("finite rows"),
        query,
        answer,
    }
}
