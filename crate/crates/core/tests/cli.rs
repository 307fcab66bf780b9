use std::path::Path;
use std::process::{Command, Output};

use maxinfo::io::{read_embeddings, write_embeddings, write_manifest, FrameManifest, FrameRecord, VideoMeta};
use maxinfo::linalg::EmbeddingMatrix;
use maxinfo::pipeline::SelectionReport;
use maxinfo::synth;

fn maxinfo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxinfo")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_indices(o: &Output) -> Vec<usize> {
    String::from_utf8(o.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect()
}

#[test]
fn select_writes_indices_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("q.mxif");
    let out = dir.path().join("r.json");
    write_embeddings(&synth::scene_stream(&[20, 20, 20], 24, 0.05, 1).matrix, &emb).unwrap();
    let o = maxinfo(&["select", "--embeddings", s(&emb), "--max", "6", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let idx = stdout_indices(&o);
    let report: SelectionReport = maxinfo::io::read_text(&out).unwrap();
    assert_eq!(report.selected_indices, idx);
    assert!(!idx.is_empty() && idx.len() <= 6);
    let m = report.metrics.unwrap();
    assert_eq!(m.selected_count, idx.len());
    assert!(m.clip_score.is_none());
}

#[test]
fn manifest_and_query_flow_into_report() {
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("clip.mxif");
    let o = maxinfo(&["synth", "--kind", "relevance", "--rows", "40", "--dims", "32", "--out", s(&emb)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let query = dir.path().join("clip.query.mxif");
    assert_eq!(read_embeddings(&query).unwrap().rows(), 1);
    let manifest = FrameManifest {
        video: VideoMeta {
            source: "clip.mp4".into(),
            fps_sampled: Some(1.0),
            total_frames: None,
        },
        frames: (0..40)
            .map(|i| FrameRecord {
                row_index: i,
                source_frame_number: 25 * i as u64,
                timestamp_seconds: i as f64,
            })
            .collect(),
    };
    let man = dir.path().join("frames.json");
    write_manifest(&manifest, &man).unwrap();
    let out = dir.path().join("r.json");
    let o = maxinfo(&[
        "select", "--embeddings", s(&emb), "--manifest", s(&man), "--query", s(&query), "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: SelectionReport = maxinfo::io::read_text(&out).unwrap();
    let frames = report.selected_frames.unwrap();
    assert_eq!(frames.len(), report.selected_indices.len());
    for (f, &i) in frames.iter().zip(&report.selected_indices) {
        assert_eq!(f.row_index, i);
        assert_eq!(f.source_frame_number, 25 * i as u64);
    }
    assert!(report.metrics.unwrap().clip_score.is_some());

    // manifest with the wrong number of frames
    let mut short = manifest;
    short.frames.pop();
    write_manifest(&short, &man).unwrap();
    let o = maxinfo(&["select", "--embeddings", s(&emb), "--manifest", s(&man)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(o.stdout.is_empty());
}

#[test]
fn csv_input_matches_binary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("q.csv");
    let bin = dir.path().join("q.bin");
    std::fs::write(&csv, "1,0,0\n0,1,0\n1,1,0\n0,0,1\n0.5,0.5,0.5\n").unwrap();
    let q = maxinfo::io::read_csv_embeddings(&csv).unwrap();
    write_embeddings(&q, &bin).unwrap();
    let a = maxinfo(&["select", "--embeddings", s(&csv), "--rank", "3"]);
    let b = maxinfo(&["select", "--embeddings", s(&bin), "--rank", "3", "--format", "binary"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = maxinfo(&["select", "--embeddings", s(&bin), "--rank", "3", "--format", "csv"]);
    assert_eq!(c.status.code(), Some(3));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mxif");
    std::fs::write(&bad, b"XXXX\x01\x00\x00\x00\x01\x00\x00\x00\x01\x00\x00\x00\x00\x00\x80\x3f").unwrap();
    let o = maxinfo(&["select", "--embeddings", s(&bad)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("magic"));

    assert_eq!(maxinfo(&["select"]).status.code(), Some(2));
    assert_eq!(maxinfo(&["select", "--embeddings", s(&bad), "--mode", "sideways"]).status.code(), Some(2));

    let emb = dir.path().join("q.mxif");
    write_embeddings(&synth::gaussian(10, 4, 0), &emb).unwrap();
    let o = maxinfo(&["select", "--embeddings", s(&emb), "--min", "11", "--max", "12"]);
    assert_eq!(o.status.code(), Some(2));
    let o = maxinfo(&["select", "--embeddings", s(&emb), "--mode", "chunked", "--chunks", "20"]);
    assert_eq!(o.status.code(), Some(2));

    // a zero row cannot be cosine-normalised
    let zero = dir.path().join("zero.mxif");
    let m = EmbeddingMatrix::from_rows(&[[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]).unwrap();
    write_embeddings(&m, &zero).unwrap();
    let o = maxinfo(&["compare", "--embeddings", s(&zero)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(o.stdout.is_empty());
}

#[test]
fn compare_and_stats_run() {
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("q.mxif");
    write_embeddings(&synth::scene_stream(&[30, 30], 16, 0.05, 2).matrix, &emb).unwrap();
    let out = dir.path().join("cmp.json");
    let o = maxinfo(&["compare", "--embeddings", s(&emb), "--theta", "0.9", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    let report: maxinfo::metrics::ComparisonReport = maxinfo::io::read_text(&out).unwrap();
    assert_eq!(report.strategies.len(), 5);

    let o = maxinfo(&["stats", "--embeddings", s(&emb), "--bins", "4"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let total: usize = text.lines().skip(1).map(|l| l.rsplit('\t').next().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 59);
    let o = maxinfo(&["stats", "--embeddings", s(&emb), "--over", "maxinfo"]);
    assert!(o.status.success());
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.mxif");
    let b = dir.path().join("b.mxif");
    for p in [&a, &b] {
        let o = maxinfo(&["synth", "--kind", "scenes", "--rows", "50", "--dims", "8", "--seed", "3", "--out", s(p)]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let csv = dir.path().join("c.csv");
    assert!(maxinfo(&["synth", "--kind", "gaussian", "--rows", "5", "--dims", "3", "--out", s(&csv)]).status.success());
    assert_eq!(maxinfo::io::read_csv_embeddings(&csv).unwrap().rows(), 5);
}

#[test]
fn bench_reports_table() {
    let o = maxinfo(&["bench", "--sizes", "32", "--dims", "16", "--reps", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.contains("fast 32x16") && text.contains("chunked 32x32x16"));
}

#[test]
fn chunked_select_covers_every_chunk() {
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("q.mxif");
    write_embeddings(&synth::gaussian(512, 64, 8), &emb).unwrap();
    let o = maxinfo(&[
        "select", "--embeddings", s(&emb), "--rank", "8", "--tol", "0.3", "--min", "1", "--max", "64", "--mode",
        "chunked", "--chunks", "32",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let idx = stdout_indices(&o);
    assert!(idx.len() <= 64);
    for c in 0..32 {
        assert!(idx.iter().any(|&i| i / 16 == c), "chunk {c} missing");
    }
}

fn histogram_counts(text: &str) -> Vec<(f64, f64, usize)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn stats_histograms() {
    let dir = tempfile::tempdir().unwrap();
    let bins_with = |m: &EmbeddingMatrix| {
        let p = dir.path().join("h.mxif");
        write_embeddings(m, &p).unwrap();
        let o = maxinfo(&["stats", "--embeddings", s(&p), "--bins", "10"]);
        assert!(o.status.success());
        histogram_counts(&String::from_utf8(o.stdout).unwrap())
            .into_iter()
            .filter(|b| b.2 > 0)
            .collect::<Vec<_>>()
    };
    let eye: Vec<Vec<f64>> = (0..6).map(|i| (0..6).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let h = bins_with(&EmbeddingMatrix::from_rows(&eye).unwrap());
    assert_eq!(h.len(), 1);
    assert!(h[0].0 <= 0.0 && 0.0 < h[0].1 && h[0].2 == 5);
    let h = bins_with(&synth::constant(7, 5, 1));
    assert_eq!(h.len(), 1);
    assert!((h[0].1 - 1.0).abs() < 1e-12 && h[0].2 == 6);

    // mixed input against a direct histogram oracle
    let p = dir.path().join("mixed.mxif");
    write_embeddings(&synth::gaussian(40, 6, 3), &p).unwrap();
    let q = read_embeddings(&p).unwrap();
    let mut want = vec![0usize; 10];
    for i in 1..40 {
        let (a, b) = (q.row(i - 1), q.row(i));
        let c = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
            / (a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt());
        want[(((c + 1.0) / 0.2).floor() as usize).min(9)] += 1;
    }
    let o = maxinfo(&["stats", "--embeddings", s(&p), "--bins", "10"]);
    let got: Vec<usize> = histogram_counts(&String::from_utf8(o.stdout).unwrap()).iter().map(|b| b.2).collect();
    assert_eq!(got, want);
}
