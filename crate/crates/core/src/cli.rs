//! Command-line surface.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 unreadable or
//! malformed input (and unwritable output), 4 numerical failure.
//! Diagnostics go to stderr; stdout carries only results.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench;
use crate::error::{Error, ErrorKind};
use crate::io::{self, FrameManifest};
use crate::linalg::EmbeddingMatrix;
use crate::metrics::{self, MetricsBlock, DEFAULT_THETA};
use crate::pipeline::{self, MaxInfoConfig, Mode, TolConvention};
use crate::synth;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FORMAT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "maxinfo", version, about = "Maximum-volume keyframe selection over frame embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select keyframes and print their indices, one per line.
    Select(SelectArgs),
    /// Run every baseline and MaxInfo and report their metrics.
    Compare(CompareArgs),
    /// Histogram of cosine similarity between neighbouring frames.
    Stats(StatsArgs),
    /// Time SVD + rect MaxVol on seeded inputs.
    Bench(BenchArgs),
    /// Write a seeded synthetic embedding stream.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Binary,
    Csv,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Embedding matrix, MXIF or CSV.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Frame manifest describing each embedding row.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Single-row query embedding for the relevance score.
    #[arg(long)]
    pub query: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectionArgs {
    #[arg(long, default_value_t = 8)]
    pub rank: usize,
    #[arg(long, default_value_t = 0.3)]
    pub tol: f64,
    #[arg(long = "min", default_value_t = 1)]
    pub min_out: usize,
    #[arg(long = "max", default_value_t = 64)]
    pub max_out: usize,
    #[arg(long, value_enum, default_value_t = Mode::Fast)]
    pub mode: Mode,
    #[arg(long, default_value_t = 128)]
    pub pool: usize,
    #[arg(long, default_value_t = 32)]
    pub chunks: usize,
    #[arg(long, value_enum, default_value_t = TolConvention::Sqrt1p)]
    pub tol_convention: TolConvention,
}

impl SelectionArgs {
    pub fn config(&self) -> MaxInfoConfig {
        MaxInfoConfig {
            rank: self.rank,
            tol: self.tol,
            min_out: self.min_out,
            max_out: self.max_out,
            mode: self.mode,
            pool: self.pool,
            chunks: self.chunks,
            tol_convention: self.tol_convention,
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub selection: SelectionArgs,
    /// Report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Zero timing fields so repeated runs produce identical reports.
    #[arg(long)]
    pub canonical: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub selection: SelectionArgs,
    /// Cosine threshold of the similarity baseline.
    #[arg(long, default_value_t = DEFAULT_THETA)]
    pub theta: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatsOver {
    /// Every pair of consecutive input frames.
    All,
    Uniform,
    Maxinfo,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub selection: SelectionArgs,
    #[arg(long, value_enum, default_value_t = StatsOver::All)]
    pub over: StatsOver,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![128usize, 256, 512])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 768)]
    pub dims: usize,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub selection: SelectionArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Gaussian,
    Constant,
    /// Equal-length scenes with orthogonal means.
    Scenes,
    /// Static background plus a short query-relevant event; also writes the
    /// query next to the output.
    Relevance,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 128)]
    pub rows: usize,
    #[arg(long, default_value_t = 64)]
    pub dims: usize,
    #[arg(long, default_value_t = 4)]
    pub scenes: usize,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path; `.csv` writes CSV, anything else MXIF.
    #[arg(long)]
    pub out: PathBuf,
}

/// Failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, err: impl std::fmt::Display) -> Self {
        Self {
            code,
            message: err.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Usage => EXIT_USAGE,
            ErrorKind::Format => EXIT_FORMAT,
            ErrorKind::Numerical => EXIT_NUMERICAL,
        };
        Failure::new(code, e)
    }
}

/// Input-stage errors are all reported as format failures.
fn loading<T>(r: Result<T, Error>) -> Result<T, Failure> {
    r.map_err(|e| Failure::new(EXIT_FORMAT, e))
}

fn infer_format(path: &Path, explicit: Option<Format>) -> Format {
    explicit.unwrap_or_else(|| {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Binary,
        }
    })
}

fn load_matrix(path: &Path, format: Option<Format>) -> Result<EmbeddingMatrix, Failure> {
    loading(match infer_format(path, format) {
        Format::Binary => io::read_embeddings(path),
        Format::Csv => io::read_csv_embeddings(path),
    })
}

struct Loaded {
    q: EmbeddingMatrix,
    manifest: Option<FrameManifest>,
    query: Option<Vec<f64>>,
    load_ms: f64,
}

fn load_inputs(a: &InputArgs) -> Result<Loaded, Failure> {
    let t = Instant::now();
    let q = load_matrix(&a.embeddings, a.format)?;
    let manifest = match &a.manifest {
        Some(p) => {
            let m = loading(io::read_manifest(p))?;
            loading(m.check_rows(q.rows()))?;
            Some(m)
        }
        None => None,
    };
    let query = match &a.query {
        Some(p) => {
            let qm = load_matrix(p, None)?;
            if qm.rows() != 1 || qm.cols() != q.cols() {
                return Err(Failure::new(
                    EXIT_FORMAT,
                    format!(
                        "query must be 1x{}, got {}x{}",
                        q.cols(),
                        qm.rows(),
                        qm.cols()
                    ),
                ));
            }
            Some(qm.row(0).to_vec())
        }
        None => None,
    };
    Ok(Loaded {
        q,
        manifest,
        query,
        load_ms: t.elapsed().as_secs_f64() * 1e3,
    })
}

fn write_report<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<(), Failure> {
    if let Some(p) = out {
        io::write_text(value, p).map_err(|e| Failure::new(EXIT_FORMAT, e))?;
    }
    Ok(())
}

fn cmd_select(a: &SelectArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let cfg = a.selection.config();
    cfg.validate()?;
    let input = load_inputs(&a.input)?;
    let mut report = pipeline::select(&input.q, &cfg)?;
    report.timing.load_ms = input.load_ms;
    report.metrics = Some(MetricsBlock::compute(
        &input.q,
        &report.selected_indices,
        input.query.as_deref(),
    )?);
    if let Some(m) = &input.manifest {
        report.selected_frames = Some(
            report
                .selected_indices
                .iter()
                .map(|&i| m.frames[i].clone())
                .collect(),
        );
    }
    if a.canonical {
        report.canonicalize();
    }
    write_report(&report, a.out.as_deref())?;
    let mut text = String::new();
    for i in &report.selected_indices {
        text.push_str(&format!("{i}\n"));
    }
    emit(stdout, &text)
}

fn cmd_compare(a: &CompareArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let cfg = a.selection.config();
    cfg.validate()?;
    let input = load_inputs(&a.input)?;
    let report = metrics::compare_strategies(&input.q, &cfg, a.theta, input.query.as_deref())?;
    write_report(&report, a.out.as_deref())?;
    let mut text = String::from("strategy\tcount\tmean_neighbor_cosine\tclip_score\n");
    for s in &report.strategies {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
        let name = serde_json::to_value(s.strategy)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        text.push_str(&format!(
            "{name}\t{}\t{}\t{}\n",
            s.metrics.selected_count,
            fmt(s.metrics.mean_neighbor_cosine),
            fmt(s.metrics.clip_score)
        ));
    }
    emit(stdout, &text)
}

#[derive(Debug, serde::Serialize)]
struct StatsReport {
    over: &'static str,
    indices: Vec<usize>,
    neighbor_cosine: Vec<f64>,
    histogram: metrics::Histogram,
}

fn cmd_stats(a: &StatsArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let cfg = a.selection.config();
    cfg.validate()?;
    let input = load_inputs(&a.input)?;
    let q = &input.q;
    let (over, indices) = match a.over {
        StatsOver::All => ("all", (0..q.rows()).collect::<Vec<_>>()),
        StatsOver::Maxinfo => ("maxinfo", pipeline::select(q, &cfg)?.selected_indices),
        StatsOver::Uniform => {
            let k = pipeline::select(q, &cfg)?.selected_indices.len();
            ("uniform", metrics::uniform_sample(q.rows(), k)?)
        }
    };
    let cos = metrics::neighbor_cosine(q, &indices)?;
    let histogram = metrics::cosine_histogram(&cos, a.bins)?;
    let mut text = String::from("lo\thi\tcount\n");
    for (i, c) in histogram.counts.iter().enumerate() {
        text.push_str(&format!(
            "{:.4}\t{:.4}\t{c}\n",
            histogram.edges[i],
            histogram.edges[i + 1]
        ));
    }
    let report = StatsReport {
        over,
        indices,
        neighbor_cosine: cos,
        histogram,
    };
    write_report(&report, a.out.as_deref())?;
    emit(stdout, &text)
}

fn cmd_bench(a: &BenchArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let cfg = a.selection.config();
    cfg.validate()?;
    let report = bench::run_suite(&a.sizes, a.dims, &cfg, a.reps, a.seed)?;
    write_report(&report, a.out.as_deref())?;
    let mut text = String::from(
        "case\tselected\tsvd_med_ms\tmaxvol_med_ms\tmaxvol_p95_ms\ttotal_med_ms\ttotal_p95_ms\n",
    );
    for r in &report.rows {
        text.push_str(&format!(
            "{}\t{}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\n",
            r.label,
            r.selected,
            r.svd_median_ms,
            r.maxvol_median_ms,
            r.maxvol_p95_ms,
            r.total_median_ms,
            r.total_p95_ms
        ));
    }
    emit(stdout, &text)
}

fn write_matrix(m: &EmbeddingMatrix, path: &Path) -> Result<(), Failure> {
    let r = match infer_format(path, None) {
        Format::Binary => io::write_embeddings(m, path),
        Format::Csv => write_csv(m, path),
    };
    r.map_err(|e| Failure::new(EXIT_FORMAT, e))
}

fn write_csv(m: &EmbeddingMatrix, path: &Path) -> Result<(), Error> {
    let mut text = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cmd_synth(a: &SynthArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let usage = |msg: String| Failure::new(EXIT_USAGE, msg);
    if a.rows == 0 || a.dims == 0 {
        return Err(usage("rows and dims must be positive".into()));
    }
    let m = match a.kind {
        SynthKind::Gaussian => synth::gaussian(a.rows, a.dims, a.seed),
        SynthKind::Constant => synth::constant(a.rows, a.dims, a.seed),
        SynthKind::Scenes => {
            if a.scenes == 0 || a.scenes > a.dims || a.scenes > a.rows {
                return Err(usage(format!(
                    "need 1 <= scenes ({}) <= min(rows, dims)",
                    a.scenes
                )));
            }
            let lens: Vec<usize> = (0..a.scenes)
                .map(|k| a.rows / a.scenes + usize::from(k < a.rows % a.scenes))
                .collect();
            synth::scene_stream(&lens, a.dims, a.noise, a.seed).matrix
        }
        SynthKind::Relevance => {
            let spec = synth::RelevanceSpec {
                frames: a.rows,
                dims: a.dims,
                ..Default::default()
            };
            if spec.frames <= spec.answer_frames + spec.scenes
                || spec.dims < 1 + spec.scenes + spec.answer_frames
            {
                return Err(usage(format!(
                    "relevance streams need more than {} rows and at least {} dims",
                    spec.answer_frames + spec.scenes,
                    1 + spec.scenes + spec.answer_frames
                )));
            }
            let s = synth::relevance_stream(&spec, a.seed);
            let query = EmbeddingMatrix::new(1, a.dims, s.query.clone())?;
            write_matrix(&query, &query_path(&a.out))?;
            s.matrix
        }
    };
    write_matrix(&m, &a.out)?;
    emit(stdout, &format!("{}x{}\n", m.rows(), m.cols()))
}

/// `clip.mxif` -> `clip.query.mxif`.
pub fn query_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}.query.{ext}"),
        None => format!("{stem}.query"),
    };
    out.with_file_name(name)
}

fn emit(stdout: &mut dyn Write, text: &str) -> Result<(), Failure> {
    stdout
        .write_all(text.as_bytes())
        .and_then(|_| stdout.flush())
        .map_err(|e| Failure::new(EXIT_FORMAT, e))
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(rendered.as_bytes());
            } else {
                let _ = stderr.write_all(rendered.as_bytes());
            }
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    let result = match &cli.command {
        Command::Select(a) => cmd_select(a, stdout),
        Command::Compare(a) => cmd_compare(a, stdout),
        Command::Stats(a) => cmd_stats(a, stdout),
        Command::Bench(a) => cmd_bench(a, stdout),
        Command::Synth(a) => cmd_synth(a, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_inference() {
        assert_eq!(infer_format(Path::new("a.csv"), None), Format::Csv);
        assert_eq!(infer_format(Path::new("a.CSV"), None), Format::Csv);
        assert_eq!(infer_format(Path::new("a.mxif"), None), Format::Binary);
        assert_eq!(infer_format(Path::new("a.csv"), Some(Format::Binary)), Format::Binary);
    }

    #[test]
    fn query_path_naming() {
        assert_eq!(query_path(Path::new("/x/clip.mxif")), PathBuf::from("/x/clip.query.mxif"));
        assert_eq!(query_path(Path::new("clip")), PathBuf::from("clip.query"));
    }

    #[test]
    fn usage_errors_exit_2() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["maxinfo", "select"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(run(["maxinfo", "frobnicate"], &mut out, &mut err), EXIT_USAGE);
        assert!(out.is_empty());
    }

    #[test]
    fn invalid_config_exit_2_before_loading() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            ["maxinfo", "select", "--embeddings", "/nonexistent.mxif", "--min", "9", "--max", "3"],
            &mut out,
            &mut err,
        );
        assert_eq!(code, EXIT_USAGE);
    }
}
