//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a batch finished with some failed pages,
//! 2 for usage errors, unreadable input and missing ground truth.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::baseline::{window_contexts, DEFAULT_WINDOW};
use crate::dom::DomTree;
use crate::error::{Error, Result};
use crate::eval::{
    evaluate_corpus, evaluate_predictions, load_ground_truth, pair_with_truth, render_table, EvalConfig, EvalReport,
    MatchMode, MatchPolicy, Method,
};
use crate::filter::{collect_valid_images, FilterPolicy};
use crate::ingest::{parse_html, IngestOptions};
use crate::output::{PageOutput, WindowPageOutput};
use crate::segmenter::segment_page;
use crate::structure::DEFAULT_TOLERANCE;

#[derive(Debug, Parser)]
#[command(
    name = "imgseg",
    version,
    about = "Extract web images together with their surrounding text"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment one HTML file (or standard input) and print its segments as JSON.
    Segment(SegmentArgs),
    /// Segment every .html file in a directory, one JSON file per page.
    Batch(BatchArgs),
    /// Score extraction against a ground-truth file.
    Eval(EvalArgs),
    /// Print the fixed word window around each valid image.
    #[command(name = "baseline-window")]
    BaselineWindow(WindowArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnknownDims {
    Valid,
    Invalid,
}

#[derive(Debug, Clone, Args)]
pub struct PolicyArgs {
    /// Similarity tolerance for sibling and repeating-unit comparison, in [0, 1].
    #[arg(long, default_value_t = DEFAULT_TOLERANCE, value_parser = parse_fraction)]
    pub tolerance: f64,
    #[arg(long = "min-small-px", default_value_t = 45)]
    pub min_small_px: u32,
    #[arg(long = "min-large-px", default_value_t = 60)]
    pub min_large_px: u32,
    /// Whether images without declared width and height count as valid.
    #[arg(long = "unknown-dims", value_enum, default_value_t = UnknownDims::Valid)]
    pub unknown_dims: UnknownDims,
}

impl PolicyArgs {
    pub fn filter_policy(&self) -> Result<FilterPolicy> {
        let policy = FilterPolicy {
            large_min_px: self.min_large_px,
            small_min_px: self.min_small_px,
            unknown_dims_valid: self.unknown_dims == UnknownDims::Valid,
            ..FilterPolicy::default()
        };
        policy.validate()?;
        Ok(policy)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SegmentArgs {
    /// HTML file; `-` or nothing reads standard input.
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub policy: PolicyArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BatchArgs {
    /// Directory of .html files.
    pub input: PathBuf,
    /// Output directory for the per-page JSON files.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub policy: PolicyArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Segmenter,
    Window,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// HTML files or directories to segment live.
    pub inputs: Vec<PathBuf>,
    /// Ground-truth JSON file.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Directory of saved `segment`/`batch` JSON outputs to score instead of HTML inputs.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MethodArg::Segmenter)]
    pub method: MethodArg,
    #[arg(long = "match", value_enum, default_value_t = MatchArg::Exact)]
    pub matching: MatchArg,
    #[arg(long = "jaccard-threshold", default_value_t = 0.8)]
    pub jaccard_threshold: f64,
    /// Window size for the baseline; 0 takes the whole page.
    #[arg(long = "window-n", default_value_t = DEFAULT_WINDOW)]
    pub window_n: usize,
    /// Score raw counts `correct,extracted,actual` without running anything.
    #[arg(long)]
    pub counts: Option<String>,
    /// Page identifiers to leave out of the corpus.
    #[arg(long)]
    pub exclude: Vec<String>,
    /// Where to write the JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub policy: PolicyArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatchArg {
    Exact,
    Jaccard,
}

#[derive(Debug, Clone, Args)]
pub struct WindowArgs {
    pub input: Option<PathBuf>,
    /// Words on each side of the image; 0 takes the whole page.
    #[arg(long = "window-n", default_value_t = DEFAULT_WINDOW)]
    pub window_n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub policy: PolicyArgs,
}

fn parse_fraction(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not in [0, 1]"))
    }
}

/// Outcome of a command: exit code plus what to print.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: 2,
            message: e.to_string(),
        }
    }
}

fn fail(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
            } else {
                let _ = write!(stdout, "{rendered}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Segment(a) => cmd_segment(a, stdin, stdout),
        Command::Batch(a) => cmd_batch(a, stdout, stderr),
        Command::Eval(a) => cmd_eval(a, stdout),
        Command::BaselineWindow(a) => cmd_baseline_window(a, stdin, stdout),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "imgseg: {}", f.message);
            f.code
        }
    }
}

fn read_input(input: Option<&Path>, stdin: &mut dyn Read) -> std::result::Result<(Vec<u8>, String), Failure> {
    match input {
        None => read_stdin(stdin),
        Some(p) if p.as_os_str() == "-" => read_stdin(stdin),
        Some(p) => std::fs::read(p)
            .map(|b| (b, p.display().to_string()))
            .map_err(|e| fail(format!("{}: {e}", p.display()))),
    }
}

fn read_stdin(stdin: &mut dyn Read) -> std::result::Result<(Vec<u8>, String), Failure> {
    let mut buf = Vec::new();
    stdin.read_to_end(&mut buf).map_err(|e| fail(format!("<stdin>: {e}")))?;
    Ok((buf, "<stdin>".to_string()))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

fn emit(out: Option<&Path>, body: &str, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, body).map_err(|e| fail(format!("{}: {e}", p.display()))),
        None => stdout.write_all(body.as_bytes()).map_err(|e| fail(e.to_string())),
    }
}

fn segment_tree(tree: &DomTree, policy: &FilterPolicy, tolerance: f64) -> Result<PageOutput> {
    PageOutput::new(tree, &segment_page(tree, policy, tolerance))
}

fn cmd_segment(args: &SegmentArgs, stdin: &mut dyn Read, stdout: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let policy = args.policy.filter_policy()?;
    let (bytes, source) = read_input(args.input.as_deref(), stdin)?;
    let tree = parse_html(&bytes, &source, &IngestOptions::default()).map_err(|e| fail(format!("{source}: {e}")))?;
    let page = segment_tree(&tree, &policy, args.policy.tolerance)?;
    emit(args.out.as_deref(), &to_json(&page), stdout)?;
    Ok(0)
}

fn cmd_baseline_window(
    args: &WindowArgs,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
) -> std::result::Result<i32, Failure> {
    let policy = args.policy.filter_policy()?;
    let (bytes, source) = read_input(args.input.as_deref(), stdin)?;
    let tree = parse_html(&bytes, &source, &IngestOptions::default()).map_err(|e| fail(format!("{source}: {e}")))?;
    let n = (args.window_n > 0).then_some(args.window_n);
    let windows = window_contexts(&tree, &collect_valid_images(&tree, &policy), n)?;
    emit(
        args.out.as_deref(),
        &to_json(&WindowPageOutput::new(&tree, n, &windows)),
        stdout,
    )?;
    Ok(0)
}

fn is_html(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("html") || e.eq_ignore_ascii_case("htm"))
}

/// HTML files directly inside `dir`, sorted by path.
fn html_files(dir: &Path) -> std::result::Result<Vec<PathBuf>, Failure> {
    let entries = std::fs::read_dir(dir).map_err(|e| fail(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| is_html(p))
        .collect();
    files.sort();
    Ok(files)
}

fn thread_pool(workers: Option<usize>) -> std::result::Result<rayon::ThreadPool, Failure> {
    let n = workers
        .filter(|w| *w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| fail(e.to_string()))
}

struct PageRun {
    output: PageOutput,
    total_ms: f64,
    segment_ms: f64,
}

fn run_page(path: &Path, policy: &FilterPolicy, tolerance: f64) -> Result<PageRun> {
    let started = Instant::now();
    let bytes = std::fs::read(path)?;
    let tree = parse_html(&bytes, &path.display().to_string(), &IngestOptions::default())?;
    let seg_started = Instant::now();
    let page = segment_page(&tree, policy, tolerance);
    let segment_ms = seg_started.elapsed().as_secs_f64() * 1e3;
    let output = PageOutput::new(&tree, &page)?;
    Ok(PageRun {
        output,
        total_ms: started.elapsed().as_secs_f64() * 1e3,
        segment_ms,
    })
}

fn cmd_batch(args: &BatchArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let policy = args.policy.filter_policy()?;
    let files = html_files(&args.input)?;
    std::fs::create_dir_all(&args.out).map_err(|e| fail(format!("{}: {e}", args.out.display())))?;
    let pool = thread_pool(args.workers)?;
    let tolerance = args.policy.tolerance;
    let results: Vec<(PathBuf, Result<PageRun>)> = pool.install(|| {
        files
            .par_iter()
            .map(|p| (p.clone(), run_page(p, &policy, tolerance)))
            .collect()
    });

    let mut pages = 0usize;
    let mut segments = 0usize;
    let mut total_ms = 0.0;
    let mut segment_ms = 0.0;
    let mut failures = Vec::new();
    for (path, result) in results {
        let written = result.and_then(|run| {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            std::fs::write(args.out.join(format!("{stem}.json")), to_json(&run.output))?;
            Ok(run)
        });
        match written {
            Ok(run) => {
                pages += 1;
                segments += run.output.segments.len();
                total_ms += run.total_ms;
                segment_ms += run.segment_ms;
            }
            Err(e) => failures.push(format!("{}: {e}", path.display())),
        }
    }
    let mean = |ms: f64| if pages == 0 { 0.0 } else { ms / pages as f64 };
    let _ = writeln!(
        stdout,
        "processed {pages} pages, {segments} segments, mean {:.2} ms/page ({:.2} ms segmentation)",
        mean(total_ms),
        mean(segment_ms)
    );
    if failures.is_empty() {
        return Ok(0);
    }
    let _ = writeln!(stderr, "{} pages failed:", failures.len());
    for f in &failures {
        let _ = writeln!(stderr, "  {f}");
    }
    Ok(1)
}

fn parse_counts(raw: &str) -> std::result::Result<(usize, usize, usize), Failure> {
    let parts: Vec<usize> = raw
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| fail(format!("--counts: {e}")))?;
    match parts[..] {
        [c, e, a] => Ok((c, e, a)),
        _ => Err(fail("--counts expects correct,extracted,actual")),
    }
}

fn cmd_eval(args: &EvalArgs, stdout: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let matching = MatchPolicy {
        mode: match args.matching {
            MatchArg::Exact => MatchMode::Exact,
            MatchArg::Jaccard => MatchMode::Jaccard,
        },
        jaccard_threshold: args.jaccard_threshold,
    };
    matching.validate()?;

    if let Some(raw) = &args.counts {
        let (c, e, a) = parse_counts(raw)?;
        let report = EvalReport::from_counts(c, e, a);
        let _ = write!(stdout, "{}", render_table(&[("Counts".to_string(), &report)]));
        if let Some(out) = &args.out {
            emit(Some(out), &to_json(&report), stdout)?;
        }
        return Ok(0);
    }

    let truth_path = args.truth.as_ref().ok_or_else(|| fail("--truth is required"))?;
    let truths = load_ground_truth(truth_path).map_err(|e| fail(format!("{}: {e}", truth_path.display())))?;
    let policy = args.policy.filter_policy()?;

    let mut columns: Vec<(String, EvalReport)> = Vec::new();
    if let Some(dir) = &args.predictions {
        let mut preds = Vec::new();
        for entry in std::fs::read_dir(dir).map_err(|e| fail(format!("{}: {e}", dir.display())))? {
            let path = entry.map_err(|e| fail(e.to_string()))?.path();
            if path.extension().is_some_and(|e| e == "json") {
                preds.push(path);
            }
        }
        preds.sort();
        let mut outputs = Vec::new();
        for p in preds {
            let raw = std::fs::read(&p).map_err(|e| fail(format!("{}: {e}", p.display())))?;
            let page: PageOutput = serde_json::from_slice(&raw).map_err(|e| fail(format!("{}: {e}", p.display())))?;
            outputs.push(page);
        }
        let paired = pair_with_truth(outputs, &truths, &args.exclude, |p| p.source.as_str())?;
        let pages: Vec<_> = paired.into_iter().map(|(p, t)| (p.candidates(), t)).collect();
        columns.push(("Predictions".to_string(), evaluate_predictions(&pages, &matching)?));
    } else {
        let mut files = Vec::new();
        for input in &args.inputs {
            if input.is_dir() {
                files.extend(html_files(input)?);
            } else {
                files.push(input.clone());
            }
        }
        if files.is_empty() {
            return Err(fail("no HTML inputs given"));
        }
        let pool = thread_pool(args.workers)?;
        let trees: Vec<DomTree> = pool.install(|| {
            files
                .par_iter()
                .map(|p| {
                    let bytes = std::fs::read(p)?;
                    parse_html(&bytes, &p.display().to_string(), &IngestOptions::default())
                })
                .collect::<Result<_>>()
        })?;
        let pages = pair_with_truth(trees, &truths, &args.exclude, |t| t.source_identifier())?;
        let window = Method::Window {
            n: (args.window_n > 0).then_some(args.window_n),
        };
        let methods = match args.method {
            MethodArg::Segmenter => vec![Method::Segmenter],
            MethodArg::Window => vec![window],
            MethodArg::Both => vec![Method::Segmenter, window],
        };
        for method in methods {
            let config = EvalConfig {
                method,
                policy: policy.clone(),
                tolerance: args.policy.tolerance,
                matching,
            };
            let report = pool.install(|| evaluate_corpus(&pages, &config))?;
            columns.push((method.label(), report));
        }
    }

    let _ = writeln!(
        stdout,
        "tolerance {}, match {:?}{}",
        args.policy.tolerance,
        matching.mode,
        if matching.mode == MatchMode::Jaccard {
            format!(" >= {}", matching.jaccard_threshold)
        } else {
            String::new()
        }
    );
    let refs: Vec<(String, &EvalReport)> = columns.iter().map(|(n, r)| (n.clone(), r)).collect();
    let _ = write!(stdout, "{}", render_table(&refs));
    for (name, report) in &columns {
        if let Some(ms) = report.mean_ms_per_page {
            let _ = writeln!(stdout, "{name}: mean {ms:.2} ms/page");
        }
        let ambiguous: Vec<&str> = report
            .per_page
            .iter()
            .filter(|p| p.ambiguous)
            .map(|p| p.source.as_str())
            .collect();
        if !ambiguous.is_empty() {
            let _ = writeln!(stdout, "{name}: ambiguous matches on {}", ambiguous.join(", "));
        }
    }
    if let Some(out) = &args.out {
        let body = match &columns[..] {
            [(_, only)] => to_json(only),
            _ => to_json(&columns.iter().map(|(_, r)| r).collect::<Vec<_>>()),
        };
        emit(Some(out), &body, stdout)?;
    }
    Ok(0)
}
