//! Command line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 runtime failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::cga::Topology;
use crate::config::{load_config, parse_algos, RunConfig};
use crate::data::{parse_csv, Builtin, Column, CsvSchema, Dataset};
use crate::error::Error;
use crate::ftest::{f_test, pair_folds, FTestResult};
use crate::protocol::{run_protocol_with, FoldRecord};
use crate::report::{
    emit_report, read_folds, read_manifest, read_results, read_traces, render_table, sha256_hex, DatasetInfo,
    Manifest, MANIFEST, RESULTS, TRACES,
};
use crate::trainers::TrainAlgo;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cellevo", version, about = "Nested cellular GA search for compact MLP classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the evaluation protocol on a dataset.
    Run(RunArgs),
    /// Compare two sets of per-fold test errors with the 5x2cv F-test.
    Ftest(FtestArgs),
    /// Print the summary and per-generation traces of a finished run.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Bundled dataset name (cancer, diabetes, glass) or a CSV path.
    #[arg(long)]
    pub dataset: String,
    /// bp, lm, qna, scg, all, or a comma separated list.
    #[arg(long)]
    pub algo: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// moore or vonneumann.
    #[arg(long)]
    pub topology: Option<String>,
    /// key = value configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// folds.csv of an earlier run to F-test against.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// The CSV has a header row.
    #[arg(long)]
    pub header: bool,
    /// CSV field delimiter.
    #[arg(long, default_value = ",")]
    pub delimiter: String,
    /// Label column (index or header name); defaults to the last one.
    #[arg(long)]
    pub label: Option<String>,
    /// Columns to ignore (index or header name).
    #[arg(long)]
    pub ignore: Vec<String>,
    /// No progress output.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct FtestArgs {
    /// folds.csv of a run, or plain error rates (one or two per line).
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Algorithm to take from folds files holding several.
    #[arg(long)]
    pub algo: Option<String>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Output directory of `run`.
    #[arg(long)]
    pub result: PathBuf,
    /// Print every trace row instead of per-run summaries.
    #[arg(long)]
    pub full: bool,
}

/// An error paired with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: Error,
}

impl Failure {
    fn usage(error: Error) -> Self {
        Failure {
            code: EXIT_USAGE,
            error,
        }
    }

    fn data(error: Error) -> Self {
        match error {
            Error::Config(_) => Failure::usage(error),
            error => Failure {
                code: EXIT_DATA,
                error,
            },
        }
    }

    fn runtime(error: Error) -> Self {
        match error {
            Error::Data(_) | Error::Csv(_) => Failure::data(error),
            Error::Config(_) => Failure::usage(error),
            error => Failure {
                code: EXIT_RUNTIME,
                error,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` (including the program name) and runs the command,
/// writing normal output to `out` and progress to `err`.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_USAGE;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(&a, out, err),
        Command::Ftest(a) => cmd_ftest(&a, out),
        Command::Inspect(a) => cmd_inspect(&a, out),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.error);
            f.code
        }
    }
}

pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::io(path, e)
}

/// Loads a bundled dataset by name or a CSV file by path.
pub fn load_dataset(spec: &str, schema: Option<CsvSchema>) -> crate::Result<(Dataset, DatasetInfo)> {
    let (data, source, bytes) = match Builtin::from_name(spec) {
        Some(b) if !Path::new(spec).exists() => {
            (b.load(), format!("builtin:{}", b.name()), b.source().as_bytes().to_vec())
        }
        _ => {
            let path = Path::new(spec);
            let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
            let text = String::from_utf8(bytes.clone())
                .map_err(|_| Error::data(format!("{spec} is not UTF-8 text")))?;
            let name = path
                .file_stem()
                .map_or("dataset".into(), |s| s.to_string_lossy().into_owned());
            let schema = schema.unwrap_or_else(CsvSchema::label_last);
            (parse_csv(&name, &text, &schema)?, spec.to_string(), bytes)
        }
    };
    let info = DatasetInfo {
        name: data.name().to_string(),
        source,
        sha256: sha256_hex(&bytes),
        patterns: data.len(),
        attributes: data.num_attributes(),
        classes: data.num_classes(),
        dropped_rows: data.dropped_rows(),
    };
    Ok((data, info))
}

fn schema_of(a: &RunArgs) -> crate::Result<CsvSchema> {
    let delim = match a.delimiter.as_str() {
        "\\t" | "tab" => b'\t',
        d if d.len() == 1 => d.as_bytes()[0],
        d => return Err(Error::Config(format!("delimiter must be one byte, got {d:?}"))),
    };
    let mut schema = CsvSchema::label_last();
    schema.has_header = a.header;
    schema.delimiter = delim;
    if let Some(l) = &a.label {
        schema = schema.with_label(Column::parse(l));
    }
    for c in &a.ignore {
        schema = schema.ignoring(Column::parse(c));
    }
    Ok(schema)
}

/// Configuration from the optional file with command line overrides.
pub fn effective_config(a: &RunArgs) -> crate::Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.search.seed = s;
    }
    if let Some(n) = a.iterations {
        cfg.iterations = n;
    }
    if let Some(t) = &a.topology {
        cfg.search.cga.topology = t
            .parse::<Topology>()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    if let Some(al) = &a.algo {
        cfg.algos = parse_algos(al).map_err(|e| Error::Config(e.to_string()))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let cfg = effective_config(a).map_err(Failure::usage)?;
    let schema = schema_of(a).map_err(Failure::usage)?;
    let (data, info) = load_dataset(&a.dataset, Some(schema)).map_err(Failure::data)?;
    let baseline = match &a.baseline {
        Some(p) => Some(read_folds(p).map_err(Failure::data)?),
        None => None,
    };
    let total = cfg.iterations * cfg.algos.len();
    let started = Instant::now();
    let mut done = 0;
    let quiet = a.quiet;
    let outcome = run_protocol_with(&data, &cfg, |r| {
        done += 1;
        if !quiet {
            let _ = writeln!(
                err,
                "[{done}/{total}] iteration {} {}: test error {:.4}% train error {:.4}% hidden {} ({:.0} s)",
                r.iteration,
                r.algo,
                r.test_error,
                r.train_error,
                r.hidden_units,
                started.elapsed().as_secs_f64()
            );
        }
    });
    let manifest = Manifest::new(&cfg, info);
    let (result, failure) = match outcome {
        Ok(r) => (r, None),
        Err(aborted) => (aborted.partial, Some(aborted.error)),
    };
    let summaries = match &baseline {
        Some(b) if failure.is_none() => result.summaries_against(b).map_err(Failure::data)?,
        _ => result.summaries(),
    };
    emit_report(&a.out, &result, &summaries, &manifest).map_err(Failure::runtime)?;
    if let Some(e) = failure {
        let _ = writeln!(err, "partial results written to {}", a.out.display());
        return Err(Failure::runtime(e));
    }
    let _ = write!(out, "{}", render_table(&summaries));
    Ok(())
}

/// Error rates from a folds file (test errors in iteration order) or a
/// plain numeric file.
fn read_errors(path: &Path, algo: Option<TrainAlgo>) -> crate::Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let first = text.lines().next().unwrap_or("");
    if first.split(',').any(|h| h.trim() == "test_error") {
        let mut rows: Vec<FoldRecord> = read_folds(path)?;
        let algos: Vec<TrainAlgo> = rows.iter().map(|r| r.algo).fold(Vec::new(), |mut v, a| {
            if !v.contains(&a) {
                v.push(a);
            }
            v
        });
        let pick = match (algo, algos.as_slice()) {
            (Some(a), _) => a,
            (None, [only]) => *only,
            (None, _) => {
                return Err(Error::Config(format!(
                    "{} holds several algorithms; choose one with --algo",
                    path.display()
                )))
            }
        };
        rows.retain(|r| r.algo == pick);
        if rows.is_empty() {
            return Err(Error::data(format!("{} has no {pick} rows", path.display())));
        }
        rows.sort_by_key(|r| r.iteration);
        return Ok(rows.iter().map(|r| r.test_error).collect());
    }
    let mut values = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        for field in line.split([',', ';', ' ', '\t']).filter(|f| !f.is_empty()) {
            let v: f64 = field.parse().map_err(|_| {
                Error::data(format!("{}:{}: `{field}` is not a number", path.display(), n + 1))
            })?;
            values.push(v);
        }
    }
    Ok(values)
}

pub fn ftest_files(a: &Path, b: &Path, algo: Option<TrainAlgo>) -> crate::Result<FTestResult> {
    let ea = read_errors(a, algo)?;
    let eb = read_errors(b, algo)?;
    f_test(&pair_folds(&ea)?, &pair_folds(&eb)?)
}

fn cmd_ftest(a: &FtestArgs, out: &mut dyn Write) -> CliResult<()> {
    let algo = a
        .algo
        .as_deref()
        .map(str::parse::<TrainAlgo>)
        .transpose()
        .map_err(Failure::usage)?;
    let r = ftest_files(&a.a, &a.b, algo).map_err(Failure::data)?;
    let _ = writeln!(
        out,
        "F = {:.6} (threshold {}): {}",
        r.statistic,
        r.threshold,
        if r.significant {
            "significant"
        } else {
            "not significant"
        }
    );
    Ok(())
}

fn cmd_inspect(a: &InspectArgs, out: &mut dyn Write) -> CliResult<()> {
    let dir = &a.result;
    let manifest = read_manifest(dir.join(MANIFEST)).map_err(Failure::data)?;
    let results = read_results(dir.join(RESULTS)).map_err(Failure::data)?;
    let traces = read_traces(dir.join(TRACES)).map_err(Failure::data)?;
    for (k, v) in &manifest {
        let _ = writeln!(out, "{k}: {v}");
    }
    let _ = writeln!(out);
    let _ = write!(out, "{}", render_table(&results));
    let _ = writeln!(out);
    if a.full {
        let _ = writeln!(
            out,
            "iteration algo level rule_gen arch_gen weight_gen owner best mean replacements failures"
        );
        for t in &traces {
            let g = |o: Option<usize>| o.map_or("-".into(), |v| v.to_string());
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {} {:.6} {:.6} {} {}",
                t.iteration,
                t.algo,
                t.level,
                t.rule_generation,
                g(t.arch_generation),
                g(t.weight_generation),
                t.owner,
                t.best,
                t.mean,
                t.replacements,
                t.failures
            );
        }
        return Ok(());
    }
    // steps, first best, last best, replacements, failures
    type Summary = (usize, f64, f64, usize, usize);
    let mut runs: BTreeMap<(usize, TrainAlgo, crate::search::Level), Summary> = BTreeMap::new();
    for t in &traces {
        let e = runs
            .entry((t.iteration, t.algo, t.level))
            .or_insert((0, t.best, t.best, 0, 0));
        e.0 += 1;
        e.2 = t.best;
        e.3 += t.replacements;
        e.4 += t.failures;
    }
    let _ = writeln!(
        out,
        "{:>9} {:>4} {:>13} {:>6} {:>12} {:>12} {:>12} {:>8}",
        "iteration", "algo", "level", "steps", "first best", "last best", "replacements", "failures"
    );
    for ((i, algo, level), (steps, first, last, rep, fail)) in runs {
        let _ = writeln!(
            out,
            "{i:>9} {:>4} {:>13} {steps:>6} {first:>12.6} {last:>12.6} {rep:>12} {fail:>8}",
            algo.to_string(),
            level.name()
        );
    }
    Ok(())
}
