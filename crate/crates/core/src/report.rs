//! Result files of a protocol run.
//!
//! | file          | content                                         |
//! |---------------|-------------------------------------------------|
//! | `results.csv` | one row per algorithm: means and F-test         |
//! | `folds.csv`   | one row per iteration and algorithm             |
//! | `traces.csv`  | per-generation diagnostics of every layer       |
//! | `table.txt`   | the results as an aligned text table            |
//! | `config.txt`  | the effective configuration (re-usable)         |
//! | `manifest.txt`| seed, configuration and dataset checksums       |

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::protocol::{ExperimentResult, FoldRecord, Summary, TraceRecord};

pub const RESULTS: &str = "results.csv";
pub const FOLDS: &str = "folds.csv";
pub const TRACES: &str = "traces.csv";
pub const TABLE: &str = "table.txt";
pub const CONFIG: &str = "config.txt";
pub const MANIFEST: &str = "manifest.txt";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Where the data came from, for the manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetInfo {
    pub name: String,
    pub source: String,
    pub sha256: String,
    pub patterns: usize,
    pub attributes: usize,
    pub classes: usize,
    pub dropped_rows: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub seed: u64,
    pub config_sha256: String,
    pub dataset: DatasetInfo,
    pub iterations: usize,
    pub algos: String,
    pub version: String,
}

impl Manifest {
    pub fn new(cfg: &RunConfig, dataset: DatasetInfo) -> Self {
        Manifest {
            seed: cfg.search.seed,
            config_sha256: sha256_hex(cfg.render().as_bytes()),
            dataset,
            iterations: cfg.iterations,
            algos: cfg
                .algos
                .iter()
                .map(|a| a.name())
                .collect::<Vec<_>>()
                .join(","),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn render(&self) -> String {
        let d = &self.dataset;
        format!(
            "seed = {}\nconfig_sha256 = {}\ndataset = {}\ndataset_source = {}\ndataset_sha256 = {}\n\
             patterns = {}\nattributes = {}\nclasses = {}\ndropped_rows = {}\niterations = {}\n\
             algos = {}\nversion = {}\n",
            self.seed,
            self.config_sha256,
            d.name,
            d.source,
            d.sha256,
            d.patterns,
            d.attributes,
            d.classes,
            d.dropped_rows,
            self.iterations,
            self.algos,
            self.version
        )
    }
}

/// Reads `key = value` lines into pairs.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect())
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::invalid(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
}

pub fn from_csv<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_csv(&text).map_err(|e| Error::data(format!("{}: {e}", path.display())))
}

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<Summary>> {
    read_csv(path.as_ref())
}

pub fn read_folds(path: impl AsRef<Path>) -> Result<Vec<FoldRecord>> {
    read_csv(path.as_ref())
}

pub fn read_traces(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>> {
    read_csv(path.as_ref())
}

fn opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.4}"))
}

/// Aligned text table, one row per algorithm.
pub fn render_table(summaries: &[Summary]) -> String {
    let header = [
        "Dataset", "Algorithm", "Arch.", "Train err %", "Test err %", "F", "Significant",
    ];
    let rows: Vec<[String; 7]> = summaries
        .iter()
        .map(|s| {
            [
                s.dataset.clone(),
                s.algo.to_string(),
                format!("{:.1}", s.mean_arch),
                format!("{:.4}", s.mean_train_err),
                format!("{:.4}", s.mean_test_err),
                opt(s.f_stat),
                s.significant
                    .map_or("-".into(), |b| if b { "yes" } else { "no" }.into()),
            ]
        })
        .collect();
    let mut width = header.map(str::len);
    for r in &rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &[&str]| -> String {
        let parts: Vec<String> = cells
            .iter()
            .zip(&width)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(&header);
    out.push_str(&line(&width.map(|w| "-".repeat(w)).iter().map(String::as_str).collect::<Vec<_>>()));
    for r in &rows {
        out.push_str(&line(&r.iter().map(String::as_str).collect::<Vec<_>>()));
    }
    out
}

fn write(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes every report file into `dir`, creating it if needed.
pub fn emit_report(
    dir: impl AsRef<Path>,
    result: &ExperimentResult,
    summaries: &[Summary],
    manifest: &Manifest,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(vec![
        write(dir, RESULTS, &to_csv(summaries)?)?,
        write(dir, FOLDS, &to_csv(&result.records)?)?,
        write(dir, TRACES, &to_csv(&result.traces)?)?,
        write(dir, TABLE, &render_table(summaries))?,
        write(dir, CONFIG, &result.config.render())?,
        write(dir, MANIFEST, &manifest.render())?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::Level;
    use crate::trainers::TrainAlgo;

    fn summary(algo: TrainAlgo, f: Option<f64>) -> Summary {
        Summary {
            dataset: "cancer".into(),
            algo,
            mean_arch: 12.5,
            mean_train_err: 1.6778,
            mean_test_err: 2.079,
            f_stat: f,
            significant: f.map(|x| x > 4.74),
            mean_validation_err: 2.5,
            mean_train_nmse: 0.1 + 0.2,
            mean_test_nmse: 1.0 / 3.0,
            iterations: 10,
        }
    }

    #[test]
    fn summaries_round_trip() {
        let rows = vec![summary(TrainAlgo::Lm, Some(5.5)), summary(TrainAlgo::Bp, None)];
        let text = to_csv(&rows).unwrap();
        assert!(text.starts_with(
            "dataset,algo,mean_arch,mean_train_err,mean_test_err,f_stat,significant"
        ));
        assert_eq!(from_csv::<Summary>(&text).unwrap(), rows);
    }

    #[test]
    fn traces_round_trip() {
        let rows = vec![TraceRecord {
            iteration: 0,
            algo: TrainAlgo::Scg,
            level: Level::Weights,
            rule_generation: 2,
            arch_generation: Some(1),
            weight_generation: None,
            owner: 7,
            best: 0.123456789,
            mean: f64::INFINITY,
            offspring: 9,
            replacements: 3,
            failures: 0,
        }];
        assert_eq!(from_csv::<TraceRecord>(&to_csv(&rows).unwrap()).unwrap(), rows);
    }

    #[test]
    fn table_layout() {
        let t = render_table(&[summary(TrainAlgo::Lm, Some(1.0))]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("Dataset"));
        assert!(lines[2].contains("LM") && lines[2].contains("2.0790") && lines[2].contains("no"));
    }

    #[test]
    fn checksum() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
