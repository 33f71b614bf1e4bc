//! Evaluation protocol: repeated half splits, one search per learning
//! algorithm on each, and the aggregate figures reported per algorithm.
//!
//! Iterations come in pairs. Both iterations of a pair share one random
//! half split and swap the roles of the halves, so `2k` iterations form
//! `k` replications of two-fold cross-validation.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::{split, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::ftest::{f_test, pair_folds, FTestResult};
use crate::mlp::nmse;
use crate::rng::Stream;
use crate::search::{classification_error, run, Level, SearchConfig, TraceRow};
use crate::trainers::TrainAlgo;

const SPLIT_KEY: u64 = 0;
const SEARCH_KEY: u64 = 1;

/// Outcome of one search on one iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub iteration: usize,
    pub replication: usize,
    pub fold: usize,
    pub algo: TrainAlgo,
    pub architecture: String,
    pub hidden_layers: usize,
    pub hidden_units: usize,
    pub rule: String,
    pub fitness: f64,
    pub train_error: f64,
    pub validation_error: f64,
    pub test_error: f64,
    pub train_nmse: f64,
    pub test_nmse: f64,
    pub rule_steps: usize,
    pub arch_steps: usize,
    pub weight_steps: usize,
    pub failed_trainings: usize,
}

/// One generation of diagnostics, tagged with the run it belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub algo: TrainAlgo,
    pub level: Level,
    pub rule_generation: usize,
    pub arch_generation: Option<usize>,
    pub weight_generation: Option<usize>,
    pub owner: u64,
    pub best: f64,
    pub mean: f64,
    pub offspring: usize,
    pub replacements: usize,
    pub failures: usize,
}

impl TraceRecord {
    fn new(iteration: usize, algo: TrainAlgo, t: &TraceRow) -> Self {
        TraceRecord {
            iteration,
            algo,
            level: t.level,
            rule_generation: t.rule_generation,
            arch_generation: t.arch_generation,
            weight_generation: t.weight_generation,
            owner: t.owner,
            best: t.stats.best,
            mean: t.stats.mean,
            offspring: t.stats.offspring,
            replacements: t.stats.replacements,
            failures: t.stats.failures,
        }
    }
}

/// Per-algorithm means over all iterations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub dataset: String,
    pub algo: TrainAlgo,
    /// Mean number of hidden units.
    pub mean_arch: f64,
    pub mean_train_err: f64,
    pub mean_test_err: f64,
    pub f_stat: Option<f64>,
    pub significant: Option<bool>,
    pub mean_validation_err: f64,
    pub mean_train_nmse: f64,
    pub mean_test_nmse: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub dataset: String,
    pub config: RunConfig,
    pub records: Vec<FoldRecord>,
    pub traces: Vec<TraceRecord>,
}

impl ExperimentResult {
    pub fn records_for(&self, algo: TrainAlgo) -> Vec<&FoldRecord> {
        self.records.iter().filter(|r| r.algo == algo).collect()
    }

    /// One summary per configured algorithm, in configuration order.
    pub fn summaries(&self) -> Vec<Summary> {
        self.config
            .algos
            .iter()
            .filter_map(|&a| summarize(&self.dataset, a, &self.records_for(a)))
            .collect()
    }

    /// Summaries with the F-test against `baseline` fold records filled
    /// in. A baseline holding a single algorithm is compared with every
    /// algorithm; otherwise algorithms are matched by name.
    pub fn summaries_against(&self, baseline: &[FoldRecord]) -> Result<Vec<Summary>> {
        let mut out = self.summaries();
        let mut base_algos: Vec<TrainAlgo> = baseline.iter().map(|r| r.algo).collect();
        base_algos.dedup();
        for s in &mut out {
            let against = if base_algos.len() == 1 {
                base_algos[0]
            } else {
                s.algo
            };
            let mut base: Vec<&FoldRecord> = baseline.iter().filter(|r| r.algo == against).collect();
            if base.is_empty() {
                continue;
            }
            base.sort_by_key(|r| r.iteration);
            let mut ours = self.records_for(s.algo);
            ours.sort_by_key(|r| r.iteration);
            let r = compare_folds(&ours, &base)?;
            s.f_stat = Some(r.statistic);
            s.significant = Some(r.significant);
        }
        Ok(out)
    }
}

/// F-test on the test errors of two sets of fold records taken in
/// iteration order.
pub fn compare_folds(a: &[&FoldRecord], b: &[&FoldRecord]) -> Result<FTestResult> {
    let ea: Vec<f64> = a.iter().map(|r| r.test_error).collect();
    let eb: Vec<f64> = b.iter().map(|r| r.test_error).collect();
    f_test(&pair_folds(&ea)?, &pair_folds(&eb)?)
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

pub fn summarize(dataset: &str, algo: TrainAlgo, records: &[&FoldRecord]) -> Option<Summary> {
    if records.is_empty() {
        return None;
    }
    let m = |f: fn(&FoldRecord) -> f64| mean(records.iter().map(|r| f(r)));
    Some(Summary {
        dataset: dataset.to_string(),
        algo,
        mean_arch: m(|r| r.hidden_units as f64),
        mean_train_err: m(|r| r.train_error),
        mean_test_err: m(|r| r.test_error),
        f_stat: None,
        significant: None,
        mean_validation_err: m(|r| r.validation_error),
        mean_train_nmse: m(|r| r.train_nmse),
        mean_test_nmse: m(|r| r.test_nmse),
        iterations: records.len(),
    })
}

/// Split used by iteration `i`.
pub fn iteration_split(seed: u64, i: usize) -> SplitSpec {
    let spec = SplitSpec::new(Stream::new(seed).path(&[SPLIT_KEY, (i / 2) as u64]).raw());
    if i % 2 == 1 {
        spec.swapped()
    } else {
        spec
    }
}

/// Search seed of iteration `i`.
pub fn iteration_seed(seed: u64, i: usize) -> u64 {
    Stream::new(seed).path(&[SEARCH_KEY, i as u64]).raw()
}

/// A protocol run that stopped early, with everything finished before the
/// failure.
#[derive(Debug)]
pub struct Aborted {
    pub partial: ExperimentResult,
    pub error: Error,
}

/// Runs every configured iteration and algorithm. `on_record` sees each
/// record as soon as it is produced.
pub fn run_protocol_with(
    data: &Dataset,
    cfg: &RunConfig,
    mut on_record: impl FnMut(&FoldRecord),
) -> std::result::Result<ExperimentResult, Box<Aborted>> {
    let mut result = ExperimentResult {
        dataset: data.name().to_string(),
        config: cfg.clone(),
        records: Vec::new(),
        traces: Vec::new(),
    };
    if let Err(error) = cfg.validate() {
        return Err(Box::new(Aborted {
            partial: result,
            error,
        }));
    }
    for i in 0..cfg.iterations {
        if let Err(error) = run_iteration(data, cfg, i, &mut result, &mut on_record) {
            return Err(Box::new(Aborted {
                partial: result,
                error,
            }));
        }
    }
    Ok(result)
}

pub fn run_protocol(data: &Dataset, cfg: &RunConfig) -> std::result::Result<ExperimentResult, Box<Aborted>> {
    run_protocol_with(data, cfg, |_| {})
}

fn run_iteration(
    data: &Dataset,
    cfg: &RunConfig,
    i: usize,
    result: &mut ExperimentResult,
    on_record: &mut impl FnMut(&FoldRecord),
) -> Result<()> {
    let spec = iteration_split(cfg.search.seed, i);
    let part = split(data, &spec)?.normalized()?;
    let search = SearchConfig {
        seed: iteration_seed(cfg.search.seed, i),
        ..cfg.search.clone()
    };
    for &algo in &cfg.algos {
        let r = run(&search, algo, &part.train, Some(&part.validation))?;
        let test_out = r.network.forward_batch(part.test.features())?;
        let record = FoldRecord {
            iteration: i,
            replication: i / 2,
            fold: i % 2,
            algo,
            architecture: r.network.arch().to_string(),
            hidden_layers: r.arch.num_hidden(),
            hidden_units: r.arch.hidden_units(),
            rule: r.rule.params().to_string(),
            fitness: r.fitness(),
            train_error: classification_error(&r.network, &part.train)?,
            validation_error: r.validation_error.unwrap_or(f64::NAN),
            test_error: classification_error(&r.network, &part.test)?,
            train_nmse: r.train_nmse,
            test_nmse: nmse(&test_out, part.test.targets())?,
            rule_steps: r.steps.rules,
            arch_steps: r.steps.architectures,
            weight_steps: r.steps.weights,
            failed_trainings: r.failed_trainings,
        };
        on_record(&record);
        result.records.push(record);
        result
            .traces
            .extend(r.trace.iter().map(|t| TraceRecord::new(i, algo, t)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iterations_pair_into_swapped_folds() {
        let a = iteration_split(7, 4);
        let b = iteration_split(7, 5);
        assert_eq!(a.seed, b.seed);
        assert!(!a.swap_halves && b.swap_halves);
        assert_ne!(iteration_split(7, 2).seed, a.seed);
        assert_ne!(iteration_seed(7, 4), iteration_seed(7, 5));
    }

    fn record(i: usize, algo: TrainAlgo, test_error: f64, hidden: usize) -> FoldRecord {
        FoldRecord {
            iteration: i,
            replication: i / 2,
            fold: i % 2,
            algo,
            architecture: String::new(),
            hidden_layers: 1,
            hidden_units: hidden,
            rule: String::new(),
            fitness: 0.0,
            train_error: 1.0,
            validation_error: 2.0,
            test_error,
            train_nmse: 0.5,
            test_nmse: 0.7,
            rule_steps: 1,
            arch_steps: 2,
            weight_steps: 3,
            failed_trainings: 0,
        }
    }

    fn experiment(records: Vec<FoldRecord>, algos: Vec<TrainAlgo>) -> ExperimentResult {
        ExperimentResult {
            dataset: "toy".into(),
            config: RunConfig {
                algos,
                ..RunConfig::default()
            },
            records,
            traces: Vec::new(),
        }
    }

    #[test]
    fn single_iteration_means_equal_values() {
        let e = experiment(vec![record(0, TrainAlgo::Lm, 3.5, 7)], vec![TrainAlgo::Lm]);
        let s = &e.summaries()[0];
        assert_eq!(s.mean_test_err, 3.5);
        assert_eq!(s.mean_arch, 7.0);
        assert_eq!(s.iterations, 1);
        assert_eq!(s.f_stat, None);
    }

    #[test]
    fn baseline_comparison() {
        let ours: Vec<FoldRecord> = (0..10).map(|i| record(i, TrainAlgo::Lm, 2.0 + (i % 3) as f64, 5)).collect();
        let e = experiment(ours.clone(), vec![TrainAlgo::Lm]);
        let s = e.summaries_against(&ours).unwrap();
        assert_eq!(s[0].f_stat, Some(0.0));
        assert_eq!(s[0].significant, Some(false));
        let other: Vec<FoldRecord> = (0..10)
            .map(|i| record(i, TrainAlgo::Bp, 30.0 + (i % 2) as f64 * 0.1, 5))
            .collect();
        let s = e.summaries_against(&other).unwrap();
        assert_eq!(s[0].significant, Some(true));
    }
}
