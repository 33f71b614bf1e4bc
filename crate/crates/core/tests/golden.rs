//! Frozen output of a miniature fixed-seed run. Regenerate with
//! `UPDATE_GOLDEN=1 cargo test --test golden` after an intended change.

use std::path::Path;

use cellevo::config::RunConfig;
use cellevo::data::Builtin;
use cellevo::protocol::{run_protocol, FoldRecord, Summary};
use cellevo::report::{from_csv, to_csv};
use cellevo::trainers::TrainAlgo;

fn mini() -> RunConfig {
    let mut cfg = RunConfig {
        iterations: 2,
        algos: vec![TrainAlgo::Scg, TrainAlgo::Lm],
        ..RunConfig::default()
    };
    let s = &mut cfg.search;
    s.seed = 17;
    s.population.rules = 2;
    s.population.architectures = 4;
    s.population.weights = 4;
    s.generations.rules = 2;
    s.generations.architectures = 2;
    s.generations.weights = 2;
    cfg
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0)
}

fn same_fold(a: &FoldRecord, b: &FoldRecord) -> bool {
    a.iteration == b.iteration
        && a.algo == b.algo
        && a.architecture == b.architecture
        && a.hidden_units == b.hidden_units
        && a.rule == b.rule
        && (a.rule_steps, a.arch_steps, a.weight_steps) == (b.rule_steps, b.arch_steps, b.weight_steps)
        && [
            (a.fitness, b.fitness),
            (a.train_error, b.train_error),
            (a.validation_error, b.validation_error),
            (a.test_error, b.test_error),
            (a.train_nmse, b.train_nmse),
            (a.test_nmse, b.test_nmse),
        ]
        .iter()
        .all(|&(x, y)| close(x, y))
}

#[test]
fn miniature_run_matches_frozen_output() {
    let result = run_protocol(&Builtin::Cancer.load(), &mini()).unwrap();
    let summaries = result.summaries();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let folds_path = dir.join("mini_folds.csv");
    let results_path = dir.join("mini_results.csv");
    if std::env::var_os("UPDATE_GOLDEN").is_some() || !folds_path.exists() {
        std::fs::write(&folds_path, to_csv(&result.records).unwrap()).unwrap();
        std::fs::write(&results_path, to_csv(&summaries).unwrap()).unwrap();
    }
    let want: Vec<FoldRecord> = from_csv(&std::fs::read_to_string(&folds_path).unwrap()).unwrap();
    assert_eq!(want.len(), result.records.len());
    for (w, got) in want.iter().zip(&result.records) {
        assert!(same_fold(w, got), "\nfrozen {w:?}\nnow    {got:?}");
    }
    let want: Vec<Summary> = from_csv(&std::fs::read_to_string(&results_path).unwrap()).unwrap();
    for (w, got) in want.iter().zip(&summaries) {
        assert_eq!(w.algo, got.algo);
        assert!(close(w.mean_test_err, got.mean_test_err) && close(w.mean_arch, got.mean_arch));
    }
}
