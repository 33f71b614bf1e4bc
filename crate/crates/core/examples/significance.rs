//! Comparing two methods with the 5x2 cross-validation F-test, first on
//! made-up fold errors, then on two learning algorithms run through the
//! protocol with a small search.
//!
//!     cargo run --release --example significance

use cellevo::config::RunConfig;
use cellevo::data::Builtin;
use cellevo::ftest::{f_test, pair_folds};
use cellevo::protocol::{compare_folds, run_protocol};
use cellevo::trainers::TrainAlgo;

fn main() -> cellevo::Result<()> {
    let a = pair_folds(&[3.1, 2.9, 3.4, 2.7, 3.0, 3.3, 2.8, 3.2, 3.1, 2.9])?;
    let b = pair_folds(&[4.0, 4.3, 4.1, 3.8, 4.4, 4.2, 3.9, 4.1, 4.0, 4.3])?;
    let r = f_test(&a, &b)?;
    println!("synthetic: F = {:.3}, significant at {}: {}", r.statistic, r.threshold, r.significant);

    let mut cfg = RunConfig {
        algos: vec![TrainAlgo::Bp, TrainAlgo::Scg],
        ..RunConfig::default()
    };
    cfg.search.generations.rules = 1;
    cfg.search.generations.architectures = 2;
    let result = run_protocol(&Builtin::Cancer.load(), &cfg).map_err(|e| e.error)?;
    let bp = result.records_for(TrainAlgo::Bp);
    let scg = result.records_for(TrainAlgo::Scg);
    let r = compare_folds(&bp, &scg)?;
    for (x, y) in bp.iter().zip(&scg) {
        println!("iteration {}: BP {:6.2}%  SCG {:6.2}%", x.iteration, x.test_error, y.test_error);
    }
    println!("BP vs SCG: F = {:.3}, significant: {}", r.statistic, r.significant);
    Ok(())
}
