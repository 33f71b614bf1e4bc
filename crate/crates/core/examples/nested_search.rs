//! One nested search (rules over architectures over initial weights) for a
//! single learning algorithm on a Cancer half split, with a per-layer view
//! of the trace.
//!
//!     cargo run --release --example nested_search [bp|lm|qna|scg] [rule generations]

use std::collections::BTreeMap;

use cellevo::data::{split, Builtin, SplitSpec};
use cellevo::search::{classification_error, run, Level, SearchConfig};
use cellevo::trainers::TrainAlgo;

fn main() -> cellevo::Result<()> {
    let mut args = std::env::args().skip(1);
    let algo: TrainAlgo = args.next().as_deref().unwrap_or("scg").parse()?;
    let mut cfg = SearchConfig {
        seed: 5,
        ..SearchConfig::default()
    };
    // the full 18 rule generations take a few minutes
    cfg.generations.rules = args.next().map_or(Ok(3), |s| s.parse()).unwrap_or(3);

    let data = Builtin::Cancer.load();
    let part = split(&data, &SplitSpec::new(5))?.normalized()?;
    let r = run(&cfg, algo, &part.train, Some(&part.validation))?;

    println!("rule          {}", r.rule.params());
    println!("architecture  {}", r.network.arch());
    println!(
        "fitness {:.4} (error {:.3}%, nmse {:.4}, complexity {:.4}, functions {:.2})",
        r.fitness(),
        r.parts.acc,
        r.parts.nmse,
        r.parts.comp,
        r.parts.f
    );
    println!(
        "validation error {:.3}%, test error {:.3}%",
        r.validation_error.unwrap_or(f64::NAN),
        classification_error(&r.network, &part.test)?
    );
    println!(
        "steps: rules {}, architectures {}, weights {}; failed trainings {}",
        r.steps.rules, r.steps.architectures, r.steps.weights, r.failed_trainings
    );

    let mut by_level: BTreeMap<Level, (usize, usize, f64)> = BTreeMap::new();
    for t in &r.trace {
        let e = by_level.entry(t.level).or_insert((0, 0, f64::INFINITY));
        e.0 += 1;
        e.1 += t.stats.replacements;
        e.2 = e.2.min(t.stats.best);
    }
    for (level, (steps, replaced, best)) in by_level {
        println!("{level:<14} {steps:>5} generations, {replaced:>5} replacements, best {best:.4}");
    }
    Ok(())
}
