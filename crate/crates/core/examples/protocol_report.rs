//! The repeated half-split protocol on the Glass data with a reduced
//! search, written out as CSV, text table and manifest.
//!
//!     cargo run --release --example protocol_report [out dir]

use cellevo::config::RunConfig;
use cellevo::data::Builtin;
use cellevo::protocol::run_protocol_with;
use cellevo::report::{emit_report, render_table, sha256_hex, DatasetInfo, Manifest};
use cellevo::trainers::TrainAlgo;

fn main() -> cellevo::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "glass-report".into());
    let mut cfg = RunConfig {
        iterations: 2,
        algos: vec![TrainAlgo::Scg, TrainAlgo::Qna],
        ..RunConfig::default()
    };
    cfg.search.generations.rules = 2;
    cfg.search.generations.architectures = 2;
    cfg.search.seed = 12;

    let b = Builtin::Glass;
    let data = b.load();
    let result = run_protocol_with(&data, &cfg, |r| {
        eprintln!("iteration {} {}: test error {:.2}%", r.iteration, r.algo, r.test_error)
    })
    .map_err(|a| a.error)?;

    let info = DatasetInfo {
        name: data.name().into(),
        source: format!("builtin:{}", b.name()),
        sha256: sha256_hex(b.source().as_bytes()),
        patterns: data.len(),
        attributes: data.num_attributes(),
        classes: data.num_classes(),
        dropped_rows: data.dropped_rows(),
    };
    let summaries = result.summaries();
    let files = emit_report(&out, &result, &summaries, &Manifest::new(&cfg, info))?;
    print!("{}", render_table(&summaries));
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
