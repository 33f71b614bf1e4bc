//! Trains one fixed network with each of the four learning algorithms on a
//! half split of the Cancer data and reports train NMSE and test error.
//!
//!     cargo run --release --example train_mlp

use cellevo::data::{split, Builtin, SplitSpec};
use cellevo::genomes::WeightGenome;
use cellevo::mlp::{Architecture, TransferFn};
use cellevo::rng::Stream;
use cellevo::search::classification_error;
use cellevo::trainers::{train, TrainAlgo, TrainParams};

fn main() -> cellevo::Result<()> {
    let data = Builtin::Cancer.load();
    let part = split(&data, &SplitSpec::new(42))?.normalized()?;
    let arch = Architecture::new(
        data.num_attributes(),
        vec![6],
        vec![TransferFn::TanH],
        data.num_classes(),
    )?;
    let init = WeightGenome::random(&arch, &mut Stream::new(1).rng());
    println!("network {arch}, {} weights", arch.param_count());

    for algo in TrainAlgo::ALL {
        // middle of every parameter interval
        let values = algo
            .param_specs()
            .iter()
            .map(|s| (s.lo + s.hi) / 2.0)
            .collect();
        let params = TrainParams::new(algo, values, 5)?;
        let r = train(init.network(), &params, &part.train, Some(&part.validation))?;
        println!(
            "{:<40} train nmse {:8.4}  validation nmse {:8.4}  test error {:6.2}%",
            params.to_string(),
            r.train_nmse,
            r.validation_nmse.unwrap_or(f64::NAN),
            classification_error(&r.trained, &part.test)?
        );
    }
    Ok(())
}
