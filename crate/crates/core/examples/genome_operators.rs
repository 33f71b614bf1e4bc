//! Crossover and mutation at the three layers: initial weights,
//! architectures and learning-rule parameters.
//!
//!     cargo run --example genome_operators

use cellevo::genomes::{
    arch_change, paf_crossover, paf_mutate, ppi_crossover, ppi_mutate, pra_crossover, pra_mutate, ArchGenome,
    MutationRanges, RuleGenome, WeightGenome,
};
use cellevo::mlp::TransferFn;
use cellevo::rng::Stream;
use cellevo::trainers::TrainAlgo;

fn main() -> cellevo::Result<()> {
    let mut rng = Stream::new(3).rng();
    let ranges = MutationRanges::default();

    let arch = ArchGenome::new(vec![3, 2], vec![TransferFn::TanH, TransferFn::LogSig])?;
    let net = arch.architecture(4, 2)?;
    let a = WeightGenome::random(&net, &mut rng);
    let b = WeightGenome::random(&net, &mut rng);
    let child = ppi_crossover(&a, &b, &mut rng)?;
    let mutant = ppi_mutate(&child, &ranges, &mut rng);
    let changed = child
        .weights()
        .iter()
        .zip(mutant.weights())
        .filter(|(x, y)| x != y)
        .count();
    println!("weights: {} values, mutation touched {changed}", child.weights().len());

    let other = ArchGenome::new(vec![7], vec![TransferFn::Linear])?;
    for _ in 0..3 {
        let c = paf_crossover(&arch, &other, 0.5, &mut rng);
        println!("architecture child {:?} {:?}", c.dims(), c.fns());
    }
    for u in [0.1, 0.55, 0.7] {
        println!("two hidden layers, draw {u}: {:?}", arch_change(2, u));
    }
    println!("mutated architecture {:?}", paf_mutate(&arch, &ranges, &mut rng).dims());

    let r1 = RuleGenome::random(TrainAlgo::Scg, 5, &mut rng)?;
    let r2 = RuleGenome::random(TrainAlgo::Scg, 5, &mut rng)?;
    let rc = pra_crossover(&r1, &r2, &mut rng)?;
    println!("rules {} x {} -> {}", r1.params(), r2.params(), rc.params());
    println!("mutated rule {}", pra_mutate(&rc, &ranges, &mut rng).params());
    Ok(())
}
