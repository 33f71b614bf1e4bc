//! How an architecture is scored: classification error, training NMSE,
//! structural complexity and transfer-function cost.
//!
//!     cargo run --example fitness_terms

use cellevo::fitness::{i_acc, i_comp, i_f, i_fit, FitnessWeights};
use cellevo::mlp::{count_nodes, Architecture, TransferFn};

fn main() -> cellevo::Result<()> {
    let w = FitnessWeights::default();
    println!("weights alpha {} beta {} gamma {} delta {}", w.alpha, w.beta, w.gamma, w.delta);
    let candidates = [
        (vec![12, 12, 12], vec![TransferFn::TanH; 3]),
        (vec![4], vec![TransferFn::LogSig]),
        (vec![2, 2], vec![TransferFn::Linear, TransferFn::TanH]),
    ];
    for (dims, fns) in candidates {
        let arch = Architecture::new(9, dims, fns.clone(), 2)?;
        let nodes = count_nodes(&arch);
        // same accuracy and NMSE for all, so only structure separates them
        let acc = i_acc(330, 350)?;
        let comp = i_comp(nodes.used, nodes.capacity)?;
        let f = i_f(&fns);
        println!(
            "{arch:<28} acc {acc:.3}% comp {comp:.4} f {f:.1} -> fitness {:.4}",
            i_fit(acc, 8.0, comp, f, &w)
        );
    }
    Ok(())
}
