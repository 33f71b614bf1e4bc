//! Fitness measures for the three search layers.
//!
//! Weight genomes are scored by the training NMSE reached after training
//! from them. Architectures combine classification error, NMSE, size and
//! transfer function cost into one scalar (lower is better). Learning rules
//! take the best score of their architecture population.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::genomes::{ArchGenome, RuleGenome, WeightGenome};
use crate::mlp::{count_correct, count_nodes, nmse, Network, TransferFn};
use crate::trainers::train;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitnessWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl Default for FitnessWeights {
    fn default() -> Self {
        FitnessWeights {
            alpha: 1.0,
            beta: 0.90,
            gamma: 0.90,
            delta: 0.20,
        }
    }
}

/// Cost of each hidden transfer function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FnWeights {
    pub linear: f64,
    pub tanh: f64,
    pub logsig: f64,
}

impl Default for FnWeights {
    fn default() -> Self {
        FnWeights {
            linear: 0.2,
            tanh: 0.4,
            logsig: 0.7,
        }
    }
}

impl FnWeights {
    pub fn weight(&self, f: TransferFn) -> f64 {
        match f {
            TransferFn::Linear => self.linear,
            TransferFn::TanH => self.tanh,
            TransferFn::LogSig => self.logsig,
        }
    }
}

/// Percentage of misclassified patterns.
pub fn i_acc(correct: usize, total: usize) -> Result<f64> {
    if total == 0 {
        return Err(Error::Empty("classification total"));
    }
    if correct > total {
        return Err(Error::invalid(format!("{correct} correct out of {total}")));
    }
    Ok(100.0 * (1.0 - correct as f64 / total as f64))
}

/// Fraction of the node capacity in use.
pub fn i_comp(used: usize, capacity: usize) -> Result<f64> {
    if capacity == 0 {
        return Err(Error::invalid("zero node capacity"));
    }
    if used == 0 || used > capacity {
        return Err(Error::invalid(format!("{used} nodes with capacity {capacity}")));
    }
    Ok(used as f64 / capacity as f64)
}

pub fn i_f(fns: &[TransferFn]) -> f64 {
    i_f_with(fns, &FnWeights::default())
}

pub fn i_f_with(fns: &[TransferFn], w: &FnWeights) -> f64 {
    fns.iter().map(|&f| w.weight(f)).sum()
}

pub fn i_fit(acc: f64, nmse: f64, comp: f64, f: f64, w: &FitnessWeights) -> f64 {
    w.alpha * acc + w.beta * nmse + w.gamma * comp + w.delta * f
}

/// Components of an architecture score, kept for reporting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitnessParts {
    pub acc: f64,
    pub nmse: f64,
    pub comp: f64,
    pub f: f64,
    pub total: f64,
}

impl FitnessParts {
    pub fn failed() -> Self {
        FitnessParts {
            acc: f64::INFINITY,
            nmse: f64::INFINITY,
            comp: f64::INFINITY,
            f: f64::INFINITY,
            total: f64::INFINITY,
        }
    }

    pub fn is_failed(&self) -> bool {
        !self.total.is_finite()
    }
}

/// Outcome of training from one weight genome.
#[derive(Clone, Debug)]
pub struct PpiEval {
    /// Training NMSE, or `+inf` when training failed.
    pub fitness: f64,
    /// The trained network. On failure this is the untrained one.
    pub trained: Network,
    pub failed: bool,
}

/// Trains from `g` with `rule` and scores the result by training NMSE.
pub fn evaluate_ppi(g: &WeightGenome, rule: &RuleGenome, train_set: &Dataset) -> PpiEval {
    match train(g.network(), rule.params(), train_set, None) {
        Ok(r) if r.train_nmse.is_finite() => PpiEval {
            fitness: r.train_nmse,
            trained: r.trained,
            failed: false,
        },
        _ => PpiEval {
            fitness: f64::INFINITY,
            trained: g.network().clone(),
            failed: true,
        },
    }
}

/// Scores an architecture through the best network its weight search
/// produced. `best` must be `None` when that search failed.
pub fn evaluate_paf(
    g: &ArchGenome,
    best: Option<&Network>,
    train_set: &Dataset,
    w: &FitnessWeights,
) -> Result<FitnessParts> {
    let Some(net) = best else {
        return Ok(FitnessParts::failed());
    };
    let arch = net.arch();
    if arch.hidden_sizes() != g.dims() || arch.hidden_fns() != g.fns() {
        return Err(Error::shape(format!(
            "network {arch} does not realise {:?}/{:?}",
            g.dims(),
            g.fns()
        )));
    }
    let out = net.forward_batch(train_set.features())?;
    let correct = count_correct(&out, train_set.targets())?;
    let acc = i_acc(correct, train_set.len())?;
    let err = nmse(&out, train_set.targets())?;
    let nodes = count_nodes(arch);
    let comp = i_comp(nodes.used, nodes.capacity)?;
    let f = i_f(g.fns());
    let total = i_fit(acc, err, comp, f, w);
    if !total.is_finite() {
        return Ok(FitnessParts::failed());
    }
    Ok(FitnessParts {
        acc,
        nmse: err,
        comp,
        f,
        total,
    })
}

/// Best (lowest) score among a rule's architectures.
pub fn evaluate_pra(_g: &RuleGenome, paf_fitness: &[f64]) -> Result<f64> {
    if paf_fitness.is_empty() {
        return Err(Error::Empty("architecture population"));
    }
    Ok(paf_fitness.iter().copied().fold(f64::INFINITY, f64::min))
}
