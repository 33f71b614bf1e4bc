//! Short-budget supervised trainers.
//!
//! All four trainers run full-batch on the training set for at most
//! [`MAX_EPOCHS`] epochs and only ever accept finite weights. The objective
//! is half the mean (over patterns) summed squared error.

// `!(x > 0.0)` is meant: NaN has to take the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod backprop;
mod bp;
mod lm;
mod qna;
mod scg;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mlp::{nmse, Network};

pub use backprop::gradient;
pub(crate) use backprop::Workspace;

pub const MAX_EPOCHS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TrainAlgo {
    Bp,
    Lm,
    Qna,
    Scg,
}

/// Name and closed interval of one learning-rule parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub lo: f64,
    pub hi: f64,
}

impl ParamSpec {
    const fn new(name: &'static str, lo: f64, hi: f64) -> Self {
        ParamSpec { name, lo, hi }
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.lo..=self.hi).contains(&v)
    }
}

const BP_PARAMS: [ParamSpec; 2] = [
    ParamSpec::new("learning_rate", 0.05, 0.25),
    ParamSpec::new("momentum", 0.05, 0.25),
];
const LM_PARAMS: [ParamSpec; 1] = [ParamSpec::new("learning_rate", 0.001, 0.02)];
const QNA_PARAMS: [ParamSpec; 4] = [
    ParamSpec::new("step_size", 1.0e-6, 100.0),
    ParamSpec::new("step_limit", 0.1, 0.6),
    ParamSpec::new("perf_scale", 0.001, 0.003),
    ParamSpec::new("step_scale", 0.001, 0.02),
];
const SCG_PARAMS: [ParamSpec; 2] = [
    ParamSpec::new("sigma", 0.0, 1.0e-4),
    ParamSpec::new("lambda", 0.0, 1.0e-6),
];

impl TrainAlgo {
    pub const ALL: [TrainAlgo; 4] = [TrainAlgo::Bp, TrainAlgo::Lm, TrainAlgo::Qna, TrainAlgo::Scg];

    pub fn param_specs(self) -> &'static [ParamSpec] {
        match self {
            TrainAlgo::Bp => &BP_PARAMS,
            TrainAlgo::Lm => &LM_PARAMS,
            TrainAlgo::Qna => &QNA_PARAMS,
            TrainAlgo::Scg => &SCG_PARAMS,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TrainAlgo::Bp => "bp",
            TrainAlgo::Lm => "lm",
            TrainAlgo::Qna => "qna",
            TrainAlgo::Scg => "scg",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for TrainAlgo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name().to_ascii_uppercase())
    }
}

impl FromStr for TrainAlgo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bp" => Ok(TrainAlgo::Bp),
            "lm" => Ok(TrainAlgo::Lm),
            "qna" => Ok(TrainAlgo::Qna),
            "scg" => Ok(TrainAlgo::Scg),
            _ => Err(Error::invalid(format!("unknown learning algorithm {s:?}"))),
        }
    }
}

/// Learning algorithm plus its parameter values, in the order of
/// [`TrainAlgo::param_specs`].
#[derive(Clone, Debug, PartialEq)]
pub struct TrainParams {
    algo: TrainAlgo,
    values: Vec<f64>,
    epochs: usize,
}

impl TrainParams {
    pub fn new(algo: TrainAlgo, values: Vec<f64>, epochs: usize) -> Result<Self> {
        let specs = algo.param_specs();
        if values.len() != specs.len() {
            return Err(Error::invalid(format!(
                "{algo} takes {} parameters, got {}",
                specs.len(),
                values.len()
            )));
        }
        for (s, &v) in specs.iter().zip(&values) {
            if !s.contains(v) {
                return Err(Error::invalid(format!(
                    "{algo} {} = {v} outside [{}, {}]",
                    s.name, s.lo, s.hi
                )));
            }
        }
        if !(1..=MAX_EPOCHS).contains(&epochs) {
            return Err(Error::invalid(format!(
                "epochs = {epochs}, expected 1..={MAX_EPOCHS}"
            )));
        }
        Ok(TrainParams {
            algo,
            values,
            epochs,
        })
    }

    /// Every value clamped into its interval.
    pub fn clamped(algo: TrainAlgo, values: Vec<f64>, epochs: usize) -> Result<Self> {
        let values = algo
            .param_specs()
            .iter()
            .zip(values)
            .map(|(s, v)| s.clamp(v))
            .collect();
        TrainParams::new(algo, values, epochs)
    }

    /// Uniform draw inside every interval.
    pub fn random<R: Rng + ?Sized>(algo: TrainAlgo, epochs: usize, rng: &mut R) -> Result<Self> {
        let values = algo
            .param_specs()
            .iter()
            .map(|s| rng.gen_range(s.lo..=s.hi))
            .collect();
        TrainParams::new(algo, values, epochs)
    }

    pub fn algo(&self) -> TrainAlgo {
        self.algo
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.algo
            .param_specs()
            .iter()
            .position(|s| s.name == name)
            .map(|i| self.values[i])
    }
}

impl fmt::Display for TrainParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.algo)?;
        for (i, (s, v)) in self.algo.param_specs().iter().zip(&self.values).enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}={v:.6}", s.name)?;
        }
        write!(f, "; epochs={})", self.epochs)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub trained: Network,
    pub train_nmse: f64,
    pub validation_nmse: Option<f64>,
    pub epochs_run: usize,
}

/// Objective `E(w) = sse(w) / (2P)` with scratch buffers.
pub(crate) struct Objective<'a> {
    data: &'a Dataset,
    scratch: Network,
    ws: Workspace,
    scale: f64,
}

impl<'a> Objective<'a> {
    pub(crate) fn new(net: &Network, data: &'a Dataset) -> Self {
        Objective {
            data,
            scratch: net.clone(),
            ws: Workspace::new(net, data.len()),
            scale: 0.5 / data.len() as f64,
        }
    }

    pub(crate) fn value(&mut self, w: &[f64]) -> f64 {
        self.scratch.params_mut().copy_from_slice(w);
        self.scale * backprop::sse(&self.scratch, self.data, &mut self.ws)
    }

    pub(crate) fn value_and_gradient(&mut self, w: &[f64], grad: &mut [f64]) -> f64 {
        self.scratch.params_mut().copy_from_slice(w);
        let e = backprop::sse_and_gradient(&self.scratch, self.data, &mut self.ws, grad);
        let s = 2.0 * self.scale;
        grad.iter_mut().for_each(|g| *g *= s);
        self.scale * e
    }

    /// Jacobian of the outputs and residuals `o - d` at `w`.
    pub(crate) fn jacobian(&mut self, w: &[f64], jac: &mut [f64], resid: &mut [f64]) {
        self.scratch.params_mut().copy_from_slice(w);
        backprop::jacobian(&self.scratch, self.data, &mut self.ws, jac, resid);
    }

    pub(crate) fn rows(&self) -> usize {
        self.data.len() * self.data.num_classes()
    }
}

/// Dot product with independent partial sums so the loop vectorises.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

pub(crate) fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Trains a copy of `net` on `train` with the learning rule in `params`.
/// The architecture never changes; only weights move.
pub fn train(
    net: &Network,
    params: &TrainParams,
    train: &Dataset,
    validation: Option<&Dataset>,
) -> Result<TrainReport> {
    backprop::validate(net, train)?;
    if let Some(v) = validation {
        backprop::validate(net, v)?;
    }
    let mut w = net.params().to_vec();
    let epochs_run = match params.algo {
        TrainAlgo::Bp => bp::run(net, train, params, &mut w),
        TrainAlgo::Lm => lm::run(net, train, params, &mut w),
        TrainAlgo::Qna => qna::run(net, train, params, &mut w),
        TrainAlgo::Scg => scg::run(net, train, params, &mut w),
    };
    debug_assert!(all_finite(&w));
    let trained = Network::new(net.arch().clone(), w)?;
    let train_nmse = nmse(&trained.forward_batch(train.features())?, train.targets())?;
    let validation_nmse = match validation {
        Some(v) => Some(nmse(&trained.forward_batch(v.features())?, v.targets())?),
        None => None,
    };
    Ok(TrainReport {
        trained,
        train_nmse,
        validation_nmse,
        epochs_run,
    })
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::matrix::Matrix;
    use crate::mlp::{Architecture, TransferFn};
    use crate::rng::Stream;

    /// Two Gaussian-ish blobs, linearly separable along x0 + x1.
    pub(crate) fn separable(n: usize, seed: u64) -> Dataset {
        let mut rng = Stream::new(seed).rng();
        let mut rows = Vec::new();
        let mut classes = Vec::new();
        for i in 0..n {
            let c = i % 2;
            let centre = if c == 0 { 0.25 } else { 0.75 };
            rows.push([
                centre + rng.gen_range(-0.15..0.15),
                centre + rng.gen_range(-0.15..0.15),
            ]);
            classes.push(c);
        }
        Dataset::new(
            "separable",
            Matrix::from_rows(&rows).unwrap(),
            &classes,
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    pub(crate) fn small_net(input: usize, hidden: &[usize], f: TransferFn, output: usize, seed: u64) -> Network {
        let arch = Architecture::new(input, hidden.to_vec(), vec![f; hidden.len()], output).unwrap();
        let mut rng = Stream::new(seed).rng();
        let w = (0..arch.param_count()).map(|_| rng.gen_range(-0.05..0.05)).collect();
        Network::new(arch, w).unwrap()
    }

    /// y = 2x - 0.5 on x in [0, 1].
    pub(crate) fn linear_regression(n: usize) -> Dataset {
        let xs: Vec<[f64; 1]> = (0..n).map(|i| [i as f64 / (n - 1) as f64]).collect();
        let ys: Vec<[f64; 1]> = xs.iter().map(|x| [2.0 * x[0] - 0.5]).collect();
        Dataset::new("line", Matrix::from_rows(&xs).unwrap(), &vec![0; n], vec!["y".into()])
            .unwrap()
            .with_targets(Matrix::from_rows(&ys).unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::mlp::TransferFn;
    use crate::rng::Stream;

    fn params_for(algo: TrainAlgo) -> TrainParams {
        TrainParams::random(algo, MAX_EPOCHS, &mut Stream::new(algo as u64).rng()).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(TrainParams::new(TrainAlgo::Bp, vec![0.1, 0.1], 0).is_err());
        assert!(TrainParams::new(TrainAlgo::Bp, vec![0.1, 0.1], 6).is_err());
        assert!(TrainParams::new(TrainAlgo::Bp, vec![0.3, 0.1], 5).is_err());
        assert!(TrainParams::new(TrainAlgo::Lm, vec![0.1, 0.1], 5).is_err());
        let p = TrainParams::clamped(TrainAlgo::Scg, vec![-1.0, 1.0], 5).unwrap();
        assert_eq!(p.values(), &[0.0, 1.0e-6]);
        assert_eq!(p.get("lambda"), Some(1.0e-6));
        assert_eq!("QNA".parse::<TrainAlgo>().unwrap(), TrainAlgo::Qna);
    }

    #[test]
    fn every_trainer_keeps_architecture_and_budget() {
        let data = separable(40, 1);
        for algo in TrainAlgo::ALL {
            for f in TransferFn::ALL {
                let net = small_net(2, &[3, 2], f, 2, 7);
                let p = params_for(algo);
                let r = train(&net, &p, &data, Some(&data)).unwrap();
                assert_eq!(r.trained.arch(), net.arch());
                assert!(r.epochs_run <= p.epochs());
                assert!(r.trained.params().iter().all(|w| w.is_finite()));
                assert!(r.train_nmse.is_finite() && r.train_nmse >= 0.0);
                assert_eq!(r.validation_nmse, Some(r.train_nmse));
            }
        }
    }

    #[test]
    fn training_is_deterministic() {
        let data = separable(30, 2);
        for algo in TrainAlgo::ALL {
            let net = small_net(2, &[4], TransferFn::TanH, 2, 3);
            let p = params_for(algo);
            let a = train(&net, &p, &data, None).unwrap();
            let b = train(&net, &p, &data, None).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let data = separable(10, 0);
        let net = small_net(3, &[2], TransferFn::TanH, 2, 0);
        assert!(matches!(
            train(&net, &params_for(TrainAlgo::Lm), &data, None),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn second_order_trainers_improve_on_separable_data() {
        let data = separable(60, 4);
        for algo in [TrainAlgo::Lm, TrainAlgo::Qna, TrainAlgo::Scg] {
            let net = small_net(2, &[3], TransferFn::TanH, 2, 11);
            let before = nmse(&net.forward_batch(data.features()).unwrap(), data.targets()).unwrap();
            let r = train(&net, &params_for(algo), &data, None).unwrap();
            assert!(r.train_nmse < before, "{algo}: {} !< {before}", r.train_nmse);
        }
    }
}
