//! Full-batch gradient descent with momentum.

use super::{all_finite, Objective, TrainParams};
use crate::data::Dataset;
use crate::mlp::Network;

pub(super) fn run(net: &Network, data: &Dataset, params: &TrainParams, w: &mut [f64]) -> usize {
    let lr = params.values()[0];
    let momentum = params.values()[1];
    let mut obj = Objective::new(net, data);
    let mut grad = vec![0.0; w.len()];
    let mut step = vec![0.0; w.len()];
    let mut next = w.to_vec();
    for epoch in 0..params.epochs() {
        obj.value_and_gradient(w, &mut grad);
        for ((s, g), (n, x)) in step.iter_mut().zip(&grad).zip(next.iter_mut().zip(w.iter())) {
            *s = momentum * *s - lr * g;
            *n = x + *s;
        }
        if !all_finite(&next) {
            return epoch;
        }
        w.copy_from_slice(&next);
    }
    params.epochs()
}
