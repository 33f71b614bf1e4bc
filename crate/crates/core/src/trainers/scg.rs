//! Scaled conjugate gradient (Moller).
//!
//! `sigma` sets the finite-difference step used to approximate the
//! Hessian-vector product; `lambda` is the initial regulariser that keeps
//! the local quadratic model positive definite.

use super::{all_finite, dot, Objective, TrainParams};
use crate::data::Dataset;
use crate::mlp::Network;

/// Floor for a zero `sigma`, which would otherwise divide by zero.
const MIN_SIGMA: f64 = 1.0e-10;

pub(super) fn run(net: &Network, data: &Dataset, params: &TrainParams, w: &mut [f64]) -> usize {
    let sigma0 = params.values()[0].max(MIN_SIGMA);
    let mut lambda = params.values()[1];
    let mut lambda_bar = 0.0;
    let n = w.len();
    let mut obj = Objective::new(net, data);

    let mut grad = vec![0.0; n];
    let mut e = obj.value_and_gradient(w, &mut grad);
    let mut r: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut p = r.clone();
    let mut probe = vec![0.0; n];
    let mut probe_grad = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut delta = 0.0;
    let mut success = true;
    let mut since_restart = 0;

    for epoch in 0..params.epochs() {
        let p2 = dot(&p, &p);
        if p2 == 0.0 || dot(&r, &r) == 0.0 {
            return epoch;
        }
        if success {
            let sk = sigma0 / p2.sqrt();
            for ((q, x), d) in probe.iter_mut().zip(w.iter()).zip(&p) {
                *q = x + sk * d;
            }
            obj.value_and_gradient(&probe, &mut probe_grad);
            // grad = -r at w
            delta = p
                .iter()
                .zip(probe_grad.iter().zip(&r))
                .map(|(pi, (gp, ri))| pi * (gp + ri) / sk)
                .sum();
        }
        delta += (lambda - lambda_bar) * p2;
        if delta <= 0.0 {
            lambda_bar = 2.0 * (lambda - delta / p2);
            delta = -delta + lambda * p2;
            lambda = lambda_bar;
        }
        let mu = dot(&p, &r);
        if !(mu > 0.0) || !(delta > 0.0) {
            // not a descent direction: restart along steepest descent
            p.copy_from_slice(&r);
            success = true;
            lambda_bar = 0.0;
            since_restart = 0;
            continue;
        }
        let alpha = mu / delta;
        for ((t, x), d) in trial.iter_mut().zip(w.iter()).zip(&p) {
            *t = x + alpha * d;
        }
        let e_new = obj.value(&trial);
        let ratio = if e_new.is_finite() && all_finite(&trial) {
            2.0 * delta * (e - e_new) / (mu * mu)
        } else {
            f64::NEG_INFINITY
        };

        if ratio >= 0.0 {
            w.copy_from_slice(&trial);
            e = obj.value_and_gradient(w, &mut grad);
            let r_old = std::mem::replace(&mut r, grad.iter().map(|g| -g).collect());
            lambda_bar = 0.0;
            success = true;
            since_restart += 1;
            if since_restart >= n {
                p.copy_from_slice(&r);
                since_restart = 0;
            } else {
                let beta = (dot(&r, &r) - dot(&r, &r_old)) / mu;
                for (pi, ri) in p.iter_mut().zip(&r) {
                    *pi = ri + beta * *pi;
                }
            }
            if ratio >= 0.75 {
                lambda *= 0.25;
            }
        } else {
            lambda_bar = lambda;
            success = false;
        }
        if ratio < 0.25 {
            lambda += delta * (1.0 - ratio.max(-1.0e6)) / p2;
        }
    }
    params.epochs()
}
