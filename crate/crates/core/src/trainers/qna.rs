//! BFGS quasi-Newton with a backtracking line search.
//!
//! Rule parameters:
//! - `step_size`: longest step (Euclidean norm) the line search may try.
//! - `step_limit`: factor the trial step is multiplied by after a rejection.
//! - `perf_scale`: sufficient-decrease constant of the Armijo test.
//! - `step_scale`: smallest fraction of the first trial step before the
//!   search gives up and the inverse Hessian is reset.

use super::{all_finite, dot, Objective, TrainParams};
use crate::data::Dataset;
use crate::mlp::Network;

pub(super) fn run(net: &Network, data: &Dataset, params: &TrainParams, w: &mut [f64]) -> usize {
    let v = params.values();
    let (max_step, shrink, c1, min_fraction) = (v[0], v[1], v[2], v[3]);
    let n = w.len();
    let mut obj = Objective::new(net, data);
    let mut grad = vec![0.0; n];
    let mut new_grad = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut hy = vec![0.0; n];
    let mut h = identity(n);
    let mut fresh = true;

    let mut e = obj.value_and_gradient(w, &mut grad);
    for epoch in 0..params.epochs() {
        if dot(&grad, &grad) == 0.0 {
            return epoch;
        }
        mat_vec(&h, &grad, &mut dir);
        dir.iter_mut().for_each(|d| *d = -*d);
        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) {
            h = identity(n);
            fresh = true;
            dir.iter_mut().zip(&grad).for_each(|(d, g)| *d = -g);
            slope = -dot(&grad, &grad);
        }

        let norm = dot(&dir, &dir).sqrt();
        let first = if norm > max_step { max_step / norm } else { 1.0 };
        let mut alpha = first;
        let accepted = loop {
            for ((t, x), d) in trial.iter_mut().zip(w.iter()).zip(&dir) {
                *t = x + alpha * d;
            }
            let et = obj.value(&trial);
            if et.is_finite() && et <= e + c1 * alpha * slope && all_finite(&trial) {
                break true;
            }
            alpha *= shrink;
            if alpha < min_fraction * first {
                break false;
            }
        };
        if !accepted {
            h = identity(n);
            fresh = true;
            continue;
        }

        let e_new = obj.value_and_gradient(&trial, &mut new_grad);
        for i in 0..n {
            s[i] = trial[i] - w[i];
            y[i] = new_grad[i] - grad[i];
        }
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if fresh {
                let scale = sy / dot(&y, &y);
                for i in 0..n {
                    h[i * n + i] = scale;
                }
                fresh = false;
            }
            bfgs_update(&mut h, &s, &y, sy, &mut hy);
        }
        w.copy_from_slice(&trial);
        grad.copy_from_slice(&new_grad);
        e = e_new;
    }
    params.epochs()
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

fn mat_vec(m: &[f64], x: &[f64], out: &mut [f64]) {
    let n = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = dot(&m[i * n..(i + 1) * n], x);
    }
}

/// Inverse-Hessian update
/// `H += (sy + y'Hy)/sy^2 * ss' - (Hy s' + s (Hy)')/sy`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, hy: &mut [f64]) {
    let n = s.len();
    mat_vec(h, y, hy);
    let yhy = dot(y, hy);
    let a = (sy + yhy) / (sy * sy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += a * s[i] * s[j] - (hy[i] * s[j] + s[i] * hy[j]) / sy;
        }
    }
}
