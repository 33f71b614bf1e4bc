//! Levenberg-Marquardt: damped Gauss-Newton steps on the summed squared
//! error. The damping starts at the rule's learning rate and is divided by
//! 10 on an accepted step, multiplied by 10 on a rejected one.

use super::{all_finite, dot, Objective, TrainParams};
use crate::data::Dataset;
use crate::mlp::Network;

const DAMPING_FACTOR: f64 = 10.0;
const MAX_DAMPING: f64 = 1.0e10;
const MIN_DAMPING: f64 = 1.0e-20;

pub(super) fn run(net: &Network, data: &Dataset, params: &TrainParams, w: &mut [f64]) -> usize {
    let n = w.len();
    let mut obj = Objective::new(net, data);
    let rows = obj.rows();
    let mut jac = vec![0.0; rows * n];
    let mut resid = vec![0.0; rows];
    let mut jtj = vec![0.0; n * n];
    let mut system = vec![0.0; n * n];
    let mut jte = vec![0.0; n];
    let mut step = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut mu = params.values()[0];

    for epoch in 0..params.epochs() {
        obj.jacobian(w, &mut jac, &mut resid);
        let sse = dot(&resid, &resid);
        if sse == 0.0 {
            return epoch;
        }
        normal_matrix(&jac, rows, n, &mut jtj);
        jte.iter_mut().for_each(|g| *g = 0.0);
        for (row, &r) in jac.chunks_exact(n).zip(&resid) {
            for (g, &j) in jte.iter_mut().zip(row) {
                *g += j * r;
            }
        }

        loop {
            system.copy_from_slice(&jtj);
            for i in 0..n {
                system[i * n + i] += mu;
            }
            let solved = cholesky(&mut system, n) && {
                for (s, g) in step.iter_mut().zip(&jte) {
                    *s = -g;
                }
                cholesky_solve(&system, n, &mut step);
                all_finite(&step)
            };
            if solved {
                for ((t, x), s) in trial.iter_mut().zip(w.iter()).zip(&step) {
                    *t = x + s;
                }
                let trial_sse = 2.0 * data.len() as f64 * obj.value(&trial);
                if trial_sse.is_finite() && trial_sse < sse && all_finite(&trial) {
                    w.copy_from_slice(&trial);
                    mu = (mu / DAMPING_FACTOR).max(MIN_DAMPING);
                    break;
                }
            }
            mu *= DAMPING_FACTOR;
            if mu > MAX_DAMPING {
                return epoch + 1;
            }
        }
    }
    params.epochs()
}

const BLOCK: usize = 32;

/// `out = J^T J` for a row-major `rows x n` Jacobian. Only the lower
/// triangle is multiplied; the upper one is mirrored.
fn normal_matrix(jac: &[f64], rows: usize, n: usize, out: &mut [f64]) {
    for b0 in (0..n).step_by(BLOCK) {
        let b1 = (b0 + BLOCK).min(n);
        // SAFETY: `jac` is rows*n and `out` n*n. A is the transpose of
        // columns b0.. of J, B is columns b0..b1 of J and C is the block
        // of `out` at rows b0.., columns b0..b1.
        unsafe {
            matrixmultiply::dgemm(
                n - b0,
                rows,
                b1 - b0,
                1.0,
                jac.as_ptr().add(b0),
                1,
                n as isize,
                jac.as_ptr().add(b0),
                n as isize,
                1,
                0.0,
                out.as_mut_ptr().add(b0 * n + b0),
                n as isize,
                1,
            );
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            out[i * n + j] = out[j * n + i];
        }
    }
}

/// In-place lower Cholesky factor of a symmetric matrix (only the lower
/// triangle is read); false when the matrix is not numerically positive
/// definite. Left-looking by column blocks.
fn cholesky(a: &mut [f64], n: usize) -> bool {
    assert_eq!(a.len(), n * n);
    for k0 in (0..n).step_by(BLOCK) {
        let k1 = (k0 + BLOCK).min(n);
        if k0 > 0 {
            let p = a.as_mut_ptr();
            // SAFETY: reads columns 0..k0 of rows k0..n and writes columns
            // k0..k1 of the same rows; the regions do not overlap.
            unsafe {
                matrixmultiply::dgemm(
                    n - k0,
                    k0,
                    k1 - k0,
                    -1.0,
                    p.add(k0 * n),
                    n as isize,
                    1,
                    p.add(k0 * n),
                    1,
                    n as isize,
                    1.0,
                    p.add(k0 * n + k0),
                    n as isize,
                    1,
                );
            }
        }
        for j in k0..k1 {
            let row_j = j * n;
            let d = a[row_j + j] - dot(&a[row_j + k0..row_j + j], &a[row_j + k0..row_j + j]);
            if !(d > 0.0) || !d.is_finite() {
                return false;
            }
            let d = d.sqrt();
            a[row_j + j] = d;
            let (head, rest) = a.split_at_mut((j + 1) * n);
            let lj = &head[row_j + k0..row_j + j];
            for row in rest.chunks_exact_mut(n) {
                row[j] = (row[j] - dot(&row[k0..j], lj)) / d;
            }
        }
    }
    true
}

fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        b[i] = (b[i] - dot(&l[i * n..i * n + i], &b[..i])) / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}
