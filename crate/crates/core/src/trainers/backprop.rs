//! Error, gradient and Jacobian of a network over a dataset, computed for
//! all patterns at once.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::gemm;
use crate::mlp::{Network, TransferFn};

/// Reusable buffers for one network shape and batch size.
pub(crate) struct Workspace {
    /// `(units, fan_in, offset)` per weight layer.
    layers: Vec<(usize, usize, usize)>,
    fns: Vec<TransferFn>,
    patterns: usize,
    /// `patterns x units` outputs per layer.
    acts: Vec<Vec<f64>>,
    /// `patterns x units` error signals per layer.
    deltas: Vec<Vec<f64>>,
}

impl Workspace {
    pub(crate) fn new(net: &Network, patterns: usize) -> Self {
        let mut off = 0;
        let layers: Vec<_> = net
            .arch()
            .layer_shapes()
            .into_iter()
            .map(|(r, c)| {
                let l = (r, c - 1, off);
                off += r * c;
                l
            })
            .collect();
        let bufs = || layers.iter().map(|l| vec![0.0; l.0 * patterns]).collect::<Vec<_>>();
        Workspace {
            fns: net.arch().layer_fns(),
            patterns,
            acts: bufs(),
            deltas: bufs(),
            layers,
        }
    }

    fn forward(&mut self, net: &Network, data: &Dataset) {
        debug_assert_eq!(data.len(), self.patterns);
        net.forward_rows(data.features().as_slice(), self.patterns, &mut self.acts);
    }

    fn output(&self) -> &[f64] {
        self.acts.last().map_or(&[], Vec::as_slice)
    }

    /// Input of weight layer `l`.
    fn input<'b>(&'b self, data: &'b Dataset, l: usize) -> &'b [f64] {
        if l == 0 {
            data.features().as_slice()
        } else {
            &self.acts[l - 1]
        }
    }

    /// Turns the top deltas (dE/d output, already stored) into error
    /// signals of every layer.
    fn backward(&mut self, params: &[f64]) {
        let p = self.patterns;
        let top = self.layers.len() - 1;
        for l in (0..=top).rev() {
            let f = self.fns[l];
            if f != TransferFn::Linear {
                for (d, &y) in self.deltas[l].iter_mut().zip(&self.acts[l]) {
                    *d *= f.derivative_at_output(y);
                }
            }
            if l > 0 {
                let (units, fan_in, off) = self.layers[l];
                let (lower, upper) = self.deltas.split_at_mut(l);
                let w = &params[off..off + units * (fan_in + 1)];
                gemm(
                    (p, units, fan_in),
                    1.0,
                    &upper[0],
                    (units, 1),
                    w,
                    (fan_in + 1, 1),
                    0.0,
                    &mut lower[l - 1],
                    (fan_in, 1),
                );
            }
        }
    }

    /// Adds `dE/dw` from the current error signals into `grad`.
    fn accumulate(&self, data: &Dataset, grad: &mut [f64]) {
        let p = self.patterns;
        for (l, &(units, fan_in, off)) in self.layers.iter().enumerate() {
            let cols = fan_in + 1;
            let g = &mut grad[off..off + units * cols];
            let d = &self.deltas[l];
            gemm(
                (units, p, fan_in),
                1.0,
                d,
                (1, units),
                self.input(data, l),
                (fan_in, 1),
                1.0,
                g,
                (cols, 1),
            );
            for row in d.chunks_exact(units) {
                for (gj, &dj) in g.chunks_exact_mut(cols).zip(row) {
                    gj[fan_in] += dj;
                }
            }
        }
    }
}

fn check(net: &Network, data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Empty("training batch"));
    }
    if data.num_attributes() != net.arch().input_size()
        || data.num_classes() != net.arch().output_size()
    {
        return Err(Error::shape(format!(
            "network {} vs data with {} attributes and {} classes",
            net.arch(),
            data.num_attributes(),
            data.num_classes()
        )));
    }
    Ok(())
}

/// Sum of squared residuals over every pattern and output.
pub(crate) fn sse(net: &Network, data: &Dataset, ws: &mut Workspace) -> f64 {
    ws.forward(net, data);
    ws.output()
        .iter()
        .zip(data.targets().as_slice())
        .map(|(o, t)| (o - t) * (o - t))
        .sum()
}

/// Sum of squared residuals and its gradient `dE/dw` for
/// `E = 1/2 * sse`.
pub(crate) fn sse_and_gradient(
    net: &Network,
    data: &Dataset,
    ws: &mut Workspace,
    grad: &mut [f64],
) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    ws.forward(net, data);
    let top = ws.layers.len() - 1;
    let mut total = 0.0;
    let (acts, deltas) = (&ws.acts[top], &mut ws.deltas[top]);
    for ((d, o), t) in deltas.iter_mut().zip(acts).zip(data.targets().as_slice()) {
        *d = o - t;
        total += *d * *d;
    }
    ws.backward(net.params());
    ws.accumulate(data, grad);
    total
}

/// Fills `jac` (row-major, `P*N` rows by `W` columns) with
/// `d o_{p,k} / d w` and `resid` with `o - d`, pattern-major.
pub(crate) fn jacobian(
    net: &Network,
    data: &Dataset,
    ws: &mut Workspace,
    jac: &mut [f64],
    resid: &mut [f64],
) {
    let w = net.params().len();
    let n = net.arch().output_size();
    let top = ws.layers.len() - 1;
    ws.forward(net, data);
    for ((r, o), t) in resid.iter_mut().zip(ws.output()).zip(data.targets().as_slice()) {
        *r = o - t;
    }
    for k in 0..n {
        for row in ws.deltas[top].chunks_exact_mut(n) {
            row.iter_mut().enumerate().for_each(|(j, d)| *d = if j == k { 1.0 } else { 0.0 });
        }
        ws.backward(net.params());
        for (l, &(units, fan_in, off)) in ws.layers.iter().enumerate() {
            let cols = fan_in + 1;
            let input = ws.input(data, l);
            for (p, (d, x)) in ws.deltas[l]
                .chunks_exact(units)
                .zip(input.chunks_exact(fan_in))
                .enumerate()
            {
                let row = p * n + k;
                let jr = &mut jac[row * w + off..row * w + off + units * cols];
                for (g, &dj) in jr.chunks_exact_mut(cols).zip(d) {
                    for (gi, &xi) in g[..fan_in].iter_mut().zip(x) {
                        *gi = dj * xi;
                    }
                    g[fan_in] = dj;
                }
            }
        }
    }
}

/// Gradient of `1/2 * sum (d - o)^2` over `batch`, laid out like the
/// network's weights.
pub fn gradient(net: &Network, batch: &Dataset) -> Result<Vec<f64>> {
    check(net, batch)?;
    let mut ws = Workspace::new(net, batch.len());
    let mut g = vec![0.0; net.params().len()];
    sse_and_gradient(net, batch, &mut ws, &mut g);
    Ok(g)
}

pub(crate) fn validate(net: &Network, data: &Dataset) -> Result<()> {
    check(net, data)
}
