//! Fully connected feed-forward networks.
//!
//! A [`Network`] stores all of its weights in one flat buffer. Layer `l`
//! owns a row-major block of shape `(units[l + 1], units[l] + 1)`: one row
//! per destination neuron, with the bias weight in the last column (the
//! bias acts as an implicit `+1` input). Trainers and genome operators work
//! directly on that buffer.

use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::{gemm, Matrix};

pub const MAX_HIDDEN_LAYERS: usize = 3;
pub const MAX_HIDDEN_UNITS: usize = 12;

/// Pre-activations are clamped to this magnitude before any exponential.
const ACTIVATION_CLAMP: f64 = 500.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransferFn {
    Linear,
    TanH,
    LogSig,
}

impl TransferFn {
    pub const ALL: [TransferFn; 3] = [TransferFn::Linear, TransferFn::TanH, TransferFn::LogSig];

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            TransferFn::Linear => x,
            TransferFn::TanH => x.clamp(-ACTIVATION_CLAMP, ACTIVATION_CLAMP).tanh(),
            TransferFn::LogSig => {
                let x = x.clamp(-ACTIVATION_CLAMP, ACTIVATION_CLAMP);
                1.0 / (1.0 + (-x).exp())
            }
        }
    }

    /// Derivative expressed through the function's own output `y = f(x)`.
    #[inline]
    pub fn derivative_at_output(self, y: f64) -> f64 {
        match self {
            TransferFn::Linear => 1.0,
            TransferFn::TanH => 1.0 - y * y,
            TransferFn::LogSig => y * (1.0 - y),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TransferFn::Linear => "linear",
            TransferFn::TanH => "tanh",
            TransferFn::LogSig => "logsig",
        }
    }
}

impl fmt::Display for TransferFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Layer sizes and hidden transfer functions. The output layer is always
/// linear.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Architecture {
    input_size: usize,
    hidden_sizes: Vec<usize>,
    hidden_fns: Vec<TransferFn>,
    output_size: usize,
}

impl Architecture {
    pub fn new(
        input_size: usize,
        hidden_sizes: Vec<usize>,
        hidden_fns: Vec<TransferFn>,
        output_size: usize,
    ) -> Result<Self> {
        if input_size == 0 || output_size == 0 {
            return Err(Error::invalid("input and output sizes must be positive"));
        }
        if hidden_sizes.is_empty() || hidden_sizes.len() > MAX_HIDDEN_LAYERS {
            return Err(Error::invalid(format!(
                "{} hidden layers, expected 1..={MAX_HIDDEN_LAYERS}",
                hidden_sizes.len()
            )));
        }
        if hidden_sizes.len() != hidden_fns.len() {
            return Err(Error::invalid(format!(
                "{} hidden sizes but {} transfer functions",
                hidden_sizes.len(),
                hidden_fns.len()
            )));
        }
        if let Some(&bad) = hidden_sizes
            .iter()
            .find(|&&h| h == 0 || h > MAX_HIDDEN_UNITS)
        {
            return Err(Error::invalid(format!(
                "hidden layer with {bad} units, expected 1..={MAX_HIDDEN_UNITS}"
            )));
        }
        Ok(Architecture {
            input_size,
            hidden_sizes,
            hidden_fns,
            output_size,
        })
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn hidden_sizes(&self) -> &[usize] {
        &self.hidden_sizes
    }

    pub fn hidden_fns(&self) -> &[TransferFn] {
        &self.hidden_fns
    }

    pub fn output_fn(&self) -> TransferFn {
        TransferFn::Linear
    }

    pub fn hidden_units(&self) -> usize {
        self.hidden_sizes.iter().sum()
    }

    /// Number of weight matrices (consecutive layer pairs).
    pub fn num_layers(&self) -> usize {
        self.hidden_sizes.len() + 1
    }

    /// Unit counts from input to output.
    pub fn units(&self) -> Vec<usize> {
        let mut u = Vec::with_capacity(self.hidden_sizes.len() + 2);
        u.push(self.input_size);
        u.extend_from_slice(&self.hidden_sizes);
        u.push(self.output_size);
        u
    }

    /// Transfer function of each non-input layer.
    pub fn layer_fns(&self) -> Vec<TransferFn> {
        let mut f = self.hidden_fns.clone();
        f.push(TransferFn::Linear);
        f
    }

    /// `(rows, cols)` of every weight matrix, bias column included.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        self.units().windows(2).map(|w| (w[1], w[0] + 1)).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layer_shapes().iter().map(|(r, c)| r * c).sum()
    }

    /// Same layer pattern, ignoring input/output sizes.
    pub fn same_shape(&self, other: &Architecture) -> bool {
        self.input_size == other.input_size
            && self.output_size == other.output_size
            && self.hidden_sizes == other.hidden_sizes
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.input_size)?;
        for (h, func) in self.hidden_sizes.iter().zip(&self.hidden_fns) {
            write!(f, "-{h}{}", func.name())?;
        }
        write!(f, "-{}", self.output_size)
    }
}

/// Node counts used by the complexity term: `used` sums input, hidden and
/// output nodes; `capacity` assumes every possible hidden layer is full.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeCount {
    pub used: usize,
    pub capacity: usize,
}

pub fn count_nodes(arch: &Architecture) -> NodeCount {
    NodeCount {
        used: arch.input_size + arch.hidden_units() + arch.output_size,
        capacity: arch.input_size + MAX_HIDDEN_LAYERS * MAX_HIDDEN_UNITS + arch.output_size,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    arch: Architecture,
    params: Vec<f64>,
}

impl Network {
    pub fn new(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        if params.len() != arch.param_count() {
            return Err(Error::shape(format!(
                "architecture {arch} needs {} weights, got {}",
                arch.param_count(),
                params.len()
            )));
        }
        if params.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("non-finite weight"));
        }
        Ok(Network { arch, params })
    }

    pub fn zeros(arch: Architecture) -> Self {
        let n = arch.param_count();
        Network {
            arch,
            params: vec![0.0; n],
        }
    }

    /// Builds a network from one matrix per layer pair.
    pub fn from_layers(arch: Architecture, layers: &[Matrix]) -> Result<Self> {
        let shapes = arch.layer_shapes();
        if layers.len() != shapes.len() {
            return Err(Error::shape(format!(
                "expected {} weight matrices, got {}",
                shapes.len(),
                layers.len()
            )));
        }
        let mut params = Vec::with_capacity(arch.param_count());
        for (l, (m, &shape)) in layers.iter().zip(&shapes).enumerate() {
            if m.shape() != shape {
                return Err(Error::shape(format!(
                    "layer {l} is {:?}, expected {shape:?}",
                    m.shape()
                )));
            }
            params.extend_from_slice(m.as_slice());
        }
        Network::new(arch, params)
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn into_params(self) -> Vec<f64> {
        self.params
    }

    pub fn layers(&self) -> Vec<Matrix> {
        let mut out = Vec::new();
        let mut off = 0;
        for (r, c) in self.arch.layer_shapes() {
            out.push(Matrix::from_vec(r, c, self.params[off..off + r * c].to_vec()).unwrap());
            off += r * c;
        }
        out
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.arch.input_size {
            return Err(Error::shape(format!(
                "input has {} values, network expects {}",
                input.len(),
                self.arch.input_size
            )));
        }
        let mut ws = Activations::new(&self.arch);
        self.forward_into(input, &mut ws);
        Ok(ws.output().to_vec())
    }

    /// Outputs for every row of `inputs`.
    pub fn forward_batch(&self, inputs: &Matrix) -> Result<Matrix> {
        if inputs.cols() != self.arch.input_size {
            return Err(Error::shape(format!(
                "inputs have {} columns, network expects {}",
                inputs.cols(),
                self.arch.input_size
            )));
        }
        let p = inputs.rows();
        let mut acts: Vec<Vec<f64>> = self.arch.units()[1..].iter().map(|&n| vec![0.0; n * p]).collect();
        self.forward_rows(inputs.as_slice(), p, &mut acts);
        Matrix::from_vec(p, self.arch.output_size, acts.pop().unwrap_or_default())
    }

    /// Batched forward pass over `p` row-major input patterns. `acts[l]`
    /// receives the `p x units` outputs of weight layer `l`.
    pub(crate) fn forward_rows(&self, inputs: &[f64], p: usize, acts: &mut [Vec<f64>]) {
        let mut off = 0;
        for l in 0..acts.len() {
            let (prev, rest) = acts.split_at_mut(l);
            let a: &[f64] = if l == 0 { inputs } else { &prev[l - 1] };
            let out = &mut rest[0];
            let fan_in = if l == 0 { self.arch.input_size } else { self.arch.hidden_sizes[l - 1] };
            let cols = fan_in + 1;
            let n = out.len() / p.max(1);
            let w = &self.params[off..off + n * cols];
            for row in out.chunks_exact_mut(n) {
                for (o, wr) in row.iter_mut().zip(w.chunks_exact(cols)) {
                    *o = wr[fan_in];
                }
            }
            gemm((p, fan_in, n), 1.0, a, (fan_in, 1), w, (1, cols), 1.0, out, (n, 1));
            let f = self.arch.hidden_fns.get(l).copied().unwrap_or(TransferFn::Linear);
            if f != TransferFn::Linear {
                out.iter_mut().for_each(|o| *o = f.apply(*o));
            }
            off += n * cols;
        }
    }

    /// Forward pass that keeps every layer's activations in `ws`.
    /// `input` must have `input_size` values.
    pub(crate) fn forward_into(&self, input: &[f64], ws: &mut Activations) {
        ws.layers[0].copy_from_slice(input);
        let mut off = 0;
        for l in 0..ws.fns.len() {
            let (prev, rest) = ws.layers.split_at_mut(l + 1);
            let a = &prev[l];
            let out = &mut rest[0];
            let cols = a.len() + 1;
            let f = ws.fns[l];
            for (j, o) in out.iter_mut().enumerate() {
                let row = &self.params[off + j * cols..off + (j + 1) * cols];
                let mut s = row[cols - 1];
                for (w, x) in row[..cols - 1].iter().zip(a) {
                    s += w * x;
                }
                *o = f.apply(s);
            }
            off += out.len() * cols;
        }
    }
}

/// Per-layer activation buffers reused across patterns.
#[derive(Clone, Debug)]
pub(crate) struct Activations {
    pub(crate) layers: Vec<Vec<f64>>,
    pub(crate) fns: Vec<TransferFn>,
}

impl Activations {
    pub(crate) fn new(arch: &Architecture) -> Self {
        Activations {
            layers: arch.units().into_iter().map(|n| vec![0.0; n]).collect(),
            fns: arch.layer_fns(),
        }
    }

    pub(crate) fn output(&self) -> &[f64] {
        self.layers.last().unwrap()
    }
}

/// `100 / (N * P) * sum of squared residuals` over `P` patterns and `N`
/// outputs.
pub fn nmse(outputs: &Matrix, targets: &Matrix) -> Result<f64> {
    if outputs.shape() != targets.shape() {
        return Err(Error::shape(format!(
            "outputs {:?} vs targets {:?}",
            outputs.shape(),
            targets.shape()
        )));
    }
    let (p, n) = outputs.shape();
    if p == 0 || n == 0 {
        return Err(Error::Empty("nmse needs at least one pattern and output"));
    }
    let sse: f64 = outputs
        .as_slice()
        .iter()
        .zip(targets.as_slice())
        .map(|(o, d)| (d - o) * (d - o))
        .sum();
    Ok(100.0 * sse / (n * p) as f64)
}

/// Index of the largest output; ties go to the lowest index.
pub fn winner_takes_all(output: &[f64]) -> Result<usize> {
    if output.is_empty() {
        return Err(Error::Empty("winner-takes-all on an empty output"));
    }
    let mut best = 0;
    for (i, &v) in output.iter().enumerate().skip(1) {
        if v > output[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Number of rows whose winning output matches the target's winning
/// (hot) column.
pub fn count_correct(outputs: &Matrix, targets: &Matrix) -> Result<usize> {
    if outputs.shape() != targets.shape() {
        return Err(Error::shape(format!(
            "outputs {:?} vs targets {:?}",
            outputs.shape(),
            targets.shape()
        )));
    }
    let mut correct = 0;
    for (o, t) in outputs.iter_rows().zip(targets.iter_rows()) {
        if winner_takes_all(o)? == winner_takes_all(t)? {
            correct += 1;
        }
    }
    Ok(correct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn arch(input: usize, hidden: &[usize], f: TransferFn, output: usize) -> Architecture {
        Architecture::new(input, hidden.to_vec(), vec![f; hidden.len()], output).unwrap()
    }

    #[test]
    fn transfer_values() {
        assert_eq!(TransferFn::LogSig.apply(0.0), 0.5);
        assert_eq!(TransferFn::Linear.apply(-3.2), -3.2);
        assert_eq!(TransferFn::TanH.apply(0.0), 0.0);
        for f in [TransferFn::TanH, TransferFn::LogSig] {
            assert!(f.apply(1e308).is_finite());
            assert!(f.apply(-1e308).is_finite());
        }
        let y = TransferFn::LogSig.apply(-1e6);
        assert!((0.0..1.0).contains(&y));
    }

    #[test]
    fn architecture_bounds() {
        assert!(Architecture::new(2, vec![], vec![], 1).is_err());
        assert!(Architecture::new(2, vec![13], vec![TransferFn::TanH], 1).is_err());
        assert!(Architecture::new(2, vec![0], vec![TransferFn::TanH], 1).is_err());
        assert!(Architecture::new(2, vec![1, 1, 1, 1], vec![TransferFn::TanH; 4], 1).is_err());
        assert!(Architecture::new(2, vec![3], vec![], 1).is_err());
        let a = arch(9, &[4, 3], TransferFn::TanH, 2);
        assert_eq!(a.layer_shapes(), vec![(4, 10), (3, 5), (2, 4)]);
        assert_eq!(a.param_count(), 40 + 15 + 8);
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let net = Network::zeros(arch(3, &[1], TransferFn::Linear, 2));
        assert_eq!(net.forward(&[1.0, -2.0, 5.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_net() {
        let net = Network::new(arch(1, &[1], TransferFn::Linear, 1), vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(net.forward(&[2.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn input_shape_error() {
        let net = Network::zeros(arch(2, &[1], TransferFn::Linear, 1));
        assert!(matches!(net.forward(&[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn two_two_two_tanh_matches_hand_evaluation() {
        // hidden: h_j = tanh(w_j0 x0 + w_j1 x1 + b_j); output: linear
        let w1 = Matrix::from_rows(&[[0.5, -0.25, 0.1], [0.3, 0.8, -0.2]]).unwrap();
        let w2 = Matrix::from_rows(&[[1.0, -1.0, 0.05], [0.4, 0.6, 0.0]]).unwrap();
        let net = Network::from_layers(arch(2, &[2], TransferFn::TanH, 2), &[w1, w2]).unwrap();
        let x = [0.7, -0.4];
        let h0 = (0.5 * 0.7 - 0.25 * -0.4 + 0.1_f64).tanh();
        let h1 = (0.3 * 0.7 + 0.8 * -0.4 - 0.2_f64).tanh();
        let expected = [h0 - h1 + 0.05, 0.4 * h0 + 0.6 * h1];
        let out = net.forward(&x).unwrap();
        assert_relative_eq!(out[0], expected[0], epsilon = 1e-15);
        assert_relative_eq!(out[1], expected[1], epsilon = 1e-15);
    }

    #[test]
    fn nmse_examples() {
        let t = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(nmse(&t, &t).unwrap(), 0.0);
        let one = Matrix::from_rows(&[[1.0]]).unwrap();
        let zero = Matrix::from_rows(&[[0.0]]).unwrap();
        assert_eq!(nmse(&zero, &one).unwrap(), 100.0);
        let o = Matrix::from_rows(&[[0.5, 0.5], [0.5, 0.5]]).unwrap();
        assert_eq!(nmse(&o, &t).unwrap(), 25.0);
        assert!(nmse(&one, &t).is_err());
    }

    #[test]
    fn wta_examples() {
        assert_eq!(winner_takes_all(&[0.2, 0.9, 0.1]).unwrap(), 1);
        assert_eq!(winner_takes_all(&[5.0]).unwrap(), 0);
        assert_eq!(winner_takes_all(&[0.4, 0.4]).unwrap(), 0);
        assert!(winner_takes_all(&[]).is_err());
    }

    #[test]
    fn node_count_examples() {
        let full = arch(9, &[12, 12, 12], TransferFn::TanH, 2);
        assert_eq!(count_nodes(&full), NodeCount { used: 47, capacity: 47 });
        let small = arch(9, &[4], TransferFn::TanH, 2);
        assert_eq!(count_nodes(&small), NodeCount { used: 15, capacity: 47 });
        let tiny = arch(8, &[1], TransferFn::TanH, 2);
        assert_eq!(count_nodes(&tiny), NodeCount { used: 11, capacity: 46 });
    }

    fn arb_net() -> impl Strategy<Value = (Network, Vec<f64>)> {
        (
            1usize..5,
            prop::collection::vec((1usize..=12, 0usize..3), 1..=3),
            1usize..4,
        )
            .prop_flat_map(|(i, hidden, o)| {
                let a = Architecture::new(
                    i,
                    hidden.iter().map(|h| h.0).collect(),
                    hidden.iter().map(|h| TransferFn::ALL[h.1]).collect(),
                    o,
                )
                .unwrap();
                let n = a.param_count();
                (
                    Just(a),
                    prop::collection::vec(-2.0f64..2.0, n),
                    prop::collection::vec(-3.0f64..3.0, i),
                )
            })
            .prop_map(|(a, p, x)| (Network::new(a, p).unwrap(), x))
    }

    proptest! {
        #[test]
        fn forward_is_deterministic((net, x) in arb_net()) {
            let a = net.forward(&x).unwrap();
            let b = net.forward(&x).unwrap();
            prop_assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }

        #[test]
        fn wta_matches_brute_force_and_shift(v in prop::collection::vec(-10.0f64..10.0, 1..8), c in -5.0f64..5.0) {
            let w = winner_takes_all(&v).unwrap();
            let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let first = v.iter().position(|&x| x == max).unwrap();
            prop_assert_eq!(w, first);
            // shifting by a constant keeps the order of distinct values
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let ms = shifted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let strict = v.iter().filter(|&&x| (max - x).abs() < 1e-9).count() == 1
                && shifted.iter().filter(|&&x| x == ms).count() == 1;
            if strict {
                prop_assert_eq!(winner_takes_all(&shifted).unwrap(), w);
            }
        }

        #[test]
        fn nmse_permutation_invariant(rows in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..10), seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            let o: Vec<[f64; 1]> = rows.iter().map(|r| [r.0]).collect();
            let t: Vec<[f64; 1]> = rows.iter().map(|r| [r.1]).collect();
            let mut idx: Vec<usize> = (0..rows.len()).collect();
            idx.shuffle(&mut crate::rng::Stream::new(seed).rng());
            let om = Matrix::from_rows(&o).unwrap();
            let tm = Matrix::from_rows(&t).unwrap();
            let a = nmse(&om, &tm).unwrap();
            let b = nmse(&om.select_rows(&idx), &tm.select_rows(&idx)).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn used_nodes_within_capacity(i in 1usize..60, o in 1usize..10, hidden in prop::collection::vec(1usize..=12, 1..=3)) {
            let n = hidden.len();
            let a = Architecture::new(i, hidden, vec![TransferFn::TanH; n], o).unwrap();
            let c = count_nodes(&a);
            prop_assert!(0 < c.used && c.used <= c.capacity);
        }
    }
}
