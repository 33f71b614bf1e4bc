//! Real-coded genomes for the three search layers and their variation
//! operators.
//!
//! - [`WeightGenome`]: initial weights for one fixed architecture. Crossover
//!   stitches row blocks of the parents' matrices; mutation adds a sparse
//!   random matrix.
//! - [`ArchGenome`]: hidden layer sizes and transfer functions.
//! - [`RuleGenome`]: parameters of one learning algorithm.

use rand::seq::index;
use rand::Rng;

use crate::cga::Member;
use crate::error::{Error, Result};
use crate::mlp::{Architecture, Network, TransferFn, MAX_HIDDEN_LAYERS, MAX_HIDDEN_UNITS};
use crate::trainers::{TrainAlgo, TrainParams};

pub const INITIAL_WEIGHT_RANGE: (f64, f64) = (-0.05, 0.05);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MutationRanges {
    /// Interval of the values added by sparse weight mutation.
    pub fx: (f64, f64),
    /// Integer offsets added to hidden layer sizes.
    pub arqval: (i32, i32),
    /// Fraction of each weight matrix touched by a mutation.
    pub sparse_density: f64,
    /// Relative change applied to a learning-rule parameter.
    pub rate_delta: f64,
}

impl Default for MutationRanges {
    fn default() -> Self {
        MutationRanges {
            fx: (-0.5, 0.5),
            arqval: (-2, 5),
            sparse_density: 0.40,
            rate_delta: 0.40,
        }
    }
}

/// Common interface the cellular engine uses to breed genomes.
pub trait Variation {
    type Genome: Clone;

    fn crossover<R: Rng + ?Sized>(
        &self,
        a: &Self::Genome,
        b: &Self::Genome,
        rng: &mut R,
    ) -> Result<Self::Genome>;

    fn mutate<R: Rng + ?Sized>(&self, g: &Self::Genome, rng: &mut R) -> Self::Genome;
}

// ---------------------------------------------------------------------------
// Weights
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct WeightGenome {
    net: Network,
}

impl WeightGenome {
    pub fn random<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Self {
        let (lo, hi) = INITIAL_WEIGHT_RANGE;
        let w = (0..arch.param_count())
            .map(|_| rng.gen_range(lo..=hi))
            .collect();
        WeightGenome {
            net: Network::new(arch.clone(), w).expect("sized weights"),
        }
    }

    pub fn from_network(net: Network) -> Self {
        WeightGenome { net }
    }

    pub fn arch(&self) -> &Architecture {
        self.net.arch()
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn weights(&self) -> &[f64] {
        self.net.params()
    }
}

/// Row-block crossover. `a` always contributes `ceil(rows/2)` rows of each
/// matrix; with `a_on_top` its rows form the top of the child, otherwise the
/// bottom.
pub fn ppi_crossover_with(a: &WeightGenome, b: &WeightGenome, a_on_top: bool) -> Result<WeightGenome> {
    if a.arch() != b.arch() {
        return Err(Error::invalid(format!(
            "crossover between architectures {} and {}",
            a.arch(),
            b.arch()
        )));
    }
    let mut child = Vec::with_capacity(a.weights().len());
    let mut off = 0;
    for (rows, cols) in a.arch().layer_shapes() {
        let from_a = rows.div_ceil(2);
        for r in 0..rows {
            let take_a = if a_on_top { r < from_a } else { r >= rows - from_a };
            let src = if take_a { a.weights() } else { b.weights() };
            child.extend_from_slice(&src[off + r * cols..off + (r + 1) * cols]);
        }
        off += rows * cols;
    }
    Ok(WeightGenome {
        net: Network::new(a.arch().clone(), child)?,
    })
}

pub fn ppi_crossover<R: Rng + ?Sized>(a: &WeightGenome, b: &WeightGenome, rng: &mut R) -> Result<WeightGenome> {
    ppi_crossover_with(a, b, rng.gen_bool(0.5))
}

/// Adds a sparse matrix to every weight matrix: `round(density * entries)`
/// entries at distinct random positions, each uniform in `fx`.
pub fn ppi_mutate<R: Rng + ?Sized>(g: &WeightGenome, ranges: &MutationRanges, rng: &mut R) -> WeightGenome {
    let mut w = g.weights().to_vec();
    let (lo, hi) = ranges.fx;
    let mut off = 0;
    for (rows, cols) in g.arch().layer_shapes() {
        let entries = rows * cols;
        let k = ((ranges.sparse_density * entries as f64).round() as usize).min(entries);
        for pos in index::sample(rng, entries, k) {
            w[off + pos] += rng.gen_range(lo..=hi);
        }
        off += entries;
    }
    WeightGenome {
        net: Network::new(g.arch().clone(), w).expect("finite mutation"),
    }
}

#[derive(Clone, Debug, Default)]
pub struct WeightOps {
    pub ranges: MutationRanges,
}

impl Variation for WeightOps {
    type Genome = WeightGenome;

    fn crossover<R: Rng + ?Sized>(&self, a: &WeightGenome, b: &WeightGenome, rng: &mut R) -> Result<WeightGenome> {
        ppi_crossover(a, b, rng)
    }

    fn mutate<R: Rng + ?Sized>(&self, g: &WeightGenome, rng: &mut R) -> WeightGenome {
        ppi_mutate(g, &self.ranges, rng)
    }
}

// ---------------------------------------------------------------------------
// Architectures
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ArchGenome {
    dims: Vec<usize>,
    fns: Vec<TransferFn>,
}

impl ArchGenome {
    pub fn new(dims: Vec<usize>, fns: Vec<TransferFn>) -> Result<Self> {
        let g = ArchGenome { dims, fns };
        g.validate()?;
        Ok(g)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let n = rng.gen_range(1..=MAX_HIDDEN_LAYERS);
        let (dims, fns) = (0..n).map(|_| random_layer(rng)).unzip();
        ArchGenome { dims, fns }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dims.len();
        if !(1..=MAX_HIDDEN_LAYERS).contains(&n) || self.fns.len() != n {
            return Err(Error::invalid(format!(
                "{n} hidden sizes with {} functions",
                self.fns.len()
            )));
        }
        if self.dims.iter().any(|&d| !(1..=MAX_HIDDEN_UNITS).contains(&d)) {
            return Err(Error::invalid(format!("hidden sizes {:?} out of range", self.dims)));
        }
        Ok(())
    }

    pub fn num_hidden(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn fns(&self) -> &[TransferFn] {
        &self.fns
    }

    pub fn hidden_units(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn architecture(&self, input: usize, output: usize) -> Result<Architecture> {
        Architecture::new(input, self.dims.clone(), self.fns.clone(), output)
    }
}

fn random_layer<R: Rng + ?Sized>(rng: &mut R) -> (usize, TransferFn) {
    (
        rng.gen_range(1..=MAX_HIDDEN_UNITS),
        TransferFn::ALL[rng.gen_range(0..TransferFn::ALL.len())],
    )
}

/// Child depth is the parents' mean depth, rounded up when the draw
/// exceeds `probs` and down otherwise; every child layer picks a
/// `(size, function)` pair uniformly from the union of the parents' layers.
pub fn paf_crossover<R: Rng + ?Sized>(a: &ArchGenome, b: &ArchGenome, probs: f64, rng: &mut R) -> ArchGenome {
    let total = a.num_hidden() + b.num_hidden();
    let n = if rng.gen::<f64>() > probs {
        total.div_ceil(2)
    } else {
        total / 2
    }
    .clamp(1, MAX_HIDDEN_LAYERS);
    let pool: Vec<(usize, TransferFn)> = a
        .dims
        .iter()
        .copied()
        .zip(a.fns.iter().copied())
        .chain(b.dims.iter().copied().zip(b.fns.iter().copied()))
        .collect();
    let (dims, fns) = (0..n).map(|_| pool[rng.gen_range(0..pool.len())]).unzip();
    ArchGenome { dims, fns }
}

/// Outcome of the depth decision in architecture mutation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArchChange {
    /// Change the number of hidden layers to this value.
    Depth(usize),
    /// Keep the depth and add integer offsets to every layer size.
    Perturb,
}

/// Depth decision for a draw `u` in `[0, 1]`.
pub fn arch_change(num_hidden: usize, u: f64) -> ArchChange {
    match num_hidden {
        1 if u >= 0.6 => ArchChange::Depth(3),
        1 if u >= 0.5 => ArchChange::Depth(2),
        2 if u >= 0.6 => ArchChange::Depth(3),
        2 if u >= 0.5 => ArchChange::Depth(1),
        3 if u >= 0.6 => ArchChange::Depth(2),
        3 if u >= 0.5 => ArchChange::Depth(1),
        _ => ArchChange::Perturb,
    }
}

/// Adds `offsets` to `dims` element-wise, clamping to `[1, 12]`.
pub fn perturb_dims(dims: &[usize], offsets: &[i32]) -> Vec<usize> {
    dims.iter()
        .zip(offsets)
        .map(|(&d, &o)| (d as i64 + o as i64).clamp(1, MAX_HIDDEN_UNITS as i64) as usize)
        .collect()
}

pub fn apply_arch_change<R: Rng + ?Sized>(
    g: &ArchGenome,
    change: ArchChange,
    ranges: &MutationRanges,
    rng: &mut R,
) -> ArchGenome {
    let mut child = g.clone();
    match change {
        ArchChange::Depth(n) if n < child.num_hidden() => {
            child.dims.truncate(n);
            child.fns.truncate(n);
        }
        ArchChange::Depth(n) => {
            while child.num_hidden() < n {
                let (d, f) = random_layer(rng);
                child.dims.push(d);
                child.fns.push(f);
            }
        }
        ArchChange::Perturb => {
            let (lo, hi) = ranges.arqval;
            let offsets: Vec<i32> = (0..child.num_hidden())
                .map(|_| rng.gen_range(lo..=hi))
                .collect();
            child.dims = perturb_dims(&child.dims, &offsets);
        }
    }
    child
}

pub fn paf_mutate<R: Rng + ?Sized>(g: &ArchGenome, ranges: &MutationRanges, rng: &mut R) -> ArchGenome {
    let u: f64 = rng.gen();
    apply_arch_change(g, arch_change(g.num_hidden(), u), ranges, rng)
}

#[derive(Clone, Debug)]
pub struct ArchOps {
    pub ranges: MutationRanges,
    /// Threshold of the depth rounding draw in crossover.
    pub probs: f64,
}

impl Default for ArchOps {
    fn default() -> Self {
        ArchOps {
            ranges: MutationRanges::default(),
            probs: 0.5,
        }
    }
}

impl Variation for ArchOps {
    type Genome = ArchGenome;

    fn crossover<R: Rng + ?Sized>(&self, a: &ArchGenome, b: &ArchGenome, rng: &mut R) -> Result<ArchGenome> {
        Ok(paf_crossover(a, b, self.probs, rng))
    }

    fn mutate<R: Rng + ?Sized>(&self, g: &ArchGenome, rng: &mut R) -> ArchGenome {
        paf_mutate(g, &self.ranges, rng)
    }
}

// ---------------------------------------------------------------------------
// Learning rules
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct RuleGenome {
    params: TrainParams,
}

impl RuleGenome {
    pub fn new(params: TrainParams) -> Self {
        RuleGenome { params }
    }

    pub fn random<R: Rng + ?Sized>(algo: TrainAlgo, epochs: usize, rng: &mut R) -> Result<Self> {
        Ok(RuleGenome {
            params: TrainParams::random(algo, epochs, rng)?,
        })
    }

    pub fn params(&self) -> &TrainParams {
        &self.params
    }

    pub fn algo(&self) -> TrainAlgo {
        self.params.algo()
    }

    pub fn values(&self) -> &[f64] {
        self.params.values()
    }

    fn with_values(&self, values: Vec<f64>) -> RuleGenome {
        RuleGenome {
            params: TrainParams::clamped(self.algo(), values, self.params.epochs())
                .expect("clamped parameters are valid"),
        }
    }
}

/// Each child parameter is uniform between the parents' values.
pub fn pra_crossover<R: Rng + ?Sized>(a: &RuleGenome, b: &RuleGenome, rng: &mut R) -> Result<RuleGenome> {
    if a.algo() != b.algo() {
        return Err(Error::invalid(format!(
            "crossover between {} and {} rules",
            a.algo(),
            b.algo()
        )));
    }
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| {
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            if lo == hi {
                lo
            } else {
                rng.gen_range(lo..=hi)
            }
        })
        .collect();
    Ok(a.with_values(values))
}

/// Each parameter, with probability one half, is scaled by
/// `1 + rate_delta` or `1 - rate_delta` (fair coin), then clamped.
pub fn pra_mutate<R: Rng + ?Sized>(g: &RuleGenome, ranges: &MutationRanges, rng: &mut R) -> RuleGenome {
    let values = g
        .values()
        .iter()
        .map(|&v| {
            if rng.gen_bool(0.5) {
                let up = rng.gen_bool(0.5);
                scale_rate(v, ranges.rate_delta, up)
            } else {
                v
            }
        })
        .collect();
    g.with_values(values)
}

pub fn scale_rate(v: f64, delta: f64, up: bool) -> f64 {
    if up {
        v * (1.0 + delta)
    } else {
        v * (1.0 - delta)
    }
}

#[derive(Clone, Debug, Default)]
pub struct RuleOps {
    pub ranges: MutationRanges,
}

impl Variation for RuleOps {
    type Genome = RuleGenome;

    fn crossover<R: Rng + ?Sized>(&self, a: &RuleGenome, b: &RuleGenome, rng: &mut R) -> Result<RuleGenome> {
        pra_crossover(a, b, rng)
    }

    fn mutate<R: Rng + ?Sized>(&self, g: &RuleGenome, rng: &mut R) -> RuleGenome {
        pra_mutate(g, &self.ranges, rng)
    }
}

// A bare genome can live in a grid on its own.
macro_rules! self_member {
    ($($t:ty),*) => {$(
        impl Member for $t {
            type Genome = $t;

            fn genome(&self) -> &$t {
                self
            }
        }
    )*};
}

self_member!(WeightGenome, ArchGenome, RuleGenome);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::rng::Stream;
    use crate::trainers::MAX_EPOCHS;

    fn arch(rows_hidden: usize) -> Architecture {
        Architecture::new(2, vec![rows_hidden], vec![TransferFn::TanH], 2).unwrap()
    }

    fn filled(a: &Architecture, v: f64) -> WeightGenome {
        WeightGenome::from_network(Network::new(a.clone(), vec![v; a.param_count()]).unwrap())
    }

    #[test]
    fn initial_weights_in_range() {
        let a = Architecture::new(9, vec![12, 12, 12], vec![TransferFn::LogSig; 3], 2).unwrap();
        let g = WeightGenome::random(&a, &mut Stream::new(1).rng());
        assert!(g.weights().iter().all(|w| (-0.05..=0.05).contains(w)));
    }

    #[test]
    fn ppi_crossover_identical_parents() {
        let a = WeightGenome::random(&arch(5), &mut Stream::new(2).rng());
        for top in [true, false] {
            assert_eq!(ppi_crossover_with(&a, &a, top).unwrap(), a);
        }
    }

    #[test]
    fn ppi_crossover_four_rows() {
        let ar = arch(4);
        let child = ppi_crossover_with(&filled(&ar, 0.0), &filled(&ar, 1.0), true).unwrap();
        let hidden = &child.network().layers()[0];
        let rows: Vec<f64> = hidden.iter_rows().map(|r| r[0]).collect();
        assert_eq!(rows, vec![0.0, 0.0, 1.0, 1.0]);
        let mirrored = ppi_crossover_with(&filled(&ar, 0.0), &filled(&ar, 1.0), false).unwrap();
        let rows: Vec<f64> = mirrored.network().layers()[0].iter_rows().map(|r| r[0]).collect();
        assert_eq!(rows, vec![1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn ppi_crossover_odd_rows_favour_first_parent() {
        let ar = arch(3);
        let a = filled(&ar, 0.0);
        let b = filled(&ar, 1.0);
        let mut la = a.network().layers();
        let mut lb = b.network().layers();
        for r in 0..3 {
            la[0].row_mut(r).iter_mut().for_each(|v| *v = (r + 1) as f64);
            lb[0].row_mut(r).iter_mut().for_each(|v| *v = -((r + 1) as f64));
        }
        let a = WeightGenome::from_network(Network::from_layers(ar.clone(), &la).unwrap());
        let b = WeightGenome::from_network(Network::from_layers(ar.clone(), &lb).unwrap());
        let child = ppi_crossover_with(&a, &b, true).unwrap();
        let first: Vec<f64> = child.network().layers()[0].iter_rows().map(|r| r[0]).collect();
        assert_eq!(first, vec![1.0, 2.0, -3.0]);
    }

    #[test]
    fn ppi_crossover_rejects_mismatch() {
        let a = filled(&arch(3), 0.0);
        let b = filled(&arch(4), 0.0);
        assert!(ppi_crossover_with(&a, &b, true).is_err());
    }

    #[test]
    fn ppi_mutation_density_and_bounds() {
        let ar = Architecture::new(9, vec![12, 7], vec![TransferFn::TanH; 2], 2).unwrap();
        let g = WeightGenome::random(&ar, &mut Stream::new(3).rng());
        let ranges = MutationRanges::default();
        let mut rng = Stream::new(4).rng();
        let mut changed = 0usize;
        let mut total = 0usize;
        for _ in 0..500 {
            let m = ppi_mutate(&g, &ranges, &mut rng);
            for (x, y) in g.weights().iter().zip(m.weights()) {
                assert!((x - y).abs() <= 0.5 + 1e-12);
                if x != y {
                    changed += 1;
                }
            }
            total += g.weights().len();
        }
        let density = changed as f64 / total as f64;
        assert!((density - 0.40).abs() <= 0.01, "density {density}");
    }

    #[test]
    fn ppi_mutation_with_zero_width_is_identity() {
        let g = WeightGenome::random(&arch(6), &mut Stream::new(5).rng());
        let ranges = MutationRanges {
            fx: (0.0, 0.0),
            ..MutationRanges::default()
        };
        assert_eq!(ppi_mutate(&g, &ranges, &mut Stream::new(6).rng()), g);
    }

    #[test]
    fn paf_crossover_degenerate_union() {
        let p = ArchGenome::new(vec![4], vec![TransferFn::TanH]).unwrap();
        let mut rng = Stream::new(7).rng();
        for _ in 0..50 {
            assert_eq!(paf_crossover(&p, &p, 0.5, &mut rng), p);
        }
    }

    #[test]
    fn paf_crossover_depth_is_rounded_mean() {
        let a = ArchGenome::new(vec![4], vec![TransferFn::TanH]).unwrap();
        let b = ArchGenome::new(vec![7, 2], vec![TransferFn::Linear, TransferFn::LogSig]).unwrap();
        let mut rng = Stream::new(8).rng();
        let mut seen = [false; 4];
        for _ in 0..200 {
            let c = paf_crossover(&a, &b, 0.5, &mut rng);
            assert!(c.num_hidden() == 1 || c.num_hidden() == 2);
            seen[c.num_hidden()] = true;
        }
        assert!(seen[1] && seen[2]);
        // probs = 1 never rounds up, probs = 0 (almost) always does
        assert_eq!(paf_crossover(&a, &b, 1.0, &mut rng).num_hidden(), 1);
    }

    #[test]
    fn paf_crossover_draws_from_parent_union() {
        let mut rng = Stream::new(9).rng();
        for _ in 0..1000 {
            let a = ArchGenome::random(&mut rng);
            let b = ArchGenome::random(&mut rng);
            let c = paf_crossover(&a, &b, 0.5, &mut rng);
            c.validate().unwrap();
            for (d, f) in c.dims().iter().zip(c.fns()) {
                let from_a = a.dims().iter().zip(a.fns()).any(|(x, y)| x == d && y == f);
                let from_b = b.dims().iter().zip(b.fns()).any(|(x, y)| x == d && y == f);
                assert!(from_a || from_b);
            }
        }
    }

    #[test]
    fn arch_change_branches() {
        assert_eq!(arch_change(1, 0.7), ArchChange::Depth(3));
        assert_eq!(arch_change(1, 0.55), ArchChange::Depth(2));
        assert_eq!(arch_change(1, 0.2), ArchChange::Perturb);
        assert_eq!(arch_change(2, 0.6), ArchChange::Depth(3));
        assert_eq!(arch_change(2, 0.5), ArchChange::Depth(1));
        assert_eq!(arch_change(2, 0.49), ArchChange::Perturb);
        assert_eq!(arch_change(3, 0.9), ArchChange::Depth(2));
        assert_eq!(arch_change(3, 0.55), ArchChange::Depth(1));
        assert_eq!(arch_change(3, 0.0), ArchChange::Perturb);
    }

    #[test]
    fn arch_change_application() {
        let ranges = MutationRanges::default();
        let mut rng = Stream::new(10).rng();
        let one = ArchGenome::new(vec![5], vec![TransferFn::TanH]).unwrap();
        let grown = apply_arch_change(&one, arch_change(1, 0.7), &ranges, &mut rng);
        assert_eq!(grown.num_hidden(), 3);
        assert_eq!((grown.dims()[0], grown.fns()[0]), (5, TransferFn::TanH));
        let three = ArchGenome::new(vec![5, 6, 7], vec![TransferFn::Linear; 3]).unwrap();
        let shrunk = apply_arch_change(&three, arch_change(3, 0.55), &ranges, &mut rng);
        assert_eq!(shrunk.dims(), &[5]);
        assert_eq!(perturb_dims(&[3, 11], &[5, 5]), vec![8, 12]);
        assert_eq!(perturb_dims(&[1, 2], &[-2, -2]), vec![1, 1]);
    }

    fn rule(algo: TrainAlgo, values: Vec<f64>) -> RuleGenome {
        RuleGenome::new(TrainParams::new(algo, values, MAX_EPOCHS).unwrap())
    }

    #[test]
    fn pra_crossover_examples() {
        let mut rng = Stream::new(11).rng();
        let a = rule(TrainAlgo::Qna, vec![3.0, 0.2, 0.002, 0.01]);
        assert_eq!(pra_crossover(&a, &a, &mut rng).unwrap(), a);
        let lo = rule(TrainAlgo::Bp, vec![0.05, 0.05]);
        let hi = rule(TrainAlgo::Bp, vec![0.25, 0.25]);
        for _ in 0..1000 {
            let c = pra_crossover(&lo, &hi, &mut rng).unwrap();
            assert!((0.05..=0.25).contains(&c.values()[0]));
            assert!((0.05..=0.25).contains(&c.values()[1]));
        }
        let lm = rule(TrainAlgo::Lm, vec![0.01]);
        assert!(pra_crossover(&lo, &lm, &mut rng).is_err());
    }

    #[test]
    fn pra_mutation_examples() {
        assert!((scale_rate(0.10, 0.4, true) - 0.14).abs() < 1e-15);
        let g = rule(TrainAlgo::Bp, vec![0.24, 0.24]);
        let up = g.with_values(vec![scale_rate(0.24, 0.4, true), 0.24]);
        assert_eq!(up.values()[0], 0.25);
        let zero = rule(TrainAlgo::Scg, vec![0.0, 0.0]);
        let mut rng = Stream::new(12).rng();
        for _ in 0..20 {
            assert_eq!(pra_mutate(&zero, &MutationRanges::default(), &mut rng), zero);
        }
    }

    #[test]
    fn matrix_helper_sanity() {
        let m = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert_eq!(m.shape(), (1, 2));
    }
}
