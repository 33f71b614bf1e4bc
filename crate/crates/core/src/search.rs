//! Nested cellular search over learning-rule parameters, architectures and
//! initial weights for one learning algorithm.
//!
//! Every rule individual owns a population of architectures and every
//! architecture owns a population of initial weights. In each rule
//! generation the current best rule refines its architecture population:
//! for each architecture generation, every architecture first evolves its
//! weights for a few generations and is re-scored, then the architecture
//! population breeds. Finally the rule population breeds.
//!
//! Offspring inherit the populations below them from their first parent:
//! a new rule retrains its parent's architectures and weights, a new
//! architecture keeps its parent's initial weights when the weight shapes
//! still match and starts from fresh random weights otherwise.

use std::cell::Cell;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cga::{generation_step, make_grid, CgaConfig, GenerationStats, Grid, Member, Scored};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fitness::{evaluate_paf, evaluate_ppi, evaluate_pra, FitnessParts, FitnessWeights};
use crate::genomes::{ArchGenome, ArchOps, MutationRanges, RuleGenome, RuleOps, WeightGenome, WeightOps};
use crate::mlp::{count_correct, Architecture, Network};
use crate::rng::Stream;
use crate::trainers::{TrainAlgo, MAX_EPOCHS};

/// One count per search layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PerLayer {
    pub rules: usize,
    pub architectures: usize,
    pub weights: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub population: PerLayer,
    pub generations: PerLayer,
    pub cga: CgaConfig,
    pub fitness: FitnessWeights,
    pub mutation: MutationRanges,
    /// Threshold of the depth rounding draw in architecture crossover.
    pub depth_threshold: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            population: PerLayer {
                rules: 4,
                architectures: 9,
                weights: 9,
            },
            generations: PerLayer {
                rules: 18,
                architectures: 5,
                weights: 3,
            },
            cga: CgaConfig::default(),
            fitness: FitnessWeights::default(),
            mutation: MutationRanges::default(),
            depth_threshold: 0.5,
            epochs: MAX_EPOCHS,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        self.cga.validate()?;
        let p = self.population;
        if p.rules == 0 || p.architectures == 0 || p.weights == 0 {
            return Err(Error::Config("population sizes must be positive".into()));
        }
        if !(1..=MAX_EPOCHS).contains(&self.epochs) {
            return Err(Error::Config(format!(
                "epochs = {} is outside [1, {MAX_EPOCHS}]",
                self.epochs
            )));
        }
        if !(0.0..=1.0).contains(&self.depth_threshold) {
            return Err(Error::Config("depth_threshold is outside [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Rules,
    Architectures,
    Weights,
}

impl Level {
    pub fn name(self) -> &'static str {
        match self {
            Level::Rules => "rules",
            Level::Architectures => "architectures",
            Level::Weights => "weights",
        }
    }

    pub fn parse(s: &str) -> Option<Level> {
        [Level::Rules, Level::Architectures, Level::Weights]
            .into_iter()
            .find(|l| l.name() == s)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Diagnostics of one generation at one layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub level: Level,
    /// Rule generation the step belongs to.
    pub rule_generation: usize,
    /// Architecture generation, for the two lower layers.
    pub arch_generation: Option<usize>,
    /// Weight generation, for the lowest layer.
    pub weight_generation: Option<usize>,
    /// Identifier of the architecture owning a weight population; 0 above.
    pub owner: u64,
    pub stats: GenerationStats,
}

#[derive(Clone, Debug)]
pub struct WeightMember {
    pub genome: WeightGenome,
    pub trained: Network,
}

impl Member for WeightMember {
    type Genome = WeightGenome;

    fn genome(&self) -> &WeightGenome {
        &self.genome
    }
}

#[derive(Clone, Debug)]
pub struct ArchMember {
    pub id: u64,
    pub genome: ArchGenome,
    pub weights: Grid<WeightMember>,
    pub parts: FitnessParts,
}

impl ArchMember {
    pub fn best_network(&self) -> &Network {
        &self.weights.best().item.trained
    }
}

impl Member for ArchMember {
    type Genome = ArchGenome;

    fn genome(&self) -> &ArchGenome {
        &self.genome
    }
}

#[derive(Clone, Debug)]
pub struct RuleMember {
    pub genome: RuleGenome,
    pub archs: Grid<ArchMember>,
}

impl Member for RuleMember {
    type Genome = RuleGenome;

    fn genome(&self) -> &RuleGenome {
        &self.genome
    }
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub algo: TrainAlgo,
    pub rule: RuleGenome,
    pub arch: ArchGenome,
    /// Best trained network of the best architecture of the best rule.
    pub network: Network,
    pub train_nmse: f64,
    pub parts: FitnessParts,
    /// Classification error (%) on the validation set, when one was given.
    pub validation_error: Option<f64>,
    /// Generation steps executed per layer.
    pub steps: PerLayer,
    pub failed_trainings: usize,
    pub trace: Vec<TraceRow>,
}

impl SearchResult {
    pub fn fitness(&self) -> f64 {
        self.parts.total
    }
}

/// Classification error in percent of `net` on `data`.
pub fn classification_error(net: &Network, data: &Dataset) -> Result<f64> {
    let out = net.forward_batch(data.features())?;
    let correct = count_correct(&out, data.targets())?;
    crate::fitness::i_acc(correct, data.len())
}

const INIT: u64 = 0;
const GENERATION: u64 = 1;

struct Search<'a> {
    cfg: &'a SearchConfig,
    train: &'a Dataset,
    next_id: u64,
    steps: PerLayer,
    failed: Cell<usize>,
    trace: Vec<TraceRow>,
}

impl<'a> Search<'a> {
    fn architecture(&self, g: &ArchGenome) -> Result<Architecture> {
        g.architecture(self.train.num_attributes(), self.train.num_classes())
    }

    fn score_weights(&self, genome: WeightGenome, rule: &RuleGenome) -> Scored<WeightMember> {
        let e = evaluate_ppi(&genome, rule, self.train);
        if e.failed {
            self.failed.set(self.failed.get() + 1);
        }
        Scored::new(
            WeightMember {
                genome,
                trained: e.trained,
            },
            e.fitness,
        )
    }

    fn weight_population(
        &self,
        arch: &Architecture,
        rule: &RuleGenome,
        inherited: Option<Vec<WeightGenome>>,
        stream: Stream,
    ) -> Result<Grid<WeightMember>> {
        let genomes = match inherited {
            Some(g) => g,
            None => (0..self.cfg.population.weights)
                .map(|i| WeightGenome::random(arch, &mut stream.child(i as u64).rng()))
                .collect(),
        };
        make_grid(genomes.into_iter().map(|g| self.score_weights(g, rule)).collect())
    }

    fn score_arch(&self, genome: &ArchGenome, weights: &Grid<WeightMember>) -> Result<FitnessParts> {
        let best = weights.best();
        let net = best.fitness.is_finite().then_some(&best.item.trained);
        evaluate_paf(genome, net, self.train, &self.cfg.fitness)
    }

    /// Builds and scores an architecture individual. Initial weights come
    /// from `parent` when its weight shapes match, otherwise they are
    /// drawn fresh.
    fn arch_member(
        &mut self,
        genome: ArchGenome,
        rule: &RuleGenome,
        parent: Option<&ArchMember>,
        stream: Stream,
    ) -> Result<Scored<ArchMember>> {
        let arch = self.architecture(&genome)?;
        let inherited = parent
            .filter(|p| p.best_network().arch().same_shape(&arch))
            .map(|p| {
                p.weights
                    .cells()
                    .iter()
                    .map(|c| {
                        let net = Network::new(arch.clone(), c.item.genome.weights().to_vec())?;
                        Ok(WeightGenome::from_network(net))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let weights = self.weight_population(&arch, rule, inherited, stream)?;
        let parts = self.score_arch(&genome, &weights)?;
        self.next_id += 1;
        Ok(Scored::new(
            ArchMember {
                id: self.next_id,
                genome,
                weights,
                parts,
            },
            parts.total,
        ))
    }

    fn rule_member(&mut self, genome: RuleGenome, parent: Option<&RuleMember>, stream: Stream) -> Result<Scored<RuleMember>> {
        let mut members = Vec::with_capacity(self.cfg.population.architectures);
        match parent {
            Some(p) => {
                for (i, c) in p.archs.cells().iter().enumerate() {
                    members.push(self.arch_member(c.item.genome.clone(), &genome, Some(&c.item), stream.child(i as u64))?);
                }
            }
            None => {
                for i in 0..self.cfg.population.architectures {
                    let s = stream.child(i as u64);
                    let g = ArchGenome::random(&mut s.child(0).rng());
                    members.push(self.arch_member(g, &genome, None, s.child(1))?);
                }
            }
        }
        let archs = make_grid(members)?;
        let fitness = evaluate_pra(&genome, &archs.fitnesses())?;
        Ok(Scored::new(RuleMember { genome, archs }, fitness))
    }

    fn evolve_weights(
        &mut self,
        member: &mut Scored<ArchMember>,
        rule: &RuleGenome,
        at: (usize, usize),
        stream: Stream,
    ) -> Result<()> {
        let ops = WeightOps {
            ranges: self.cfg.mutation,
        };
        for b in 0..self.cfg.generations.weights {
            let this = &*self;
            let out = generation_step(
                &member.item.weights,
                &ops,
                &self.cfg.cga,
                |g, _, _| Ok(this.score_weights(g, rule)),
                stream.child(b as u64),
            )?;
            member.item.weights = out.grid;
            self.steps.weights += 1;
            self.trace.push(TraceRow {
                level: Level::Weights,
                rule_generation: at.0,
                arch_generation: Some(at.1),
                weight_generation: Some(b),
                owner: member.item.id,
                stats: out.stats,
            });
        }
        member.item.parts = self.score_arch(&member.item.genome, &member.item.weights)?;
        member.fitness = member.item.parts.total;
        Ok(())
    }

    fn evolve_archs(&mut self, rule: &mut Scored<RuleMember>, rule_gen: usize, stream: Stream) -> Result<()> {
        let ops = ArchOps {
            ranges: self.cfg.mutation,
            probs: self.cfg.depth_threshold,
        };
        let genome = rule.item.genome.clone();
        for m in 0..self.cfg.generations.architectures {
            let s = stream.child(m as u64);
            for (i, cell) in rule.item.archs.cells_mut().iter_mut().enumerate() {
                self.evolve_weights(cell, &genome, (rule_gen, m), s.path(&[0, i as u64]))?;
            }
            rule.item.archs.rearrange();
            let cfg = self.cfg;
            let out = generation_step(
                &rule.item.archs,
                &ops,
                &cfg.cga,
                |g, parent, es| self.arch_member(g, &genome, Some(&parent.item), es),
                s.child(1),
            )?;
            rule.item.archs = out.grid;
            self.steps.architectures += 1;
            self.trace.push(TraceRow {
                level: Level::Architectures,
                rule_generation: rule_gen,
                arch_generation: Some(m),
                weight_generation: None,
                owner: 0,
                stats: out.stats,
            });
        }
        rule.fitness = evaluate_pra(&genome, &rule.item.archs.fitnesses())?;
        Ok(())
    }
}

/// Runs the nested search for `algo`. The stream is derived from the
/// configured seed and the algorithm, so runs for different algorithms
/// are independent of each other and of their order.
pub fn run(cfg: &SearchConfig, algo: TrainAlgo, train: &Dataset, validation: Option<&Dataset>) -> Result<SearchResult> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if let Some(c) = train.class_counts().iter().position(|&n| n == 0) {
        return Err(Error::data(format!(
            "training set has no pattern of class `{}`",
            train.class_labels()[c]
        )));
    }
    let stream = Stream::new(cfg.seed).child(algo.index() as u64);
    let mut search = Search {
        cfg,
        train,
        next_id: 0,
        steps: PerLayer {
            rules: 0,
            architectures: 0,
            weights: 0,
        },
        failed: Cell::new(0),
        trace: Vec::new(),
    };

    let mut rules = Vec::with_capacity(cfg.population.rules);
    for i in 0..cfg.population.rules {
        let s = stream.path(&[INIT, i as u64]);
        let genome = RuleGenome::random(algo, cfg.epochs, &mut s.child(0).rng())?;
        rules.push(search.rule_member(genome, None, s.child(1))?);
    }
    let mut grid = make_grid(rules)?;
    let ops = RuleOps {
        ranges: cfg.mutation,
    };

    for g in 0..cfg.generations.rules {
        let s = stream.path(&[GENERATION, g as u64]);
        let best = grid.best_index();
        search.evolve_archs(&mut grid.cells_mut()[best], g, s.child(0))?;
        grid.rearrange();
        let out = generation_step(
            &grid,
            &ops,
            &cfg.cga,
            |genome, parent, es| search.rule_member(genome, Some(&parent.item), es),
            s.child(1),
        )?;
        grid = out.grid;
        search.steps.rules += 1;
        search.trace.push(TraceRow {
            level: Level::Rules,
            rule_generation: g,
            arch_generation: None,
            weight_generation: None,
            owner: 0,
            stats: out.stats,
        });
    }

    let best_rule = &grid.best().item;
    let best_arch = &best_rule.archs.best().item;
    let network = best_arch.best_network().clone();
    let validation_error = validation.map(|v| classification_error(&network, v)).transpose()?;
    Ok(SearchResult {
        algo,
        rule: best_rule.genome.clone(),
        arch: best_arch.genome.clone(),
        train_nmse: best_arch.parts.nmse,
        parts: best_arch.parts,
        network,
        validation_error,
        steps: search.steps,
        failed_trainings: search.failed.get(),
        trace: search.trace,
    })
}

/// Runs the search for every algorithm in `algos`, in that order.
pub fn search_algos(
    cfg: &SearchConfig,
    algos: &[TrainAlgo],
    train: &Dataset,
    validation: Option<&Dataset>,
) -> Result<Vec<SearchResult>> {
    algos.iter().map(|&a| run(cfg, a, train, validation)).collect()
}

/// One result per learning algorithm, in declaration order.
pub fn search_all(cfg: &SearchConfig, train: &Dataset, validation: Option<&Dataset>) -> Result<Vec<SearchResult>> {
    search_algos(cfg, &TrainAlgo::ALL, train, validation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainers::fixtures::separable;
    use crate::trainers::train;
    use std::collections::BTreeMap;

    fn tiny(seed: u64) -> SearchConfig {
        SearchConfig {
            population: PerLayer {
                rules: 2,
                architectures: 4,
                weights: 4,
            },
            generations: PerLayer {
                rules: 2,
                architectures: 2,
                weights: 2,
            },
            seed,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn degenerate_search_is_one_training() {
        let data = separable(40, 3);
        let cfg = SearchConfig {
            population: PerLayer {
                rules: 1,
                architectures: 1,
                weights: 1,
            },
            generations: PerLayer {
                rules: 1,
                architectures: 1,
                weights: 1,
            },
            cga: CgaConfig {
                mutation_rate: 0.0,
                ..CgaConfig::default()
            },
            ..SearchConfig::default()
        };
        // Variation is the identity only when every hidden layer of the
        // random architecture is the same, so pick such a seed per algorithm.
        for algo in TrainAlgo::ALL {
            let (cfg, s) = (0..)
                .map(|seed| {
                    let c = SearchConfig { seed, ..cfg.clone() };
                    (c, Stream::new(seed).child(algo.index() as u64).path(&[INIT, 0]))
                })
                .find(|(_, s)| {
                    let g = ArchGenome::random(&mut s.child(1).child(0).child(0).rng());
                    g.dims().windows(2).all(|w| w[0] == w[1]) && g.fns().windows(2).all(|w| w[0] == w[1])
                })
                .unwrap();
            let r = run(&cfg, algo, &data, None).unwrap();
            let rule = RuleGenome::random(algo, cfg.epochs, &mut s.child(0).rng()).unwrap();
            let a = s.child(1).child(0);
            let arch = ArchGenome::random(&mut a.child(0).rng());
            let net_arch = arch.architecture(2, 2).unwrap();
            let init = WeightGenome::random(&net_arch, &mut a.child(1).child(0).rng());
            let expected = train(init.network(), rule.params(), &data, None).unwrap();
            assert_eq!(r.rule, rule);
            assert_eq!(r.arch, arch);
            assert_eq!(r.network, expected.trained, "{algo}");
            assert_eq!(r.train_nmse, expected.train_nmse);
            assert_eq!(r.steps, PerLayer { rules: 1, architectures: 1, weights: 1 });
        }
    }

    #[test]
    fn layer_steps_follow_nesting() {
        let data = separable(40, 1);
        let cfg = tiny(5);
        let r = run(&cfg, TrainAlgo::Scg, &data, None).unwrap();
        assert_eq!(r.steps.rules, 2);
        assert_eq!(r.steps.architectures, 2 * 2);
        assert_eq!(r.steps.weights, 2 * 2 * 2 * 4);
        assert!(r.steps.weights > r.steps.architectures && r.steps.architectures > r.steps.rules);
        let count = |l: Level| r.trace.iter().filter(|t| t.level == l).count();
        assert_eq!(count(Level::Weights), r.steps.weights);
        assert_eq!(count(Level::Architectures), r.steps.architectures);
        assert_eq!(count(Level::Rules), r.steps.rules);
    }

    #[test]
    fn weight_traces_never_get_worse_within_a_population() {
        let data = separable(40, 2);
        let r = run(&tiny(8), TrainAlgo::Bp, &data, None).unwrap();
        let mut last: BTreeMap<u64, f64> = BTreeMap::new();
        for t in r.trace.iter().filter(|t| t.level == Level::Weights) {
            if let Some(prev) = last.insert(t.owner, t.stats.best) {
                assert!(t.stats.best <= prev, "owner {} {} > {prev}", t.owner, t.stats.best);
            }
        }
        assert!(!last.is_empty());
    }

    #[test]
    fn reproducible_and_order_independent() {
        let data = separable(30, 4);
        let cfg = tiny(21);
        let all = search_all(&cfg, &data, Some(&data)).unwrap();
        assert_eq!(all.iter().map(|r| r.algo).collect::<Vec<_>>(), TrainAlgo::ALL);
        let reversed: Vec<TrainAlgo> = TrainAlgo::ALL.iter().rev().copied().collect();
        let back = search_algos(&cfg, &reversed, &data, Some(&data)).unwrap();
        for r in &all {
            let other = back.iter().find(|b| b.algo == r.algo).unwrap();
            assert_eq!(r.network, other.network);
            assert_eq!(r.rule, other.rule);
            assert_eq!(r.trace, other.trace);
        }
        for r in &all {
            assert_eq!(r.rule.algo(), r.algo);
            for (v, spec) in r.rule.values().iter().zip(r.algo.param_specs()) {
                assert!(spec.contains(*v), "{} {v}", r.algo);
            }
            assert!((1..=3).contains(&r.arch.num_hidden()) && r.arch.hidden_units() <= 36);
            assert!(r.validation_error.is_some());
        }
    }

    #[test]
    fn missing_class_is_a_data_error() {
        let data = separable(20, 1);
        let only_a: Vec<usize> = (0..20).step_by(2).collect();
        let sub = data.subset(&only_a);
        assert!(matches!(run(&tiny(1), TrainAlgo::Bp, &sub, None), Err(Error::Data(_))));
    }
}
