//! Cellular genetic algorithm on a toroidal grid.
//!
//! A [`Grid`] holds scored individuals laid out row-major in ascending
//! fitness order (lower is better). One [`generation_step`] breeds a fixed
//! number of offspring: the first parent is a random cell, the second the
//! winner of a tournament among its neighbours. An offspring that beats its
//! first parent takes that cell in an auxiliary grid. Survivors are then
//! chosen from the old grid plus the accepted offspring, with the best
//! fraction kept unconditionally.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::genomes::Variation;
use crate::rng::Stream;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Topology {
    #[default]
    Moore,
    VonNeumann,
}

impl Topology {
    fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Topology::Moore => &[
                (-1, -1),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ],
            Topology::VonNeumann => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Topology::Moore => "moore",
            Topology::VonNeumann => "vonneumann",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_', ' '], "").as_str() {
            "moore" => Ok(Topology::Moore),
            "vonneumann" | "neumann" => Ok(Topology::VonNeumann),
            _ => Err(Error::invalid(format!("unknown topology `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgaConfig {
    pub topology: Topology,
    /// Probability that a tournament returns its best candidate.
    pub pressure: f64,
    /// Fraction of the population that always survives.
    pub elitism: f64,
    pub mutation_rate: f64,
    /// Offspring per generation; `None` means one per cell.
    pub offspring: Option<usize>,
}

impl Default for CgaConfig {
    fn default() -> Self {
        CgaConfig {
            topology: Topology::Moore,
            pressure: 0.5,
            elitism: 0.10,
            mutation_rate: 0.40,
            offspring: None,
        }
    }
}

impl CgaConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pressure", self.pressure),
            ("elitism", self.elitism),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if self.offspring == Some(0) {
            return Err(Error::Config("offspring must be at least 1".into()));
        }
        Ok(())
    }

    pub fn offspring_for(&self, population: usize) -> usize {
        self.offspring.unwrap_or(population)
    }

    pub fn elites_for(&self, population: usize) -> usize {
        ((self.elitism * population as f64).ceil() as usize).min(population)
    }
}

/// An individual together with its fitness.
#[derive(Clone, Debug, PartialEq)]
pub struct Scored<T> {
    pub item: T,
    pub fitness: f64,
}

impl<T> Scored<T> {
    pub fn new(item: T, fitness: f64) -> Self {
        Scored { item, fitness }
    }
}

/// Types that expose the genome the variation operators work on.
pub trait Member {
    type Genome;

    fn genome(&self) -> &Self::Genome;
}

/// Sort key that ranks NaN with +inf.
fn key(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

fn by_fitness(a: f64, b: f64) -> std::cmp::Ordering {
    key(a).total_cmp(&key(b))
}

/// `rows x cols` with `rows <= cols` and `rows` as large as possible.
pub fn grid_shape(population: usize) -> Result<(usize, usize)> {
    if population == 0 {
        return Err(Error::Empty("population"));
    }
    let mut rows = (population as f64).sqrt() as usize;
    while rows * rows > population {
        rows -= 1;
    }
    while !population.is_multiple_of(rows) {
        rows -= 1;
    }
    Ok((rows, population / rows))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    cells: Vec<Scored<T>>,
}

/// Lays the population out row-major by ascending fitness (stable for
/// ties).
pub fn make_grid<T>(mut pop: Vec<Scored<T>>) -> Result<Grid<T>> {
    let (rows, cols) = grid_shape(pop.len())?;
    pop.sort_by(|a, b| by_fitness(a.fitness, b.fitness));
    Ok(Grid {
        rows,
        cols,
        cells: pop,
    })
}

impl<T> Grid<T> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Scored<T>] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [Scored<T>] {
        &mut self.cells
    }

    pub fn into_cells(self) -> Vec<Scored<T>> {
        self.cells
    }

    pub fn index(&self, (r, c): (usize, usize)) -> usize {
        r * self.cols + c
    }

    pub fn position(&self, index: usize) -> (usize, usize) {
        (index / self.cols, index % self.cols)
    }

    pub fn get(&self, pos: (usize, usize)) -> &Scored<T> {
        &self.cells[self.index(pos)]
    }

    pub fn fitnesses(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.fitness).collect()
    }

    /// Index of the lowest fitness, earliest on ties.
    pub fn best_index(&self) -> usize {
        best_of(&self.fitnesses())
    }

    pub fn best(&self) -> &Scored<T> {
        &self.cells[self.best_index()]
    }

    pub fn best_fitness(&self) -> f64 {
        self.best().fitness
    }

    /// Mean over finite fitnesses; `+inf` when none is finite.
    pub fn mean_fitness(&self) -> f64 {
        let finite: Vec<f64> = self
            .cells
            .iter()
            .map(|c| c.fitness)
            .filter(|f| f.is_finite())
            .collect();
        if finite.is_empty() {
            f64::INFINITY
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        }
    }

    /// Re-sorts the cells after fitness values changed in place.
    pub fn rearrange(&mut self) {
        self.cells.sort_by(|a, b| by_fitness(a.fitness, b.fitness));
    }
}

/// Wrapped neighbour positions of `pos`, without duplicates and without
/// `pos` itself.
pub fn neighbors(rows: usize, cols: usize, pos: (usize, usize), topo: Topology) -> Vec<(usize, usize)> {
    assert!(pos.0 < rows && pos.1 < cols, "position out of bounds");
    let mut out = Vec::with_capacity(8);
    for &(dr, dc) in topo.offsets() {
        let r = (pos.0 as isize + dr).rem_euclid(rows as isize) as usize;
        let c = (pos.1 as isize + dc).rem_euclid(cols as isize) as usize;
        if (r, c) != pos && !out.contains(&(r, c)) {
            out.push((r, c));
        }
    }
    out
}

fn best_of(fitness: &[f64]) -> usize {
    let mut best = 0;
    for (i, &f) in fitness.iter().enumerate().skip(1) {
        if by_fitness(f, fitness[best]).is_lt() {
            best = i;
        }
    }
    best
}

/// With probability `p` the index of the best candidate, otherwise a
/// uniformly random one.
pub fn tournament<R: Rng + ?Sized>(fitness: &[f64], p: f64, rng: &mut R) -> Result<usize> {
    if fitness.is_empty() {
        return Err(Error::Empty("tournament candidates"));
    }
    if rng.gen::<f64>() < p {
        Ok(best_of(fitness))
    } else {
        Ok(rng.gen_range(0..fitness.len()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GenerationStats {
    pub best: f64,
    pub mean: f64,
    pub offspring: usize,
    /// Offspring written into the auxiliary grid.
    pub replacements: usize,
    /// Offspring whose evaluation failed or produced no finite fitness.
    pub failures: usize,
}

#[derive(Clone, Debug)]
pub struct StepOutcome<T> {
    /// Survivors, laid out by fitness.
    pub grid: Grid<T>,
    /// The auxiliary grid after all replacements, before survivor
    /// selection.
    pub aux: Grid<T>,
    pub stats: GenerationStats,
}

const SELECTION_KEY: u64 = 0;
const EVALUATION_KEY: u64 = 1;
const SURVIVOR_KEY: u64 = u64::MAX;

/// One generation of the cellular GA.
///
/// `eval` scores an offspring genome; it also receives the first parent,
/// so callers can carry state over, and a stream private to that
/// offspring. Offspring `k` draws only from `stream.child(k)`, so the
/// outcome does not depend on the order evaluations run in.
pub fn generation_step<T, O, E>(
    grid: &Grid<T>,
    ops: &O,
    cfg: &CgaConfig,
    mut eval: E,
    stream: Stream,
) -> Result<StepOutcome<T>>
where
    T: Member<Genome = O::Genome> + Clone,
    O: Variation,
    E: FnMut(O::Genome, &Scored<T>, Stream) -> Result<Scored<T>>,
{
    cfg.validate()?;
    let p = grid.len();
    let q = cfg.offspring_for(p);
    let mut aux = grid.clone();
    let mut fresh = vec![false; p];
    let mut stats = GenerationStats {
        offspring: q,
        ..GenerationStats::default()
    };

    for k in 0..q {
        let s = stream.child(k as u64);
        let mut rng = s.child(SELECTION_KEY).rng();
        let first = rng.gen_range(0..p);
        let hood = neighbors(grid.rows, grid.cols, grid.position(first), cfg.topology);
        let second = if hood.is_empty() {
            first
        } else {
            let fit: Vec<f64> = hood.iter().map(|&pos| grid.get(pos).fitness).collect();
            grid.index(hood[tournament(&fit, cfg.pressure, &mut rng)?])
        };
        let a = &grid.cells[first];
        let b = &grid.cells[second];
        let mut child = ops.crossover(a.item.genome(), b.item.genome(), &mut rng)?;
        if rng.gen::<f64>() < cfg.mutation_rate {
            child = ops.mutate(&child, &mut rng);
        }
        let scored = match eval(child, a, s.child(EVALUATION_KEY)) {
            Ok(sc) if sc.fitness.is_finite() => sc,
            _ => {
                stats.failures += 1;
                continue;
            }
        };
        if scored.fitness < a.fitness && scored.fitness < aux.cells[first].fitness {
            aux.cells[first] = scored;
            fresh[first] = true;
            stats.replacements += 1;
        }
    }

    let mut pool: Vec<Scored<T>> = grid.cells.clone();
    pool.extend(
        aux.cells
            .iter()
            .zip(&fresh)
            .filter(|(_, &f)| f)
            .map(|(c, _)| c.clone()),
    );
    let survivors = select_survivors(pool, p, cfg, stream.child(SURVIVOR_KEY))?;
    let grid = make_grid(survivors)?;
    stats.best = grid.best_fitness();
    stats.mean = grid.mean_fitness();
    Ok(StepOutcome { grid, aux, stats })
}

/// Keeps the best `ceil(elitism * size)` of `pool`, then fills the rest by
/// tournaments over the remaining pool without replacement.
pub fn select_survivors<T>(pool: Vec<Scored<T>>, size: usize, cfg: &CgaConfig, stream: Stream) -> Result<Vec<Scored<T>>> {
    if pool.len() < size {
        return Err(Error::invalid(format!(
            "{} candidates for {size} survivors",
            pool.len()
        )));
    }
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| by_fitness(pool[a].fitness, pool[b].fitness));
    let elites = cfg.elites_for(size);
    let mut chosen: Vec<usize> = order[..elites].to_vec();
    let mut rest: Vec<usize> = (0..pool.len()).filter(|i| !chosen.contains(i)).collect();
    let mut rng = stream.rng();
    while chosen.len() < size {
        let fit: Vec<f64> = rest.iter().map(|&i| pool[i].fitness).collect();
        let w = tournament(&fit, cfg.pressure, &mut rng)?;
        chosen.push(rest.remove(w));
    }
    chosen.sort_unstable();
    let mut slots: Vec<Option<Scored<T>>> = pool.into_iter().map(Some).collect();
    Ok(chosen
        .into_iter()
        .map(|i| slots[i].take().expect("chosen once"))
        .collect())
}
