//! Plain-text run configuration: one `key = value` per line, `#` starts a
//! comment. Keys not given keep their defaults.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::search::SearchConfig;
use crate::trainers::TrainAlgo;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub search: SearchConfig,
    pub iterations: usize,
    pub algos: Vec<TrainAlgo>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            search: SearchConfig::default(),
            iterations: 10,
            algos: TrainAlgo::ALL.to_vec(),
        }
    }
}

/// `all`, a single name, or a comma separated list.
pub fn parse_algos(s: &str) -> Result<Vec<TrainAlgo>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(TrainAlgo::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in s.split(',') {
        let a: TrainAlgo = part.trim().parse()?;
        if !out.contains(&a) {
            out.push(a);
        }
    }
    Ok(out)
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{v}`")))
}

pub const KEYS: [&str; 26] = [
    "seed",
    "iterations",
    "algo",
    "topology",
    "pressure",
    "elitism",
    "mutation_rate",
    "offspring",
    "rule_population",
    "arch_population",
    "weight_population",
    "rule_generations",
    "arch_generations",
    "weight_generations",
    "epochs",
    "alpha",
    "beta",
    "gamma",
    "delta",
    "weight_mutation_min",
    "weight_mutation_max",
    "size_offset_min",
    "size_offset_max",
    "sparse_density",
    "rate_delta",
    "depth_threshold",
];

impl RunConfig {
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let s = &mut self.search;
        match key {
            "seed" => s.seed = num(key, v)?,
            "iterations" => self.iterations = num(key, v)?,
            "algo" | "algos" => self.algos = parse_algos(v)?,
            "topology" => s.cga.topology = v.parse()?,
            "pressure" => s.cga.pressure = num(key, v)?,
            "elitism" => s.cga.elitism = num(key, v)?,
            "mutation_rate" => s.cga.mutation_rate = num(key, v)?,
            "offspring" => {
                s.cga.offspring = if v.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(num(key, v)?)
                }
            }
            "rule_population" => s.population.rules = num(key, v)?,
            "arch_population" => s.population.architectures = num(key, v)?,
            "weight_population" => s.population.weights = num(key, v)?,
            "rule_generations" => s.generations.rules = num(key, v)?,
            "arch_generations" => s.generations.architectures = num(key, v)?,
            "weight_generations" => s.generations.weights = num(key, v)?,
            "epochs" => s.epochs = num(key, v)?,
            "alpha" => s.fitness.alpha = num(key, v)?,
            "beta" => s.fitness.beta = num(key, v)?,
            "gamma" => s.fitness.gamma = num(key, v)?,
            "delta" => s.fitness.delta = num(key, v)?,
            "weight_mutation_min" => s.mutation.fx.0 = num(key, v)?,
            "weight_mutation_max" => s.mutation.fx.1 = num(key, v)?,
            "size_offset_min" => s.mutation.arqval.0 = num(key, v)?,
            "size_offset_max" => s.mutation.arqval.1 = num(key, v)?,
            "sparse_density" => s.mutation.sparse_density = num(key, v)?,
            "rate_delta" => s.mutation.rate_delta = num(key, v)?,
            "depth_threshold" => s.depth_threshold = num(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.search.validate()?;
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        if self.algos.is_empty() {
            return Err(Error::Config("no learning algorithm selected".into()));
        }
        let m = &self.search.mutation;
        if m.fx.0 > m.fx.1 || m.arqval.0 > m.arqval.1 {
            return Err(Error::Config("mutation ranges must have min <= max".into()));
        }
        if !(0.0..=1.0).contains(&m.sparse_density) || !(0.0..1.0).contains(&m.rate_delta) {
            return Err(Error::Config(
                "sparse_density must be in [0, 1] and rate_delta in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back the same configuration.
    pub fn render(&self) -> String {
        let s = &self.search;
        let algos: Vec<&str> = self.algos.iter().map(|a| a.name()).collect();
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("seed", s.seed.to_string());
        kv("iterations", self.iterations.to_string());
        kv("algo", algos.join(","));
        kv("topology", s.cga.topology.to_string());
        kv("pressure", s.cga.pressure.to_string());
        kv("elitism", s.cga.elitism.to_string());
        kv("mutation_rate", s.cga.mutation_rate.to_string());
        kv(
            "offspring",
            s.cga.offspring.map_or("auto".into(), |q| q.to_string()),
        );
        kv("rule_population", s.population.rules.to_string());
        kv("arch_population", s.population.architectures.to_string());
        kv("weight_population", s.population.weights.to_string());
        kv("rule_generations", s.generations.rules.to_string());
        kv("arch_generations", s.generations.architectures.to_string());
        kv("weight_generations", s.generations.weights.to_string());
        kv("epochs", s.epochs.to_string());
        kv("alpha", s.fitness.alpha.to_string());
        kv("beta", s.fitness.beta.to_string());
        kv("gamma", s.fitness.gamma.to_string());
        kv("delta", s.fitness.delta.to_string());
        kv("weight_mutation_min", s.mutation.fx.0.to_string());
        kv("weight_mutation_max", s.mutation.fx.1.to_string());
        kv("size_offset_min", s.mutation.arqval.0.to_string());
        kv("size_offset_max", s.mutation.arqval.1.to_string());
        kv("sparse_density", s.mutation.sparse_density.to_string());
        kv("rate_delta", s.mutation.rate_delta.to_string());
        kv("depth_threshold", s.depth_threshold.to_string());
        out
    }
}

/// Applies the `key = value` lines of `text` on top of the defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    apply_config(&mut cfg, text)?;
    Ok(cfg)
}

pub fn apply_config(cfg: &mut RunConfig, text: &str) -> Result<()> {
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
        cfg.set(k.trim(), v.trim())
            .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
    }
    Ok(())
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_config(s)
    }
}
