//! The cellular engine on its own: a user-defined real-vector genome
//! minimising the Rastrigin function on a 5x5 toroidal grid.
//!
//!     cargo run --release --example cellular_ga [moore|vonneumann]

use cellevo::cga::{generation_step, make_grid, CgaConfig, Member, Scored, Topology};
use cellevo::genomes::Variation;
use cellevo::rng::Stream;
use rand::Rng;

#[derive(Clone, Debug)]
struct Point(Vec<f64>);

impl Member for Point {
    type Genome = Point;

    fn genome(&self) -> &Point {
        self
    }
}

/// Blend crossover and gaussian-ish creep mutation.
struct Ops;

impl Variation for Ops {
    type Genome = Point;

    fn crossover<R: Rng + ?Sized>(&self, a: &Point, b: &Point, rng: &mut R) -> cellevo::Result<Point> {
        Ok(Point(
            a.0.iter()
                .zip(&b.0)
                .map(|(x, y)| {
                    let t: f64 = rng.gen();
                    t * x + (1.0 - t) * y
                })
                .collect(),
        ))
    }

    fn mutate<R: Rng + ?Sized>(&self, g: &Point, rng: &mut R) -> Point {
        Point(g.0.iter().map(|x| x + rng.gen_range(-0.3..0.3)).collect())
    }
}

fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64
        + x.iter()
            .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos())
            .sum::<f64>()
}

fn main() -> cellevo::Result<()> {
    let topology: Topology = std::env::args()
        .nth(1)
        .map_or(Ok(Topology::Moore), |s| s.parse())?;
    let cfg = CgaConfig {
        topology,
        ..CgaConfig::default()
    };
    let s = Stream::new(7);
    let mut rng = s.child(0).rng();
    let pop = (0..25)
        .map(|_| {
            let p = Point((0..4).map(|_| rng.gen_range(-5.0..5.0)).collect());
            let f = rastrigin(&p.0);
            Scored::new(p, f)
        })
        .collect();
    let mut grid = make_grid(pop)?;
    println!("{}x{} grid, {topology} neighbourhood", grid.rows(), grid.cols());
    for gen in 0..200 {
        let out = generation_step(
            &grid,
            &Ops,
            &cfg,
            |g, _, _| {
                let f = rastrigin(&g.0);
                Ok(Scored::new(g, f))
            },
            s.path(&[1, gen]),
        )?;
        grid = out.grid;
        if gen % 25 == 0 || gen == 199 {
            println!(
                "gen {gen:>3}: best {:9.4} mean {:9.4} replaced {}",
                out.stats.best, out.stats.mean, out.stats.replacements
            );
        }
    }
    let best = grid.best();
    println!("best point {:?} f = {:.6}", best.item.0, best.fitness);
    Ok(())
}
