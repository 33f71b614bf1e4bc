//! Three nested cellular genetic algorithms that design small multilayer
//! perceptron classifiers: the outer population evolves learning-rule
//! parameters, the middle one architectures and transfer functions, the
//! inner one initial weights.
//!
//! Start with [`search::run`] for a single search or
//! [`protocol::run_protocol`] for the full repeated-split evaluation.

pub mod cga;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod fitness;
pub mod ftest;
pub mod genomes;
pub mod matrix;
pub mod mlp;
pub mod protocol;
pub mod report;
pub mod rng;
pub mod search;
pub mod trainers;

pub use error::{Error, Result};
