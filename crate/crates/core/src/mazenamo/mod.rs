//! The MazeNamo grid domain: operators, instance generation and datasets.

mod dataset;
mod domain;
mod example;
mod grid;

pub use dataset::*;
pub use domain::*;
pub use example::stacked_blocker;
pub use grid::*;

use crate::pddl::PddlError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MazeError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("generated maze has {free} free cells, need at least 2")]
    NoFreeCell { free: usize },
    #[error("size {n}: found {found} of {wanted} {level} instances after {attempts} attempts")]
    QuotaUnreachable {
        n: usize,
        level: String,
        found: usize,
        wanted: usize,
        attempts: usize,
    },
    #[error(transparent)]
    Pddl(#[from] PddlError),
    #[error("io: {0}")]
    Io(String),
    #[error("bad file: {0}")]
    Format(String),
}
