// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("a CCNOT gate needs at least 3 wires, got {0}")]
    TooFewWires(usize),

    #[error("wire {wire} out of range for a {wires}-wire bus")]
    WireOutOfRange { wire: usize, wires: usize },

    #[error("gate target {0} is also one of its controls")]
    TargetIsControl(usize),

    #[error("{inputs} inputs do not fit on {wires} wires")]
    TooManyInputs { inputs: usize, wires: usize },

    #[error("bus of {wires} wires exceeds the permutation table limit of {limit}")]
    BusTooWide { wires: usize, limit: usize },

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no test cases supplied")]
    NoCases,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("enumeration of {circuits} circuits exceeds the limit of {limit}")]
    EnumerationTooLarge { circuits: u128, limit: u128 },

    #[error("circuit has no mutable gate")]
    NothingToMutate,

    #[error("no run found a solution")]
    NoSolvedRuns,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
