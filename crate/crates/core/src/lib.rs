// SPDX-License-Identifier: Apache-2.0

//! Random reversible circuits built from CCNOT (Toffoli) gates.
//!
//! The crate evaluates circuits bit-parallel over every fitness case,
//! tabulates their exact bus permutations, measures how the Hamming
//! fitness of random circuits approaches its limiting distribution, and
//! runs local and evolutionary search on the six-multiplexor.
//!
//! With the default `parallel` feature the sampling and search loops run
//! on rayon; without it everything runs on the calling thread. Results are
//! identical either way.

pub mod circuit;
pub mod error;
pub mod exec;
pub mod fitness;
pub mod gate;
pub mod sampling;
pub mod search;
pub mod theory;
pub mod trace;

pub use circuit::{random_circuit, Bus, Circuit, GateSet};
pub use error::{Error, Result};
pub use fitness::{
    best_wire_fitness, hamming_fitness, hamming_fitness_scalar, parity_of_reachable_fitness,
    rms_error, six_multiplexor_target, FitnessValue, OutputMap, ParityClass, TargetTable,
};
pub use gate::{enumerate_gates, gate_count, Gate};
pub use theory::{
    binomial_limit, finite_bus_limit, gate_transition_matrix, normalized_limit, rms_limit,
    total_variation_distance, LimitKind, LimitModel, RmsRegime, TransitionMatrix,
};
pub use trace::{evaluate, to_permutation, BusPermutation, TruthTableTrace};
