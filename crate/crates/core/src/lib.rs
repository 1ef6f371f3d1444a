//! Seedable simulator for service-function-chain embedding experiments.
//!
//! The substrate is modeled analytically: hosts are processor-sharing servers
//! and links add propagation plus transmission delay. Requests are embedded by
//! a greedy max-residual placement with shortest-path linking, or by a genetic
//! algorithm that scores candidates with the traffic engine.

// Capacity and rate checks use `!(x > 0.0)` so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cli;
pub mod engine;
pub mod experiment;
pub mod routing;
pub mod seed;
pub mod solver;
pub mod telemetry;
pub mod topology;

pub use catalog::{Catalog, SfcRequest, TrafficPattern, VnfDescriptor};
pub use engine::{simulate, EngineConfig};
pub use experiment::{run_experiment, Experiment, ExperimentConfig, ExperimentReport};
pub use routing::{shortest_path, Path};
pub use solver::{compare_fitness, ga_solve, solve_simple_dijkstra, EmbeddingScheme, Fitness};
pub use telemetry::TelemetryFrame;
pub use topology::{build_network, NetworkSpec, SubstrateNetwork};
