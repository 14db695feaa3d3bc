//! Reservoir-computing laboratory for studying echo state networks around the
//! transition between ordered and chaotic dynamics.
//!
//! The crate is organised by concern:
//!
//! - [`reservoir`]: network representation, state update, linear readout.
//! - [`dynamics`]: perturbation-based Lyapunov exponent estimation.
//! - [`infotheory`]: plug-in active information storage and transfer entropy.
//! - [`tasks`]: MC, MMSE, NARMA-30 and negative-ratio benchmarks.
//! - [`substrate`]: golden-angle spiral layouts and locally connected reservoirs.
//! - [`neuroevo`]: NEAT genomes, CPPN evaluation, HyperNEAT decoding, evolution loop.
//! - [`experiments`]: sweeps, evolution runs, statistical comparisons, persistence.
//!
//! Every stochastic entry point takes an explicit `u64` seed; identical seeds
//! give bit-identical results regardless of thread count.

// Negated comparisons double as NaN rejection in config validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod experiments;
pub mod infotheory;
pub mod neuroevo;
pub mod reservoir;
pub mod seed;
pub mod substrate;
pub mod tasks;

pub use dynamics::{classify_dynamics, lyapunov_exponent, DynamicsClass, LyapunovConfig, LyapunovEstimate};
pub use reservoir::{NetworkError, NetworkState, Readout, ReservoirNetwork, Transfer};
pub use substrate::Substrate;
pub use tasks::{TaskKind, TaskResult, TaskSpec};
