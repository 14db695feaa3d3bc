//! NEAT genomes, CPPNs and HyperNEAT evolution.

pub mod cppn;
pub mod decode;
pub mod evolve;
pub mod genome;
pub mod mutation;
pub mod reproduce;
pub mod species;

pub use cppn::{cppn_evaluate, topological_order, CompiledCppn};
pub use decode::{decode_to_network, DecodeConfig};
pub use evolve::{
    evolve, evolve_with, ConfigError, EvolutionConfig, EvolutionRun, FitnessEvaluator, FitnessScores, GenerationMonitor,
    GenerationRecord, TaskFitness,
};
pub use genome::{ConnectionGene, CppnGenome, InnovationRegistry, NodeGene, NodeRole, CPPN_INPUTS, CPPN_OUTPUTS};
pub use mutation::{mutate, MutationConfig, MutationReport};
pub use reproduce::{allocate, crossover, reproduce, selection_fitness, ReproductionConfig};
pub use species::{adjust_threshold, genome_distance, speciate, update_species, Speciation, SpeciationConfig, Species};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CppnError {
    #[error("CPPN graph contains a cycle")]
    Cycle,
    #[error("CPPN expects {expected} inputs, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("invalid genome: {0}")]
    Invalid(String),
}
