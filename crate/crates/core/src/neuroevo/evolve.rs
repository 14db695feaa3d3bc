use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decode::{decode_to_network, DecodeConfig};
use super::genome::{CppnGenome, InnovationRegistry};
use super::mutation::MutationConfig;
use super::reproduce::{reproduce, ReproductionConfig};
use super::species::{speciate, update_species, SpeciationConfig, Species};
use crate::dynamics::{lyapunov_exponent, LyapunovConfig};
use crate::reservoir::ReservoirNetwork;
use crate::seed::{derive_seed, rng_from_seed};
use crate::substrate::Substrate;
use crate::tasks::{self, TaskKind, TaskSpec};

const STREAM_EVOLUTION: u64 = 1;
const STREAM_FITNESS: u64 = 2;
const STREAM_VALIDATION: u64 = 3;

/// Every knob of the generational loop. Defaults are the published settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub population: usize,
    pub generations: usize,
    pub species_min: usize,
    pub species_max: usize,
    pub delta_t: f64,
    pub delta_step: f64,
    pub elitism: f64,
    pub reproduce_top: f64,
    pub tournament_size: usize,
    pub crossover_p: f64,
    pub interspecies_p: f64,
    pub mutation_p: f64,
    pub p_add_neuron: f64,
    pub p_add_conn: f64,
    pub p_del_conn: f64,
    pub p_weight_perturb: f64,
    pub weight_perturb_range: f64,
    pub p_bias: f64,
    pub p_transfer: f64,
    pub youth_boost: f64,
    pub youth_generations: usize,
    pub stagnation_limit: usize,
    pub fitness_evals: usize,
    pub initial_weight_range: f64,
    pub expression_threshold: f64,
    pub weight_scale: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        let m = MutationConfig::default();
        let r = ReproductionConfig::default();
        let s = SpeciationConfig::default();
        let d = DecodeConfig::default();
        Self {
            population: r.population,
            generations: 2000,
            species_min: s.species_min,
            species_max: s.species_max,
            delta_t: 2.0,
            delta_step: s.delta_step,
            elitism: r.elitism,
            reproduce_top: r.reproduce_top,
            tournament_size: r.tournament_size,
            crossover_p: r.crossover_p,
            interspecies_p: r.interspecies_p,
            mutation_p: m.mutation_p,
            p_add_neuron: m.p_add_neuron,
            p_add_conn: m.p_add_conn,
            p_del_conn: m.p_del_conn,
            p_weight_perturb: m.p_weight_perturb,
            weight_perturb_range: m.weight_perturb_range,
            p_bias: m.p_bias,
            p_transfer: m.p_transfer,
            youth_boost: r.youth_boost,
            youth_generations: r.youth_generations,
            stagnation_limit: r.stagnation_limit,
            fitness_evals: 3,
            initial_weight_range: 1.0,
            expression_threshold: d.expression_threshold,
            weight_scale: d.weight_scale,
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
#[error("invalid evolution config: {0}")]
pub struct ConfigError(pub String);

impl EvolutionConfig {
    pub fn mutation(&self) -> MutationConfig {
        MutationConfig {
            mutation_p: self.mutation_p,
            p_add_neuron: self.p_add_neuron,
            p_add_conn: self.p_add_conn,
            p_del_conn: self.p_del_conn,
            p_weight_perturb: self.p_weight_perturb,
            weight_perturb_range: self.weight_perturb_range,
            p_bias: self.p_bias,
            p_transfer: self.p_transfer,
            new_weight_range: self.initial_weight_range,
            ..MutationConfig::default()
        }
    }

    pub fn reproduction(&self) -> ReproductionConfig {
        ReproductionConfig {
            population: self.population,
            elitism: self.elitism,
            reproduce_top: self.reproduce_top,
            tournament_size: self.tournament_size,
            crossover_p: self.crossover_p,
            interspecies_p: self.interspecies_p,
            stagnation_limit: self.stagnation_limit,
            youth_generations: self.youth_generations,
            youth_boost: self.youth_boost,
            mutation: self.mutation(),
        }
    }

    pub fn speciation(&self) -> SpeciationConfig {
        SpeciationConfig { species_min: self.species_min, species_max: self.species_max, delta_step: self.delta_step }
    }

    pub fn decode(&self) -> DecodeConfig {
        DecodeConfig { expression_threshold: self.expression_threshold, weight_scale: self.weight_scale }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut probs = self.mutation().probabilities().to_vec();
        probs.extend([
            ("elitism", self.elitism),
            ("reproduce_top", self.reproduce_top),
            ("crossover_p", self.crossover_p),
            ("interspecies_p", self.interspecies_p),
        ]);
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError(format!("{name} = {p} is not a probability")));
            }
        }
        if self.population < 2 {
            return Err(ConfigError("population must be at least 2".into()));
        }
        if self.tournament_size == 0 || self.fitness_evals == 0 {
            return Err(ConfigError("tournament_size and fitness_evals must be positive".into()));
        }
        if self.species_min > self.species_max {
            return Err(ConfigError("species_min exceeds species_max".into()));
        }
        for (name, v) in [
            ("delta_t", self.delta_t),
            ("delta_step", self.delta_step),
            ("weight_perturb_range", self.weight_perturb_range),
            ("initial_weight_range", self.initial_weight_range),
            ("youth_boost", self.youth_boost),
            ("weight_scale", self.weight_scale),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError(format!("{name} must be finite and non-negative")));
            }
        }
        if !self.expression_threshold.is_finite() {
            return Err(ConfigError("expression_threshold must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessScores {
    pub fitness: f64,
    pub mmse: Option<f64>,
    pub narma: Option<f64>,
}

/// Scores a decoded network on a shared set of input seeds.
pub trait FitnessEvaluator: Sync {
    fn evaluate(&self, net: &ReservoirNetwork, seeds: &[u64]) -> Result<FitnessScores, String>;
}

/// `2 - MMSE - NARMA`, each averaged over the given seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskFitness {
    pub mmse: TaskSpec,
    pub narma: TaskSpec,
}

impl Default for TaskFitness {
    fn default() -> Self {
        Self { mmse: TaskSpec::new(TaskKind::Mmse), narma: TaskSpec::new(TaskKind::Narma) }
    }
}

impl FitnessEvaluator for TaskFitness {
    fn evaluate(&self, net: &ReservoirNetwork, seeds: &[u64]) -> Result<FitnessScores, String> {
        let (mut m, mut n) = (0.0, 0.0);
        for &s in seeds {
            m += tasks::mmse(net, &self.mmse, s).map_err(|e| e.to_string())?.score;
            n += tasks::narma_score(net, &self.narma, s).map_err(|e| e.to_string())?.score;
        }
        let k = seeds.len() as f64;
        let (m, n) = (m / k, n / k);
        Ok(FitnessScores { fitness: 2.0 - m - n, mmse: Some(m), narma: Some(n) })
    }
}

/// Extra measurements taken on each generation's best network. They never
/// influence selection.
#[derive(Debug, Clone, Default)]
pub struct GenerationMonitor {
    pub nr: Option<TaskSpec>,
    pub lyapunov: Option<LyapunovConfig>,
}

impl GenerationMonitor {
    pub fn full() -> Self {
        Self { nr: Some(TaskSpec::new(TaskKind::Nr)), lyapunov: Some(LyapunovConfig::default()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_mmse: Option<f64>,
    pub best_narma: Option<f64>,
    pub best_nr: Option<f64>,
    pub best_lambda: Option<f64>,
    pub best_connections: usize,
    pub species_count: usize,
    /// Threshold used to speciate this generation.
    pub delta_t: f64,
    pub best_genome_id: u64,
}

#[derive(Debug, Clone)]
pub struct EvolutionRun {
    pub records: Vec<GenerationRecord>,
    /// Fittest genome of every generation.
    pub best_genomes: Vec<CppnGenome>,
    pub final_population: Vec<CppnGenome>,
}

impl EvolutionRun {
    /// Fittest genome across all generations; ties go to the earliest.
    pub fn overall_best(&self) -> Option<&CppnGenome> {
        self.best_genomes.iter().fold(None, |best: Option<&CppnGenome>, g| match best {
            Some(b) if b.fitness.unwrap_or(f64::NEG_INFINITY) >= g.fitness.unwrap_or(f64::NEG_INFINITY) => Some(b),
            _ => Some(g),
        })
    }
}

pub fn evolve(
    cfg: &EvolutionConfig,
    evaluator: &dyn FitnessEvaluator,
    sub: &Substrate,
    monitor: &GenerationMonitor,
    seed: u64,
) -> Result<EvolutionRun, ConfigError> {
    evolve_with(cfg, evaluator, sub, monitor, seed, |_, _| {})
}

/// Runs the generational loop, calling `on_generation` after each generation
/// is evaluated and logged.
pub fn evolve_with(
    cfg: &EvolutionConfig,
    evaluator: &dyn FitnessEvaluator,
    sub: &Substrate,
    monitor: &GenerationMonitor,
    seed: u64,
    mut on_generation: impl FnMut(&GenerationRecord, &CppnGenome),
) -> Result<EvolutionRun, ConfigError> {
    cfg.validate()?;
    let decode_cfg = cfg.decode();
    let repro = cfg.reproduction();
    let spec_cfg = cfg.speciation();
    let mut rng = rng_from_seed(derive_seed(seed, &[STREAM_EVOLUTION]));
    let mut registry = InnovationRegistry::new();
    let mut population: Vec<CppnGenome> = (0..cfg.population as u64)
        .map(|id| CppnGenome::minimal(id, cfg.initial_weight_range, &mut registry, &mut rng))
        .collect();
    let mut next_genome_id = cfg.population as u64;
    let mut next_species_id = 0u64;
    let mut species: Vec<Species> = Vec::new();
    let mut delta_t = cfg.delta_t;
    let mut records = Vec::with_capacity(cfg.generations);
    let mut best_genomes = Vec::with_capacity(cfg.generations);

    for generation in 0..cfg.generations {
        let seeds: Vec<u64> =
            (0..cfg.fitness_evals as u64).map(|e| derive_seed(seed, &[STREAM_FITNESS, generation as u64, e])).collect();
        let pending: Vec<usize> = (0..population.len()).filter(|&i| population[i].fitness.is_none()).collect();
        let scores: Vec<FitnessScores> = pending
            .par_iter()
            .map(|&i| {
                decode_to_network(&population[i], sub, &decode_cfg)
                    .map_err(|e| e.to_string())
                    .and_then(|net| evaluator.evaluate(&net, &seeds))
                    .ok()
                    .filter(|s| s.fitness.is_finite())
                    .unwrap_or(FitnessScores { fitness: 0.0, mmse: None, narma: None })
            })
            .collect();
        for (&i, s) in pending.iter().zip(scores) {
            population[i].fitness = Some(s.fitness);
            population[i].mmse = s.mmse;
            population[i].narma = s.narma;
        }

        let used_delta = delta_t;
        let outcome = speciate(&population, &species, delta_t, &spec_cfg, &mut next_species_id);
        species = outcome.species;
        delta_t = outcome.delta_t;
        update_species(&mut species, &population);

        let fitness: Vec<f64> = population.iter().map(|g| g.fitness.unwrap_or(0.0)).collect();
        let best_idx = (0..fitness.len()).fold(0, |b, i| if fitness[i] > fitness[b] { i } else { b });
        let best = population[best_idx].clone();
        let vseed = derive_seed(seed, &[STREAM_VALIDATION, generation as u64]);
        let best_net = decode_to_network(&best, sub, &decode_cfg).ok();
        let best_nr = match (&monitor.nr, &best_net) {
            (Some(spec), Some(net)) => tasks::negative_ratio_score(net, spec, vseed).ok().map(|r| r.score),
            _ => None,
        };
        let best_lambda = match (&monitor.lyapunov, &best_net) {
            (Some(lc), Some(net)) => lyapunov_exponent(net, lc, vseed).ok().map(|e| e.lambda),
            _ => None,
        };
        let record = GenerationRecord {
            generation,
            best_fitness: fitness[best_idx],
            mean_fitness: fitness.iter().sum::<f64>() / fitness.len() as f64,
            best_mmse: best.mmse,
            best_narma: best.narma,
            best_nr,
            best_lambda,
            best_connections: best_net.as_ref().map_or(0, |n| n.connection_count()),
            species_count: species.len(),
            delta_t: used_delta,
            best_genome_id: best.id,
        };
        on_generation(&record, &best);
        records.push(record);
        best_genomes.push(best);

        if generation + 1 < cfg.generations {
            registry.begin_generation();
            population =
                reproduce(&population, &mut species, &repro, &mut rng, &mut registry, &mut next_genome_id).population;
            debug_assert_eq!(population.len(), cfg.population);
        }
    }
    Ok(EvolutionRun { records, best_genomes, final_population: population })
}
