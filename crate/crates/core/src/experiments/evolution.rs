use std::io::Write;

use crate::neuroevo::{evolve_with, EvolutionConfig, EvolutionRun, FitnessEvaluator, GenerationMonitor, GenerationRecord};
use crate::seed::derive_seed;
use crate::substrate::{random_spiral, Substrate};

const STREAM_RUN: u64 = 30;
const STREAM_OMEGA: u64 = 31;

/// One independent evolution on its own randomly rotated substrate.
#[derive(Debug)]
pub struct RunOutcome {
    pub run: usize,
    pub substrate: Substrate,
    pub result: Result<EvolutionRun, String>,
}

/// Runs `runs` evolutions one after another (each parallelises its fitness
/// evaluations). A failing run is reported in its outcome and the rest
/// continue.
pub fn run_evolution_experiment(
    cfg: &EvolutionConfig,
    evaluator: &dyn FitnessEvaluator,
    runs: usize,
    n_neurons: usize,
    monitor: &GenerationMonitor,
    master_seed: u64,
    mut on_generation: impl FnMut(usize, &GenerationRecord),
) -> Vec<RunOutcome> {
    (0..runs)
        .map(|run| {
            let substrate = random_spiral(n_neurons, derive_seed(master_seed, &[STREAM_OMEGA, run as u64]));
            let seed = derive_seed(master_seed, &[STREAM_RUN, run as u64]);
            let result = evolve_with(cfg, evaluator, &substrate, monitor, seed, |r, _| on_generation(run, r))
                .map_err(|e| e.to_string());
            RunOutcome { run, substrate, result }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const RUN_LOG_HEADER: [&str; 9] =
    ["run", "generation", "best_fitness", "mean_fitness", "best_mmse", "best_narma", "best_nr", "species_count", "delta_t"];

/// Per-generation log of every successful run.
pub fn write_run_log<W: Write>(out: W, outcomes: &[RunOutcome]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUN_LOG_HEADER)?;
    for o in outcomes {
        let Ok(run) = &o.result else { continue };
        for r in &run.records {
            w.write_record([
                o.run.to_string(),
                r.generation.to_string(),
                r.best_fitness.to_string(),
                r.mean_fitness.to_string(),
                opt(r.best_mmse),
                opt(r.best_narma),
                opt(r.best_nr),
                r.species_count.to_string(),
                r.delta_t.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Dynamics and size of each generation's best network.
pub fn write_generation_best<W: Write>(out: W, outcomes: &[RunOutcome]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["run", "generation", "genome_id", "fitness", "lambda", "nr", "connections", "omega"])?;
    for o in outcomes {
        let Ok(run) = &o.result else { continue };
        for r in &run.records {
            w.write_record([
                o.run.to_string(),
                r.generation.to_string(),
                r.best_genome_id.to_string(),
                r.best_fitness.to_string(),
                opt(r.best_lambda),
                opt(r.best_nr),
                r.best_connections.to_string(),
                o.substrate.omega.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
