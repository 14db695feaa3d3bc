use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::genome::CppnGenome;

/// `F / N + W / 2`: F non-matching genes, N the larger gene count, W the
/// mean absolute weight difference of matching genes.
pub fn genome_distance(a: &CppnGenome, b: &CppnGenome) -> f64 {
    let weights: HashMap<u64, f64> = b.connections.iter().map(|c| (c.innovation, c.weight)).collect();
    let mut matching = 0usize;
    let mut diff = 0.0;
    for c in &a.connections {
        if let Some(w) = weights.get(&c.innovation) {
            matching += 1;
            diff += (c.weight - w).abs();
        }
    }
    let non_matching = a.connections.len() + b.connections.len() - 2 * matching;
    let n = a.connections.len().max(b.connections.len()).max(1);
    let mean_diff = if matching > 0 { diff / matching as f64 } else { 0.0 };
    non_matching as f64 / n as f64 + mean_diff / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub id: u64,
    pub representative: CppnGenome,
    /// Indices into the current population.
    pub members: Vec<usize>,
    pub best_fitness: f64,
    /// Generations since `best_fitness` last improved.
    pub stagnation: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeciationConfig {
    pub species_min: usize,
    pub species_max: usize,
    pub delta_step: f64,
}

impl Default for SpeciationConfig {
    fn default() -> Self {
        Self { species_min: 5, species_max: 10, delta_step: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Speciation {
    pub species: Vec<Species>,
    /// Threshold for the next generation.
    pub delta_t: f64,
}

/// Assigns each genome to the first species whose representative is within
/// `delta_t`, founding new species otherwise. Species left without members
/// are dropped; surviving species keep their stagnation bookkeeping. The
/// threshold is then moved by `delta_step` towards the target species range,
/// never dropping below `delta_step`.
pub fn speciate(
    population: &[CppnGenome],
    previous: &[Species],
    delta_t: f64,
    cfg: &SpeciationConfig,
    next_species_id: &mut u64,
) -> Speciation {
    let mut species: Vec<Species> = previous.iter().map(|s| Species { members: Vec::new(), ..s.clone() }).collect();
    for (i, g) in population.iter().enumerate() {
        match species.iter_mut().find(|s| genome_distance(g, &s.representative) < delta_t) {
            Some(s) => s.members.push(i),
            None => {
                species.push(Species {
                    id: *next_species_id,
                    representative: g.clone(),
                    members: vec![i],
                    best_fitness: f64::NEG_INFINITY,
                    stagnation: 0,
                });
                *next_species_id += 1;
            }
        }
    }
    species.retain(|s| !s.members.is_empty());
    let delta_t = adjust_threshold(delta_t, species.len(), cfg);
    Speciation { species, delta_t }
}

pub fn adjust_threshold(delta_t: f64, count: usize, cfg: &SpeciationConfig) -> f64 {
    if count > cfg.species_max {
        delta_t + cfg.delta_step
    } else if count < cfg.species_min {
        (delta_t - cfg.delta_step).max(cfg.delta_step)
    } else {
        delta_t
    }
}

/// Updates best fitness and stagnation counters from evaluated members and
/// picks each species' fittest member as its next representative.
pub fn update_species(species: &mut [Species], population: &[CppnGenome]) {
    for s in species {
        let (best_idx, best) = s
            .members
            .iter()
            .map(|&i| (i, population[i].fitness.unwrap_or(f64::NEG_INFINITY)))
            .fold((s.members[0], f64::NEG_INFINITY), |acc, (i, f)| if f > acc.1 { (i, f) } else { acc });
        if best > s.best_fitness {
            s.best_fitness = best;
            s.stagnation = 0;
        } else {
            s.stagnation += 1;
        }
        s.representative = population[best_idx].clone();
    }
}
