use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::genome::{CppnGenome, InnovationRegistry};
use super::mutation::{mutate, MutationConfig};
use super::species::Species;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReproductionConfig {
    pub population: usize,
    /// Fraction of the population copied unchanged; at least one elite.
    pub elitism: f64,
    /// Fraction of each species eligible as parents.
    pub reproduce_top: f64,
    pub tournament_size: usize,
    pub crossover_p: f64,
    pub interspecies_p: f64,
    pub stagnation_limit: usize,
    /// Genomes younger than this many generations get the youth boost.
    pub youth_generations: usize,
    /// Multiplicative selection bonus for young genomes.
    pub youth_boost: f64,
    pub mutation: MutationConfig,
}

impl Default for ReproductionConfig {
    fn default() -> Self {
        Self {
            population: 150,
            elitism: 0.05,
            reproduce_top: 0.25,
            tournament_size: 4,
            crossover_p: 0.70,
            interspecies_p: 0.0001,
            stagnation_limit: 20,
            youth_generations: 15,
            youth_boost: 0.10,
            mutation: MutationConfig::default(),
        }
    }
}

impl ReproductionConfig {
    pub fn elite_count(&self) -> usize {
        ((self.elitism * self.population as f64).floor() as usize).max(1).min(self.population)
    }
}

/// Fitness used for selection: raw fitness shifted so the population minimum
/// is zero, then boosted for young genomes. Never written to the run log.
pub fn selection_fitness(population: &[CppnGenome], cfg: &ReproductionConfig) -> Vec<f64> {
    let raw: Vec<f64> = population.iter().map(|g| g.fitness.unwrap_or(0.0)).collect();
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    raw.iter()
        .zip(population)
        .map(|(&f, g)| {
            let shifted = f - min;
            if g.age < cfg.youth_generations {
                shifted * (1.0 + cfg.youth_boost)
            } else {
                shifted
            }
        })
        .collect()
}

/// Largest-remainder apportionment of `total` slots by `shares`. Equal
/// split when all shares are zero; remainder ties go to the lower index.
pub fn allocate(shares: &[f64], total: usize) -> Vec<usize> {
    if shares.is_empty() {
        return Vec::new();
    }
    let sum: f64 = shares.iter().sum();
    let quotas: Vec<f64> = if sum > 0.0 && sum.is_finite() {
        shares.iter().map(|s| s / sum * total as f64).collect()
    } else {
        vec![total as f64 / shares.len() as f64; shares.len()]
    };
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Child with the fitter parent's genes; matching genes take their weight and
/// enabled flag from either parent at random.
pub fn crossover(fitter: &CppnGenome, other: &CppnGenome, rng: &mut impl Rng) -> CppnGenome {
    let theirs: HashMap<u64, usize> = other.connections.iter().enumerate().map(|(i, c)| (c.innovation, i)).collect();
    let mut child = fitter.clone();
    for c in &mut child.connections {
        if let Some(&j) = theirs.get(&c.innovation) {
            if rng.random_bool(0.5) {
                c.weight = other.connections[j].weight;
                c.enabled = other.connections[j].enabled;
            }
        }
    }
    for n in &mut child.nodes {
        if let Some(m) = other.node(n.id) {
            if rng.random_bool(0.5) {
                n.bias = m.bias;
                n.transfer = m.transfer;
            }
        }
    }
    // Re-enabling a gene may close a cycle that only existed through
    // disabled genes in the fitter parent; fall back to its flags then.
    if super::cppn::topological_order(&child).is_err() {
        for (c, f) in child.connections.iter_mut().zip(&fitter.connections) {
            c.enabled = f.enabled;
        }
    }
    child.fitness = None;
    child.mmse = None;
    child.narma = None;
    child.age = 0;
    child
}

fn tournament(pool: &[usize], sel: &[f64], size: usize, rng: &mut impl Rng) -> usize {
    let mut best = pool[rng.random_range(0..pool.len())];
    for _ in 1..size {
        let c = pool[rng.random_range(0..pool.len())];
        if sel[c] > sel[best] {
            best = c;
        }
    }
    best
}

/// Outcome of one reproduction step.
#[derive(Debug, Clone)]
pub struct Offspring {
    pub population: Vec<CppnGenome>,
    /// Set when every species was stagnant and the two best were revived.
    pub revived: bool,
}

/// Builds the next generation from an evaluated, speciated population.
pub fn reproduce(
    population: &[CppnGenome],
    species: &mut [Species],
    cfg: &ReproductionConfig,
    rng: &mut impl Rng,
    registry: &mut InnovationRegistry,
    next_genome_id: &mut u64,
) -> Offspring {
    let raw: Vec<f64> = population.iter().map(|g| g.fitness.unwrap_or(0.0)).collect();
    let sel = selection_fitness(population, cfg);

    let mut by_fitness: Vec<usize> = (0..population.len()).collect();
    by_fitness.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]).then(a.cmp(&b)));
    let n_elites = cfg.elite_count().min(population.len());
    let mut next: Vec<CppnGenome> = by_fitness[..n_elites]
        .iter()
        .map(|&i| {
            let mut g = population[i].clone();
            g.age += 1;
            g
        })
        .collect();

    let mut eligible: Vec<usize> = (0..species.len()).filter(|&s| species[s].stagnation < cfg.stagnation_limit).collect();
    let revived = eligible.is_empty() && !species.is_empty();
    if revived {
        let mut order: Vec<usize> = (0..species.len()).collect();
        order.sort_by(|&a, &b| species[b].best_fitness.total_cmp(&species[a].best_fitness).then(a.cmp(&b)));
        order.truncate(2);
        order.sort_unstable();
        for &s in &order {
            species[s].stagnation = 0;
        }
        eligible = order;
    }

    let pools: Vec<Vec<usize>> = eligible
        .iter()
        .map(|&s| {
            let mut m = species[s].members.clone();
            m.sort_by(|&a, &b| sel[b].total_cmp(&sel[a]).then(a.cmp(&b)));
            let keep = ((cfg.reproduce_top * m.len() as f64).ceil() as usize).clamp(1, m.len());
            m.truncate(keep);
            m
        })
        .collect();
    let shares: Vec<f64> = eligible
        .iter()
        .map(|&s| {
            let m = &species[s].members;
            m.iter().map(|&i| sel[i]).sum::<f64>() / m.len() as f64
        })
        .collect();
    let counts = allocate(&shares, cfg.population - next.len());

    for (k, &count) in counts.iter().enumerate() {
        let pool = &pools[k];
        for _ in 0..count {
            let p1 = tournament(pool, &sel, cfg.tournament_size, rng);
            let mut child = if rng.random_bool(cfg.crossover_p) {
                let other_pool = if pools.len() > 1 && rng.random_bool(cfg.interspecies_p) {
                    let mut j = rng.random_range(0..pools.len() - 1);
                    if j >= k {
                        j += 1;
                    }
                    &pools[j]
                } else {
                    pool
                };
                let p2 = tournament(other_pool, &sel, cfg.tournament_size, rng);
                let (fitter, weaker) = if raw[p2] > raw[p1] { (p2, p1) } else { (p1, p2) };
                crossover(&population[fitter], &population[weaker], rng)
            } else {
                let mut c = population[p1].clone();
                c.fitness = None;
                c.mmse = None;
                c.narma = None;
                c.age = 0;
                c
            };
            mutate(&mut child, &cfg.mutation, rng, registry);
            child.id = *next_genome_id;
            *next_genome_id += 1;
            next.push(child);
        }
    }
    Offspring { population: next, revived }
}
