use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::genome::{ConnectionGene, CppnGenome, InnovationRegistry, NodeGene, NodeRole};
use crate::reservoir::Transfer;

/// Mutation probabilities. Structural and per-gene events only fire when the
/// genome was selected for mutation with probability `mutation_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationConfig {
    pub mutation_p: f64,
    pub p_add_neuron: f64,
    pub p_add_conn: f64,
    pub p_del_conn: f64,
    pub p_weight_perturb: f64,
    pub weight_perturb_range: f64,
    pub p_bias: f64,
    pub p_transfer: f64,
    /// New connections draw their weight from `[-new_weight_range, new_weight_range]`.
    pub new_weight_range: f64,
    /// Random endpoint pairs tried before add-connection gives up.
    pub add_conn_attempts: usize,
}

impl Default for MutationConfig {
    fn default() -> Self {
        Self {
            mutation_p: 0.15,
            p_add_neuron: 0.01,
            p_add_conn: 0.08,
            p_del_conn: 0.02,
            p_weight_perturb: 0.90,
            weight_perturb_range: 0.2,
            p_bias: 0.01,
            p_transfer: 0.03,
            new_weight_range: 1.0,
            add_conn_attempts: 32,
        }
    }
}

impl MutationConfig {
    /// Named probabilities, for range validation.
    pub fn probabilities(&self) -> [(&'static str, f64); 7] {
        [
            ("mutation_p", self.mutation_p),
            ("p_add_neuron", self.p_add_neuron),
            ("p_add_conn", self.p_add_conn),
            ("p_del_conn", self.p_del_conn),
            ("p_weight_perturb", self.p_weight_perturb),
            ("p_bias", self.p_bias),
            ("p_transfer", self.p_transfer),
        ]
    }
}

/// What happened during one call to [`mutate`]. `*_fired` flags record that the
/// event was drawn, `*_applied` that it changed the genome.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MutationReport {
    pub mutated: bool,
    pub add_neuron_fired: bool,
    pub add_neuron_applied: bool,
    pub add_conn_fired: bool,
    pub add_conn_applied: bool,
    pub del_conn_fired: bool,
    pub del_conn_applied: bool,
    pub weights_perturbed: usize,
    pub weights_total: usize,
    pub biases_mutated: usize,
    pub transfers_mutated: usize,
    pub mutable_nodes: usize,
}

/// Mutates `genome` in place. Per-gene perturbations run before structural
/// changes, so the gene counts in the report refer to the incoming genome.
pub fn mutate(
    genome: &mut CppnGenome,
    cfg: &MutationConfig,
    rng: &mut impl Rng,
    registry: &mut InnovationRegistry,
) -> MutationReport {
    let mut report = MutationReport::default();
    if !rng.random_bool(cfg.mutation_p) {
        return report;
    }
    report.mutated = true;

    report.weights_total = genome.connections.len();
    for c in &mut genome.connections {
        if rng.random_bool(cfg.p_weight_perturb) {
            c.weight += perturbation(rng, cfg.weight_perturb_range);
            report.weights_perturbed += 1;
        }
    }
    for n in genome.nodes.iter_mut().filter(|n| n.role != NodeRole::Input) {
        report.mutable_nodes += 1;
        if rng.random_bool(cfg.p_bias) {
            n.bias += perturbation(rng, cfg.weight_perturb_range);
            report.biases_mutated += 1;
        }
        if rng.random_bool(cfg.p_transfer) {
            n.transfer = *Transfer::ALL.choose(rng).expect("non-empty");
            report.transfers_mutated += 1;
        }
    }

    report.add_neuron_fired = rng.random_bool(cfg.p_add_neuron);
    if report.add_neuron_fired {
        report.add_neuron_applied = add_neuron(genome, rng, registry);
    }
    report.add_conn_fired = rng.random_bool(cfg.p_add_conn);
    if report.add_conn_fired {
        report.add_conn_applied = add_connection(genome, cfg, rng, registry);
    }
    report.del_conn_fired = rng.random_bool(cfg.p_del_conn);
    if report.del_conn_fired && !genome.connections.is_empty() {
        let i = rng.random_range(0..genome.connections.len());
        genome.connections.remove(i);
        report.del_conn_applied = true;
    }
    report
}

fn perturbation(rng: &mut impl Rng, range: f64) -> f64 {
    if range > 0.0 {
        rng.random_range(-range..=range)
    } else {
        0.0
    }
}

/// Splits a random enabled connection `a -> b (w)` into `a -> new (1.0)` and
/// `new -> b (w)`, disabling the original.
pub fn add_neuron(genome: &mut CppnGenome, rng: &mut impl Rng, registry: &mut InnovationRegistry) -> bool {
    let enabled: Vec<usize> = (0..genome.connections.len()).filter(|&i| genome.connections[i].enabled).collect();
    let Some(&idx) = enabled.choose(rng) else {
        return false;
    };
    let old = genome.connections[idx].clone();
    let ids = registry.split(old.innovation, old.from, old.to);
    if genome.node(ids.node).is_some() {
        // The same split already happened in this genome's lineage this
        // generation; reusing its ids would duplicate genes.
        return false;
    }
    genome.connections[idx].enabled = false;
    let transfer = *Transfer::ALL.choose(rng).expect("non-empty");
    genome.nodes.push(NodeGene { id: ids.node, role: NodeRole::Hidden, transfer, bias: 0.0 });
    genome.connections.push(ConnectionGene { innovation: ids.incoming, from: old.from, to: ids.node, weight: 1.0, enabled: true });
    genome.connections.push(ConnectionGene { innovation: ids.outgoing, from: ids.node, to: old.to, weight: old.weight, enabled: true });
    genome.sort_connections();
    true
}

/// Adds a connection between a random pair of nodes that keeps the graph
/// acyclic and is not already present.
pub fn add_connection(
    genome: &mut CppnGenome,
    cfg: &MutationConfig,
    rng: &mut impl Rng,
    registry: &mut InnovationRegistry,
) -> bool {
    let sources: Vec<u64> = genome.nodes.iter().filter(|n| n.role != NodeRole::Output).map(|n| n.id).collect();
    let targets: Vec<u64> = genome.nodes.iter().filter(|n| n.role != NodeRole::Input).map(|n| n.id).collect();
    for _ in 0..cfg.add_conn_attempts {
        let from = *sources.choose(rng).expect("inputs always exist");
        let to = *targets.choose(rng).expect("outputs always exist");
        if from == to || genome.has_connection(from, to) || genome.creates_cycle(from, to) {
            continue;
        }
        let innovation = registry.connection(from, to);
        if genome.connections.iter().any(|c| c.innovation == innovation) {
            continue;
        }
        let weight = perturbation(rng, cfg.new_weight_range);
        genome.connections.push(ConnectionGene { innovation, from, to, weight, enabled: true });
        genome.sort_connections();
        return true;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuroevo::cppn::topological_order;
    use crate::seed::rng_from_seed;

    fn seeded() -> (CppnGenome, InnovationRegistry, crate::seed::Rng) {
        let mut reg = InnovationRegistry::new();
        let mut rng = rng_from_seed(3);
        let g = CppnGenome::minimal(0, 1.0, &mut reg, &mut rng);
        (g, reg, rng)
    }

    #[test]
    fn no_mutation_leaves_genome_unchanged() {
        let (g, mut reg, mut rng) = seeded();
        let cfg = MutationConfig { mutation_p: 0.0, ..Default::default() };
        let mut m = g.clone();
        for _ in 0..100 {
            assert!(!mutate(&mut m, &cfg, &mut rng, &mut reg).mutated);
        }
        assert_eq!(m, g);
    }

    #[test]
    fn split_convention() {
        let (mut g, mut reg, mut rng) = seeded();
        g.connections.retain(|c| c.innovation == 0);
        let old = g.connections[0].clone();
        assert!(add_neuron(&mut g, &mut rng, &mut reg));
        let disabled = g.connections.iter().find(|c| c.innovation == old.innovation).unwrap();
        assert!(!disabled.enabled);
        let new = g.nodes.iter().find(|n| n.role == NodeRole::Hidden).unwrap().id;
        let inc = g.connections.iter().find(|c| c.to == new).unwrap();
        let out = g.connections.iter().find(|c| c.from == new).unwrap();
        assert_eq!((inc.from, inc.weight), (old.from, 1.0));
        assert_eq!((out.to, out.weight), (old.to, old.weight));
        g.validate().unwrap();
    }

    #[test]
    fn identical_splits_share_ids() {
        let (g, mut reg, mut rng) = seeded();
        reg.begin_generation();
        let mut a = g.clone();
        let mut b = g.clone();
        a.connections.retain(|c| c.innovation == 5);
        b.connections.retain(|c| c.innovation == 5);
        add_neuron(&mut a, &mut rng, &mut reg);
        add_neuron(&mut b, &mut rng, &mut reg);
        assert_eq!(a.connections, b.connections);
        assert_eq!(a.nodes, {
            let mut n = b.nodes.clone();
            n.last_mut().unwrap().transfer = a.nodes.last().unwrap().transfer;
            n
        });
    }

    #[test]
    fn event_frequencies_match_configuration() {
        let (g, mut reg, mut rng) = seeded();
        let cfg = MutationConfig::default();
        let trials = 100_000usize;
        let mut mutated = 0usize;
        let (mut add_n, mut add_c, mut del_c) = (0usize, 0usize, 0usize);
        let (mut wp, mut wt, mut bm, mut tm, mut nodes) = (0usize, 0usize, 0usize, 0usize, 0usize);
        for _ in 0..trials {
            let mut m = g.clone();
            let r = mutate(&mut m, &cfg, &mut rng, &mut reg);
            if r.mutated {
                mutated += 1;
                add_n += r.add_neuron_fired as usize;
                add_c += r.add_conn_fired as usize;
                del_c += r.del_conn_fired as usize;
                wp += r.weights_perturbed;
                wt += r.weights_total;
                bm += r.biases_mutated;
                tm += r.transfers_mutated;
                nodes += r.mutable_nodes;
            }
        }
        let within = |count: usize, n: usize, p: f64| {
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            (count as f64 - n as f64 * p).abs() <= 3.0 * sd
        };
        assert!(within(mutated, trials, cfg.mutation_p), "mutated {mutated}");
        assert!(within(add_n, mutated, cfg.p_add_neuron), "add neuron {add_n}/{mutated}");
        assert!(within(add_c, mutated, cfg.p_add_conn), "add conn {add_c}/{mutated}");
        assert!(within(del_c, mutated, cfg.p_del_conn), "del conn {del_c}/{mutated}");
        assert!(within(wp, wt, cfg.p_weight_perturb), "weights {wp}/{wt}");
        assert!(within(bm, nodes, cfg.p_bias), "bias {bm}/{nodes}");
        assert!(within(tm, nodes, cfg.p_transfer), "transfer {tm}/{nodes}");
    }

    #[test]
    fn long_mutation_chains_stay_acyclic() {
        let (mut g, mut reg, mut rng) = seeded();
        let cfg = MutationConfig {
            mutation_p: 1.0,
            p_add_neuron: 0.2,
            p_add_conn: 0.5,
            p_del_conn: 0.05,
            ..Default::default()
        };
        for i in 0..10_000 {
            if i % 50 == 0 {
                reg.begin_generation();
            }
            mutate(&mut g, &cfg, &mut rng, &mut reg);
            assert!(topological_order(&g).is_ok(), "cycle after {i} mutations");
        }
        g.validate().unwrap();
        assert!(g.hidden_count() > 10);
    }

    #[test]
    fn perturbations_stay_in_range() {
        let (g, mut reg, mut rng) = seeded();
        let cfg = MutationConfig { mutation_p: 1.0, p_add_neuron: 0.0, p_add_conn: 0.0, p_del_conn: 0.0, ..Default::default() };
        for _ in 0..1000 {
            let mut m = g.clone();
            mutate(&mut m, &cfg, &mut rng, &mut reg);
            for (a, b) in g.connections.iter().zip(&m.connections) {
                assert!((a.weight - b.weight).abs() <= 0.2 + 1e-15);
            }
        }
    }
}
