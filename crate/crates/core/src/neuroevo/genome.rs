use std::collections::{HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::CppnError;
use crate::reservoir::Transfer;

/// CPPN inputs: source x, source y, target x, target y, distance, bias.
pub const CPPN_INPUTS: usize = 6;
/// CPPN outputs: raw weight, raw expression.
pub const CPPN_OUTPUTS: usize = 2;
pub const WEIGHT_OUTPUT: u64 = CPPN_INPUTS as u64;
pub const EXPRESSION_OUTPUT: u64 = CPPN_INPUTS as u64 + 1;
pub(crate) const FIRST_HIDDEN_ID: u64 = (CPPN_INPUTS + CPPN_OUTPUTS) as u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Input,
    Hidden,
    Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeGene {
    pub id: u64,
    pub role: NodeRole,
    pub transfer: Transfer,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionGene {
    pub innovation: u64,
    pub from: u64,
    pub to: u64,
    pub weight: f64,
    pub enabled: bool,
}

/// NEAT genome encoding a CPPN. Connection genes are kept sorted by
/// innovation number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CppnGenome {
    pub id: u64,
    pub nodes: Vec<NodeGene>,
    pub connections: Vec<ConnectionGene>,
    /// Raw fitness; `None` until evaluated.
    pub fitness: Option<f64>,
    /// Generations survived since creation.
    pub age: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mmse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub narma: Option<f64>,
}

impl CppnGenome {
    /// Genome with the fixed input and output nodes and no connections.
    pub fn bare(id: u64) -> Self {
        let mut nodes: Vec<NodeGene> = (0..CPPN_INPUTS as u64)
            .map(|id| NodeGene { id, role: NodeRole::Input, transfer: Transfer::Linear, bias: 0.0 })
            .collect();
        for id in [WEIGHT_OUTPUT, EXPRESSION_OUTPUT] {
            nodes.push(NodeGene { id, role: NodeRole::Output, transfer: Transfer::Linear, bias: 0.0 });
        }
        Self { id, nodes, connections: Vec::new(), fitness: None, age: 0, mmse: None, narma: None }
    }

    /// Every input wired to both outputs with weights uniform on
    /// `[-weight_range, weight_range]`.
    pub fn minimal(id: u64, weight_range: f64, registry: &mut InnovationRegistry, rng: &mut impl Rng) -> Self {
        let mut g = Self::bare(id);
        for from in 0..CPPN_INPUTS as u64 {
            for to in [WEIGHT_OUTPUT, EXPRESSION_OUTPUT] {
                let innovation = registry.connection(from, to);
                let weight = rng.random_range(-weight_range..=weight_range);
                g.connections.push(ConnectionGene { innovation, from, to, weight, enabled: true });
            }
        }
        g.sort_connections();
        g
    }

    pub fn sort_connections(&mut self) {
        self.connections.sort_by_key(|c| c.innovation);
    }

    pub fn node(&self, id: u64) -> Option<&NodeGene> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn has_connection(&self, from: u64, to: u64) -> bool {
        self.connections.iter().any(|c| c.from == from && c.to == to)
    }

    pub fn hidden_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.role == NodeRole::Hidden).count()
    }

    /// Whether `to` can reach `from` along enabled or disabled connections, so
    /// that adding `from -> to` would close a cycle.
    pub fn creates_cycle(&self, from: u64, to: u64) -> bool {
        if from == to {
            return true;
        }
        let mut adj: HashMap<u64, Vec<u64>> = HashMap::new();
        for c in &self.connections {
            adj.entry(c.from).or_default().push(c.to);
        }
        let mut stack = vec![to];
        let mut seen = HashSet::new();
        while let Some(v) = stack.pop() {
            if v == from {
                return true;
            }
            if seen.insert(v) {
                if let Some(next) = adj.get(&v) {
                    stack.extend(next);
                }
            }
        }
        false
    }

    /// Checks structural invariants: unique ids, known endpoints, fixed
    /// nodes present, acyclic graph.
    pub fn validate(&self) -> Result<(), CppnError> {
        let ids: HashSet<u64> = self.nodes.iter().map(|n| n.id).collect();
        if ids.len() != self.nodes.len() {
            return Err(CppnError::Invalid("duplicate node id".into()));
        }
        for id in 0..FIRST_HIDDEN_ID {
            if !ids.contains(&id) {
                return Err(CppnError::Invalid(format!("fixed node {id} missing")));
            }
        }
        let mut innovations = HashSet::new();
        for c in &self.connections {
            if !innovations.insert(c.innovation) {
                return Err(CppnError::Invalid(format!("duplicate innovation {}", c.innovation)));
            }
            if !ids.contains(&c.from) || !ids.contains(&c.to) {
                return Err(CppnError::Invalid(format!("connection {} references a missing node", c.innovation)));
            }
            if !c.weight.is_finite() {
                return Err(CppnError::Invalid(format!("connection {} has a non-finite weight", c.innovation)));
            }
        }
        super::cppn::topological_order(self).map(|_| ())
    }
}

/// Split of an existing connection into two via a new node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitIds {
    pub node: u64,
    pub incoming: u64,
    pub outgoing: u64,
}

/// Hands out innovation numbers and node ids. Identical structural
/// mutations within one generation receive identical ids.
#[derive(Debug, Clone, Default)]
pub struct InnovationRegistry {
    next_innovation: u64,
    next_node: u64,
    connections: HashMap<(u64, u64), u64>,
    splits: HashMap<u64, SplitIds>,
}

impl InnovationRegistry {
    pub fn new() -> Self {
        Self { next_innovation: 0, next_node: FIRST_HIDDEN_ID, connections: HashMap::new(), splits: HashMap::new() }
    }

    /// Forgets the per-generation cache; counters keep increasing.
    pub fn begin_generation(&mut self) {
        self.connections.clear();
        self.splits.clear();
    }

    pub fn connection(&mut self, from: u64, to: u64) -> u64 {
        if let Some(&id) = self.connections.get(&(from, to)) {
            return id;
        }
        let id = self.next_innovation;
        self.next_innovation += 1;
        self.connections.insert((from, to), id);
        id
    }

    pub fn split(&mut self, innovation: u64, from: u64, to: u64) -> SplitIds {
        if let Some(ids) = self.splits.get(&innovation) {
            return *ids;
        }
        let node = self.next_node;
        self.next_node += 1;
        let incoming = self.next_innovation;
        let outgoing = self.next_innovation + 1;
        self.next_innovation += 2;
        self.connections.insert((from, node), incoming);
        self.connections.insert((node, to), outgoing);
        let ids = SplitIds { node, incoming, outgoing };
        self.splits.insert(innovation, ids);
        ids
    }

    pub fn innovations_issued(&self) -> u64 {
        self.next_innovation
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn minimal_genome_is_valid() {
        let mut reg = InnovationRegistry::new();
        let mut rng = rng_from_seed(1);
        let a = CppnGenome::minimal(0, 1.0, &mut reg, &mut rng);
        let b = CppnGenome::minimal(1, 1.0, &mut reg, &mut rng);
        assert_eq!(a.connections.len(), 12);
        a.validate().unwrap();
        let ia: Vec<u64> = a.connections.iter().map(|c| c.innovation).collect();
        let ib: Vec<u64> = b.connections.iter().map(|c| c.innovation).collect();
        assert_eq!(ia, ib);
        assert_eq!(reg.innovations_issued(), 12);
    }

    #[test]
    fn registry_reuses_ids_within_generation_only() {
        let mut reg = InnovationRegistry::new();
        let a = reg.connection(0, 8);
        assert_eq!(reg.connection(0, 8), a);
        let s1 = reg.split(a, 0, 8);
        assert_eq!(reg.split(a, 0, 8), s1);
        reg.begin_generation();
        assert_ne!(reg.connection(0, 8), a);
        assert_ne!(reg.split(a, 0, 8).node, s1.node);
    }

    #[test]
    fn validation_catches_broken_genomes() {
        let mut g = CppnGenome::bare(0);
        g.connections.push(ConnectionGene { innovation: 0, from: 0, to: 99, weight: 1.0, enabled: true });
        assert!(g.validate().is_err());
        let mut g = CppnGenome::bare(0);
        g.nodes.retain(|n| n.id != WEIGHT_OUTPUT);
        assert!(g.validate().is_err());
    }

    #[test]
    fn cycle_detection() {
        let mut g = CppnGenome::bare(0);
        g.nodes.push(NodeGene { id: 8, role: NodeRole::Hidden, transfer: Transfer::Tanh, bias: 0.0 });
        g.nodes.push(NodeGene { id: 9, role: NodeRole::Hidden, transfer: Transfer::Tanh, bias: 0.0 });
        g.connections.push(ConnectionGene { innovation: 0, from: 8, to: 9, weight: 1.0, enabled: true });
        assert!(g.creates_cycle(9, 8));
        assert!(!g.creates_cycle(8, 9));
        assert!(g.creates_cycle(8, 8));
    }
}
