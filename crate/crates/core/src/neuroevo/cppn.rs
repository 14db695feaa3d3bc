use std::collections::HashMap;

use super::genome::{CppnGenome, NodeRole, CPPN_INPUTS, EXPRESSION_OUTPUT, WEIGHT_OUTPUT};
use super::CppnError;
use crate::reservoir::Transfer;

/// Node ids in an order where every enabled connection points forward.
pub fn topological_order(genome: &CppnGenome) -> Result<Vec<u64>, CppnError> {
    let mut indegree: HashMap<u64, usize> = genome.nodes.iter().map(|n| (n.id, 0)).collect();
    let mut out: HashMap<u64, Vec<u64>> = HashMap::new();
    for c in genome.connections.iter().filter(|c| c.enabled) {
        *indegree
            .get_mut(&c.to)
            .ok_or_else(|| CppnError::Invalid(format!("connection {} targets missing node {}", c.innovation, c.to)))? += 1;
        if !indegree.contains_key(&c.from) {
            return Err(CppnError::Invalid(format!("connection {} starts at missing node {}", c.innovation, c.from)));
        }
        out.entry(c.from).or_default().push(c.to);
    }
    // Seed in genome node order so the result does not depend on hashing.
    let mut ready: Vec<u64> = genome.nodes.iter().map(|n| n.id).filter(|id| indegree[id] == 0).collect();
    ready.reverse();
    let mut order = Vec::with_capacity(genome.nodes.len());
    while let Some(v) = ready.pop() {
        order.push(v);
        if let Some(next) = out.get(&v) {
            for &t in next {
                let d = indegree.get_mut(&t).expect("checked above");
                *d -= 1;
                if *d == 0 {
                    ready.push(t);
                }
            }
        }
    }
    if order.len() != genome.nodes.len() {
        return Err(CppnError::Cycle);
    }
    Ok(order)
}

/// A genome flattened into an evaluation schedule.
#[derive(Debug, Clone)]
pub struct CompiledCppn {
    steps: Vec<Step>,
    n_nodes: usize,
    outputs: [usize; 2],
}

#[derive(Debug, Clone)]
struct Step {
    node: usize,
    transfer: Transfer,
    bias: f64,
    sources: Vec<(usize, f64)>,
}

impl CompiledCppn {
    pub fn new(genome: &CppnGenome) -> Result<Self, CppnError> {
        let order = topological_order(genome)?;
        // Inputs occupy slots 0..CPPN_INPUTS by id, the rest follow in
        // topological order.
        let mut slot: HashMap<u64, usize> = (0..CPPN_INPUTS as u64).map(|id| (id, id as usize)).collect();
        let mut computed = Vec::new();
        for id in &order {
            let node = genome.node(*id).expect("order built from nodes");
            match node.role {
                NodeRole::Input if node.id < CPPN_INPUTS as u64 => {}
                NodeRole::Input => return Err(CppnError::Invalid(format!("input node with id {}", node.id))),
                _ => {
                    slot.insert(node.id, CPPN_INPUTS + computed.len());
                    computed.push(node);
                }
            }
        }
        for id in 0..CPPN_INPUTS as u64 {
            if genome.node(id).map(|n| n.role) != Some(NodeRole::Input) {
                return Err(CppnError::Invalid(format!("input node {id} missing")));
            }
        }
        let mut sources: HashMap<u64, Vec<(usize, f64)>> = HashMap::new();
        for c in genome.connections.iter().filter(|c| c.enabled) {
            sources.entry(c.to).or_default().push((slot[&c.from], c.weight));
        }
        let steps = computed
            .iter()
            .map(|n| Step {
                node: slot[&n.id],
                transfer: n.transfer,
                bias: n.bias,
                sources: sources.remove(&n.id).unwrap_or_default(),
            })
            .collect();
        let output = |id: u64| slot.get(&id).copied().ok_or_else(|| CppnError::Invalid(format!("output node {id} missing")));
        Ok(Self { steps, n_nodes: CPPN_INPUTS + computed.len(), outputs: [output(WEIGHT_OUTPUT)?, output(EXPRESSION_OUTPUT)?] })
    }

    /// Evaluates with a caller-provided scratch buffer of length `n_nodes`.
    pub fn evaluate_into(&self, inputs: &[f64; CPPN_INPUTS], scratch: &mut Vec<f64>) -> [f64; 2] {
        scratch.clear();
        scratch.resize(self.n_nodes, 0.0);
        scratch[..CPPN_INPUTS].copy_from_slice(inputs);
        for s in &self.steps {
            let sum = s.bias + s.sources.iter().map(|&(j, w)| w * scratch[j]).sum::<f64>();
            scratch[s.node] = s.transfer.apply(sum);
        }
        [scratch[self.outputs[0]], scratch[self.outputs[1]]]
    }

    pub fn evaluate(&self, inputs: &[f64; CPPN_INPUTS]) -> [f64; 2] {
        let mut scratch = Vec::with_capacity(self.n_nodes);
        self.evaluate_into(inputs, &mut scratch)
    }
}

/// Evaluates a genome on `(x1, y1, x2, y2, distance, bias)` and returns
/// `(weight_raw, expression_raw)`.
pub fn cppn_evaluate(genome: &CppnGenome, inputs: &[f64]) -> Result<Vec<f64>, CppnError> {
    let inputs: &[f64; CPPN_INPUTS] = inputs
        .try_into()
        .map_err(|_| CppnError::Arity { expected: CPPN_INPUTS, got: inputs.len() })?;
    Ok(CompiledCppn::new(genome)?.evaluate(inputs).to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuroevo::genome::{ConnectionGene, NodeGene};

    fn conn(innovation: u64, from: u64, to: u64, weight: f64) -> ConnectionGene {
        ConnectionGene { innovation, from, to, weight, enabled: true }
    }

    #[test]
    fn identity_path() {
        let mut g = CppnGenome::bare(0);
        g.connections.push(conn(0, 0, WEIGHT_OUTPUT, 1.0));
        let out = cppn_evaluate(&g, &[0.7, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(out[0], 0.7);
    }

    #[test]
    fn zero_weights_give_transfer_of_bias() {
        let mut g = CppnGenome::bare(0);
        for (i, n) in g.nodes.iter_mut().enumerate() {
            if n.role == NodeRole::Output {
                n.bias = 0.3 * i as f64;
                n.transfer = Transfer::Sine;
            }
        }
        for from in 0..6 {
            g.connections.push(conn(from, from, WEIGHT_OUTPUT, 0.0));
        }
        let out = cppn_evaluate(&g, &[0.4, -0.2, 0.9, 0.1, 0.5, 1.0]).unwrap();
        assert_eq!(out, vec![(0.3 * 6.0f64).sin(), (0.3 * 7.0f64).sin()]);
    }

    #[test]
    fn hand_trace_three_nodes() {
        // x1 -> h (tanh, bias 0.1) -> weight output (sine); y2 -> weight output;
        // h -> expression output (signed gaussian, bias -0.2).
        let mut g = CppnGenome::bare(0);
        g.nodes.push(NodeGene { id: 8, role: NodeRole::Hidden, transfer: Transfer::Tanh, bias: 0.1 });
        for n in &mut g.nodes {
            if n.id == WEIGHT_OUTPUT {
                n.transfer = Transfer::Sine;
            }
            if n.id == EXPRESSION_OUTPUT {
                n.transfer = Transfer::SignedGaussian;
                n.bias = -0.2;
            }
        }
        g.connections.push(conn(0, 0, 8, 0.8));
        g.connections.push(conn(1, 8, WEIGHT_OUTPUT, -1.5));
        g.connections.push(conn(2, 3, WEIGHT_OUTPUT, 0.25));
        g.connections.push(conn(3, 8, EXPRESSION_OUTPUT, 2.0));
        let mut disabled = conn(4, 1, EXPRESSION_OUTPUT, 100.0);
        disabled.enabled = false;
        g.connections.push(disabled);
        let x = [0.3, -0.6, 0.2, 0.9, 0.5, 1.0];
        let h = (0.1 + 0.8 * 0.3f64).tanh();
        let w = (-1.5 * h + 0.25 * 0.9f64).sin();
        let e_in = -0.2 + 2.0 * h;
        let e = 2.0 * (-e_in * e_in).exp() - 1.0;
        let out = cppn_evaluate(&g, &x).unwrap();
        assert!((out[0] - w).abs() < 1e-12);
        assert!((out[1] - e).abs() < 1e-12);
    }

    #[test]
    fn cycle_is_an_error() {
        let mut g = CppnGenome::bare(0);
        g.nodes.push(NodeGene { id: 8, role: NodeRole::Hidden, transfer: Transfer::Tanh, bias: 0.0 });
        g.nodes.push(NodeGene { id: 9, role: NodeRole::Hidden, transfer: Transfer::Tanh, bias: 0.0 });
        g.connections.push(conn(0, 8, 9, 1.0));
        g.connections.push(conn(1, 9, 8, 1.0));
        assert!(matches!(cppn_evaluate(&g, &[0.0; 6]), Err(CppnError::Cycle)));
    }

    #[test]
    fn arity_is_checked() {
        let g = CppnGenome::bare(0);
        assert!(matches!(cppn_evaluate(&g, &[0.0; 5]), Err(CppnError::Arity { .. })));
    }
}
