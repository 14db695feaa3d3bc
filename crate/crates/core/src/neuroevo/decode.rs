use serde::{Deserialize, Serialize};

use super::cppn::CompiledCppn;
use super::genome::CppnGenome;
use super::CppnError;
use crate::reservoir::{ReservoirNetwork, Transfer};
use crate::substrate::Substrate;

/// Mapping from raw CPPN outputs to reservoir connections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    /// A connection is expressed when the expression output exceeds this.
    pub expression_threshold: f64,
    /// Expressed weights are `weight_scale * tanh(weight_raw)`.
    pub weight_scale: f64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self { expression_threshold: 0.0, weight_scale: 3.0 }
    }
}

/// Queries the CPPN for every ordered pair of substrate neurons and builds a
/// tanh reservoir without bias. The substrate's input neuron is the clamped
/// input of the returned network.
pub fn decode_to_network(genome: &CppnGenome, sub: &Substrate, cfg: &DecodeConfig) -> Result<ReservoirNetwork, CppnError> {
    let cppn = CompiledCppn::new(genome)?;
    let n = sub.len();
    let mut weights = vec![0.0; n * n];
    let mut scratch = Vec::new();
    for to in 0..n {
        let (x2, y2) = sub.coords[to];
        for from in 0..n {
            let (x1, y1) = sub.coords[from];
            let d = sub.distance(from, to);
            let [w, e] = cppn.evaluate_into(&[x1, y1, x2, y2, d, 1.0], &mut scratch);
            if e > cfg.expression_threshold {
                weights[to * n + from] = cfg.weight_scale * w.tanh();
            }
        }
    }
    if let Some(bad) = weights.iter().position(|w| !w.is_finite()) {
        return Err(CppnError::Invalid(format!("non-finite decoded weight for pair ({}, {})", bad % n, bad / n)));
    }
    ReservoirNetwork::new(weights, vec![0.0; n], vec![Transfer::Tanh; n], vec![0.0; n], Some(sub.input_index))
        .map_err(|e| CppnError::Invalid(e.to_string()))
}
