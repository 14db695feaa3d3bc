//! Numerical Lyapunov exponent of a driven reservoir.
//!
//! The estimator follows the classic perturb-and-renormalise scheme: after a
//! washout the trajectory is duplicated, one neuron of the copy is displaced by
//! `gamma0`, and after every step the separation `gamma_t` is recorded and the
//! copy is pulled back to distance `gamma0` along the current separation
//! direction. The exponent is the mean of `ln(gamma_t / gamma0)` over time
//! steps and perturbed neurons.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reservoir::{uniform, NetworkError, ReservoirNetwork};
use crate::seed::rng_from_seed;

/// Separations below this value are clamped before taking the logarithm.
pub const GAMMA_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovConfig {
    /// Size of the initial perturbation.
    pub gamma0: f64,
    /// Total length of the driving sequence, washout included.
    pub sequence_length: usize,
    pub washout: usize,
    pub input_low: f64,
    pub input_high: f64,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self { gamma0: 1e-12, sequence_length: 2000, washout: 1000, input_low: -1.0, input_high: 1.0 }
    }
}

impl LyapunovConfig {
    pub fn validate(&self) -> Result<(), LyapunovError> {
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return Err(LyapunovError::Config("gamma0 must be positive".into()));
        }
        if self.washout >= self.sequence_length {
            return Err(LyapunovError::Config(format!(
                "washout {} leaves no steps of a {}-step sequence",
                self.washout, self.sequence_length
            )));
        }
        if !(self.input_low <= self.input_high) {
            return Err(LyapunovError::Config("input_low must not exceed input_high".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    /// Mean expansion rate in nats per step.
    pub lambda: f64,
    /// Mean expansion rate of each perturbation trial, aligned with `neurons`.
    pub per_neuron: Vec<f64>,
    /// Indices of the perturbed neurons.
    pub neurons: Vec<usize>,
    /// Recorded steps per trial.
    pub steps_used: usize,
    /// Set when a separation collapsed below [`GAMMA_FLOOR`].
    pub clamped: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LyapunovError {
    #[error("invalid Lyapunov configuration: {0}")]
    Config(String),
    #[error("network has no neuron driven by the input")]
    NoPerturbableNeuron,
    #[error(transparent)]
    Network(#[from] NetworkError),
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Estimates the largest Lyapunov exponent of `net` under random input.
///
/// All trials share one input sequence and one reference trajectory. The
/// clamped input neuron of substrate networks and neurons not reachable from
/// it are never perturbed.
pub fn lyapunov_exponent(net: &ReservoirNetwork, cfg: &LyapunovConfig, seed: u64) -> Result<LyapunovEstimate, LyapunovError> {
    cfg.validate()?;
    let neurons = net.driven_neurons();
    if neurons.is_empty() {
        return Err(LyapunovError::NoPerturbableNeuron);
    }
    let n = net.n_neurons();
    let mut rng = rng_from_seed(seed);
    let inputs: Vec<f64> = (0..cfg.sequence_length).map(|_| uniform(&mut rng, cfg.input_low, cfg.input_high)).collect();

    let mut state = vec![0.0; n];
    let mut next = vec![0.0; n];
    for (t, &x) in inputs[..cfg.washout].iter().enumerate() {
        net.step_into(&state, x, &mut next)
            .map_err(|neuron| NetworkError::NonFinite { neuron, time: Some(t) })?;
        std::mem::swap(&mut state, &mut next);
    }
    let start = state.clone();
    let tail = &inputs[cfg.washout..];
    let mut reference = Vec::with_capacity(tail.len());
    for (k, &x) in tail.iter().enumerate() {
        net.step_into(&state, x, &mut next)
            .map_err(|neuron| NetworkError::NonFinite { neuron, time: Some(cfg.washout + k) })?;
        std::mem::swap(&mut state, &mut next);
        reference.push(state.clone());
    }

    let trials: Vec<Result<(f64, bool), NetworkError>> = neurons
        .par_iter()
        .map(|&neuron| perturbation_trial(net, cfg, &start, tail, &reference, neuron))
        .collect();
    let mut per_neuron = Vec::with_capacity(trials.len());
    let mut clamped = false;
    for trial in trials {
        let (rate, c) = trial?;
        per_neuron.push(rate);
        clamped |= c;
    }
    let lambda = per_neuron.iter().sum::<f64>() / per_neuron.len() as f64;
    Ok(LyapunovEstimate { lambda, per_neuron, neurons, steps_used: tail.len(), clamped })
}

fn perturbation_trial(
    net: &ReservoirNetwork,
    cfg: &LyapunovConfig,
    start: &[f64],
    tail: &[f64],
    reference: &[Vec<f64>],
    neuron: usize,
) -> Result<(f64, bool), NetworkError> {
    let gamma0 = cfg.gamma0;
    let mut perturbed = start.to_vec();
    perturbed[neuron] += gamma0;
    let mut next = vec![0.0; start.len()];
    let mut log_sum = 0.0;
    let mut clamped = false;
    for (k, (&x, reference)) in tail.iter().zip(reference).enumerate() {
        net.step_into(&perturbed, x, &mut next)
            .map_err(|neuron| NetworkError::NonFinite { neuron, time: Some(cfg.washout + k) })?;
        let gamma = distance(reference, &next);
        if gamma < GAMMA_FLOOR {
            // Direction is lost; restart from the reference with a fresh displacement.
            clamped = true;
            log_sum += (GAMMA_FLOOR / gamma0).ln();
            perturbed.copy_from_slice(reference);
            perturbed[neuron] += gamma0;
        } else {
            log_sum += (gamma / gamma0).ln();
            let scale = gamma0 / gamma;
            for ((p, r), y) in perturbed.iter_mut().zip(reference).zip(&next) {
                *p = r + scale * (y - r);
            }
        }
    }
    Ok((log_sum / tail.len() as f64, clamped))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsClass {
    Ordered,
    Edge,
    Chaotic,
}

pub const DEFAULT_EDGE_TOLERANCE: f64 = 0.05;

/// Three-way label: `lambda < -tol` ordered, `lambda > tol` chaotic, else edge.
pub fn classify_dynamics(lambda: f64, tol: f64) -> DynamicsClass {
    if lambda < -tol {
        DynamicsClass::Ordered
    } else if lambda > tol {
        DynamicsClass::Chaotic
    } else {
        DynamicsClass::Edge
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reservoir::{generate_random_esn, Transfer};

    fn zero_input(len: usize, washout: usize) -> LyapunovConfig {
        LyapunovConfig { sequence_length: len, washout, input_low: 0.0, input_high: 0.0, ..Default::default() }
    }

    #[test]
    fn contracting_single_neuron_matches_linearisation() {
        let net = ReservoirNetwork::from_rows(&[vec![0.5]], vec![1.0], Transfer::Tanh).unwrap();
        let est = lyapunov_exponent(&net, &zero_input(2000, 1000), 1).unwrap();
        assert!((est.lambda - 0.5f64.ln()).abs() < 0.01, "{}", est.lambda);
        assert_eq!(est.per_neuron.len(), 1);
        assert_eq!(est.steps_used, 1000);
        assert!(!est.clamped);
    }

    #[test]
    fn expanding_single_neuron_at_unstable_origin() {
        // Zero input keeps the state at the origin, where the slope is 2.
        let net = ReservoirNetwork::from_rows(&[vec![2.0]], vec![1.0], Transfer::Tanh).unwrap();
        let est = lyapunov_exponent(&net, &zero_input(2000, 1000), 1).unwrap();
        assert!((est.lambda - 2f64.ln()).abs() < 0.01, "{}", est.lambda);
    }

    #[test]
    fn expanding_single_neuron_settles_on_nonzero_fixed_point() {
        let drive = 0.01;
        let net = ReservoirNetwork::from_rows(&[vec![2.0]], vec![1.0], Transfer::Tanh).unwrap();
        let cfg = LyapunovConfig { input_low: drive, input_high: drive, ..Default::default() };
        let est = lyapunov_exponent(&net, &cfg, 1).unwrap();
        let mut a: f64 = 0.5;
        for _ in 0..10_000 {
            a = (2.0 * a + drive).tanh();
        }
        let slope = 2.0 / (2.0 * a + drive).cosh().powi(2);
        assert!(a > 0.9);
        assert!((est.lambda - slope.ln()).abs() < 0.01, "{} vs {}", est.lambda, slope.ln());
        assert!(est.lambda < 0.0);
    }

    #[test]
    fn zero_network_is_strongly_ordered() {
        let net = ReservoirNetwork::from_rows(&[vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]], vec![0.1, -0.1, 0.05], Transfer::Tanh)
            .unwrap();
        let est = lyapunov_exponent(&net, &LyapunovConfig::default(), 3).unwrap();
        assert!(est.lambda <= -10.0);
        assert!(est.clamped);
    }

    #[test]
    fn deterministic_per_seed() {
        let net = generate_random_esn(20, 0.05, (-0.1, 0.1), 5);
        let cfg = LyapunovConfig { sequence_length: 400, washout: 200, ..Default::default() };
        let a = lyapunov_exponent(&net, &cfg, 11).unwrap();
        let b = lyapunov_exponent(&net, &cfg, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.per_neuron.len(), 20);
        let mean = a.per_neuron.iter().sum::<f64>() / 20.0;
        assert!((mean - a.lambda).abs() < 1e-15);
    }

    #[test]
    fn input_neuron_never_perturbed() {
        let w = vec![0.0, 0.0, 0.0, 0.3, 0.5, 0.0, 0.0, 0.4, 0.5];
        let net = ReservoirNetwork::new(w, vec![0.0; 3], vec![Transfer::Tanh; 3], vec![0.0; 3], Some(0)).unwrap();
        let est = lyapunov_exponent(&net, &LyapunovConfig { sequence_length: 300, washout: 100, ..Default::default() }, 2)
            .unwrap();
        assert_eq!(est.neurons, vec![1, 2]);
    }

    #[test]
    fn disconnected_substrate_network_is_rejected() {
        let net = ReservoirNetwork::new(vec![0.0; 4], vec![0.0; 2], vec![Transfer::Tanh; 2], vec![0.0; 2], Some(0)).unwrap();
        assert_eq!(
            lyapunov_exponent(&net, &LyapunovConfig::default(), 0),
            Err(LyapunovError::NoPerturbableNeuron)
        );
    }

    #[test]
    fn invalid_config() {
        let net = generate_random_esn(4, 0.05, (-0.1, 0.1), 5);
        let cfg = LyapunovConfig { washout: 2000, ..Default::default() };
        assert!(matches!(lyapunov_exponent(&net, &cfg, 0), Err(LyapunovError::Config(_))));
        let cfg = LyapunovConfig { gamma0: 0.0, ..Default::default() };
        assert!(matches!(lyapunov_exponent(&net, &cfg, 0), Err(LyapunovError::Config(_))));
    }

    #[test]
    fn classification() {
        assert_eq!(classify_dynamics(-0.5, 0.05), DynamicsClass::Ordered);
        assert_eq!(classify_dynamics(0.0, 0.05), DynamicsClass::Edge);
        assert_eq!(classify_dynamics(-0.0280, DEFAULT_EDGE_TOLERANCE), DynamicsClass::Edge);
        assert_eq!(classify_dynamics(0.3, 0.05), DynamicsClass::Chaotic);
        assert_eq!(classify_dynamics(0.05, 0.05), DynamicsClass::Edge);
    }
}
