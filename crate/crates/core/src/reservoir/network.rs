use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Per-neuron transfer function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transfer {
    Tanh,
    Sine,
    /// `+1` for positive input, `-1` otherwise.
    SignedStep,
    /// Gaussian bump rescaled to `[-1, 1]`: `2 exp(-x^2) - 1`.
    SignedGaussian,
    Linear,
}

impl Transfer {
    pub const ALL: [Transfer; 5] = [
        Transfer::Tanh,
        Transfer::Sine,
        Transfer::SignedStep,
        Transfer::SignedGaussian,
        Transfer::Linear,
    ];

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Transfer::Tanh => x.tanh(),
            Transfer::Sine => x.sin(),
            Transfer::SignedStep => {
                if x > 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Transfer::SignedGaussian => 2.0 * (-x * x).exp() - 1.0,
            Transfer::Linear => x,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("non-finite activation in neuron {neuron}{}", time.map(|t| format!(" at time step {t}")).unwrap_or_default())]
    NonFinite { neuron: usize, time: Option<usize> },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite parameter: {0}")]
    NonFiniteParameter(String),
    #[error("washout {washout} must be shorter than the input sequence ({len})")]
    Washout { washout: usize, len: usize },
}

/// Activation vector of a reservoir.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub activations: Vec<f64>,
}

impl NetworkState {
    pub fn zeros(n: usize) -> Self {
        Self { activations: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.activations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activations.is_empty()
    }
}

/// A fixed recurrent network driven by a scalar input.
///
/// `weights` is stored row-major: entry `[i * n + j]` is the weight of the
/// connection from neuron `j` to neuron `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkDocument", into = "NetworkDocument")]
pub struct ReservoirNetwork {
    n: usize,
    weights: Vec<f64>,
    input_weights: Vec<f64>,
    transfer: Vec<Transfer>,
    bias: Vec<f64>,
    input_index: Option<usize>,
}

impl ReservoirNetwork {
    pub fn new(
        weights: Vec<f64>,
        input_weights: Vec<f64>,
        transfer: Vec<Transfer>,
        bias: Vec<f64>,
        input_index: Option<usize>,
    ) -> Result<Self, NetworkError> {
        let n = input_weights.len();
        if weights.len() != n * n {
            return Err(NetworkError::Dimension(format!(
                "weight matrix has {} entries, expected {}x{}",
                weights.len(),
                n,
                n
            )));
        }
        if transfer.len() != n || bias.len() != n {
            return Err(NetworkError::Dimension(format!(
                "transfer ({}) and bias ({}) must have length {n}",
                transfer.len(),
                bias.len()
            )));
        }
        if let Some(k) = input_index {
            if k >= n {
                return Err(NetworkError::Dimension(format!("input index {k} out of range for {n} neurons")));
            }
        }
        if let Some(p) = weights.iter().position(|w| !w.is_finite()) {
            return Err(NetworkError::NonFiniteParameter(format!("weight [{}][{}]", p / n, p % n)));
        }
        if let Some(p) = input_weights.iter().position(|w| !w.is_finite()) {
            return Err(NetworkError::NonFiniteParameter(format!("input weight {p}")));
        }
        if let Some(p) = bias.iter().position(|w| !w.is_finite()) {
            return Err(NetworkError::NonFiniteParameter(format!("bias {p}")));
        }
        Ok(Self { n, weights, input_weights, transfer, bias, input_index })
    }

    /// Network with a uniform transfer function and zero bias, from nested rows.
    pub fn from_rows(rows: &[Vec<f64>], input_weights: Vec<f64>, transfer: Transfer) -> Result<Self, NetworkError> {
        let n = input_weights.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(NetworkError::Dimension(format!("weight rows must form a {n}x{n} matrix")));
        }
        let weights = rows.iter().flatten().copied().collect();
        Self::new(weights, input_weights, vec![transfer; n], vec![0.0; n], None)
    }

    pub fn n_neurons(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn weight(&self, to: usize, from: usize) -> f64 {
        self.weights[to * self.n + from]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn input_weights(&self) -> &[f64] {
        &self.input_weights
    }

    pub fn transfer(&self) -> &[Transfer] {
        &self.transfer
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn input_index(&self) -> Option<usize> {
        self.input_index
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// Returns a copy with every recurrent weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|w| *w *= factor);
        out
    }

    /// Directed nonzero recurrent connections as `(from, to, weight)`.
    pub fn connections(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(move |(p, &w)| (p % n, p / n, w))
    }

    pub fn connection_count(&self) -> usize {
        self.weights.iter().filter(|w| **w != 0.0).count()
    }

    /// Neurons whose activity is driven by the input.
    ///
    /// For networks with a clamped input neuron these are the neurons reachable
    /// from it along nonzero connections (the input neuron itself excluded).
    /// Networks without one feed the input to every neuron, so all count.
    #[allow(clippy::needless_range_loop)]
    pub fn driven_neurons(&self) -> Vec<usize> {
        let Some(input) = self.input_index else {
            return (0..self.n).collect();
        };
        let mut seen = vec![false; self.n];
        let mut stack = vec![input];
        seen[input] = true;
        while let Some(from) = stack.pop() {
            for to in 0..self.n {
                if !seen[to] && self.weight(to, from) != 0.0 {
                    seen[to] = true;
                    stack.push(to);
                }
            }
        }
        (0..self.n).filter(|&i| i != input && seen[i]).collect()
    }

    /// Writes the successor of `prev` under input `x` into `next`.
    ///
    /// On a non-finite activation the offending neuron index is returned.
    #[inline]
    pub fn step_into(&self, prev: &[f64], x: f64, next: &mut [f64]) -> Result<(), usize> {
        debug_assert_eq!(prev.len(), self.n);
        debug_assert_eq!(next.len(), self.n);
        for (i, out) in next.iter_mut().enumerate() {
            let row = &self.weights[i * self.n..(i + 1) * self.n];
            let drive: f64 = row.iter().zip(prev).map(|(w, a)| w * a).sum();
            *out = self.transfer[i].apply(drive + self.input_weights[i] * x + self.bias[i]);
        }
        if let Some(k) = self.input_index {
            next[k] = x;
        }
        match next.iter().position(|a| !a.is_finite()) {
            Some(i) => Err(i),
            None => Ok(()),
        }
    }

    /// One update of the network state.
    pub fn step(&self, state: &NetworkState, input: f64) -> Result<NetworkState, NetworkError> {
        if state.len() != self.n {
            return Err(NetworkError::Dimension(format!(
                "state has length {}, network has {} neurons",
                state.len(),
                self.n
            )));
        }
        let mut next = vec![0.0; self.n];
        self.step_into(&state.activations, input, &mut next)
            .map_err(|neuron| NetworkError::NonFinite { neuron, time: None })?;
        Ok(NetworkState { activations: next })
    }

    /// Drives the network from the all-zero state and returns the states after
    /// the washout, one row per kept time step.
    pub fn run(&self, inputs: &[f64], washout: usize) -> Result<DMatrix<f64>, NetworkError> {
        self.run_from(&NetworkState::zeros(self.n), inputs, washout)
    }

    /// Like [`run`](Self::run) but starting from an arbitrary state.
    pub fn run_from(&self, initial: &NetworkState, inputs: &[f64], washout: usize) -> Result<DMatrix<f64>, NetworkError> {
        if washout >= inputs.len() {
            return Err(NetworkError::Washout { washout, len: inputs.len() });
        }
        if initial.len() != self.n {
            return Err(NetworkError::Dimension(format!(
                "initial state has length {}, network has {} neurons",
                initial.len(),
                self.n
            )));
        }
        let kept = inputs.len() - washout;
        let mut states = DMatrix::zeros(kept, self.n);
        let mut prev = initial.activations.clone();
        let mut next = vec![0.0; self.n];
        for (t, &x) in inputs.iter().enumerate() {
            self.step_into(&prev, x, &mut next)
                .map_err(|neuron| NetworkError::NonFinite { neuron, time: Some(t) })?;
            std::mem::swap(&mut prev, &mut next);
            if t >= washout {
                let row = t - washout;
                for (j, a) in prev.iter().enumerate() {
                    states[(row, j)] = *a;
                }
            }
        }
        Ok(states)
    }
}

/// Serialized form of a network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_index: Option<usize>,
    pub transfer: Vec<Transfer>,
    pub bias: Vec<f64>,
    pub w_in: Vec<f64>,
    pub weights: WeightsDocument,
}

/// Recurrent weights either as `(from, to, value)` triples or a dense
/// row-major matrix (`rows[to][from]`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightsDocument {
    Triples(Vec<(usize, usize, f64)>),
    Dense(Vec<Vec<f64>>),
}

impl TryFrom<NetworkDocument> for ReservoirNetwork {
    type Error = NetworkError;

    fn try_from(doc: NetworkDocument) -> Result<Self, Self::Error> {
        let n = doc.n;
        if doc.w_in.len() != n {
            return Err(NetworkError::Dimension(format!("w_in has length {}, expected {n}", doc.w_in.len())));
        }
        let mut weights = vec![0.0; n * n];
        match doc.weights {
            WeightsDocument::Triples(triples) => {
                for (from, to, w) in triples {
                    if from >= n || to >= n {
                        return Err(NetworkError::Dimension(format!("connection {from}->{to} out of range")));
                    }
                    weights[to * n + from] = w;
                }
            }
            WeightsDocument::Dense(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(NetworkError::Dimension(format!("dense weights must be {n}x{n}")));
                }
                weights = rows.into_iter().flatten().collect();
            }
        }
        ReservoirNetwork::new(weights, doc.w_in, doc.transfer, doc.bias, doc.input_index)
    }
}

impl From<ReservoirNetwork> for NetworkDocument {
    fn from(net: ReservoirNetwork) -> Self {
        let triples = net.connections().collect();
        NetworkDocument {
            n: net.n,
            input_index: net.input_index,
            transfer: net.transfer,
            bias: net.bias,
            w_in: net.input_weights,
            weights: WeightsDocument::Triples(triples),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(w: f64, w_in: f64, transfer: Transfer) -> ReservoirNetwork {
        ReservoirNetwork::from_rows(&[vec![w]], vec![w_in], transfer).unwrap()
    }

    #[test]
    fn zero_network_maps_to_zero() {
        let net = ReservoirNetwork::from_rows(&[vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]], vec![0.0; 3], Transfer::Tanh)
            .unwrap();
        let state = NetworkState { activations: vec![0.3, -0.7, 0.9] };
        let next = net.step(&state, 0.8).unwrap();
        assert_eq!(next.activations, vec![0.0; 3]);
    }

    #[test]
    fn single_neuron_closed_form() {
        let net = single(0.0, 1.0, Transfer::Tanh);
        let next = net.step(&NetworkState::zeros(1), 0.5).unwrap();
        assert!((next.activations[0] - 0.5f64.tanh()).abs() < 1e-15);
        assert!((next.activations[0] - 0.462117).abs() < 1e-6);
    }

    #[test]
    fn linear_permutation() {
        let net = ReservoirNetwork::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.0; 2], Transfer::Linear).unwrap();
        let next = net.step(&NetworkState { activations: vec![1.0, 0.0] }, 0.0).unwrap();
        assert_eq!(next.activations, vec![0.0, 1.0]);
    }

    #[test]
    fn clamped_input_neuron_tracks_input() {
        let mut net = ReservoirNetwork::from_rows(&[vec![0.0, 0.5], vec![2.0, 0.0]], vec![0.0; 2], Transfer::Tanh).unwrap();
        net.input_index = Some(0);
        let next = net.step(&NetworkState { activations: vec![0.1, 0.4] }, -0.3).unwrap();
        assert_eq!(next.activations[0], -0.3);
        assert!((next.activations[1] - (0.2f64).tanh()).abs() < 1e-15);
    }

    #[test]
    fn step_rejects_wrong_state_length() {
        let net = single(0.1, 1.0, Transfer::Tanh);
        assert!(matches!(net.step(&NetworkState::zeros(2), 0.0), Err(NetworkError::Dimension(_))));
    }

    #[test]
    fn linear_blowup_reports_neuron_and_time() {
        let net = ReservoirNetwork::from_rows(&[vec![0.0, 0.0], vec![0.0, 1e300]], vec![0.0, 1e300], Transfer::Linear)
            .unwrap();
        let err = net.run(&[1.0, 1.0, 1.0], 0).unwrap_err();
        assert_eq!(err, NetworkError::NonFinite { neuron: 1, time: Some(1) });
    }

    #[test]
    fn run_zero_network_is_zero() {
        let net = ReservoirNetwork::from_rows(&[vec![0.0; 2], vec![0.0; 2]], vec![0.0; 2], Transfer::Tanh).unwrap();
        let states = net.run(&[0.0; 10], 3).unwrap();
        assert_eq!(states.nrows(), 7);
        assert!(states.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn run_washout_boundary() {
        let net = single(0.3, 1.0, Transfer::Tanh);
        assert_eq!(net.run(&[0.1, 0.2, 0.3], 2).unwrap().nrows(), 1);
        assert!(matches!(net.run(&[0.1, 0.2, 0.3], 3), Err(NetworkError::Washout { .. })));
    }

    #[test]
    fn run_two_step_hand_simulation() {
        let net = single(0.1, 1.0, Transfer::Tanh);
        let states = net.run(&[0.5, 0.5], 0).unwrap();
        let a1 = 0.5f64.tanh();
        let a2 = (0.1 * a1 + 0.5).tanh();
        assert_eq!(states.nrows(), 2);
        assert!((states[(0, 0)] - a1).abs() < 1e-15);
        assert!((states[(1, 0)] - a2).abs() < 1e-15);
        assert!((a2 - 0.497_675_6).abs() < 1e-7);
    }

    #[test]
    fn construction_rejects_bad_shapes_and_nan() {
        assert!(ReservoirNetwork::new(vec![0.0; 3], vec![0.0; 2], vec![Transfer::Tanh; 2], vec![0.0; 2], None).is_err());
        assert!(ReservoirNetwork::new(vec![f64::NAN; 4], vec![0.0; 2], vec![Transfer::Tanh; 2], vec![0.0; 2], None).is_err());
        assert!(ReservoirNetwork::new(vec![0.0; 4], vec![0.0; 2], vec![Transfer::Tanh; 2], vec![0.0; 2], Some(2)).is_err());
    }

    #[test]
    fn driven_neurons_follow_connectivity() {
        // 0 (input) -> 1 -> 2, neuron 3 isolated, 3 -> 2 does not make 3 driven.
        let mut w = vec![0.0; 16];
        w[4] = 0.5; // 0 -> 1
        w[2 * 4 + 1] = 0.5; // 1 -> 2
        w[2 * 4 + 3] = 0.5; // 3 -> 2
        let net = ReservoirNetwork::new(w, vec![0.0; 4], vec![Transfer::Tanh; 4], vec![0.0; 4], Some(0)).unwrap();
        assert_eq!(net.driven_neurons(), vec![1, 2]);
    }

    #[test]
    fn json_round_trip_both_weight_layouts() {
        let net = ReservoirNetwork::new(
            vec![0.0, 0.25, -1.5, 0.0],
            vec![0.1, -0.05],
            vec![Transfer::Tanh, Transfer::SignedGaussian],
            vec![0.0, 0.2],
            Some(0),
        )
        .unwrap();
        let text = serde_json::to_string(&net).unwrap();
        assert!(text.contains("\"weights\":[[1,0,0.25],[0,1,-1.5]]"), "{text}");
        let back: ReservoirNetwork = serde_json::from_str(&text).unwrap();
        assert_eq!(back, net);

        let dense = r#"{"n":2,"input_index":0,"transfer":["tanh","signed_gaussian"],"bias":[0.0,0.2],
            "w_in":[0.1,-0.05],"weights":[[0.0,0.25],[-1.5,0.0]]}"#;
        let parsed: ReservoirNetwork = serde_json::from_str(dense).unwrap();
        assert_eq!(parsed, net);
    }

    proptest! {
        #[test]
        fn tanh_activations_stay_in_open_interval(
            weights in prop::collection::vec(-3.0f64..3.0, 16),
            w_in in prop::collection::vec(-1.0f64..1.0, 4),
            inputs in prop::collection::vec(-1.0f64..1.0, 1..40),
        ) {
            let net = ReservoirNetwork::new(weights, w_in, vec![Transfer::Tanh; 4], vec![0.0; 4], None).unwrap();
            let states = net.run(&inputs, 0).unwrap();
            prop_assert!(states.iter().all(|a| a.abs() <= 1.0 && a.is_finite()));
        }

        #[test]
        fn odd_transfers_map_zero_network_to_zero(
            state in prop::collection::vec(-2.0f64..2.0, 3),
            x in -1.0f64..1.0,
            idx in 0usize..3,
        ) {
            let transfer = [Transfer::Tanh, Transfer::Sine, Transfer::Linear][idx];
            let net = ReservoirNetwork::new(vec![0.0; 9], vec![0.0; 3], vec![transfer; 3], vec![0.0; 3], None).unwrap();
            let next = net.step(&NetworkState { activations: state }, x).unwrap();
            prop_assert!(next.activations.iter().all(|a| *a == 0.0));
        }
    }
}
