use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{ReservoirNetwork, Transfer};
use crate::seed::rng_from_seed;

/// Uniform draw on `[low, high]`, tolerating a degenerate interval.
pub(crate) fn uniform(rng: &mut impl Rng, low: f64, high: f64) -> f64 {
    if high > low {
        rng.random_range(low..=high)
    } else {
        low
    }
}

/// Fully connected random tanh reservoir.
///
/// Input weights are uniform on `input_range`; every recurrent weight is drawn
/// i.i.d. from a normal distribution with zero mean and *variance* `sigma`.
pub fn generate_random_esn(n: usize, sigma: f64, input_range: (f64, f64), seed: u64) -> ReservoirNetwork {
    assert!(n >= 2, "a reservoir needs at least two neurons");
    assert!(sigma > 0.0, "weight variance must be positive");
    let mut rng = rng_from_seed(seed);
    let w_in: Vec<f64> = (0..n).map(|_| uniform(&mut rng, input_range.0, input_range.1)).collect();
    let normal = Normal::new(0.0, sigma.sqrt()).expect("finite variance");
    let weights: Vec<f64> = (0..n * n).map(|_| normal.sample(&mut rng)).collect();
    ReservoirNetwork::new(weights, w_in, vec![Transfer::Tanh; n], vec![0.0; n], None)
        .expect("generated parameters are finite")
}

/// Keeps exactly `connections_per_neuron` incoming recurrent weights per
/// neuron, chosen uniformly without replacement; the rest are zeroed.
pub fn prune_random(net: &ReservoirNetwork, connections_per_neuron: usize, seed: u64) -> ReservoirNetwork {
    let n = net.n_neurons();
    assert!(connections_per_neuron <= n, "cannot keep more connections than neurons");
    let mut out = net.clone();
    if connections_per_neuron == n {
        return out;
    }
    let mut rng = rng_from_seed(seed);
    let weights = out.weights_mut();
    for row in weights.chunks_mut(n) {
        let mut keep = vec![false; n];
        for j in sample(&mut rng, n, connections_per_neuron) {
            keep[j] = true;
        }
        for (w, k) in row.iter_mut().zip(keep) {
            if !k {
                *w = 0.0;
            }
        }
    }
    out
}
