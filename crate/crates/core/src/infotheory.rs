//! Plug-in estimators of active information storage (AIS) and transfer
//! entropy (TE) on equal-width discretised activation series.
//!
//! Both use a finite history length `k` and maximum-likelihood probabilities
//! taken from the sample itself; results are in bits.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::reservoir::{uniform, NetworkError, ReservoirNetwork};
use crate::seed::rng_from_seed;

/// Symbol sequence produced by [`discretize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedSeries {
    pub symbols: Vec<usize>,
    pub n_bins: usize,
    /// `n_bins + 1` strictly increasing bin boundaries.
    pub bin_edges: Vec<f64>,
}

impl DiscretizedSeries {
    /// Wraps an already symbolic sequence; edges are the integer boundaries.
    pub fn from_symbols(symbols: Vec<usize>, n_bins: usize) -> Self {
        assert!(symbols.iter().all(|&s| s < n_bins), "symbol out of range");
        let bin_edges = (0..=n_bins).map(|i| i as f64).collect();
        Self { symbols, n_bins, bin_edges }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InfoConfig {
    pub history_k: usize,
    pub n_bins: usize,
    pub washout: usize,
    pub eval_length: usize,
    pub input_low: f64,
    pub input_high: f64,
}

impl Default for InfoConfig {
    fn default() -> Self {
        Self { history_k: 2, n_bins: 10, washout: 1000, eval_length: 2000, input_low: 0.0, input_high: 0.5 }
    }
}

/// Equal-width binning over `[min, max]` of the series.
///
/// The maximum falls into the last bin; a constant series maps to bin 0.
pub fn discretize(series: &[f64], n_bins: usize) -> DiscretizedSeries {
    assert!(!series.is_empty(), "cannot discretize an empty series");
    assert!(n_bins >= 2, "need at least two bins");
    let min = series.iter().copied().fold(f64::INFINITY, f64::min);
    let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if !(range > 0.0) {
        return DiscretizedSeries {
            symbols: vec![0; series.len()],
            n_bins,
            bin_edges: (0..=n_bins).map(|i| min + i as f64).collect(),
        };
    }
    let width = range / n_bins as f64;
    let symbols = series
        .iter()
        .map(|&v| (((v - min) / width) as usize).min(n_bins - 1))
        .collect();
    let bin_edges = (0..=n_bins).map(|i| if i == n_bins { max } else { min + i as f64 * width }).collect();
    DiscretizedSeries { symbols, n_bins, bin_edges }
}

const DENSE_LIMIT: u64 = 1 << 22;

/// Occupancy counts keyed by an encoded joint state.
enum Table {
    Dense(Vec<u32>),
    Sparse(HashMap<u64, u32>),
}

impl Table {
    fn new(cells: Option<u64>) -> Self {
        match cells {
            Some(c) if c <= DENSE_LIMIT => Table::Dense(vec![0; c as usize]),
            _ => Table::Sparse(HashMap::new()),
        }
    }

    fn add(&mut self, key: u64) {
        match self {
            Table::Dense(v) => v[key as usize] += 1,
            Table::Sparse(m) => *m.entry(key).or_insert(0) += 1,
        }
    }

    fn get(&self, key: u64) -> f64 {
        match self {
            Table::Dense(v) => v[key as usize] as f64,
            Table::Sparse(m) => m.get(&key).copied().unwrap_or(0) as f64,
        }
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<u64> {
    (base as u64).checked_pow(exp as u32)
}

/// Encodes `x[t], x[t-1], ..., x[t-k+1]` as a base-`b` integer.
fn history_code(x: &[usize], t: usize, k: usize, b: u64) -> u64 {
    (0..k).fold(0u64, |acc, i| acc.wrapping_mul(b).wrapping_add(x[t - i] as u64))
}

fn clamp_nonneg(v: f64) -> f64 {
    if v < 0.0 {
        debug_assert!(v > -1e-9, "plug-in estimate unexpectedly negative: {v}");
        0.0
    } else {
        v
    }
}

/// Plug-in estimate of `I(X_n^(k); X_{n+1})` in bits.
pub fn active_information_storage(x: &DiscretizedSeries, k: usize) -> f64 {
    assert!(k >= 1, "history length must be positive");
    assert!(x.len() > k, "series must be longer than the history");
    let b = x.n_bins as u64;
    let pasts = checked_pow(x.n_bins, k);
    let mut joint = Table::new(pasts.and_then(|p| p.checked_mul(b)));
    let mut past_c = Table::new(pasts);
    let mut next_c = vec![0u32; x.n_bins];
    let s = &x.symbols;
    let samples: Vec<(u64, usize)> = (k - 1..s.len() - 1).map(|t| (history_code(s, t, k, b), s[t + 1])).collect();
    for &(p, nx) in &samples {
        joint.add(p.wrapping_mul(b).wrapping_add(nx as u64));
        past_c.add(p);
        next_c[nx] += 1;
    }
    let n = samples.len() as f64;
    let total: f64 = samples
        .iter()
        .map(|&(p, nx)| {
            let c = joint.get(p.wrapping_mul(b).wrapping_add(nx as u64));
            (c * n / (past_c.get(p) * next_c[nx] as f64)).log2()
        })
        .sum();
    clamp_nonneg(total / n)
}

/// Plug-in estimate of `I(Y_n; X_{n+1} | X_n^(k))` in bits (source `Y`,
/// destination `X`).
pub fn transfer_entropy(source: &DiscretizedSeries, dest: &DiscretizedSeries, k: usize) -> f64 {
    assert!(k >= 1, "history length must be positive");
    assert_eq!(source.len(), dest.len(), "source and destination must have equal length");
    assert!(dest.len() > k, "series must be longer than the history");
    let bx = dest.n_bins as u64;
    let by = source.n_bins as u64;
    let pasts = checked_pow(dest.n_bins, k);
    let past_src = pasts.and_then(|p| p.checked_mul(by));
    let mut c_p = Table::new(pasts);
    let mut c_ps = Table::new(past_src);
    let mut c_pn = Table::new(pasts.and_then(|p| p.checked_mul(bx)));
    let mut c_psn = Table::new(past_src.and_then(|p| p.checked_mul(bx)));
    let x = &dest.symbols;
    let y = &source.symbols;
    let samples: Vec<(u64, u64, u64, u64)> = (k - 1..x.len() - 1)
        .map(|t| {
            let p = history_code(x, t, k, bx);
            let ps = p.wrapping_mul(by).wrapping_add(y[t] as u64);
            let nx = x[t + 1] as u64;
            (p, ps, p.wrapping_mul(bx).wrapping_add(nx), ps.wrapping_mul(bx).wrapping_add(nx))
        })
        .collect();
    for &(p, ps, pn, psn) in &samples {
        c_p.add(p);
        c_ps.add(ps);
        c_pn.add(pn);
        c_psn.add(psn);
    }
    let n = samples.len() as f64;
    let total: f64 = samples
        .iter()
        .map(|&(p, ps, pn, psn)| (c_psn.get(psn) * c_p.get(p) / (c_ps.get(ps) * c_pn.get(pn))).log2())
        .sum();
    clamp_nonneg(total / n)
}

/// Network-level information dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoMeasures {
    /// AIS averaged over the input-driven neurons.
    pub ais_mean: f64,
    /// TE averaged over nonzero connections between distinct neurons; `None`
    /// when the network has no such connection.
    pub te_mean: Option<f64>,
}

/// Drives the network with uniform input and averages AIS over neurons and TE
/// over connections (presynaptic source, postsynaptic destination).
pub fn network_info_measures(net: &ReservoirNetwork, cfg: &InfoConfig, seed: u64) -> Result<InfoMeasures, NetworkError> {
    assert!(cfg.history_k >= 1 && cfg.n_bins >= 2);
    assert!(cfg.eval_length > cfg.history_k, "evaluation window shorter than the history");
    let mut rng = rng_from_seed(seed);
    let inputs: Vec<f64> =
        (0..cfg.washout + cfg.eval_length).map(|_| uniform(&mut rng, cfg.input_low, cfg.input_high)).collect();
    let states = net.run(&inputs, cfg.washout)?;

    let considered = net.driven_neurons();
    let mut included = vec![false; net.n_neurons()];
    for &i in &considered {
        included[i] = true;
    }
    let sources_ok = |j: usize| included[j] || Some(j) == net.input_index();

    let series: Vec<Option<DiscretizedSeries>> = (0..net.n_neurons())
        .into_par_iter()
        .map(|i| {
            if included[i] || sources_ok(i) {
                let col: Vec<f64> = states.column(i).iter().copied().collect();
                Some(discretize(&col, cfg.n_bins))
            } else {
                None
            }
        })
        .collect();

    let ais: Vec<f64> = considered
        .par_iter()
        .map(|&i| active_information_storage(series[i].as_ref().expect("discretized"), cfg.history_k))
        .collect();
    let ais_mean = if ais.is_empty() { 0.0 } else { ais.iter().sum::<f64>() / ais.len() as f64 };

    let links: Vec<(usize, usize)> = net
        .connections()
        .filter(|&(from, to, _)| from != to && included[to] && sources_ok(from))
        .map(|(from, to, _)| (from, to))
        .collect();
    let te: Vec<f64> = links
        .par_iter()
        .map(|&(from, to)| {
            transfer_entropy(
                series[from].as_ref().expect("discretized"),
                series[to].as_ref().expect("discretized"),
                cfg.history_k,
            )
        })
        .collect();
    let te_mean = (!te.is_empty()).then(|| te.iter().sum::<f64>() / te.len() as f64);
    Ok(InfoMeasures { ais_mean, te_mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reservoir::{generate_random_esn, Transfer};
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    /// Literal evaluation of the defining sums by enumerating every joint state.
    pub(crate) fn brute_ais(x: &[usize], b: usize, k: usize) -> f64 {
        let samples: Vec<(Vec<usize>, usize)> =
            (k - 1..x.len() - 1).map(|t| ((0..k).map(|i| x[t - i]).collect(), x[t + 1])).collect();
        let n = samples.len() as f64;
        let mut total = 0.0;
        for past in all_tuples(b, k) {
            for next in 0..b {
                let joint = samples.iter().filter(|(p, nx)| *p == past && *nx == next).count() as f64 / n;
                if joint == 0.0 {
                    continue;
                }
                let pp = samples.iter().filter(|(p, _)| *p == past).count() as f64 / n;
                let pn = samples.iter().filter(|(_, nx)| *nx == next).count() as f64 / n;
                total += joint * (joint / (pp * pn)).log2();
            }
        }
        total
    }

    pub(crate) fn brute_te(y: &[usize], x: &[usize], b: usize, k: usize) -> f64 {
        let samples: Vec<(Vec<usize>, usize, usize)> =
            (k - 1..x.len() - 1).map(|t| ((0..k).map(|i| x[t - i]).collect(), y[t], x[t + 1])).collect();
        let n = samples.len() as f64;
        let mut total = 0.0;
        for past in all_tuples(b, k) {
            for src in 0..b {
                for next in 0..b {
                    let joint =
                        samples.iter().filter(|(p, s, nx)| *p == past && *s == src && *nx == next).count() as f64 / n;
                    if joint == 0.0 {
                        continue;
                    }
                    let p_ps = samples.iter().filter(|(p, s, _)| *p == past && *s == src).count() as f64 / n;
                    let p_pn = samples.iter().filter(|(p, _, nx)| *p == past && *nx == next).count() as f64 / n;
                    let p_p = samples.iter().filter(|(p, _, _)| *p == past).count() as f64 / n;
                    total += joint * ((joint / p_ps) / (p_pn / p_p)).log2();
                }
            }
        }
        total
    }

    fn all_tuples(b: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..k {
            out = out.into_iter().flat_map(|t| (0..b).map(move |s| [t.clone(), vec![s]].concat())).collect();
        }
        out
    }

    fn random_symbols(len: usize, b: usize, seed: u64) -> Vec<usize> {
        let mut rng = rng_from_seed(seed);
        (0..len).map(|_| rng.random_range(0..b)).collect()
    }

    #[test]
    fn discretize_examples() {
        assert_eq!(discretize(&[0.0, 1.0, 2.0, 3.0], 2).symbols, vec![0, 0, 1, 1]);
        let c = discretize(&[5.0, 5.0, 5.0], 10);
        assert_eq!(c.symbols, vec![0, 0, 0]);
        assert!(c.bin_edges.windows(2).all(|w| w[0] < w[1]));
        let d = discretize(&[-1.0, 0.5, 2.0], 3);
        assert_eq!(d.bin_edges.len(), 4);
        assert!(d.bin_edges.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(d.symbols, vec![0, 1, 2]);
    }

    #[test]
    fn uniform_samples_fill_bins_evenly() {
        let mut rng = rng_from_seed(4);
        let n = 100_000;
        let series: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let d = discretize(&series, 10);
        let sd = (0.1 * 0.9 / n as f64).sqrt();
        for bin in 0..10 {
            let freq = d.symbols.iter().filter(|&&s| s == bin).count() as f64 / n as f64;
            assert!((freq - 0.1).abs() < 3.0 * sd, "bin {bin}: {freq}");
        }
    }

    #[test]
    fn ais_of_iid_binary_vanishes() {
        let x = DiscretizedSeries::from_symbols(random_symbols(100_000, 2, 1), 2);
        assert!(active_information_storage(&x, 2) < 0.01);
    }

    #[test]
    fn ais_of_periodic_sequences() {
        let p2 = DiscretizedSeries::from_symbols((0..1000).map(|i| i % 2).collect(), 2);
        assert!((active_information_storage(&p2, 2) - 1.0).abs() < 1e-12);
        let p4 = DiscretizedSeries::from_symbols((0..1002).map(|i| i % 4).collect(), 4);
        assert!((active_information_storage(&p4, 2) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn te_of_independent_series_vanishes() {
        let x = DiscretizedSeries::from_symbols(random_symbols(100_000, 2, 2), 2);
        let y = DiscretizedSeries::from_symbols(random_symbols(100_000, 2, 3), 2);
        assert!(transfer_entropy(&y, &x, 2) < 0.02);
    }

    #[test]
    fn te_of_lagged_copy_is_one_bit() {
        let src = random_symbols(100_000, 2, 5);
        let mut dst = vec![0];
        dst.extend_from_slice(&src[..src.len() - 1]);
        let te = transfer_entropy(
            &DiscretizedSeries::from_symbols(src, 2),
            &DiscretizedSeries::from_symbols(dst, 2),
            2,
        );
        assert!((te - 1.0).abs() < 0.02, "{te}");
    }

    #[test]
    fn te_from_own_past_is_zero() {
        let x = DiscretizedSeries::from_symbols(random_symbols(5000, 3, 6), 3);
        assert_eq!(transfer_entropy(&x, &x, 2), 0.0);
        // A source equal to the destination's previous value is already in the history.
        let mut lagged = vec![0];
        lagged.extend_from_slice(&x.symbols[..x.len() - 1]);
        let src = DiscretizedSeries::from_symbols(lagged, 3);
        assert!(transfer_entropy(&src, &x, 2).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force_on_short_sequences() {
        for seed in 0..200u64 {
            let len = 3 + (seed as usize % 10);
            let b = 2 + (seed as usize % 3);
            let x = random_symbols(len, b, seed);
            let y = random_symbols(len, b, seed + 1000);
            let dx = DiscretizedSeries::from_symbols(x.clone(), b);
            let dy = DiscretizedSeries::from_symbols(y.clone(), b);
            assert!((active_information_storage(&dx, 2) - brute_ais(&x, b, 2)).abs() < 1e-12);
            assert!((transfer_entropy(&dy, &dx, 2) - brute_te(&y, &x, b, 2)).abs() < 1e-12);
            if len > 3 {
                assert!((active_information_storage(&dx, 3) - brute_ais(&x, b, 3)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shuffled_source_loses_transfer() {
        let src = random_symbols(20_000, 2, 7);
        let mut rng = rng_from_seed(8);
        let dst: Vec<usize> = (0..src.len())
            .map(|t| if t > 0 && rng.random::<f64>() < 0.9 { src[t - 1] } else { rng.random_range(0..2) })
            .collect();
        let d = DiscretizedSeries::from_symbols(dst.clone(), 2);
        let coupled = transfer_entropy(&DiscretizedSeries::from_symbols(src.clone(), 2), &d, 2);
        let independent = DiscretizedSeries::from_symbols(random_symbols(20_000, 2, 9), 2);
        let baseline = transfer_entropy(&independent, &d, 2);
        let mut shuffled_mean = 0.0;
        for s in 0..20 {
            let mut perm = src.clone();
            perm.shuffle(&mut rng_from_seed(100 + s));
            shuffled_mean += transfer_entropy(&DiscretizedSeries::from_symbols(perm, 2), &d, 2) / 20.0;
        }
        assert!(coupled > 0.4);
        assert!((shuffled_mean - baseline).abs() < 0.005, "{shuffled_mean} vs {baseline}");
    }

    #[test]
    fn memoryless_network_has_little_storage() {
        let net = ReservoirNetwork::from_rows(&vec![vec![0.0; 5]; 5], vec![0.1, -0.08, 0.05, 0.02, -0.1], Transfer::Tanh)
            .unwrap();
        // Two bins keep the plug-in bias negligible at 2000 samples.
        let cfg = InfoConfig { n_bins: 2, ..Default::default() };
        let m = network_info_measures(&net, &cfg, 1).unwrap();
        assert!(m.ais_mean <= 0.05, "{}", m.ais_mean);
        assert_eq!(m.te_mean, None);
        // With ten bins only the finite-sample bias (~(B^k-1)(B-1)/(2N ln 2) bits) remains.
        let m10 = network_info_measures(&net, &InfoConfig::default(), 1).unwrap();
        let bias = 99.0 * 9.0 / (2.0 * 1998.0 * std::f64::consts::LN_2);
        assert!(m10.ais_mean <= 1.5 * bias, "{} vs bias {bias}", m10.ais_mean);
    }

    #[test]
    fn network_measures_are_deterministic() {
        let net = generate_random_esn(12, 0.05, (-0.1, 0.1), 3);
        let cfg = InfoConfig { washout: 200, eval_length: 500, ..Default::default() };
        let a = network_info_measures(&net, &cfg, 5).unwrap();
        let b = network_info_measures(&net, &cfg, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.te_mean.is_some());
    }

    proptest! {
        #[test]
        fn estimates_are_bounded(
            x in prop::collection::vec(0usize..4, 4..200),
            y in prop::collection::vec(0usize..4, 200),
            k in 1usize..3,
        ) {
            let y = &y[..x.len()];
            let dx = DiscretizedSeries::from_symbols(x, 4);
            let dy = DiscretizedSeries::from_symbols(y.to_vec(), 4);
            let ais = active_information_storage(&dx, k);
            let te = transfer_entropy(&dy, &dx, k);
            prop_assert!((0.0..=2.0 + 1e-12).contains(&ais));
            prop_assert!((0.0..=2.0 + 1e-12).contains(&te));
        }
    }
}
