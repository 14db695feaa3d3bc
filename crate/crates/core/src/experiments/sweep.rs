use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::records::{EvalRecord, Source, Subject};
use crate::dynamics::{lyapunov_exponent, LyapunovConfig};
use crate::infotheory::{network_info_measures, InfoConfig};
use crate::reservoir::{generate_random_esn, prune_random, ReservoirNetwork};
use crate::seed::derive_seed;
use crate::substrate::{generate_local_esn, random_spiral, LocalEsnConfig};
use crate::tasks::{evaluate_task, TaskKind, TaskSpec};

const STREAM_NETWORK: u64 = 10;
const STREAM_PRUNE: u64 = 11;
const STREAM_SUBSTRATE: u64 = 12;
const STREAM_INPUT: u64 = 13;
const STREAM_LYAPUNOV: u64 = 14;
const STREAM_INFO: u64 = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_neurons: usize,
    /// Grid bounds and step in `log10(sigma)`.
    pub log_sigma_min: f64,
    pub log_sigma_max: f64,
    pub log_sigma_step: f64,
    pub nets_per_sigma: usize,
    pub tasks: Vec<TaskSpec>,
    pub measure_info: bool,
    pub info: InfoConfig,
    pub lyapunov: LyapunovConfig,
    /// Keep this many incoming connections per neuron.
    pub prune_to: Option<usize>,
    /// Build locally connected networks on a golden spiral instead.
    pub local_max_length: Option<f64>,
    pub input_weight_range: (f64, f64),
    pub master_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_neurons: 151,
            log_sigma_min: -3.7,
            log_sigma_max: -0.8,
            log_sigma_step: 0.02,
            nets_per_sigma: 10,
            tasks: [TaskKind::Mc, TaskKind::Mmse, TaskKind::Narma, TaskKind::Nr].into_iter().map(TaskSpec::new).collect(),
            measure_info: false,
            info: InfoConfig::default(),
            lyapunov: LyapunovConfig::default(),
            prune_to: None,
            local_max_length: None,
            input_weight_range: (-0.1, 0.1),
            master_seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.log_sigma_step > 0.0) {
            return Err("log_sigma_step must be positive".into());
        }
        if !(self.log_sigma_min <= self.log_sigma_max) {
            return Err("log_sigma_min must not exceed log_sigma_max".into());
        }
        if self.n_neurons < 2 {
            return Err("n_neurons must be at least 2".into());
        }
        if self.nets_per_sigma == 0 {
            return Err("nets_per_sigma must be positive".into());
        }
        if let Some(k) = self.prune_to {
            if k > self.n_neurons {
                return Err(format!("prune_to {k} exceeds n_neurons {}", self.n_neurons));
            }
        }
        if self.prune_to.is_some() && self.local_max_length.is_some() {
            return Err("prune_to and local_max_length are mutually exclusive".into());
        }
        if let Some(l) = self.local_max_length {
            if !(l >= 0.0 && l.is_finite()) {
                return Err("local_max_length must be finite and non-negative".into());
            }
        }
        for t in &self.tasks {
            t.validate().map_err(|e| e.to_string())?;
        }
        self.lyapunov.validate().map_err(|e| e.to_string())?;
        Ok(())
    }

    /// `log10(sigma)` grid points, inclusive of both ends.
    pub fn log_sigma_grid(&self) -> Vec<f64> {
        let steps = ((self.log_sigma_max - self.log_sigma_min) / self.log_sigma_step + 1e-9).floor() as usize;
        (0..=steps)
            .map(|i| {
                let v = self.log_sigma_min + i as f64 * self.log_sigma_step;
                // Snap to the step's decimal resolution to avoid drift like -3.6799999.
                (v * 1e9).round() / 1e9
            })
            .collect()
    }

    pub fn source(&self) -> Source {
        if self.local_max_length.is_some() {
            Source::Local
        } else {
            Source::Sweep
        }
    }

    /// Network for one grid cell. Deterministic in `(master_seed, cell)`.
    pub fn build_network(&self, sigma_index: usize, sigma: f64, net_index: usize) -> ReservoirNetwork {
        let cell = [sigma_index as u64, net_index as u64];
        let seed = derive_seed(self.master_seed, &[STREAM_NETWORK, cell[0], cell[1]]);
        match (self.local_max_length, self.prune_to) {
            (Some(max_length), _) => {
                let sub = random_spiral(self.n_neurons, derive_seed(self.master_seed, &[STREAM_SUBSTRATE, cell[0], cell[1]]));
                let cfg = LocalEsnConfig { input_weight_range: self.input_weight_range, ..LocalEsnConfig::new(max_length, sigma) };
                generate_local_esn(&sub, &cfg, seed)
            }
            (None, Some(k)) => {
                let full = generate_random_esn(self.n_neurons, sigma, self.input_weight_range, seed);
                prune_random(&full, k, derive_seed(self.master_seed, &[STREAM_PRUNE, cell[0], cell[1]]))
            }
            (None, None) => generate_random_esn(self.n_neurons, sigma, self.input_weight_range, seed),
        }
    }

    /// Input seed shared by all networks with the same index across the grid.
    pub fn input_seed(&self, net_index: usize) -> u64 {
        derive_seed(self.master_seed, &[STREAM_INPUT, net_index as u64])
    }
}

/// Measures lambda, every configured task and optionally AIS/TE on `net`.
/// Failures are recorded in the row; remaining measurements still run.
pub fn evaluate_network(
    net: &ReservoirNetwork,
    record: &mut EvalRecord,
    tasks: &[TaskSpec],
    lyapunov: &LyapunovConfig,
    info: Option<&InfoConfig>,
    seed: u64,
) {
    match lyapunov_exponent(net, lyapunov, derive_seed(seed, &[STREAM_LYAPUNOV])) {
        Ok(est) => record.lambda = Some(est.lambda),
        Err(e) => record.fail("lambda", e),
    }
    for spec in tasks {
        match evaluate_task(net, spec, seed) {
            Ok(r) => {
                let slot = match spec.kind {
                    TaskKind::Mc => &mut record.mc,
                    TaskKind::Mmse => &mut record.mmse,
                    TaskKind::Narma => &mut record.narma,
                    TaskKind::Nr => &mut record.nr,
                };
                *slot = Some(r.score);
            }
            Err(e) => record.fail(spec.kind.name(), e),
        }
    }
    if let Some(info) = info {
        match network_info_measures(net, info, derive_seed(seed, &[STREAM_INFO])) {
            Ok(m) => {
                record.ais = Some(m.ais_mean);
                record.te = m.te_mean;
            }
            Err(e) => record.fail("info", e),
        }
    }
}

/// Evaluates every `(sigma, net)` cell of the grid. Output order is grid
/// order regardless of scheduling.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<EvalRecord>, String> {
    run_sweep_with(cfg, |_| {})
}

/// Like [`run_sweep`], calling `on_record` from worker threads as cells finish.
pub fn run_sweep_with(cfg: &SweepConfig, on_record: impl Fn(&EvalRecord) + Sync) -> Result<Vec<EvalRecord>, String> {
    cfg.validate()?;
    let grid = cfg.log_sigma_grid();
    let cells: Vec<(usize, usize)> =
        (0..grid.len()).flat_map(|s| (0..cfg.nets_per_sigma).map(move |k| (s, k))).collect();
    let info = cfg.measure_info.then_some(&cfg.info);
    Ok(cells
        .par_iter()
        .map(|&(si, k)| {
            let sigma = 10f64.powf(grid[si]);
            let seed = cfg.input_seed(k);
            let mut record = EvalRecord::new(cfg.source(), Subject::Sigma(sigma), seed);
            let net = cfg.build_network(si, sigma, k);
            evaluate_network(&net, &mut record, &cfg.tasks, &cfg.lyapunov, info, seed);
            on_record(&record);
            record
        })
        .collect())
}
