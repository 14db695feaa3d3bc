//! Benchmark tasks: memory capacity (MC), memory mean squared error (MMSE),
//! NARMA-30 and negative ratio (NR).
//!
//! Every task drives the network with one i.i.d. uniform sequence split into
//! washout, training and evaluation windows. Readouts are fitted on the
//! training window only and scored on the evaluation window only.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reservoir::{train_readout_with, uniform, NetworkError, ReadoutOptions, ReservoirNetwork};
use crate::seed::rng_from_seed;

/// Predicted outputs with variance below this count as constant for MC.
pub const MC_VARIANCE_GUARD: f64 = 1e-12;
/// NARMA targets beyond this magnitude indicate out-of-domain input.
pub const NARMA_DIVERGENCE: f64 = 10.0;
pub const NARMA_ORDER: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TaskKind {
    Mc,
    Mmse,
    Narma,
    Nr,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Mc => "mc",
            TaskKind::Mmse => "mmse",
            TaskKind::Narma => "narma",
            TaskKind::Nr => "nr",
        }
    }

    /// Whether larger scores are better (only MC).
    pub fn higher_is_better(self) -> bool {
        matches!(self, TaskKind::Mc)
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mc" => Ok(TaskKind::Mc),
            "mmse" => Ok(TaskKind::Mmse),
            "narma" => Ok(TaskKind::Narma),
            "nr" => Ok(TaskKind::Nr),
            other => Err(format!("unknown task `{other}` (expected mc, mmse, narma or nr)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub input_low: f64,
    pub input_high: f64,
    pub length_washout: usize,
    pub length_train: usize,
    pub length_eval: usize,
    pub mc_max_delay: usize,
    pub mmse_n_delays: usize,
    pub nr_window: usize,
    pub readout: ReadoutOptions,
}

impl TaskSpec {
    /// Default windows (1000/1000/1000) and the input range of the task kind:
    /// `[0, 0.5]` for NARMA, `[-1, 1]` otherwise.
    pub fn new(kind: TaskKind) -> Self {
        let (input_low, input_high) = match kind {
            TaskKind::Narma => (0.0, 0.5),
            _ => (-1.0, 1.0),
        };
        Self {
            kind,
            input_low,
            input_high,
            length_washout: 1000,
            length_train: 1000,
            length_eval: 1000,
            mc_max_delay: 300,
            mmse_n_delays: 30,
            nr_window: 30,
            readout: ReadoutOptions::default(),
        }
    }

    pub fn total_length(&self) -> usize {
        self.length_washout + self.length_train + self.length_eval
    }

    /// Longest input history a target of this task looks back on.
    pub fn max_lookback(&self) -> usize {
        match self.kind {
            TaskKind::Mc => self.mc_max_delay,
            TaskKind::Mmse => self.mmse_n_delays,
            TaskKind::Narma => NARMA_ORDER,
            TaskKind::Nr => self.nr_window,
        }
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        let bad = |m: String| Err(TaskError::Spec(m));
        if self.length_train < 2 || self.length_eval < 2 {
            return bad("training and evaluation windows need at least two steps".into());
        }
        if self.length_washout < 1 {
            return bad("washout must be at least one step".into());
        }
        if self.mc_max_delay < 1 || self.mmse_n_delays < 1 || self.nr_window < 1 {
            return bad("delays and windows must be positive".into());
        }
        if self.length_washout < self.max_lookback() {
            return bad(format!(
                "washout {} is shorter than the {} task's look-back of {}",
                self.length_washout,
                self.kind,
                self.max_lookback()
            ));
        }
        if !(self.input_low <= self.input_high) {
            return bad("input_low must not exceed input_high".into());
        }
        if !(self.readout.ridge >= 0.0) {
            return bad("ridge must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub kind: TaskKind,
    pub score: f64,
    /// MC: `MC_k` for k = 1..; MMSE: per-delay normalised RMSE; empty otherwise.
    pub per_component: Vec<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error("invalid task specification: {0}")]
    Spec(String),
    #[error("{kind} task given to the {expected} scorer")]
    WrongKind { kind: TaskKind, expected: TaskKind },
    #[error("NARMA target diverged at step {step} (|y| = {value})")]
    NarmaDivergence { step: usize, value: f64 },
    #[error("target has zero variance")]
    DegenerateTarget,
    #[error("sequence lengths differ or are shorter than two")]
    Length,
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// I.i.d. uniform input for the whole washout+train+eval horizon.
pub fn generate_input(spec: &TaskSpec, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..spec.total_length()).map(|_| uniform(&mut rng, spec.input_low, spec.input_high)).collect()
}

/// NARMA-30 target aligned with the input: `out[t]` is the value the reservoir
/// must emit after consuming `inputs[t]`,
///
/// `out[t] = 0.2 y + 0.004 y * sum(last 30 y) + 1.5 x[t-29] x[t] + 0.001`
///
/// where `y = out[t-1]`. History before the start of the sequence reads as 0.
pub fn narma_target(inputs: &[f64]) -> Result<Vec<f64>, TaskError> {
    let mut out: Vec<f64> = Vec::with_capacity(inputs.len());
    for (t, &x) in inputs.iter().enumerate() {
        let y = if t > 0 { out[t - 1] } else { 0.0 };
        let window_sum: f64 = out[t.saturating_sub(NARMA_ORDER)..].iter().sum();
        let lagged_x = if t + 1 >= NARMA_ORDER { inputs[t + 1 - NARMA_ORDER] } else { 0.0 };
        let next = 0.2 * y + 0.004 * y * window_sum + 1.5 * lagged_x * x + 0.001;
        if !next.is_finite() || next.abs() > NARMA_DIVERGENCE {
            return Err(TaskError::NarmaDivergence { step: t, value: next });
        }
        out.push(next);
    }
    Ok(out)
}

/// `out[t]` = fraction of non-positive values among the last `k` inputs
/// `inputs[t-k+1..=t]`; positions before the sequence start count as positive.
pub fn negative_ratio_target(inputs: &[f64], k: usize) -> Vec<f64> {
    assert!(k >= 1);
    let neg = |x: f64| if x <= 0.0 { 1.0 } else { 0.0 };
    let mut count = 0.0;
    inputs
        .iter()
        .enumerate()
        .map(|(t, &x)| {
            count += neg(x);
            if t >= k {
                count -= neg(inputs[t - k]);
            }
            count / k as f64
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population variance.
fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

/// Root mean squared error normalised by the population standard deviation of
/// `desired`; a constant predictor at the target mean scores exactly 1.
pub fn nrmse(predicted: &[f64], desired: &[f64]) -> Result<f64, TaskError> {
    if predicted.len() != desired.len() || desired.len() < 2 {
        return Err(TaskError::Length);
    }
    let var = variance(desired);
    if !(var > 0.0) {
        return Err(TaskError::DegenerateTarget);
    }
    let mse = predicted.iter().zip(desired).map(|(o, y)| (o - y) * (o - y)).sum::<f64>() / desired.len() as f64;
    Ok((mse / var).sqrt())
}

/// Squared Pearson correlation with the variance guard on the prediction.
fn squared_correlation(desired: &[f64], predicted: &[f64]) -> f64 {
    let vy = variance(desired);
    let vo = variance(predicted);
    if vo < MC_VARIANCE_GUARD || !(vy > 0.0) {
        return 0.0;
    }
    let my = mean(desired);
    let mo = mean(predicted);
    let cov = desired.iter().zip(predicted).map(|(y, o)| (y - my) * (o - mo)).sum::<f64>() / desired.len() as f64;
    (cov * cov / (vy * vo)).clamp(0.0, 1.0)
}

/// Reservoir states plus the input that produced them.
struct Driven {
    inputs: Vec<f64>,
    states: DMatrix<f64>,
    washout: usize,
    train: usize,
    eval: usize,
}

impl Driven {
    fn new(net: &ReservoirNetwork, spec: &TaskSpec, seed: u64) -> Result<Self, TaskError> {
        spec.validate()?;
        let inputs = generate_input(spec, seed);
        let states = net.run(&inputs, spec.length_washout)?;
        Ok(Self { inputs, states, washout: spec.length_washout, train: spec.length_train, eval: spec.length_eval })
    }

    /// Fits on the training rows and returns predictions on the evaluation rows.
    /// `targets` is indexed like `inputs`.
    fn fit_predict(&self, targets: &DMatrix<f64>, opts: ReadoutOptions) -> DMatrix<f64> {
        let train_states = self.states.rows(0, self.train).into_owned();
        let train_targets = targets.rows(self.washout, self.train).into_owned();
        let readout = train_readout_with(&train_states, &train_targets, opts);
        readout.predict(&self.states.rows(self.train, self.eval).into_owned())
    }

    fn eval_slice<'a>(&self, series: &'a [f64]) -> &'a [f64] {
        &series[self.washout + self.train..]
    }

    /// Delayed copies of the input for delays `1..=max_delay`, one column each.
    fn delay_targets(&self, max_delay: usize) -> DMatrix<f64> {
        let len = self.inputs.len();
        DMatrix::from_fn(len, max_delay, |t, k| {
            let d = k + 1;
            if t >= d {
                self.inputs[t - d]
            } else {
                0.0
            }
        })
    }
}

fn expect_kind(spec: &TaskSpec, expected: TaskKind) -> Result<(), TaskError> {
    if spec.kind != expected {
        return Err(TaskError::WrongKind { kind: spec.kind, expected });
    }
    Ok(())
}

/// MC = sum over delays k = 1..=mc_max_delay of the squared correlation
/// between the delayed input and its readout prediction on the evaluation
/// window.
pub fn memory_capacity(net: &ReservoirNetwork, spec: &TaskSpec, seed: u64) -> Result<TaskResult, TaskError> {
    expect_kind(spec, TaskKind::Mc)?;
    let driven = Driven::new(net, spec, seed)?;
    let targets = driven.delay_targets(spec.mc_max_delay);
    let predicted = driven.fit_predict(&targets, spec.readout);
    let desired = targets.rows(driven.washout + driven.train, driven.eval);
    let per: Vec<f64> = (0..spec.mc_max_delay)
        .map(|k| {
            let y: Vec<f64> = desired.column(k).iter().copied().collect();
            let o: Vec<f64> = predicted.column(k).iter().copied().collect();
            squared_correlation(&y, &o)
        })
        .collect();
    Ok(TaskResult { kind: TaskKind::Mc, score: per.iter().sum(), per_component: per })
}

/// MMSE = sqrt(mean over time and delays 1..=N of squared error / var(input))
/// on the evaluation window.
pub fn mmse(net: &ReservoirNetwork, spec: &TaskSpec, seed: u64) -> Result<TaskResult, TaskError> {
    expect_kind(spec, TaskKind::Mmse)?;
    let driven = Driven::new(net, spec, seed)?;
    let n = spec.mmse_n_delays;
    let targets = driven.delay_targets(n);
    let predicted = driven.fit_predict(&targets, spec.readout);
    let desired = targets.rows(driven.washout + driven.train, driven.eval);
    let var_input = variance(driven.eval_slice(&driven.inputs));
    if !(var_input > 0.0) {
        return Err(TaskError::DegenerateTarget);
    }
    let per_delay_mse: Vec<f64> = (0..n)
        .map(|k| {
            desired.column(k).iter().zip(predicted.column(k).iter()).map(|(y, o)| (y - o) * (y - o)).sum::<f64>()
                / driven.eval as f64
        })
        .collect();
    let score = (mean(&per_delay_mse) / var_input).sqrt();
    let per_component = per_delay_mse.iter().map(|m| (m / var_input).sqrt()).collect();
    Ok(TaskResult { kind: TaskKind::Mmse, score, per_component })
}

fn score_single_target(driven: &Driven, target: &[f64], spec: &TaskSpec) -> Result<f64, TaskError> {
    let targets = DMatrix::from_column_slice(target.len(), 1, target);
    let predicted = driven.fit_predict(&targets, spec.readout);
    let o: Vec<f64> = predicted.column(0).iter().copied().collect();
    nrmse(&o, driven.eval_slice(target))
}

/// NRMSE of a readout trained on the NARMA-30 target.
pub fn narma_score(net: &ReservoirNetwork, spec: &TaskSpec, seed: u64) -> Result<TaskResult, TaskError> {
    expect_kind(spec, TaskKind::Narma)?;
    let driven = Driven::new(net, spec, seed)?;
    let target = narma_target(&driven.inputs)?;
    let score = score_single_target(&driven, &target, spec)?;
    Ok(TaskResult { kind: TaskKind::Narma, score, per_component: Vec::new() })
}

/// NRMSE of a readout trained on the ratio of non-positive inputs in the last
/// `nr_window` steps.
pub fn negative_ratio_score(net: &ReservoirNetwork, spec: &TaskSpec, seed: u64) -> Result<TaskResult, TaskError> {
    expect_kind(spec, TaskKind::Nr)?;
    let driven = Driven::new(net, spec, seed)?;
    let target = negative_ratio_target(&driven.inputs, spec.nr_window);
    let score = score_single_target(&driven, &target, spec)?;
    Ok(TaskResult { kind: TaskKind::Nr, score, per_component: Vec::new() })
}

/// Dispatches on `spec.kind`.
pub fn evaluate_task(net: &ReservoirNetwork, spec: &TaskSpec, seed: u64) -> Result<TaskResult, TaskError> {
    match spec.kind {
        TaskKind::Mc => memory_capacity(net, spec, seed),
        TaskKind::Mmse => mmse(net, spec, seed),
        TaskKind::Narma => narma_score(net, spec, seed),
        TaskKind::Nr => negative_ratio_score(net, spec, seed),
    }
}
