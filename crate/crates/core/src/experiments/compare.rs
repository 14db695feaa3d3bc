use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{mean, one_sample_t_test, sample_std, Alternative};
use crate::neuroevo::FitnessEvaluator;
use crate::reservoir::ReservoirNetwork;
use crate::seed::derive_seed;
use crate::tasks::{evaluate_task, TaskKind, TaskSpec};

const STREAM_CYCLE: u64 = 20;
const STREAM_SELECT: u64 = 21;

/// Which hypothesis the per-cycle differences `a - b` are tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    /// `a` is better than `b`, in each metric's own direction.
    OneTailed,
    TwoTailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub metric: TaskKind,
    pub mean_a: f64,
    pub std_a: f64,
    pub mean_b: f64,
    pub std_b: f64,
    pub mean_diff: f64,
    pub t: Option<f64>,
    pub df: usize,
    pub p_value: f64,
    pub test: String,
    pub degenerate_variance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub cycles: usize,
    pub metrics: Vec<MetricComparison>,
    /// Per-cycle scores, `[metric][cycle]`.
    pub scores_a: Vec<Vec<f64>>,
    pub scores_b: Vec<Vec<f64>>,
}

impl ComparisonReport {
    pub fn metric(&self, kind: TaskKind) -> Option<&MetricComparison> {
        self.metrics.iter().find(|m| m.metric == kind)
    }
}

/// Evaluates both networks on `cycles` fresh input sequences, the same
/// sequence for both in each cycle, and t-tests the paired differences.
pub fn compare(
    net_a: &ReservoirNetwork,
    net_b: &ReservoirNetwork,
    cycles: usize,
    tasks: &[TaskSpec],
    test: TestKind,
    seed: u64,
) -> Result<ComparisonReport, String> {
    if cycles < 2 {
        return Err(format!("at least two cycles are needed, got {cycles}"));
    }
    let run = |net: &ReservoirNetwork, spec: &TaskSpec| -> Result<Vec<f64>, String> {
        (0..cycles)
            .into_par_iter()
            .map(|c| {
                evaluate_task(net, spec, derive_seed(seed, &[STREAM_CYCLE, c as u64]))
                    .map(|r| r.score)
                    .map_err(|e| format!("{} cycle {c}: {e}", spec.kind))
            })
            .collect()
    };
    let mut report = ComparisonReport { cycles, metrics: Vec::new(), scores_a: Vec::new(), scores_b: Vec::new() };
    for spec in tasks {
        let a = run(net_a, spec)?;
        let b = run(net_b, spec)?;
        let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let alternative = match (test, spec.kind.higher_is_better()) {
            (TestKind::TwoTailed, _) => Alternative::TwoSided,
            (TestKind::OneTailed, true) => Alternative::Greater,
            (TestKind::OneTailed, false) => Alternative::Less,
        };
        let t = one_sample_t_test(&diffs, alternative)?;
        report.metrics.push(MetricComparison {
            metric: spec.kind,
            mean_a: mean(&a),
            std_a: sample_std(&a),
            mean_b: mean(&b),
            std_b: sample_std(&b),
            mean_diff: t.mean,
            t: t.t,
            df: t.df,
            p_value: t.p_value,
            test: alternative.label().to_string(),
            degenerate_variance: t.degenerate,
        });
        report.scores_a.push(a);
        report.scores_b.push(b);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub index: usize,
    /// Mean fitness of every candidate.
    pub mean_fitness: Vec<f64>,
}

/// Re-evaluates every candidate `evaluations` times on shared fresh seeds and
/// returns the one with the highest mean fitness; ties go to the lowest
/// index. Failed evaluations count as fitness 0.
pub fn select_best(
    candidates: &[ReservoirNetwork],
    evaluator: &dyn FitnessEvaluator,
    evaluations: usize,
    seed: u64,
) -> Result<Selection, String> {
    if candidates.is_empty() {
        return Err("no candidates to select from".into());
    }
    if evaluations == 0 {
        return Err("at least one evaluation is needed".into());
    }
    let seeds: Vec<u64> = (0..evaluations as u64).map(|e| derive_seed(seed, &[STREAM_SELECT, e])).collect();
    let mean_fitness: Vec<f64> = candidates
        .par_iter()
        .map(|net| {
            seeds
                .iter()
                .map(|&s| evaluator.evaluate(net, &[s]).map(|f| f.fitness).unwrap_or(0.0))
                .sum::<f64>()
                / evaluations as f64
        })
        .collect();
    let index = (0..mean_fitness.len()).fold(0, |b, i| if mean_fitness[i] > mean_fitness[b] { i } else { b });
    Ok(Selection { index, mean_fitness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuroevo::FitnessScores;
    use crate::reservoir::generate_random_esn;
    use crate::seed::rng_from_seed;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn identical_networks_have_zero_differences() {
        let net = generate_random_esn(20, 0.01, (-0.1, 0.1), 1);
        let tasks = [TaskSpec::new(TaskKind::Mmse), TaskSpec::new(TaskKind::Narma)];
        let r = compare(&net, &net, 5, &tasks, TestKind::TwoTailed, 3).unwrap();
        for (m, (a, b)) in r.metrics.iter().zip(r.scores_a.iter().zip(&r.scores_b)) {
            assert_eq!(a, b);
            assert_eq!(m.mean_diff, 0.0);
            assert!(m.p_value >= 0.9);
            assert!(m.degenerate_variance);
        }
        assert!(compare(&net, &net, 1, &tasks, TestKind::TwoTailed, 3).is_err());
    }

    #[test]
    fn compare_is_deterministic_and_json_serializable() {
        let a = generate_random_esn(15, 0.01, (-0.1, 0.1), 1);
        let b = generate_random_esn(15, 0.05, (-0.1, 0.1), 2);
        let tasks = [TaskSpec::new(TaskKind::Mmse)];
        let r1 = compare(&a, &b, 4, &tasks, TestKind::OneTailed, 9).unwrap();
        let r2 = compare(&a, &b, 4, &tasks, TestKind::OneTailed, 9).unwrap();
        assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
        assert_eq!(r1.metrics[0].test, "one-tailed");
        assert!((0.0..=1.0).contains(&r1.metrics[0].p_value));
    }

    /// Fitness is a fixed per-network mean plus seed-dependent noise; the
    /// network is identified by its first input weight.
    struct Noisy {
        means: Vec<f64>,
        sd: f64,
    }
    impl FitnessEvaluator for Noisy {
        fn evaluate(&self, net: &ReservoirNetwork, seeds: &[u64]) -> Result<FitnessScores, String> {
            let id = net.input_weights()[0] as usize;
            let mut rng = rng_from_seed(seeds[0] ^ (id as u64).wrapping_mul(0x9E37_79B9));
            let noise = Normal::new(0.0, self.sd).unwrap().sample(&mut rng);
            Ok(FitnessScores { fitness: self.means[id] + noise, mmse: None, narma: None })
        }
    }

    fn tagged(id: usize) -> ReservoirNetwork {
        ReservoirNetwork::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]], vec![id as f64, 0.0], crate::Transfer::Tanh).unwrap()
    }

    #[test]
    fn selection_basics() {
        let e = Noisy { means: vec![0.5, 2.0, 1.0], sd: 0.0 };
        let nets: Vec<_> = (0..3).map(tagged).collect();
        assert_eq!(select_best(&nets[..1], &e, 10, 1).unwrap().index, 0);
        assert_eq!(select_best(&nets, &e, 10, 1).unwrap().index, 1);
        let tie = Noisy { means: vec![1.0, 1.0, 1.0], sd: 0.0 };
        assert_eq!(select_best(&nets, &tie, 10, 1).unwrap().index, 0);
        assert!(select_best(&[], &e, 10, 1).is_err());
    }

    #[test]
    fn selection_agrees_with_long_reevaluation() {
        let nets: Vec<_> = (0..2).map(tagged).collect();
        let mut agree = 0;
        let trials = 200;
        for trial in 0..trials {
            let e = Noisy { means: vec![1.0, 1.1], sd: 0.1 };
            let short = select_best(&nets, &e, 10, 1000 + trial).unwrap().index;
            let long = select_best(&nets, &e, 100, 50_000 + trial).unwrap().index;
            agree += (short == long) as usize;
        }
        assert!(agree * 10 >= trials as usize * 9, "{agree}/{trials}");
    }
}
