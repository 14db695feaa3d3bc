use esnlab::reservoir::generate_random_esn;
use esnlab::tasks::{evaluate_task, memory_capacity, narma_target, TaskKind, TaskSpec};
use esnlab::{ReservoirNetwork, Transfer};
use proptest::prelude::*;

#[test]
fn unconnected_reservoir_remembers_only_the_present() {
    // Every neuron just echoes the current input: no delay can be recalled.
    let n = 10;
    let rows = vec![vec![0.0; n]; n];
    let w_in: Vec<f64> = (0..n).map(|i| 0.05 * (i + 1) as f64).collect();
    let net = ReservoirNetwork::from_rows(&rows, w_in, Transfer::Tanh).unwrap();
    let mc = memory_capacity(&net, &TaskSpec::new(TaskKind::Mc), 2).unwrap().score;
    assert!(mc < 1.0, "MC {mc}");
    let mmse = evaluate_task(&net, &TaskSpec::new(TaskKind::Mmse), 2).unwrap().score;
    assert!(mmse > 0.9, "MMSE {mmse}");
}

#[test]
fn ordered_reservoir_beats_chaotic_reservoir() {
    let spec = TaskSpec::new(TaskKind::Narma);
    let mean = |sigma: f64| {
        (0..3u64)
            .map(|s| evaluate_task(&generate_random_esn(60, sigma, (-0.1, 0.1), s), &spec, s).unwrap().score)
            .sum::<f64>()
            / 3.0
    };
    let (ordered, chaotic) = (mean(10f64.powf(-1.9)), mean(10f64.powf(-0.5)));
    assert!(ordered < chaotic, "{ordered} vs {chaotic}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn memory_capacity_is_bounded_by_reservoir_size(seed in 0u64..500, log_sigma in -3.0f64..-1.0) {
        let net = generate_random_esn(15, 10f64.powf(log_sigma), (-0.1, 0.1), seed);
        let spec = TaskSpec { mc_max_delay: 40, ..TaskSpec::new(TaskKind::Mc) };
        let mc = memory_capacity(&net, &spec, seed).unwrap().score;
        // Intercept plus 15 features; finite-sample fitting adds a little.
        prop_assert!((0.0..=17.0).contains(&mc), "MC {}", mc);
    }

    #[test]
    fn narma_target_stays_bounded(xs in proptest::collection::vec(0.0f64..0.5, 100..400)) {
        let y = narma_target(&xs).unwrap();
        prop_assert_eq!(y.len(), xs.len());
        prop_assert!(y.iter().all(|v| v.is_finite() && *v >= 0.0 && *v < 1.0));
    }
}
