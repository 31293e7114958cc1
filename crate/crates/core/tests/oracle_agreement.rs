//! Monte Carlo rollouts agree with the exact tabular oracles on fixture MDPs.

use proptest::prelude::*;

use rprof_core::oracle::{
    enumerate_returns, exact_policy_value, tabular_policy, truncated_policy_value, value_iteration, TabularPolicy,
};
use rprof_core::{
    discounted_return, rollout, FeatureMap, PolicyFamily, PolicyParams, Seed, TabularEnv, TabularModel,
};

fn fixture(name: &str) -> TabularModel<f64> {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    TabularModel::parse_fixture(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn softmax(n_states: usize, n_actions: usize, theta: Vec<f64>) -> PolicyParams<f64> {
    PolicyParams::new(PolicyFamily::softmax(FeatureMap::OneHot { n_states }, n_actions), theta).unwrap()
}

#[test]
fn fixture_roundtrips_through_text() {
    let m = fixture("slippery.txt");
    assert_eq!((m.n_states, m.n_actions), (3, 2));
    assert_eq!(TabularModel::<f64>::parse_fixture(&m.to_fixture()).unwrap(), m);
}

#[test]
fn monte_carlo_matches_backward_induction() {
    let model = fixture("slippery.txt");
    let horizon = 40;
    let env = TabularEnv::new(model.clone(), horizon).unwrap();
    let policy = softmax(3, 2, vec![0.2, -0.1, -0.5, 0.6, 0.0, 1.0]);
    let exact = truncated_policy_value(&model, &tabular_policy(&policy, 3).unwrap(), horizon).unwrap().j;
    let n = 20_000;
    let returns: Vec<f64> =
        (0..n).map(|i| discounted_return(&rollout(&env, &policy, Seed(3).child(i)).unwrap(), model.gamma)).collect();
    let mean = returns.iter().sum::<f64>() / n as f64;
    let var = returns.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    assert!((mean - exact).abs() <= 4.0 * se, "MC {mean} vs exact {exact} (se {se})");
}

#[test]
fn enumeration_matches_backward_induction_on_fixture() {
    let model = fixture("slippery.txt");
    let pi = tabular_policy(&softmax(3, 2, vec![0.3, -0.3, 0.1, 0.2, -1.0, 1.0]), 3).unwrap();
    for h in [1, 3, 7] {
        let by_paths = enumerate_returns(&model, &pi, h).unwrap();
        let by_induction = truncated_policy_value(&model, &pi, h).unwrap().j;
        assert!((by_paths - by_induction).abs() < 1e-12, "H={h}: {by_paths} vs {by_induction}");
    }
}

#[test]
fn greedy_policy_attains_optimal_values() {
    let model = fixture("slippery.txt");
    let vi = value_iteration(&model).unwrap();
    let pi: TabularPolicy<f64> = rprof_core::oracle::deterministic_policy(&vi.greedy, 2);
    let v = exact_policy_value(&model, &pi).unwrap();
    for (a, b) in v.values.iter().zip(&vi.values) {
        assert!((a - b).abs() < 1e-6);
    }
}

proptest! {
    #[test]
    fn no_policy_beats_value_iteration(theta in proptest::collection::vec(-3.0f64..3.0, 6)) {
        let model = fixture("slippery.txt");
        let best = value_iteration(&model).unwrap();
        let v = exact_policy_value(&model, &tabular_policy(&softmax(3, 2, theta), 3).unwrap()).unwrap();
        for (a, b) in v.values.iter().zip(&best.values) {
            prop_assert!(*a <= b + 1e-6);
        }
    }

    #[test]
    fn truncation_error_is_geometric(theta in proptest::collection::vec(-3.0f64..3.0, 6), h in 1usize..60) {
        let model = fixture("slippery.txt");
        let pi = tabular_policy(&softmax(3, 2, theta), 3).unwrap();
        let full = exact_policy_value(&model, &pi).unwrap().j;
        let cut = truncated_policy_value(&model, &pi, h).unwrap().j;
        let tail = model.gamma.powi(h as i32) / (1.0 - model.gamma);
        prop_assert!((full - cut).abs() <= tail + 1e-9);
    }
}
