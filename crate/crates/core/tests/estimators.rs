//! Score-function estimators: unbiasedness on a bandit, baseline variance
//! reduction, and the PPO surrogate at the behaviour policy.

use proptest::prelude::*;

use rprof_core::oracle::{tabular_policy, truncated_policy_value};
use rprof_core::pg::{clipped_surrogate_grad, policy_gradient_estimate, ppo_samples, CriticFeatures, CriticParams, PpoSample};
use rprof_core::{rollout, Action, FeatureMap, PolicyFamily, PolicyParams, Seed, TabularEnv, TabularModel, Trajectory};

fn bandit() -> TabularEnv<f64> {
    let path = format!("{}/tests/fixtures/bandit.txt", env!("CARGO_MANIFEST_DIR"));
    let model = TabularModel::parse_fixture(&std::fs::read_to_string(path).unwrap()).unwrap();
    TabularEnv::new(model, 1).unwrap()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Per-trajectory gradients and their mean and summed coordinate variance.
fn gradient_stats(
    policy: &PolicyParams<f64>,
    trajs: &[Trajectory<f64>],
    gamma: f64,
    baseline: Option<&CriticParams<f64>>,
) -> (Vec<f64>, f64) {
    let grads: Vec<Vec<f64>> = trajs
        .iter()
        .map(|t| policy_gradient_estimate(policy, std::slice::from_ref(t), gamma, baseline).unwrap())
        .collect();
    let n = grads.len() as f64;
    let dim = grads[0].len();
    let mean: Vec<f64> = (0..dim).map(|k| grads.iter().map(|g| g[k]).sum::<f64>() / n).collect();
    let var = (0..dim).map(|k| grads.iter().map(|g| (g[k] - mean[k]).powi(2)).sum::<f64>() / (n - 1.0)).sum();
    (mean, var)
}

#[test]
fn bandit_gradient_is_unbiased() {
    let env = bandit();
    let theta = vec![0.4, -0.2, 0.1];
    let policy = PolicyParams::new(PolicyFamily::softmax(FeatureMap::OneHot { n_states: 1 }, 3), theta).unwrap();
    let probs = policy.probabilities(&[0.0]).unwrap();
    let rewards = [0.2, 1.0, 0.0];
    let j: f64 = probs.iter().zip(rewards).map(|(p, r)| p * r).sum();
    // ∂J/∂θ_a = π_a (r_a − J).
    let exact: Vec<f64> = (0..3).map(|a| probs[a] * (rewards[a] - j)).collect();
    let pi = tabular_policy(&policy, 1).unwrap();
    assert!((truncated_policy_value(env.model(), &pi, 1).unwrap().j - j).abs() < 1e-12);

    let trajs: Vec<Trajectory<f64>> = (0..100_000).map(|i| rollout(&env, &policy, Seed(21).child(i)).unwrap()).collect();
    let (mean, var) = gradient_stats(&policy, &trajs, 0.5, None);
    let se = (var / trajs.len() as f64).sqrt();
    for k in 0..3 {
        assert!((mean[k] - exact[k]).abs() <= 4.0 * se, "coordinate {k}: {} vs {}", mean[k], exact[k]);
    }
}

#[test]
fn fitted_baseline_reduces_variance() {
    let env = TabularEnv::chain(20);
    let family = PolicyFamily::softmax(FeatureMap::OneHot { n_states: 3 }, 2);
    let policy = PolicyParams::new(family, vec![0.0, 0.5, 0.0, 0.5, 0.0, 0.5]).unwrap();
    let gamma = 0.9;
    let trajs: Vec<Trajectory<f64>> = (0..4000).map(|i| rollout(&env, &policy, Seed(22).child(i)).unwrap()).collect();
    let fit: Vec<Trajectory<f64>> = (0..500).map(|i| rollout(&env, &policy, Seed(23).child(i)).unwrap()).collect();
    let mut states: Vec<&[f64]> = Vec::new();
    let mut targets = Vec::new();
    for t in &fit {
        for (step, g) in t.steps.iter().zip(t.returns_to_go(gamma)) {
            states.push(&step.state);
            targets.push(g);
        }
    }
    let critic = CriticParams::zeros(CriticFeatures::State(FeatureMap::OneHot { n_states: 3 }))
        .fit_values(&states, &targets, 1e-6)
        .unwrap();
    let (_, plain) = gradient_stats(&policy, &trajs, gamma, None);
    let (_, with_baseline) = gradient_stats(&policy, &trajs, gamma, Some(&critic));
    assert!(with_baseline < plain, "baseline variance {with_baseline} vs plain {plain}");
}

#[test]
fn surrogate_gradient_at_behaviour_policy_is_the_policy_gradient() {
    let env = rprof_core::CartPole::new(0.99, 200).unwrap();
    let family = PolicyFamily::softmax(FeatureMap::Polynomial { input_dim: 4, degree: 1 }, 2);
    let policy = PolicyParams::new(family, (0..10).map(|i| 0.1 * i as f64 - 0.4).collect()).unwrap();
    let trajs: Vec<Trajectory<f64>> = (0..20).map(|i| rollout(&env, &policy, Seed(24).child(i)).unwrap()).collect();
    let samples = ppo_samples(&policy, None, &trajs, 0.99).unwrap();
    let refs: Vec<&PpoSample<f64>> = samples.iter().collect();
    let surrogate = clipped_surrogate_grad(&policy, &refs, 0.2).unwrap();
    let pg = policy_gradient_estimate(&policy, &trajs, 0.99, None).unwrap();
    let cosine = surrogate.iter().zip(&pg).map(|(a, b)| a * b).sum::<f64>() / (norm(&surrogate) * norm(&pg));
    assert!(cosine > 0.99, "cosine {cosine}");
    // Per-sample mean versus per-trajectory mean.
    let scale = samples.len() as f64 / trajs.len() as f64;
    for (a, b) in surrogate.iter().zip(&pg) {
        assert!((a * scale - b).abs() <= 1e-9 * (1.0 + b.abs()));
    }
}

proptest! {
    #[test]
    fn saturated_samples_contribute_nothing(shift in 0.5f64..5.0, advantage in 0.1f64..10.0, clip in 0.05f64..0.3) {
        let family = PolicyFamily::softmax(FeatureMap::OneHot { n_states: 1 }, 2);
        let old = PolicyParams::new(family, vec![0.0, 0.0]).unwrap();
        let action = Action::Discrete(1);
        let sample = PpoSample {
            state: vec![0.0],
            action: action.clone(),
            advantage,
            old_log_prob: old.log_prob(&[0.0], &action).unwrap(),
        };
        // Moving θ toward action 1 pushes the ratio above 1 + clip.
        let moved = old.with_theta(vec![0.0, shift]).unwrap();
        let ratio = (moved.log_prob(&[0.0], &action).unwrap() - sample.old_log_prob).exp();
        prop_assume!(ratio > 1.0 + clip);
        prop_assert_eq!(clipped_surrogate_grad(&moved, &[&sample], clip).unwrap(), vec![0.0, 0.0]);
        let negative = PpoSample { advantage: -advantage, ..sample.clone() };
        prop_assert!(norm(&clipped_surrogate_grad(&moved, &[&negative], clip).unwrap()) > 0.0);
    }

    #[test]
    fn softmax_score_norm_is_bounded(theta in proptest::collection::vec(-50.0f64..50.0, 12), s in proptest::collection::vec(-100.0f64..100.0, 2), a in 0usize..4) {
        let family = PolicyFamily::softmax(FeatureMap::Polynomial { input_dim: 2, degree: 1 }, 4);
        let p = PolicyParams::new(family, theta).unwrap();
        let g = p.grad_log_prob(&s, &Action::Discrete(a)).unwrap();
        prop_assert!(norm(&g) <= 2.0 + 1e-9);
    }
}
