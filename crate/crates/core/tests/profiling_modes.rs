//! Profiled training: accounting, rollback, reuse, caching and the selection
//! algebra.

use proptest::prelude::*;

use rprof_core::policy::mix_params;
use rprof_core::profiling::{
    profiled_train_with, select, select_among, Candidate, EvalMode, EvalSeeds,
};
use rprof_core::{
    profiled_train, AlgoConfig, AlgoKind, CartPole, Error, FeatureMap, PolicyFamily, PolicyParams, ProfilingConfig,
    RollbackScope, Seed, TabularEnv, Tag, Trainer, Variant,
};

fn chain_family() -> PolicyFamily<f64> {
    PolicyFamily::softmax(FeatureMap::OneHot { n_states: 3 }, 2)
}

fn reinforce(lr: f64, steps: usize) -> AlgoConfig<f64> {
    AlgoConfig { kind: AlgoKind::Reinforce, learning_rate: lr, steps_per_round: steps }
}

#[test]
fn step_accounting_on_the_chain() {
    // The chain never terminates, so every rollout has exactly H steps.
    let (h, e) = (15, 4);
    let env = TabularEnv::chain(h);
    for variant in Variant::ALL {
        let cfg = ProfilingConfig { variant, eval_rollouts: e, total_rounds: 6, ..Default::default() };
        let run = profiled_train(&env, PolicyParams::zeros(chain_family()), &reinforce(0.5, 100), &cfg, Seed(1)).unwrap();
        assert_eq!(run.records.len(), 6);
        for r in &run.records {
            assert_eq!(r.train_steps, 100);
            let expected = if variant.gated() { variant.tags().len() * e * h } else { 0 };
            assert_eq!(r.eval_steps, expected, "{variant}");
            assert_eq!(r.env_steps_used, r.train_steps + r.eval_steps);
            assert!(r.oracle_j.is_some() && r.oracle_j_old.is_some());
            assert_eq!(r.lambda.is_some(), variant.tags().contains(&Tag::Mix));
            if !variant.gated() {
                assert_eq!(r.selected, Tag::New);
            }
        }
    }
}

#[test]
fn single_round_gives_single_record() {
    let env = TabularEnv::chain(10);
    let cfg = ProfilingConfig { total_rounds: 1, ..Default::default() };
    let run = profiled_train(&env, PolicyParams::zeros(chain_family()), &reinforce(0.1, 50), &cfg, Seed(2)).unwrap();
    assert_eq!(run.records.len(), 1);
    assert_eq!(run.records[0].round, 0);
}

#[test]
fn full_rollback_restores_the_critic() {
    let env = TabularEnv::chain(10);
    let algo = AlgoConfig { kind: AlgoKind::ReinforceBaseline { critic_ridge: 1e-3 }, learning_rate: 0.0, steps_per_round: 50 };
    let init = PolicyParams::zeros(chain_family());
    // With a zero learning rate new == old, ties go to old, and every round
    // rolls back.
    let run_with = |scope| {
        let cfg = ProfilingConfig { rollback_scope: scope, reuse_eval_samples: false, total_rounds: 3, ..Default::default() };
        profiled_train(&env, init.clone(), &algo, &cfg, Seed(3)).unwrap()
    };
    let full = run_with(RollbackScope::Full);
    assert!(full.records.iter().all(|r| r.selected == Tag::Old));
    assert!(full.trainer.critic().unwrap().w.iter().all(|&w| w == 0.0));
    let actor_only = run_with(RollbackScope::ActorOnly);
    assert!(actor_only.trainer.critic().unwrap().w.iter().any(|&w| w != 0.0));
}

#[test]
fn reusing_evaluation_rollouts_changes_only_gated_runs() {
    let env = CartPole::new(0.99, 200).unwrap();
    let family = PolicyFamily::softmax(FeatureMap::Polynomial { input_dim: 4, degree: 1 }, 2);
    let checksums = |variant, reuse| {
        let cfg = ProfilingConfig { variant, reuse_eval_samples: reuse, total_rounds: 5, ..Default::default() };
        profiled_train(&env, PolicyParams::zeros(family), &reinforce(0.05, 300), &cfg, Seed(4))
            .unwrap()
            .records
            .iter()
            .map(|r| r.selected_checksum)
            .collect::<Vec<_>>()
    };
    assert_ne!(checksums(Variant::Lookback, true), checksums(Variant::Lookback, false));
    assert_eq!(checksums(Variant::Vanilla, true), checksums(Variant::Vanilla, false));
}

#[test]
fn cached_incumbent_estimate_needs_independent_seeds() {
    let env = TabularEnv::chain(20);
    let run = |eval_seeds| {
        let cfg = ProfilingConfig { eval_seeds, cache_old_estimate: true, total_rounds: 6, ..Default::default() };
        profiled_train(&env, PolicyParams::zeros(chain_family()), &reinforce(0.5, 100), &cfg, Seed(5)).unwrap().records
    };
    let independent = run(EvalSeeds::Independent);
    for w in independent.windows(2) {
        assert_eq!(w[1].j_hat_old, w[0].j_hat_selected);
    }
    let shared = run(EvalSeeds::Shared);
    assert!(shared.windows(2).any(|w| w[1].j_hat_old != w[0].j_hat_selected));
}

#[test]
fn oracle_mode_needs_a_tabular_model() {
    let env = CartPole::new(0.99, 50).unwrap();
    let family = PolicyFamily::softmax(FeatureMap::Polynomial { input_dim: 4, degree: 1 }, 2);
    let cfg = ProfilingConfig { eval_mode: EvalMode::Oracle, total_rounds: 1, ..Default::default() };
    let err = profiled_train(&env, PolicyParams::zeros(family), &reinforce(0.1, 50), &cfg, Seed(6)).unwrap_err();
    assert!(matches!(err, Error::Unsupported(_)));
}

#[test]
fn single_precision_runs() {
    let env = TabularEnv::<f32>::chain(10);
    let family = PolicyFamily::<f32>::softmax(FeatureMap::OneHot { n_states: 3 }, 2);
    let algo = AlgoConfig { kind: AlgoKind::Reinforce, learning_rate: 0.5f32, steps_per_round: 50 };
    let cfg = ProfilingConfig::<f32> { variant: Variant::ThreePoints, total_rounds: 4, ..Default::default() };
    let trainer = Trainer::new(algo, &env, &family).unwrap();
    let run = profiled_train_with(&env, PolicyParams::zeros(family), trainer, &cfg, Seed(7)).unwrap();
    assert!(run.final_params.is_finite());
    assert!(run.records.iter().all(|r| r.oracle_j.unwrap() >= 0.0));
}

fn scored(scores: &[(Tag, f64)]) -> Vec<Candidate<f64>> {
    let p = PolicyParams::zeros(chain_family());
    scores.iter().map(|&(tag, s)| Candidate::with_score(tag, p.clone(), s)).collect()
}

proptest! {
    #[test]
    fn three_points_dominates(old in 0u8..4, new in 0u8..4, mix in 0u8..4) {
        // Small integer scores make ties common.
        let c = scored(&[(Tag::Old, old as f64), (Tag::New, new as f64), (Tag::Mix, mix as f64)]);
        let tp = select_among(&c, Variant::ThreePoints).unwrap().1;
        prop_assert!(tp >= select_among(&c, Variant::Lookback).unwrap().1);
        prop_assert!(tp >= select_among(&c, Variant::Mixup).unwrap().1);
        let chosen = &c[select(&c).unwrap()];
        prop_assert_eq!(chosen.score(), tp);
        if old as f64 == tp {
            prop_assert_eq!(chosen.tag, Tag::Old);
        }
    }

    #[test]
    fn mix_is_convex(old in proptest::collection::vec(-10.0f64..10.0, 6), new in proptest::collection::vec(-10.0f64..10.0, 6), lambda in 0.0f64..=1.0) {
        let o = PolicyParams::new(chain_family(), old.clone()).unwrap();
        let n = PolicyParams::new(chain_family(), new.clone()).unwrap();
        let m = mix_params(&o, &n, lambda).unwrap();
        for ((x, a), b) in m.theta().iter().zip(&old).zip(&new) {
            prop_assert!(*x >= a.min(*b) - 1e-12 && *x <= a.max(*b) + 1e-12);
        }
        prop_assert_eq!(mix_params(&o, &n, 0.0).unwrap(), o.clone());
        prop_assert_eq!(mix_params(&o, &n, 1.0).unwrap(), n);
    }
}
