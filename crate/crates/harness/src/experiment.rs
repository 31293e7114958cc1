//! Builds environments, policies and learners from a config and runs the
//! (grid point × seed) cells.

use anyhow::{bail, Result};
use rayon::prelude::*;

use rprof_core::pg::NoiseKind;
use rprof_core::profiling::{profiled_train, ProfiledRun, ProfilingConfig, Variant};
use rprof_core::{
    AlgoConfig, AlgoKind, CartPole, DdpgConfig, EnvInstance, EnvKind, FeatureMap, LogStd, PointMassReacher,
    PolicyFamily, PolicyParams, RoundRecord, Seed, TabularEnv, TabularModel,
};

use crate::config::{AlgoName, ExperimentConfig};

pub fn build_env(cfg: &ExperimentConfig) -> Result<EnvInstance<f64>> {
    Ok(match cfg.env {
        EnvKind::ChainMdp => {
            let model = TabularModel::chain(3, cfg.gamma.unwrap_or(0.9));
            EnvInstance::Chain(TabularEnv::new(model, cfg.horizon.unwrap_or(100))?)
        }
        EnvKind::CartPole => EnvInstance::CartPole(CartPole::new(cfg.gamma.unwrap_or(0.99), cfg.horizon.unwrap_or(200))?),
        EnvKind::PointMassReacher => EnvInstance::Reacher(PointMassReacher::new(
            cfg.gamma.unwrap_or(0.99),
            cfg.horizon.unwrap_or(100),
            cfg.clip_actions.unwrap_or(true),
        )?),
    })
}

/// Squashed state: linear near the target, and bounded so the quadratic
/// critic stays well conditioned when the mass drifts far away.
const REACHER_FEATURES: FeatureMap = FeatureMap::Tanh { dim: 4 };

pub fn policy_family(cfg: &ExperimentConfig) -> Result<PolicyFamily<f64>> {
    Ok(match (cfg.env, cfg.algo) {
        (EnvKind::ChainMdp, AlgoName::Ddpg) | (EnvKind::CartPole, AlgoName::Ddpg) => {
            bail!("ddpg needs a continuous action space (use env = \"reacher\")")
        }
        (EnvKind::ChainMdp, _) => PolicyFamily::softmax(FeatureMap::OneHot { n_states: 3 }, 2),
        (EnvKind::CartPole, _) => PolicyFamily::softmax(FeatureMap::Polynomial { input_dim: 4, degree: 1 }, 2),
        (EnvKind::PointMassReacher, AlgoName::Ddpg) => PolicyFamily::deterministic(REACHER_FEATURES, 2),
        (EnvKind::PointMassReacher, _) => {
            PolicyFamily::gaussian(REACHER_FEATURES, 2, LogStd::Fixed(-0.5_f64))
        }
    })
}

pub fn default_learning_rate(algo: AlgoName) -> f64 {
    match algo {
        AlgoName::Reinforce | AlgoName::Baseline => 0.01,
        AlgoName::Ppo => 3e-3,
        AlgoName::Ddpg => 1e-3,
    }
}

pub fn algo_config(cfg: &ExperimentConfig) -> AlgoConfig<f64> {
    let kind = match cfg.algo {
        AlgoName::Reinforce => AlgoKind::Reinforce,
        AlgoName::Baseline => AlgoKind::ReinforceBaseline { critic_ridge: cfg.critic_ridge },
        AlgoName::Ppo => AlgoKind::PpoClip {
            clip_ratio: cfg.clip_ratio,
            epochs: cfg.epochs,
            minibatch: cfg.minibatch,
            critic_ridge: cfg.critic_ridge,
        },
        AlgoName::Ddpg => AlgoKind::DdpgLite(DdpgConfig {
            buffer_size: cfg.buffer_size,
            batch: cfg.batch,
            tau: cfg.tau,
            noise: match cfg.ou_theta {
                Some(theta) => NoiseKind::OrnsteinUhlenbeck { sigma: cfg.noise_sigma, theta },
                None => NoiseKind::Gaussian { sigma: cfg.noise_sigma },
            },
            critic_lr: cfg.critic_lr,
            warmup: cfg.warmup,
        }),
    };
    AlgoConfig {
        kind,
        learning_rate: cfg.learning_rate.unwrap_or_else(|| default_learning_rate(cfg.algo)),
        steps_per_round: cfg.steps_per_round,
    }
}

/// One coordinate of a sweep. Axes left `None` take the base config value.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GridPoint {
    pub eval_rollouts: Option<usize>,
    pub variant: Option<Variant>,
    pub lambda: Option<f64>,
}

impl GridPoint {
    /// Directory name for the point; empty for a single run.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if let Some(e) = self.eval_rollouts {
            parts.push(format!("e-{e}"));
        }
        if let Some(v) = self.variant {
            parts.push(format!("variant-{}", v.name()));
        }
        if let Some(l) = self.lambda {
            parts.push(format!("lambda-{l}"));
        }
        parts.join("_")
    }

    pub fn apply(&self, cfg: &ExperimentConfig) -> ExperimentConfig {
        let mut c = cfg.clone();
        if let Some(e) = self.eval_rollouts {
            c.eval_rollouts = e;
        }
        if let Some(v) = self.variant {
            c.variant = v;
        }
        if let Some(l) = self.lambda {
            c.lambda = l;
            c.beta = None;
        }
        c
    }
}

/// The point's label with the variant axis removed; points that differ only
/// in variant share it.
pub fn label_without_variant(label: &str) -> String {
    label.split('_').filter(|p| !p.starts_with("variant-") && !p.is_empty()).collect::<Vec<_>>().join("_")
}

pub fn grid_points(cfg: &ExperimentConfig) -> Vec<GridPoint> {
    fn axis<T: Copy>(v: &[T]) -> Vec<Option<T>> {
        if v.is_empty() {
            vec![None]
        } else {
            v.iter().copied().map(Some).collect()
        }
    }
    let mut points = Vec::new();
    for e in axis(&cfg.grid.eval_rollouts) {
        for v in axis(&cfg.grid.variants) {
            for l in axis(&cfg.grid.lambdas) {
                points.push(GridPoint { eval_rollouts: e, variant: v, lambda: l });
            }
        }
    }
    points
}

pub fn profiling_config(cfg: &ExperimentConfig) -> ProfilingConfig<f64> {
    ProfilingConfig {
        variant: cfg.variant,
        eval_rollouts: cfg.eval_rollouts,
        lambda_mode: cfg.lambda_mode(),
        epsilon: cfg.epsilon,
        delta: cfg.delta,
        total_rounds: cfg.rounds,
        reuse_eval_samples: cfg.reuse_eval_samples,
        rollback_scope: cfg.rollback,
        eval_seeds: cfg.eval_seeds(),
        cache_old_estimate: cfg.cache_old_estimate,
        eval_mode: cfg.eval_mode(),
        record_wall_time: cfg.timing,
    }
}

/// Runs one fully resolved cell. Every grid point uses the same stream for
/// a given seed, so arms are compared on common random numbers.
pub fn run_cell(cfg: &ExperimentConfig, seed: u64) -> Result<ProfiledRun<f64>> {
    let env = build_env(cfg)?;
    let family = policy_family(cfg)?;
    let run = profiled_train(&env, PolicyParams::zeros(family), &algo_config(cfg), &profiling_config(cfg), Seed::new(seed))?;
    Ok(run)
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub point: GridPoint,
    pub seed: u64,
    pub records: Result<Vec<RoundRecord<f64>>, String>,
}

/// Runs every (grid point × seed) cell on the rayon pool. Results come back
/// in grid-then-seed order regardless of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<CellResult>> {
    cfg.validate()?;
    build_env(cfg)?;
    policy_family(cfg)?;
    let cells: Vec<(GridPoint, u64)> =
        grid_points(cfg).into_iter().flat_map(|p| cfg.seeds.iter().map(move |&s| (p, s))).collect();
    Ok(cells
        .into_par_iter()
        .map(|(point, seed)| {
            let records = run_cell(&point.apply(cfg), seed).map(|r| r.records).map_err(|e| format!("{e:#}"));
            CellResult { point, seed, records }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_product_and_labels() {
        let mut cfg = ExperimentConfig::default();
        assert_eq!(grid_points(&cfg), vec![GridPoint::default()]);
        assert_eq!(GridPoint::default().label(), "");
        cfg.grid.eval_rollouts = vec![10, 50, 200];
        cfg.grid.variants = vec![Variant::Vanilla, Variant::ThreePoints];
        let points = grid_points(&cfg);
        assert_eq!(points.len(), 6);
        assert_eq!(points[1].label(), "e-10_variant-tp");
        assert_eq!(label_without_variant("e-10_variant-tp"), "e-10");
        assert_eq!(points[1].apply(&cfg).eval_rollouts, 10);
    }

    #[test]
    fn ddpg_requires_continuous_actions() {
        let cfg = ExperimentConfig { algo: AlgoName::Ddpg, ..Default::default() };
        assert!(policy_family(&cfg).is_err());
        let cfg = ExperimentConfig { env: EnvKind::PointMassReacher, ..cfg };
        assert!(policy_family(&cfg).is_ok());
    }
}
