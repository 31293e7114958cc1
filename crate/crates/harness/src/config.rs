//! Experiment configuration: a flat TOML file, overridable from the CLI.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use rprof_core::profiling::{EvalMode, EvalSeeds, LambdaMode, RollbackScope, Variant};
use rprof_core::EnvKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgoName {
    Reinforce,
    Baseline,
    Ppo,
    Ddpg,
}

impl AlgoName {
    pub fn name(self) -> &'static str {
        match self {
            AlgoName::Reinforce => "reinforce",
            AlgoName::Baseline => "baseline",
            AlgoName::Ppo => "ppo",
            AlgoName::Ddpg => "ddpg",
        }
    }
}

impl FromStr for AlgoName {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "reinforce" => AlgoName::Reinforce,
            "baseline" | "reinforce-baseline" => AlgoName::Baseline,
            "ppo" => AlgoName::Ppo,
            "ddpg" => AlgoName::Ddpg,
            other => bail!("unknown algo `{other}` (expected reinforce, baseline, ppo or ddpg)"),
        })
    }
}

pub fn parse_env(s: &str) -> Result<EnvKind> {
    Ok(match s {
        "chain" => EnvKind::ChainMdp,
        "cartpole" => EnvKind::CartPole,
        "reacher" => EnvKind::PointMassReacher,
        other => bail!("unknown env `{other}` (expected chain, cartpole or reacher)"),
    })
}

pub fn parse_variant(s: &str) -> Result<Variant> {
    s.parse::<Variant>().map_err(anyhow::Error::from)
}

/// Parses `a..b` (inclusive) or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().with_context(|| format!("bad seed range `{s}`"))?;
        let b: u64 = b.trim().parse().with_context(|| format!("bad seed range `{s}`"))?;
        if b < a {
            bail!("empty seed range `{s}`");
        }
        (a..=b).collect()
    } else {
        parse_list(s)?
    };
    if seeds.is_empty() {
        bail!("at least one seed is required");
    }
    Ok(seeds)
}

pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|e| anyhow::anyhow!("bad list item `{x}`: {e}")))
        .collect()
}

fn parse_rollback(s: &str) -> Result<RollbackScope> {
    Ok(match s {
        "actor" | "actor-only" => RollbackScope::ActorOnly,
        "full" => RollbackScope::Full,
        other => bail!("unknown rollback scope `{other}` (expected actor or full)"),
    })
}

fn rollback_name(r: RollbackScope) -> &'static str {
    match r {
        RollbackScope::ActorOnly => "actor",
        RollbackScope::Full => "full",
    }
}

/// Sweep axes. Every non-empty axis contributes to the grid product.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Grid {
    pub eval_rollouts: Vec<usize>,
    pub variants: Vec<Variant>,
    pub lambdas: Vec<f64>,
}

impl Grid {
    pub fn is_empty(&self) -> bool {
        self.eval_rollouts.is_empty() && self.variants.is_empty() && self.lambdas.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    pub gamma: Option<f64>,
    pub horizon: Option<usize>,
    pub clip_actions: Option<bool>,

    pub algo: AlgoName,
    pub learning_rate: Option<f64>,
    pub steps_per_round: usize,
    pub critic_ridge: f64,
    pub clip_ratio: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub buffer_size: usize,
    pub batch: usize,
    pub tau: f64,
    pub noise_sigma: f64,
    /// Mean-reversion rate; `None` selects Gaussian noise.
    pub ou_theta: Option<f64>,
    pub critic_lr: f64,
    pub warmup: usize,

    pub variant: Variant,
    pub eval_rollouts: usize,
    pub lambda: f64,
    pub beta: Option<(f64, f64)>,
    pub epsilon: f64,
    pub delta: f64,
    pub rounds: usize,
    pub reuse_eval_samples: bool,
    pub rollback: RollbackScope,
    pub independent_eval_seeds: bool,
    pub cache_old_estimate: bool,
    pub oracle_eval: bool,
    pub timing: bool,

    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub grid: Grid,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            env: EnvKind::CartPole,
            gamma: None,
            horizon: None,
            clip_actions: None,
            algo: AlgoName::Reinforce,
            learning_rate: None,
            steps_per_round: 1000,
            critic_ridge: 1e-3,
            clip_ratio: 0.2,
            epochs: 4,
            minibatch: 64,
            buffer_size: 100_000,
            batch: 64,
            tau: 0.005,
            noise_sigma: 0.2,
            ou_theta: None,
            critic_lr: 0.5,
            warmup: 256,
            variant: Variant::Lookback,
            eval_rollouts: 5,
            lambda: 0.5,
            beta: None,
            epsilon: 1.0,
            delta: 0.1,
            rounds: 100,
            reuse_eval_samples: true,
            rollback: RollbackScope::ActorOnly,
            independent_eval_seeds: false,
            cache_old_estimate: false,
            oracle_eval: false,
            timing: false,
            seeds: (0..5).collect(),
            out: PathBuf::from("results"),
            grid: Grid::default(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SeedsValue {
    Text(String),
    List(Vec<u64>),
}

/// Mirror of [`ExperimentConfig`] with every key optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    env: Option<String>,
    gamma: Option<f64>,
    horizon: Option<usize>,
    clip_actions: Option<bool>,
    algo: Option<String>,
    learning_rate: Option<f64>,
    steps_per_round: Option<usize>,
    critic_ridge: Option<f64>,
    clip_ratio: Option<f64>,
    epochs: Option<usize>,
    minibatch: Option<usize>,
    buffer_size: Option<usize>,
    batch: Option<usize>,
    tau: Option<f64>,
    noise_sigma: Option<f64>,
    ou_theta: Option<f64>,
    critic_lr: Option<f64>,
    warmup: Option<usize>,
    variant: Option<String>,
    eval_rollouts: Option<usize>,
    lambda: Option<f64>,
    beta: Option<[f64; 2]>,
    epsilon: Option<f64>,
    delta: Option<f64>,
    rounds: Option<usize>,
    reuse_eval_samples: Option<bool>,
    rollback: Option<String>,
    independent_eval_seeds: Option<bool>,
    cache_old_estimate: Option<bool>,
    oracle_eval: Option<bool>,
    timing: Option<bool>,
    seeds: Option<SeedsValue>,
    out: Option<PathBuf>,
    grid_eval_rollouts: Option<Vec<usize>>,
    grid_variants: Option<Vec<String>>,
    grid_lambdas: Option<Vec<f64>>,
}

macro_rules! take {
    ($file:ident, $cfg:ident, $($key:ident),*) => {
        $(if let Some(v) = $file.$key { $cfg.$key = v; })*
    };
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.merge_toml(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Applies every key present in `text` on top of `self`.
    pub fn merge_toml(&mut self, text: &str) -> Result<()> {
        let f: ConfigFile = toml::from_str(text)?;
        if let Some(env) = &f.env {
            self.env = parse_env(env)?;
        }
        if let Some(algo) = &f.algo {
            self.algo = algo.parse()?;
        }
        if let Some(v) = &f.variant {
            self.variant = parse_variant(v)?;
        }
        if let Some(r) = &f.rollback {
            self.rollback = parse_rollback(r)?;
        }
        if let Some(seeds) = &f.seeds {
            self.seeds = match seeds {
                SeedsValue::Text(s) => parse_seeds(s)?,
                SeedsValue::List(v) => v.clone(),
            };
        }
        if f.gamma.is_some() {
            self.gamma = f.gamma;
        }
        if f.horizon.is_some() {
            self.horizon = f.horizon;
        }
        if f.clip_actions.is_some() {
            self.clip_actions = f.clip_actions;
        }
        if f.learning_rate.is_some() {
            self.learning_rate = f.learning_rate;
        }
        if f.ou_theta.is_some() {
            self.ou_theta = f.ou_theta;
        }
        if let Some([a, b]) = f.beta {
            self.beta = Some((a, b));
        }
        take!(f, self, steps_per_round, critic_ridge, clip_ratio, epochs, minibatch, buffer_size, batch, tau);
        take!(f, self, noise_sigma, critic_lr, warmup, eval_rollouts, lambda, epsilon, delta, rounds);
        take!(f, self, reuse_eval_samples, independent_eval_seeds, cache_old_estimate, oracle_eval, timing, out);
        if let Some(g) = f.grid_eval_rollouts {
            self.grid.eval_rollouts = g;
        }
        if let Some(g) = f.grid_variants {
            self.grid.variants = g.iter().map(|v| parse_variant(v)).collect::<Result<_>>()?;
        }
        if let Some(g) = f.grid_lambdas {
            self.grid.lambdas = g;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("at least one seed is required");
        }
        if self.rounds == 0 || self.eval_rollouts == 0 || self.steps_per_round == 0 {
            bail!("rounds, eval_rollouts and steps_per_round must be positive");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            bail!("lambda must lie in [0,1]");
        }
        if self.grid.eval_rollouts.contains(&0) {
            bail!("grid_eval_rollouts entries must be positive");
        }
        if self.grid.lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
            bail!("grid_lambdas entries must lie in [0,1]");
        }
        Ok(())
    }

    pub fn lambda_mode(&self) -> LambdaMode<f64> {
        match self.beta {
            Some((alpha, beta)) => LambdaMode::Beta { alpha, beta },
            None => LambdaMode::Fixed(self.lambda),
        }
    }

    pub fn eval_seeds(&self) -> EvalSeeds {
        if self.independent_eval_seeds {
            EvalSeeds::Independent
        } else {
            EvalSeeds::Shared
        }
    }

    pub fn eval_mode(&self) -> EvalMode {
        if self.oracle_eval {
            EvalMode::Oracle
        } else {
            EvalMode::MonteCarlo
        }
    }

    /// Key/value rendering of the resolved configuration, in the config
    /// file's own grammar.
    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<String>| v.unwrap_or_default();
        let mut line = |k: &str, v: String| {
            if !v.is_empty() {
                let _ = writeln!(s, "{k} = {v}");
            }
        };
        line("env", quote(self.env.name()));
        line("gamma", opt(self.gamma.map(|g| format!("{g:?}"))));
        line("horizon", opt(self.horizon.map(|h| h.to_string())));
        line("clip_actions", opt(self.clip_actions.map(|c| c.to_string())));
        line("algo", quote(self.algo.name()));
        line("learning_rate", opt(self.learning_rate.map(|g| format!("{g:?}"))));
        line("steps_per_round", self.steps_per_round.to_string());
        line("critic_ridge", format!("{:?}", self.critic_ridge));
        line("clip_ratio", format!("{:?}", self.clip_ratio));
        line("epochs", self.epochs.to_string());
        line("minibatch", self.minibatch.to_string());
        line("buffer_size", self.buffer_size.to_string());
        line("batch", self.batch.to_string());
        line("tau", format!("{:?}", self.tau));
        line("noise_sigma", format!("{:?}", self.noise_sigma));
        line("ou_theta", opt(self.ou_theta.map(|g| format!("{g:?}"))));
        line("critic_lr", format!("{:?}", self.critic_lr));
        line("warmup", self.warmup.to_string());
        line("variant", quote(self.variant.name()));
        line("eval_rollouts", self.eval_rollouts.to_string());
        line("lambda", format!("{:?}", self.lambda));
        line("beta", opt(self.beta.map(|(a, b)| format!("[{a:?}, {b:?}]"))));
        line("epsilon", format!("{:?}", self.epsilon));
        line("delta", format!("{:?}", self.delta));
        line("rounds", self.rounds.to_string());
        line("reuse_eval_samples", self.reuse_eval_samples.to_string());
        line("rollback", quote(rollback_name(self.rollback)));
        line("independent_eval_seeds", self.independent_eval_seeds.to_string());
        line("cache_old_estimate", self.cache_old_estimate.to_string());
        line("oracle_eval", self.oracle_eval.to_string());
        line("timing", self.timing.to_string());
        line("seeds", format!("{:?}", self.seeds));
        line("out", quote(&self.out.display().to_string()));
        if !self.grid.eval_rollouts.is_empty() {
            line("grid_eval_rollouts", format!("{:?}", self.grid.eval_rollouts));
        }
        if !self.grid.variants.is_empty() {
            let names: Vec<String> = self.grid.variants.iter().map(|v| quote(v.name())).collect();
            line("grid_variants", format!("[{}]", names.join(", ")));
        }
        if !self.grid.lambdas.is_empty() {
            line("grid_lambdas", format!("{:?}", self.grid.lambdas));
        }
        s
    }
}

fn quote(s: &str) -> String {
    format!("{s:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_parse() {
        assert_eq!(parse_seeds("0..4").unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(parse_seeds("3,7").unwrap(), vec![3, 7]);
        assert!(parse_seeds("4..1").is_err());
        assert!(parse_seeds("").is_err());
    }

    #[test]
    fn toml_overrides_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            env = "chain"
            algo = "ppo"
            variant = "tp"
            seeds = "1..3"
            beta = [2.0, 2.0]
            grid_eval_rollouts = [10, 50]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.env, EnvKind::ChainMdp);
        assert_eq!(cfg.algo, AlgoName::Ppo);
        assert_eq!(cfg.variant, Variant::ThreePoints);
        assert_eq!(cfg.seeds, vec![1, 2, 3]);
        assert_eq!(cfg.lambda_mode(), LambdaMode::Beta { alpha: 2.0, beta: 2.0 });
        assert_eq!(cfg.grid.eval_rollouts, vec![10, 50]);
        assert_eq!(cfg.rounds, 100);
    }

    #[test]
    fn unknown_keys_and_values_rejected() {
        assert!(ExperimentConfig::from_toml_str("colour = 3").is_err());
        assert!(ExperimentConfig::from_toml_str("env = \"mujoco\"").is_err());
        assert!(ExperimentConfig::from_toml_str("rollback = \"half\"").is_err());
    }

    #[test]
    fn rendering_reparses_to_the_same_config() {
        let mut cfg = ExperimentConfig { gamma: Some(0.95), beta: Some((2.0, 3.0)), ..Default::default() };
        cfg.grid.variants = vec![Variant::Vanilla, Variant::Mixup];
        cfg.grid.lambdas = vec![0.25];
        assert_eq!(ExperimentConfig::from_toml_str(&cfg.to_toml()).unwrap(), cfg);
    }
}
