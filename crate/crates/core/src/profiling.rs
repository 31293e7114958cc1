//! Reward profiling: gate each inner-algorithm update by comparing Monte
//! Carlo return estimates of the incumbent, the proposal and their blend.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand_distr::{Beta, Distribution};

use crate::error::{domain, Error, Result};
use crate::estimation::{estimate_return, EvalBudget, ReturnEstimate};
use crate::mdp::{return_bound, Environment, Trajectory};
use crate::oracle::{tabular_policy, truncated_policy_value};
use crate::pg::{AlgoConfig, Trainer};
use crate::policy::{mix_params, PolicyParams};
use crate::scalar::Real;
use crate::seed::Seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Vanilla,
    Lookback,
    Mixup,
    ThreePoints,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Vanilla, Variant::Lookback, Variant::Mixup, Variant::ThreePoints];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Vanilla => "vanilla",
            Variant::Lookback => "lb",
            Variant::Mixup => "mu",
            Variant::ThreePoints => "tp",
        }
    }

    /// Candidate tags evaluated each round. Vanilla evaluates old and new
    /// for logging only.
    pub fn tags(self) -> &'static [Tag] {
        match self {
            Variant::Vanilla | Variant::Lookback => &[Tag::Old, Tag::New],
            Variant::Mixup => &[Tag::Old, Tag::Mix],
            Variant::ThreePoints => &[Tag::Old, Tag::New, Tag::Mix],
        }
    }

    pub fn gated(self) -> bool {
        self != Variant::Vanilla
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vanilla" => Ok(Variant::Vanilla),
            "lb" | "lookback" => Ok(Variant::Lookback),
            "mu" | "mixup" => Ok(Variant::Mixup),
            "tp" | "threepoints" | "three-points" => Ok(Variant::ThreePoints),
            other => domain(format!("unknown variant `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    Old,
    New,
    Mix,
}

impl Tag {
    pub fn name(self) -> &'static str {
        match self {
            Tag::Old => "old",
            Tag::New => "new",
            Tag::Mix => "mix",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMode<R> {
    Fixed(R),
    /// λ ~ Beta(α, β), drawn once per round.
    Beta { alpha: R, beta: R },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RollbackScope {
    /// Only θ reverts on rejection; critic and replay buffer keep their updates.
    ActorOnly,
    /// The whole trainer state reverts when the old policy is kept.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSeeds {
    /// Every candidate's rollout `i` uses the same stream (common random numbers).
    Shared,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    MonteCarlo,
    /// Exact horizon-truncated J from the environment's tabular model.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilingConfig<R> {
    pub variant: Variant,
    /// E: evaluation rollouts per candidate per round.
    pub eval_rollouts: usize,
    pub lambda_mode: LambdaMode<R>,
    pub epsilon: R,
    pub delta: R,
    /// T: number of profiling rounds.
    pub total_rounds: usize,
    pub reuse_eval_samples: bool,
    pub rollback_scope: RollbackScope,
    pub eval_seeds: EvalSeeds,
    /// Reuse the previous winner's estimate as Ĵ(θ_t). Only honoured with
    /// independent evaluation seeds.
    pub cache_old_estimate: bool,
    pub eval_mode: EvalMode,
    pub record_wall_time: bool,
}

impl<R: Real> Default for ProfilingConfig<R> {
    fn default() -> Self {
        ProfilingConfig {
            variant: Variant::Lookback,
            eval_rollouts: 5,
            lambda_mode: LambdaMode::Fixed(R::lit(0.5)),
            epsilon: R::one(),
            delta: R::lit(0.1),
            total_rounds: 100,
            reuse_eval_samples: true,
            rollback_scope: RollbackScope::ActorOnly,
            eval_seeds: EvalSeeds::Shared,
            cache_old_estimate: false,
            eval_mode: EvalMode::MonteCarlo,
            record_wall_time: false,
        }
    }
}

impl<R: Real> ProfilingConfig<R> {
    pub fn validate(&self) -> Result<()> {
        if self.eval_rollouts == 0 {
            return domain("eval_rollouts must be at least 1");
        }
        if self.total_rounds == 0 {
            return domain("total_rounds must be at least 1");
        }
        match self.lambda_mode {
            LambdaMode::Fixed(l) if !(l >= R::zero() && l <= R::one()) => {
                return domain(format!("lambda must lie in [0,1], got {l}"));
            }
            LambdaMode::Beta { alpha, beta } if !(alpha > R::zero() && beta > R::zero()) => {
                return domain("Beta parameters must be positive");
            }
            _ => {}
        }
        if !(self.delta > R::zero() && self.delta < R::one()) {
            return domain("delta must lie in (0,1)");
        }
        if !(self.epsilon > R::zero()) {
            return domain("epsilon must be positive");
        }
        Ok(())
    }

    /// Sets E from the concentration bound for this environment's return range.
    pub fn with_bound_rollouts<E: Environment<R>>(mut self, env: &E) -> Result<Self> {
        let budget = EvalBudget::from_bound(
            return_bound(env.spec()),
            self.epsilon,
            self.delta,
            self.total_rounds,
            self.variant.tags().len(),
        )?;
        self.eval_rollouts = budget.rollouts;
        Ok(self)
    }

    fn budget(&self) -> Result<EvalBudget<R>> {
        EvalBudget::manual(self.eval_rollouts, self.epsilon, self.delta, self.total_rounds, self.variant.tags().len())
    }
}

#[derive(Debug, Clone)]
pub struct Candidate<R> {
    pub tag: Tag,
    pub params: PolicyParams<R>,
    /// `None` when evaluation failed; such a candidate scores −∞.
    pub estimate: Option<ReturnEstimate<R>>,
    pub trajectories: Vec<Trajectory<R>>,
}

impl<R: Real> Candidate<R> {
    pub fn unevaluated(tag: Tag, params: PolicyParams<R>) -> Self {
        Candidate { tag, params, estimate: None, trajectories: Vec::new() }
    }

    pub fn with_score(tag: Tag, params: PolicyParams<R>, j_hat: R) -> Self {
        let est = ReturnEstimate::exact(j_hat, R::zero());
        Candidate { tag, params, estimate: Some(est), trajectories: Vec::new() }
    }

    pub fn score(&self) -> R {
        match &self.estimate {
            Some(e) if e.j_hat.is_finite() => e.j_hat,
            _ => R::neg_infinity(),
        }
    }
}

/// Candidate parameters for one round, in the order old, new, mix.
pub fn build_candidates<R: Real>(
    old: &PolicyParams<R>,
    new: &PolicyParams<R>,
    variant: Variant,
    lambda: R,
) -> Result<Vec<Candidate<R>>> {
    if old.family() != new.family() {
        return domain("old and new parameters belong to different policy families");
    }
    variant
        .tags()
        .iter()
        .map(|&tag| {
            let params = match tag {
                Tag::Old => old.clone(),
                Tag::New => new.clone(),
                Tag::Mix => mix_params(old, new, lambda)?,
            };
            Ok(Candidate::unevaluated(tag, params))
        })
        .collect()
}

/// Index of the highest-scoring candidate. Scanning starts at the old policy
/// and only a strictly larger score replaces the incumbent, so ties resolve
/// to θ_t.
pub fn select<R: Real>(cands: &[Candidate<R>]) -> Result<usize> {
    if cands.is_empty() {
        return domain("cannot select from an empty candidate set");
    }
    let mut best = cands.iter().position(|c| c.tag == Tag::Old).unwrap_or(0);
    for (i, c) in cands.iter().enumerate() {
        if c.score() > cands[best].score() {
            best = i;
        }
    }
    Ok(best)
}

/// Selection restricted to the tags `variant` would have considered.
/// Returns the selected tag and its score.
pub fn select_among<R: Real>(cands: &[Candidate<R>], variant: Variant) -> Result<(Tag, R)> {
    let subset: Vec<Candidate<R>> = cands.iter().filter(|c| variant.tags().contains(&c.tag)).cloned().collect();
    let i = select(&subset)?;
    Ok((subset[i].tag, subset[i].score()))
}

/// Selected scores of Lookback, Mixup and Three-Points computed from one
/// shared three-candidate set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dominance<R> {
    pub lookback: R,
    pub mixup: R,
    pub three_points: R,
}

impl<R: Real> Dominance<R> {
    pub fn holds(&self) -> bool {
        self.three_points >= self.lookback && self.three_points >= self.mixup
    }
}

pub fn variant_dominance<R: Real>(cands: &[Candidate<R>]) -> Result<Dominance<R>> {
    Ok(Dominance {
        lookback: select_among(cands, Variant::Lookback)?.1,
        mixup: select_among(cands, Variant::Mixup)?.1,
        three_points: select_among(cands, Variant::ThreePoints)?.1,
    })
}

/// Per-round log entry.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord<R> {
    pub round: usize,
    pub j_hat_old: Option<R>,
    pub j_hat_new: Option<R>,
    pub j_hat_mix: Option<R>,
    pub selected: Tag,
    /// Estimate of the selected candidate.
    pub j_hat_selected: Option<R>,
    /// λ used for the mix candidate, if one was built.
    pub lambda: Option<R>,
    pub train_steps: usize,
    /// Steps spent on gating rollouts. Vanilla's logging rollouts are not counted.
    pub eval_steps: usize,
    pub env_steps_used: usize,
    pub selected_checksum: u64,
    /// Exact truncated J of the selected parameters, when a tabular model exists.
    pub oracle_j: Option<R>,
    pub oracle_j_old: Option<R>,
    pub wall_ms: Option<f64>,
}

impl<R: Real> RoundRecord<R> {
    pub fn j_hat(&self, tag: Tag) -> Option<R> {
        match tag {
            Tag::Old => self.j_hat_old,
            Tag::New => self.j_hat_new,
            Tag::Mix => self.j_hat_mix,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProfiledRun<R> {
    pub records: Vec<RoundRecord<R>>,
    pub final_params: PolicyParams<R>,
    pub trainer: Trainer<R>,
}

/// Stream used by the inner algorithm in round `t`.
pub fn train_seed(run: Seed, round: usize) -> Seed {
    run.path(&[round as u64, 0])
}

fn eval_seed(run: Seed, round: usize) -> Seed {
    run.path(&[round as u64, 1])
}

fn logging_seed(run: Seed, round: usize) -> Seed {
    run.path(&[round as u64, 2])
}

fn lambda_seed(run: Seed, round: usize) -> Seed {
    run.path(&[round as u64, 3])
}

fn draw_lambda<R: Real>(mode: LambdaMode<R>, seed: Seed) -> Result<R> {
    match mode {
        LambdaMode::Fixed(l) => Ok(l),
        LambdaMode::Beta { alpha, beta } => {
            let dist = Beta::new(alpha.as_f64(), beta.as_f64()).map_err(|e| Error::Domain(e.to_string()))?;
            Ok(R::lit(dist.sample(&mut seed.rng())))
        }
    }
}

fn oracle_value<R: Real, E: Environment<R>>(env: &E, params: &PolicyParams<R>) -> Result<Option<R>> {
    let Some(model) = env.tabular_model() else { return Ok(None) };
    if !params.is_finite() {
        return Ok(None);
    }
    let pi = tabular_policy(params, model.n_states)?;
    Ok(Some(truncated_policy_value(model, &pi, env.spec().horizon)?.j))
}

/// Evaluates a candidate in place. Failures other than on the old policy
/// leave the candidate unscored.
fn evaluate<R: Real, E: Environment<R>>(
    cand: &mut Candidate<R>,
    env: &E,
    cfg: &ProfilingConfig<R>,
    seed: Seed,
    delta_per_test: R,
) -> Result<()> {
    if !cand.params.is_finite() {
        return if cand.tag == Tag::Old { Err(Error::Numeric("incumbent parameters are not finite".into())) } else { Ok(()) };
    }
    let outcome = match cfg.eval_mode {
        EvalMode::MonteCarlo => estimate_return(&cand.params, env, cfg.eval_rollouts, seed, delta_per_test)
            .map(|ev| (ev.estimate, ev.trajectories)),
        EvalMode::Oracle => match oracle_value(env, &cand.params) {
            Ok(Some(j)) => Ok((ReturnEstimate::exact(j, return_bound(env.spec())), Vec::new())),
            Ok(None) => Err(Error::Unsupported("oracle evaluation needs a tabular environment".into())),
            Err(e) => Err(e),
        },
    };
    match outcome {
        Ok((est, trajs)) => {
            cand.estimate = Some(est);
            cand.trajectories = trajs;
            Ok(())
        }
        Err(e @ Error::Unsupported(_)) => Err(e),
        Err(e) if cand.tag == Tag::Old => Err(e),
        Err(_) => Ok(()),
    }
}

/// Runs T rounds of propose → build candidates → evaluate → select.
pub fn profiled_train<R: Real, E: Environment<R>>(
    env: &E,
    init: PolicyParams<R>,
    algo: &AlgoConfig<R>,
    cfg: &ProfilingConfig<R>,
    seed: Seed,
) -> Result<ProfiledRun<R>> {
    cfg.validate()?;
    let trainer = Trainer::new(*algo, env, init.family())?;
    profiled_train_with(env, init, trainer, cfg, seed)
}

/// As [`profiled_train`] with a caller-supplied trainer.
pub fn profiled_train_with<R: Real, E: Environment<R>>(
    env: &E,
    init: PolicyParams<R>,
    mut trainer: Trainer<R>,
    cfg: &ProfilingConfig<R>,
    seed: Seed,
) -> Result<ProfiledRun<R>> {
    cfg.validate()?;
    let delta_per_test = cfg.budget()?.delta_per_test;
    let mut current = init;
    let mut cached_old: Option<ReturnEstimate<R>> = None;
    let mut records = Vec::with_capacity(cfg.total_rounds);

    for t in 0..cfg.total_rounds {
        let started = Instant::now();
        let snapshot = (cfg.rollback_scope == RollbackScope::Full).then(|| trainer.clone());
        let proposal = trainer.propose(&current, env, train_seed(seed, t))?;
        let lambda = if cfg.variant.tags().contains(&Tag::Mix) {
            Some(draw_lambda(cfg.lambda_mode, lambda_seed(seed, t))?)
        } else {
            None
        };
        let mut cands = build_candidates(&current, &proposal.params, cfg.variant, lambda.unwrap_or_else(R::zero))?;

        let base = if cfg.variant.gated() { eval_seed(seed, t) } else { logging_seed(seed, t) };
        let use_cache = cfg.cache_old_estimate && cfg.eval_seeds == EvalSeeds::Independent && cfg.variant.gated();
        let mut eval_steps = 0;
        for (k, cand) in cands.iter_mut().enumerate() {
            if cand.tag == Tag::Old && use_cache {
                if let Some(est) = &cached_old {
                    cand.estimate = Some(est.clone());
                    continue;
                }
            }
            let s = match cfg.eval_seeds {
                EvalSeeds::Shared => base.child(0),
                EvalSeeds::Independent => base.child(k as u64 + 1),
            };
            evaluate(cand, env, cfg, s, delta_per_test)?;
            eval_steps += cand.trajectories.iter().map(Trajectory::len).sum::<usize>();
        }

        let chosen = if cfg.variant.gated() {
            select(&cands)?
        } else {
            eval_steps = 0;
            cands.iter().position(|c| c.tag == Tag::New).expect("vanilla proposes new")
        };
        let score = |tag: Tag| cands.iter().find(|c| c.tag == tag).and_then(|c| c.estimate.as_ref()).map(|e| e.j_hat);
        let (j_hat_old, j_hat_new, j_hat_mix) = (score(Tag::Old), score(Tag::New), score(Tag::Mix));
        let selected_tag = cands[chosen].tag;
        let oracle_j_old = oracle_value(env, &current)?;

        if selected_tag == Tag::Old {
            if let Some(saved) = snapshot {
                trainer = saved;
            }
        }
        let winner = cands.swap_remove(chosen);
        if cfg.variant.gated() && cfg.reuse_eval_samples {
            trainer.absorb(winner.trajectories);
        }
        cached_old = winner.estimate.clone();
        current = winner.params;

        records.push(RoundRecord {
            round: t,
            j_hat_old,
            j_hat_new,
            j_hat_mix,
            selected: selected_tag,
            j_hat_selected: cached_old.as_ref().map(|e| e.j_hat),
            lambda,
            train_steps: proposal.env_steps,
            eval_steps,
            env_steps_used: proposal.env_steps + eval_steps,
            selected_checksum: current.checksum(),
            oracle_j: oracle_value(env, &current)?,
            oracle_j_old,
            wall_ms: cfg.record_wall_time.then(|| started.elapsed().as_secs_f64() * 1e3),
        });
    }
    Ok(ProfiledRun { records, final_params: current, trainer })
}
