//! MDP abstraction, the built-in environments, rollouts and returns.

mod cartpole;
mod chain;
mod reacher;

pub use cartpole::CartPole;
pub use chain::TabularEnv;
pub use reacher::PointMassReacher;

use crate::error::{domain, Error, Result};
use crate::policy::PolicyParams;
use crate::scalar::Real;
use crate::seed::Seed;

#[derive(Debug, Clone, PartialEq)]
pub enum ActionSpace<R> {
    Discrete(usize),
    /// Box of per-coordinate `[low, high]` bounds.
    Continuous { low: Vec<R>, high: Vec<R> },
}

impl<R: Real> ActionSpace<R> {
    pub fn dim(&self) -> usize {
        match self {
            ActionSpace::Discrete(_) => 1,
            ActionSpace::Continuous { low, .. } => low.len(),
        }
    }

    /// Validates `action`, clipping continuous coordinates when `clip` is set.
    pub fn admit(&self, action: &Action<R>, clip: bool) -> Result<Action<R>> {
        match (self, action) {
            (ActionSpace::Discrete(n), Action::Discrete(a)) => {
                if a < n {
                    Ok(action.clone())
                } else {
                    domain(format!("discrete action {a} outside 0..{n}"))
                }
            }
            (ActionSpace::Continuous { low, high }, Action::Continuous(v)) => {
                if v.len() != low.len() {
                    return domain(format!("action dim {} != {}", v.len(), low.len()));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Numeric("non-finite action".into()));
                }
                let inside = v.iter().zip(low.iter().zip(high)).all(|(&x, (&l, &h))| x >= l && x <= h);
                if inside {
                    Ok(action.clone())
                } else if clip {
                    Ok(Action::Continuous(
                        v.iter().zip(low.iter().zip(high)).map(|(&x, (&l, &h))| x.max(l).min(h)).collect(),
                    ))
                } else {
                    domain("continuous action outside bounds")
                }
            }
            _ => domain("action type does not match action space"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action<R> {
    Discrete(usize),
    Continuous(Vec<R>),
}

impl<R: Real> Action<R> {
    pub fn as_discrete(&self) -> Option<usize> {
        match self {
            Action::Discrete(a) => Some(*a),
            Action::Continuous(_) => None,
        }
    }

    pub fn as_continuous(&self) -> Option<&[R]> {
        match self {
            Action::Continuous(v) => Some(v),
            Action::Discrete(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdpSpec<R> {
    pub state_dim: usize,
    pub action_space: ActionSpace<R>,
    pub gamma: R,
    /// Truncation length H.
    pub horizon: usize,
    pub reward_min: R,
    pub reward_max: R,
}

impl<R: Real> MdpSpec<R> {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= R::zero() && self.gamma < R::one()) {
            return domain(format!("gamma {} outside [0,1)", self.gamma));
        }
        if self.horizon == 0 {
            return domain("horizon must be at least 1");
        }
        if !(self.reward_min <= self.reward_max) {
            return domain("reward_min > reward_max");
        }
        Ok(())
    }

    /// Truncated geometric factor (1 − γ^H)/(1 − γ).
    pub fn discount_mass(&self) -> R {
        discount_mass(self.gamma, self.horizon)
    }

    /// Interval containing every truncated return.
    pub fn return_interval(&self) -> (R, R) {
        let m = self.discount_mass();
        (self.reward_min * m, self.reward_max * m)
    }
}

pub(crate) fn discount_mass<R: Real>(gamma: R, horizon: usize) -> R {
    (R::one() - gamma.powi(horizon as i32)) / (R::one() - gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnvKind {
    ChainMdp,
    CartPole,
    PointMassReacher,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::ChainMdp => "chain",
            EnvKind::CartPole => "cartpole",
            EnvKind::PointMassReacher => "reacher",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition<R> {
    pub next_state: Vec<R>,
    pub reward: R,
    pub done: bool,
}

/// A resettable, steppable MDP.
///
/// Instances are cheap to clone; rollouts clone the prototype so the
/// caller's instance is never mutated.
pub trait Environment<R: Real>: Clone + Send + Sync {
    fn spec(&self) -> &MdpSpec<R>;

    /// Environment label used in logs.
    fn name(&self) -> &str;

    /// Samples the initial state from ρ, deterministically in `seed`.
    fn reset(&mut self, seed: Seed) -> Vec<R>;

    fn step(&mut self, action: &Action<R>) -> Result<Transition<R>>;

    /// Exact model, when the environment is tabular.
    fn tabular_model(&self) -> Option<&crate::oracle::TabularModel<R>> {
        None
    }
}

/// Built-in environments behind one type.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum EnvInstance<R> {
    Chain(TabularEnv<R>),
    CartPole(CartPole<R>),
    Reacher(PointMassReacher<R>),
}

impl<R: Real> EnvInstance<R> {
    pub fn kind(&self) -> EnvKind {
        match self {
            EnvInstance::Chain(_) => EnvKind::ChainMdp,
            EnvInstance::CartPole(_) => EnvKind::CartPole,
            EnvInstance::Reacher(_) => EnvKind::PointMassReacher,
        }
    }
}

impl<R: Real> Environment<R> for EnvInstance<R> {
    fn spec(&self) -> &MdpSpec<R> {
        match self {
            EnvInstance::Chain(e) => e.spec(),
            EnvInstance::CartPole(e) => e.spec(),
            EnvInstance::Reacher(e) => e.spec(),
        }
    }

    fn name(&self) -> &str {
        self.kind().name()
    }

    fn reset(&mut self, seed: Seed) -> Vec<R> {
        match self {
            EnvInstance::Chain(e) => e.reset(seed),
            EnvInstance::CartPole(e) => e.reset(seed),
            EnvInstance::Reacher(e) => e.reset(seed),
        }
    }

    fn step(&mut self, action: &Action<R>) -> Result<Transition<R>> {
        match self {
            EnvInstance::Chain(e) => e.step(action),
            EnvInstance::CartPole(e) => e.step(action),
            EnvInstance::Reacher(e) => e.step(action),
        }
    }

    fn tabular_model(&self) -> Option<&crate::oracle::TabularModel<R>> {
        match self {
            EnvInstance::Chain(e) => e.tabular_model(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajStep<R> {
    pub state: Vec<R>,
    pub action: Action<R>,
    pub reward: R,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<R> {
    pub steps: Vec<TrajStep<R>>,
    /// Observation after the last step.
    pub final_state: Vec<R>,
    /// True when the episode was cut by the horizon or a step budget rather
    /// than reaching a terminal state.
    pub truncated: bool,
}

impl<R: Real> Trajectory<R> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn rewards(&self) -> impl Iterator<Item = R> + '_ {
        self.steps.iter().map(|s| s.reward)
    }

    /// Discounted returns-to-go G_t = Σ_{k≥t} γ^{k−t} r_k.
    pub fn returns_to_go(&self, gamma: R) -> Vec<R> {
        let mut out = vec![R::zero(); self.steps.len()];
        let mut acc = R::zero();
        for (t, step) in self.steps.iter().enumerate().rev() {
            acc = step.reward + gamma * acc;
            out[t] = acc;
        }
        out
    }

    /// Next-state of step `t`.
    pub fn next_state(&self, t: usize) -> &[R] {
        if t + 1 < self.steps.len() {
            &self.steps[t + 1].state
        } else {
            &self.final_state
        }
    }

    /// Whether step `t` ended in a terminal (non-truncated) state.
    pub fn is_terminal_step(&self, t: usize) -> bool {
        t + 1 == self.steps.len() && !self.truncated
    }
}

/// G(τ) = Σ_t γ^t r_t.
pub fn discounted_return<R: Real>(traj: &Trajectory<R>, gamma: R) -> R {
    let mut acc = R::zero();
    for r in traj.rewards().collect::<Vec<_>>().into_iter().rev() {
        acc = r + gamma * acc;
    }
    acc
}

/// Range bound B_H = (r_max − r_min)·(1 − γ^H)/(1 − γ) of any truncated return.
pub fn return_bound<R: Real>(spec: &MdpSpec<R>) -> R {
    (spec.reward_max - spec.reward_min) * spec.discount_mass()
}

/// One episode under `policy`, at most `spec.horizon` steps.
pub fn rollout<R: Real, E: Environment<R>>(env: &E, policy: &PolicyParams<R>, seed: Seed) -> Result<Trajectory<R>> {
    rollout_limited(env, policy, seed, env.spec().horizon)
}

/// Like [`rollout`] but stops after `max_steps` (capped at the horizon).
pub fn rollout_limited<R: Real, E: Environment<R>>(
    env: &E,
    policy: &PolicyParams<R>,
    seed: Seed,
    max_steps: usize,
) -> Result<Trajectory<R>> {
    let mut env = env.clone();
    let limit = max_steps.min(env.spec().horizon);
    let mut rng = seed.child(1).rng();
    let mut state = env.reset(seed.child(0));
    let mut steps = Vec::with_capacity(limit);
    let mut truncated = true;
    while steps.len() < limit {
        let action = policy.act(&state, &mut rng)?;
        let tr = env.step(&action)?;
        steps.push(TrajStep { state, action, reward: tr.reward });
        state = tr.next_state;
        if tr.done {
            truncated = false;
            break;
        }
    }
    Ok(Trajectory { steps, final_state: state, truncated })
}

pub(crate) fn check_reward<R: Real>(spec: &MdpSpec<R>, r: R) -> Result<R> {
    if !r.is_finite() {
        return Err(Error::Numeric("non-finite reward".into()));
    }
    debug_assert!(r >= spec.reward_min && r <= spec.reward_max, "reward {r} outside declared bounds");
    Ok(r)
}
