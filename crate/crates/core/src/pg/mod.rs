//! Inner policy-gradient learners: REINFORCE, REINFORCE with a learned
//! baseline, PPO-clip and a linear DDPG.

mod critic;
mod ddpg;
mod ppo;
mod reinforce;
mod replay;

pub use critic::{CriticFeatures, CriticParams};
pub use ddpg::{ddpg_update, soft_update, DdpgNets, DdpgSettings, ExplorationNoise, NoiseKind};
pub use ppo::{clipped_surrogate_grad, ppo_clip_update, ppo_optimize, ppo_samples, PpoSample, PpoSettings};
pub use reinforce::{policy_gradient_estimate, reinforce_baseline_update, reinforce_update};
pub use replay::{Experience, ReplayBuffer};

use crate::error::{domain, Error, Result};
use crate::mdp::{rollout_limited, Action, ActionSpace, Environment, Trajectory};
use crate::policy::{PolicyFamily, PolicyKind, PolicyParams};
use crate::scalar::Real;
use crate::seed::Seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdpgConfig<R> {
    pub buffer_size: usize,
    pub batch: usize,
    pub tau: R,
    pub noise: NoiseKind<R>,
    pub critic_lr: R,
    /// Transitions collected before the first update.
    pub warmup: usize,
}

impl<R: Real> Default for DdpgConfig<R> {
    fn default() -> Self {
        DdpgConfig {
            buffer_size: 100_000,
            batch: 64,
            tau: R::lit(0.005),
            noise: NoiseKind::Gaussian { sigma: R::lit(0.2) },
            critic_lr: R::lit(0.5),
            warmup: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlgoKind<R> {
    Reinforce,
    ReinforceBaseline { critic_ridge: R },
    PpoClip { clip_ratio: R, epochs: usize, minibatch: usize, critic_ridge: R },
    DdpgLite(DdpgConfig<R>),
}

impl<R: Real> AlgoKind<R> {
    pub fn name(&self) -> &'static str {
        match self {
            AlgoKind::Reinforce => "reinforce",
            AlgoKind::ReinforceBaseline { .. } => "baseline",
            AlgoKind::PpoClip { .. } => "ppo",
            AlgoKind::DdpgLite(_) => "ddpg",
        }
    }

    pub fn ppo_default() -> Self {
        AlgoKind::PpoClip { clip_ratio: R::lit(0.2), epochs: 4, minibatch: 64, critic_ridge: R::lit(1e-3) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgoConfig<R> {
    pub kind: AlgoKind<R>,
    /// Actor step size η.
    pub learning_rate: R,
    /// Environment steps consumed by one call to [`Trainer::propose`].
    pub steps_per_round: usize,
}

impl<R: Real> AlgoConfig<R> {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= R::zero()) {
            return domain("learning rate must be nonnegative");
        }
        if self.steps_per_round == 0 {
            return domain("steps_per_round must be at least 1");
        }
        if let AlgoKind::DdpgLite(c) = self.kind {
            if c.batch == 0 || c.buffer_size == 0 || !(c.tau >= R::zero() && c.tau <= R::one()) {
                return domain("invalid DDPG settings");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct OffPolicyState<R> {
    critic: CriticParams<R>,
    target_critic: CriticParams<R>,
    target_actor: Option<PolicyParams<R>>,
    buffer: ReplayBuffer<R>,
    noise: ExplorationNoise<R>,
    updates: u64,
}

/// Output of one inner-algorithm round.
#[derive(Debug, Clone)]
pub struct Proposal<R> {
    pub params: PolicyParams<R>,
    pub env_steps: usize,
}

/// Inner learner plus its side state (critics, replay buffer, reused data).
/// Cloning a trainer snapshots all of it.
#[derive(Debug, Clone)]
pub struct Trainer<R> {
    cfg: AlgoConfig<R>,
    gamma: R,
    action_limit: Option<(Vec<R>, Vec<R>)>,
    /// Range of any truncated discounted return.
    value_range: (R, R),
    critic: Option<CriticParams<R>>,
    off_policy: Option<OffPolicyState<R>>,
    reused: Vec<Trajectory<R>>,
}

impl<R: Real> Trainer<R> {
    pub fn new<E: Environment<R>>(cfg: AlgoConfig<R>, env: &E, family: &PolicyFamily<R>) -> Result<Self> {
        cfg.validate()?;
        let spec = env.spec();
        let action_limit = match &spec.action_space {
            ActionSpace::Continuous { low, high } => Some((low.clone(), high.clone())),
            ActionSpace::Discrete(_) => None,
        };
        let state_critic = || Some(CriticParams::zeros(CriticFeatures::State(family.features)));
        let mass = spec.discount_mass();
        let mut trainer = Trainer {
            cfg,
            gamma: spec.gamma,
            action_limit,
            value_range: (spec.reward_min.min(R::zero()) * mass, spec.reward_max.max(R::zero()) * mass),
            critic: None,
            off_policy: None,
            reused: Vec::new(),
        };
        match cfg.kind {
            AlgoKind::Reinforce => require_stochastic(family)?,
            AlgoKind::ReinforceBaseline { .. } | AlgoKind::PpoClip { .. } => {
                require_stochastic(family)?;
                trainer.critic = state_critic();
            }
            AlgoKind::DdpgLite(d) => {
                let PolicyKind::Deterministic { action_dim } = family.kind else {
                    return domain("DDPG needs a deterministic actor");
                };
                if trainer.action_limit.is_none() {
                    return domain("DDPG needs a continuous action space");
                }
                let critic = CriticParams::zeros(CriticFeatures::StateAction { state: family.features, action_dim });
                trainer.off_policy = Some(OffPolicyState {
                    target_critic: critic.clone(),
                    critic,
                    target_actor: None,
                    buffer: ReplayBuffer::new(d.buffer_size),
                    noise: ExplorationNoise::new(d.noise, action_dim),
                    updates: 0,
                });
            }
        }
        Ok(trainer)
    }

    pub fn config(&self) -> &AlgoConfig<R> {
        &self.cfg
    }

    pub fn critic(&self) -> Option<&CriticParams<R>> {
        self.critic.as_ref().or(self.off_policy.as_ref().map(|o| &o.critic))
    }

    pub fn buffer_len(&self) -> usize {
        self.off_policy.as_ref().map_or(0, |o| o.buffer.len())
    }

    /// Feeds evaluation trajectories of the currently selected policy back
    /// as training data: the next on-policy update includes them, and
    /// off-policy learners insert their transitions into the replay buffer.
    pub fn absorb(&mut self, trajectories: Vec<Trajectory<R>>) {
        if let Some(off) = self.off_policy.as_mut() {
            for traj in &trajectories {
                for (t, step) in traj.steps.iter().enumerate() {
                    let Some(action) = step.action.as_continuous() else { continue };
                    off.buffer.push(Experience {
                        state: step.state.clone(),
                        action: action.to_vec(),
                        reward: step.reward,
                        next_state: traj.next_state(t).to_vec(),
                        done: traj.is_terminal_step(t),
                    });
                }
            }
        } else {
            self.reused.extend(trajectories);
        }
    }

    /// Runs exactly `steps_per_round` environment steps of the inner
    /// algorithm starting from `params` and returns the candidate θ'.
    pub fn propose<E: Environment<R>>(&mut self, params: &PolicyParams<R>, env: &E, seed: Seed) -> Result<Proposal<R>> {
        match self.cfg.kind {
            AlgoKind::DdpgLite(d) => self.propose_off_policy(params, env, seed, d),
            _ => self.propose_on_policy(params, env, seed),
        }
    }

    fn propose_on_policy<E: Environment<R>>(&mut self, params: &PolicyParams<R>, env: &E, seed: Seed) -> Result<Proposal<R>> {
        let budget = self.cfg.steps_per_round;
        let collect = seed.child(0);
        let mut trajectories = Vec::new();
        let mut used = 0;
        while used < budget {
            let traj = rollout_limited(env, params, collect.child(trajectories.len() as u64), budget - used)?;
            used += traj.len();
            trajectories.push(traj);
        }
        trajectories.append(&mut self.reused);
        let lr = self.cfg.learning_rate;
        let gamma = self.gamma;
        let new = match self.cfg.kind {
            AlgoKind::Reinforce => reinforce_update(params, &trajectories, gamma, lr)?,
            AlgoKind::ReinforceBaseline { critic_ridge } => {
                let critic = self.critic.as_ref().expect("baseline critic");
                let (actor, critic) = reinforce_baseline_update(params, critic, &trajectories, gamma, lr, critic_ridge)?;
                self.critic = Some(critic);
                actor
            }
            AlgoKind::PpoClip { clip_ratio, epochs, minibatch, critic_ridge } => {
                let settings = PpoSettings { clip_ratio, epochs, minibatch, learning_rate: lr };
                let critic = self.critic.as_ref().expect("ppo critic");
                let actor = ppo_clip_update(params, Some(critic), &trajectories, gamma, &settings, seed.child(1))?;
                self.critic = Some(reinforce::refit_critic(critic, &trajectories, gamma, critic_ridge)?);
                actor
            }
            AlgoKind::DdpgLite(_) => unreachable!(),
        };
        Ok(Proposal { params: new, env_steps: used })
    }

    fn propose_off_policy<E: Environment<R>>(
        &mut self,
        params: &PolicyParams<R>,
        env: &E,
        seed: Seed,
        d: DdpgConfig<R>,
    ) -> Result<Proposal<R>> {
        let (low, high) = self.action_limit.clone().expect("continuous actions");
        let settings = DdpgSettings {
            batch: d.batch,
            tau: d.tau,
            actor_lr: self.cfg.learning_rate,
            critic_lr: d.critic_lr,
            gamma: self.gamma,
            action_limit: high.first().copied(),
            value_range: Some(self.value_range),
        };
        let off = self.off_policy.as_mut().expect("off-policy state");
        let horizon = env.spec().horizon;
        let mut nets = DdpgNets {
            actor: params.clone(),
            critic: off.critic.clone(),
            target_actor: off.target_actor.clone().unwrap_or_else(|| params.clone()),
            target_critic: off.target_critic.clone(),
        };
        let mut rng = seed.child(0).rng();
        let mut env = env.clone();
        let mut used = 0;
        let mut episode = 0u64;
        while used < self.cfg.steps_per_round {
            let mut state = env.reset(seed.child(1).child(episode));
            off.noise.reset();
            episode += 1;
            for _ in 0..horizon {
                if used >= self.cfg.steps_per_round {
                    break;
                }
                let mean = nets.actor.mean(&state)?;
                let noise = off.noise.sample(&mut rng);
                let action: Vec<R> = mean
                    .iter()
                    .zip(&noise)
                    .zip(low.iter().zip(&high))
                    .map(|((&m, &n), (&l, &h))| (m + n).max(l).min(h))
                    .collect();
                let tr = env.step(&Action::Continuous(action.clone()))?;
                used += 1;
                off.buffer.push(Experience {
                    state: std::mem::take(&mut state),
                    action,
                    reward: tr.reward,
                    next_state: tr.next_state.clone(),
                    done: tr.done,
                });
                state = tr.next_state;
                if off.buffer.len() >= d.warmup.max(d.batch) {
                    match ddpg_update(&nets, &off.buffer, &settings, seed.child(2).child(off.updates)) {
                        Ok(next) => nets = next,
                        Err(Error::NotReady(_)) => {}
                        Err(e) => return Err(e),
                    }
                    off.updates += 1;
                }
                if tr.done {
                    break;
                }
            }
        }
        off.critic = nets.critic;
        off.target_critic = nets.target_critic;
        off.target_actor = Some(nets.target_actor);
        Ok(Proposal { params: nets.actor, env_steps: used })
    }
}

fn require_stochastic<R: Real>(family: &PolicyFamily<R>) -> Result<()> {
    if family.is_stochastic() {
        Ok(())
    } else {
        domain("on-policy score-function methods need a stochastic policy")
    }
}
