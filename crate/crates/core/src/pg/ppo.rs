use rand::seq::SliceRandom;

use super::critic::CriticParams;
use super::reinforce::ascend;
use crate::error::{domain, Error, Result};
use crate::mdp::{Action, Trajectory};
use crate::policy::PolicyParams;
use crate::scalar::{all_finite, Real};
use crate::seed::Seed;

#[derive(Debug, Clone, PartialEq)]
pub struct PpoSample<R> {
    pub state: Vec<R>,
    pub action: Action<R>,
    pub advantage: R,
    /// log π_old(a|s) of the behaviour policy.
    pub old_log_prob: R,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpoSettings<R> {
    pub clip_ratio: R,
    pub epochs: usize,
    pub minibatch: usize,
    pub learning_rate: R,
}

/// Flattens on-policy trajectories into surrogate samples. Advantages are
/// `γ^t (G_t − V(s_t))`, so at θ = θ_old the surrogate gradient points along
/// the baseline score-function estimate.
pub fn ppo_samples<R: Real>(
    params: &PolicyParams<R>,
    critic: Option<&CriticParams<R>>,
    trajectories: &[Trajectory<R>],
    gamma: R,
) -> Result<Vec<PpoSample<R>>> {
    let mut out = Vec::new();
    for traj in trajectories {
        let mut discount = R::one();
        for (step, g) in traj.steps.iter().zip(traj.returns_to_go(gamma)) {
            let baseline = match critic {
                Some(c) => c.value(&step.state)?,
                None => R::zero(),
            };
            out.push(PpoSample {
                state: step.state.clone(),
                action: step.action.clone(),
                advantage: discount * (g - baseline),
                old_log_prob: params.log_prob(&step.state, &step.action)?,
            });
            discount *= gamma;
        }
    }
    Ok(out)
}

/// Gradient of mean_i min(r_i Â_i, clip(r_i, 1−c, 1+c) Â_i). Samples whose
/// clipped branch is active contribute zero.
pub fn clipped_surrogate_grad<R: Real>(params: &PolicyParams<R>, samples: &[&PpoSample<R>], clip: R) -> Result<Vec<R>> {
    let mut grad = vec![R::zero(); params.theta().len()];
    if samples.is_empty() {
        return Ok(grad);
    }
    for s in samples {
        if s.advantage == R::zero() {
            continue;
        }
        let ratio = (params.log_prob(&s.state, &s.action)? - s.old_log_prob).exp();
        if !ratio.is_finite() {
            return Err(Error::Numeric("non-finite PPO probability ratio".into()));
        }
        let saturated = (s.advantage > R::zero() && ratio > R::one() + clip)
            || (s.advantage < R::zero() && ratio < R::one() - clip);
        if saturated {
            continue;
        }
        let score = params.grad_log_prob(&s.state, &s.action)?;
        let w = ratio * s.advantage;
        for (g, x) in grad.iter_mut().zip(score) {
            *g += w * x;
        }
    }
    let n = R::from_usize(samples.len()).unwrap();
    for g in grad.iter_mut() {
        *g /= n;
    }
    if !all_finite(&grad) {
        return Err(Error::Numeric("non-finite PPO gradient".into()));
    }
    Ok(grad)
}

/// `epochs` passes of shuffled minibatch ascent on the clipped surrogate.
pub fn ppo_clip_update<R: Real>(
    params: &PolicyParams<R>,
    critic: Option<&CriticParams<R>>,
    trajectories: &[Trajectory<R>],
    gamma: R,
    settings: &PpoSettings<R>,
    seed: Seed,
) -> Result<PolicyParams<R>> {
    if trajectories.is_empty() {
        return domain("ppo_clip_update needs at least one trajectory");
    }
    let samples = ppo_samples(params, critic, trajectories, gamma)?;
    ppo_optimize(params, &samples, settings, seed)
}

pub fn ppo_optimize<R: Real>(
    params: &PolicyParams<R>,
    samples: &[PpoSample<R>],
    settings: &PpoSettings<R>,
    seed: Seed,
) -> Result<PolicyParams<R>> {
    if settings.minibatch == 0 {
        return domain("PPO minibatch must be positive");
    }
    let mut rng = seed.rng();
    let mut current = params.clone();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for _ in 0..settings.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(settings.minibatch) {
            let batch: Vec<&PpoSample<R>> = chunk.iter().map(|&i| &samples[i]).collect();
            let grad = clipped_surrogate_grad(&current, &batch, settings.clip_ratio)?;
            current = ascend(&current, &grad, settings.learning_rate)?;
        }
    }
    Ok(current)
}
