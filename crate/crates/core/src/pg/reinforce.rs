use super::critic::CriticParams;
use crate::error::{domain, Error, Result};
use crate::mdp::Trajectory;
use crate::policy::PolicyParams;
use crate::scalar::{all_finite, Real};

/// Per-trajectory score-function estimate
/// Ĝ = mean_τ Σ_t γ^t ∇log π(a_t|s_t) (G_t − b(s_t)),
/// with `baseline` b ≡ 0 when absent.
pub fn policy_gradient_estimate<R: Real>(
    params: &PolicyParams<R>,
    trajectories: &[Trajectory<R>],
    gamma: R,
    baseline: Option<&CriticParams<R>>,
) -> Result<Vec<R>> {
    if trajectories.is_empty() {
        return domain("policy gradient needs at least one trajectory");
    }
    let mut grad = vec![R::zero(); params.theta().len()];
    for traj in trajectories {
        let to_go = traj.returns_to_go(gamma);
        let mut discount = R::one();
        for (step, &g) in traj.steps.iter().zip(&to_go) {
            let adv = match baseline {
                Some(c) => g - c.value(&step.state)?,
                None => g,
            };
            let weight = discount * adv;
            if weight != R::zero() {
                let score = params.grad_log_prob(&step.state, &step.action)?;
                for (acc, s) in grad.iter_mut().zip(score) {
                    *acc += weight * s;
                }
            }
            discount *= gamma;
        }
    }
    let n = R::from_usize(trajectories.len()).unwrap();
    for g in grad.iter_mut() {
        *g /= n;
    }
    if !all_finite(&grad) {
        return Err(Error::Numeric("non-finite policy gradient".into()));
    }
    Ok(grad)
}

pub(crate) fn ascend<R: Real>(params: &PolicyParams<R>, grad: &[R], lr: R) -> Result<PolicyParams<R>> {
    let theta = params.theta().iter().zip(grad).map(|(&t, &g)| t + lr * g).collect();
    params.with_theta(theta)
}

/// θ + η Ĝ with returns-to-go weighting. Pure: `params` is not modified.
pub fn reinforce_update<R: Real>(
    params: &PolicyParams<R>,
    trajectories: &[Trajectory<R>],
    gamma: R,
    learning_rate: R,
) -> Result<PolicyParams<R>> {
    let grad = policy_gradient_estimate(params, trajectories, gamma, None)?;
    ascend(params, &grad, learning_rate)
}

/// Actor step with advantages `G_t − V_w(s_t)` from the incoming critic,
/// followed by a ridge least-squares refit of the critic to the returns-to-go.
pub fn reinforce_baseline_update<R: Real>(
    params: &PolicyParams<R>,
    critic: &CriticParams<R>,
    trajectories: &[Trajectory<R>],
    gamma: R,
    learning_rate: R,
    ridge: R,
) -> Result<(PolicyParams<R>, CriticParams<R>)> {
    let grad = policy_gradient_estimate(params, trajectories, gamma, Some(critic))?;
    let actor = ascend(params, &grad, learning_rate)?;
    let critic = refit_critic(critic, trajectories, gamma, ridge)?;
    Ok((actor, critic))
}

pub(crate) fn refit_critic<R: Real>(
    critic: &CriticParams<R>,
    trajectories: &[Trajectory<R>],
    gamma: R,
    ridge: R,
) -> Result<CriticParams<R>> {
    let mut states: Vec<&[R]> = Vec::new();
    let mut targets = Vec::new();
    for traj in trajectories {
        for (step, g) in traj.steps.iter().zip(traj.returns_to_go(gamma)) {
            states.push(&step.state);
            targets.push(g);
        }
    }
    if states.is_empty() {
        return Ok(critic.clone());
    }
    critic.fit_values(&states, &targets, ridge)
}
