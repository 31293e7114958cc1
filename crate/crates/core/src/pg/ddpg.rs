use rand::Rng;
use rand_distr::StandardNormal;

use super::critic::CriticParams;
use super::replay::ReplayBuffer;
use super::reinforce::ascend;
use crate::error::{domain, Error, Result};
use crate::policy::PolicyParams;
use crate::scalar::{all_finite, dot, Real};
use crate::seed::Seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind<R> {
    Gaussian { sigma: R },
    /// dx = −θ x dt + σ dW with dt = 1.
    OrnsteinUhlenbeck { sigma: R, theta: R },
}

/// Exploration noise process.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationNoise<R> {
    kind: NoiseKind<R>,
    state: Vec<R>,
}

impl<R: Real> ExplorationNoise<R> {
    pub fn new(kind: NoiseKind<R>, dim: usize) -> Self {
        ExplorationNoise { kind, state: vec![R::zero(); dim] }
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|x| *x = R::zero());
    }

    pub fn sample<G: Rng + ?Sized>(&mut self, rng: &mut G) -> Vec<R> {
        match self.kind {
            NoiseKind::Gaussian { sigma } => {
                self.state.iter().map(|_| sigma * R::lit(rng.sample::<f64, _>(StandardNormal))).collect()
            }
            NoiseKind::OrnsteinUhlenbeck { sigma, theta } => {
                for x in self.state.iter_mut() {
                    *x = *x - theta * *x + sigma * R::lit(rng.sample::<f64, _>(StandardNormal));
                }
                self.state.clone()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdpgSettings<R> {
    pub batch: usize,
    pub tau: R,
    pub actor_lr: R,
    pub critic_lr: R,
    pub gamma: R,
    /// Symmetric action bound; actor gradients pushing a saturated mean
    /// further outside are dropped.
    pub action_limit: Option<R>,
    /// Interval every Q value lies in; TD targets are clamped to it.
    pub value_range: Option<(R, R)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdpgNets<R> {
    pub actor: PolicyParams<R>,
    pub critic: CriticParams<R>,
    pub target_actor: PolicyParams<R>,
    pub target_critic: CriticParams<R>,
}

/// τ·online + (1 − τ)·target.
pub fn soft_update<R: Real>(online: &[R], target: &[R], tau: R) -> Result<Vec<R>> {
    if online.len() != target.len() {
        return domain(format!("soft_update: lengths {} and {} differ", online.len(), target.len()));
    }
    if !(tau >= R::zero() && tau <= R::one()) {
        return domain(format!("soft_update: tau {tau} outside [0,1]"));
    }
    Ok(online.iter().zip(target).map(|(&o, &t)| tau * o + (R::one() - tau) * t).collect())
}

/// One DDPG step on a sampled minibatch: a normalized (NLMS) semi-gradient
/// step of the critic toward r + γ Q'(s', μ'(s')) (clamped to the value
/// range when one is given), deterministic policy
/// gradient ascent for the actor, then soft target updates.
pub fn ddpg_update<R: Real>(
    nets: &DdpgNets<R>,
    buffer: &ReplayBuffer<R>,
    settings: &DdpgSettings<R>,
    seed: Seed,
) -> Result<DdpgNets<R>> {
    if buffer.len() < settings.batch || settings.batch == 0 {
        return Err(Error::NotReady(format!("buffer holds {} < batch {}", buffer.len(), settings.batch)));
    }
    let mut rng = seed.rng();
    let batch = buffer.sample(settings.batch, &mut rng);
    let n = R::from_usize(batch.len()).unwrap();

    let mut critic_grad = vec![R::zero(); nets.critic.w.len()];
    for e in &batch {
        let next_a = nets.target_actor.mean(&e.next_state)?;
        let bootstrap = if e.done { R::zero() } else { nets.target_critic.q(&e.next_state, &next_a)? };
        let mut y = e.reward + settings.gamma * bootstrap;
        if let Some((lo, hi)) = settings.value_range {
            y = y.max(lo).min(hi);
        }
        let psi = nets.critic.q_features(&e.state, &e.action)?;
        let err = (y - dot(&nets.critic.w, &psi)) / (R::one() + dot(&psi, &psi));
        for (g, p) in critic_grad.iter_mut().zip(psi) {
            *g += err * p;
        }
    }
    let w: Vec<R> = nets.critic.w.iter().zip(&critic_grad).map(|(&w, &g)| w + settings.critic_lr * g / n).collect();
    if !all_finite(&w) {
        return Err(Error::Numeric("critic diverged".into()));
    }
    let critic = CriticParams { w, features: nets.critic.features };

    let mut actor_grad = vec![R::zero(); nets.actor.theta().len()];
    for e in &batch {
        let mu = nets.actor.mean(&e.state)?;
        let mut dq = critic.dq_da(&e.state, &mu)?;
        if let Some(limit) = settings.action_limit {
            for (g, &m) in dq.iter_mut().zip(&mu) {
                if (m >= limit && *g > R::zero()) || (m <= -limit && *g < R::zero()) {
                    *g = R::zero();
                }
            }
        }
        for (acc, v) in actor_grad.iter_mut().zip(nets.actor.mean_vjp(&e.state, &dq)?) {
            *acc += v;
        }
    }
    actor_grad.iter_mut().for_each(|g| *g /= n);
    let actor = ascend(&nets.actor, &actor_grad, settings.actor_lr)?;
    if !actor.is_finite() {
        return Err(Error::Numeric("actor diverged".into()));
    }

    let target_actor = nets.target_actor.with_theta(soft_update(actor.theta(), nets.target_actor.theta(), settings.tau)?)?;
    let target_critic = CriticParams {
        w: soft_update(&critic.w, &nets.target_critic.w, settings.tau)?,
        features: critic.features,
    };
    Ok(DdpgNets { actor, critic, target_actor, target_critic })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_update_examples() {
        assert_eq!(soft_update(&[1.0], &[0.0], 0.005).unwrap(), vec![0.005]);
        assert_eq!(soft_update(&[1.0, 2.0], &[3.0, 4.0], 0.0).unwrap(), vec![3.0, 4.0]);
        assert_eq!(soft_update(&[1.0, 2.0], &[3.0, 4.0], 1.0).unwrap(), vec![1.0, 2.0]);
        assert!(soft_update(&[1.0], &[1.0, 2.0], 0.5).is_err());
        assert!(soft_update(&[1.0], &[1.0], 1.5).is_err());
    }

    #[test]
    fn ou_noise_is_mean_reverting_and_seeded() {
        let mut a = ExplorationNoise::new(NoiseKind::OrnsteinUhlenbeck { sigma: 0.2, theta: 0.15 }, 2);
        let mut b = a.clone();
        let xs: Vec<Vec<f64>> = (0..5).map(|_| a.sample(&mut Seed(1).rng())).collect();
        let ys: Vec<Vec<f64>> = (0..5).map(|_| b.sample(&mut Seed(1).rng())).collect();
        assert_eq!(xs, ys);
        a.reset();
        assert_eq!(a.state, vec![0.0, 0.0]);
    }
}
