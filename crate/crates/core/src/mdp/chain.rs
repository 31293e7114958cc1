use rand::Rng;

use super::{check_reward, Action, ActionSpace, Environment, MdpSpec, Transition};
use crate::error::{domain, Result};
use crate::oracle::TabularModel;
use crate::scalar::Real;
use crate::seed::{Seed, StreamRng};

/// Environment driven by an explicit [`TabularModel`].
///
/// Observations are one-element vectors holding the state index.
#[derive(Debug, Clone)]
pub struct TabularEnv<R> {
    model: TabularModel<R>,
    spec: MdpSpec<R>,
    state: usize,
    rng: StreamRng,
}

impl<R: Real> TabularEnv<R> {
    pub fn new(model: TabularModel<R>, horizon: usize) -> Result<Self> {
        model.validate()?;
        let spec = MdpSpec {
            state_dim: 1,
            action_space: ActionSpace::Discrete(model.n_actions),
            gamma: model.gamma,
            horizon,
            reward_min: model.reward_min,
            reward_max: model.reward_max,
        };
        spec.validate()?;
        Ok(TabularEnv { model, spec, state: 0, rng: Seed(0).rng() })
    }

    /// Default chain: 3 states, actions {left, right}, deterministic moves,
    /// reward 1 only for "right" in the last state (a self-loop), γ = 0.9.
    pub fn chain(horizon: usize) -> Self {
        Self::new(TabularModel::chain(3, R::lit(0.9)), horizon).expect("default chain is valid")
    }

    pub fn model(&self) -> &TabularModel<R> {
        &self.model
    }

    pub fn state_index(&self) -> usize {
        self.state
    }

    fn sample_index(&mut self, probs: &[R]) -> usize {
        let u = R::lit(self.rng.random::<f64>());
        let mut acc = R::zero();
        for (i, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // Rounding slack: fall back to the last state with positive mass.
        probs.iter().rposition(|&p| p > R::zero()).unwrap_or(0)
    }
}

impl<R: Real> Environment<R> for TabularEnv<R> {
    fn spec(&self) -> &MdpSpec<R> {
        &self.spec
    }

    fn name(&self) -> &str {
        "chain"
    }

    fn reset(&mut self, seed: Seed) -> Vec<R> {
        self.rng = seed.rng();
        let rho = self.model.rho.clone();
        self.state = self.sample_index(&rho);
        vec![R::from_usize(self.state).unwrap()]
    }

    fn step(&mut self, action: &Action<R>) -> Result<Transition<R>> {
        let a = match action {
            Action::Discrete(a) if *a < self.model.n_actions => *a,
            _ => return domain(format!("invalid tabular action {action:?}")),
        };
        let reward = check_reward(&self.spec, self.model.reward[self.state][a])?;
        let row = self.model.transition[self.state][a].clone();
        self.state = self.sample_index(&row);
        Ok(Transition { next_state: vec![R::from_usize(self.state).unwrap()], reward, done: false })
    }

    fn tabular_model(&self) -> Option<&TabularModel<R>> {
        Some(&self.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_is_point_mass_at_zero() {
        let mut env = TabularEnv::<f64>::chain(10);
        for k in 0..5 {
            assert_eq!(env.reset(Seed(k)), vec![0.0]);
        }
    }

    #[test]
    fn right_moves_and_pays_only_in_last_state() {
        let mut env = TabularEnv::<f64>::chain(10);
        env.reset(Seed(1));
        let t = env.step(&Action::Discrete(1)).unwrap();
        assert_eq!(t.next_state, vec![1.0]);
        assert_eq!(t.reward, 0.0);
        env.step(&Action::Discrete(1)).unwrap();
        let t = env.step(&Action::Discrete(1)).unwrap();
        assert_eq!((t.next_state[0], t.reward), (2.0, 1.0));
        let t = env.step(&Action::Discrete(0)).unwrap();
        assert_eq!((t.next_state[0], t.reward), (1.0, 0.0));
    }

    #[test]
    fn rejects_bad_action() {
        let mut env = TabularEnv::<f64>::chain(10);
        env.reset(Seed(1));
        assert!(env.step(&Action::Discrete(2)).is_err());
        assert!(env.step(&Action::Continuous(vec![0.0])).is_err());
    }
}
