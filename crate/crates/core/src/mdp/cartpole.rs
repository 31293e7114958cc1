use rand::Rng;

use super::{check_reward, Action, ActionSpace, Environment, MdpSpec, Transition};
use crate::error::{domain, Result};
use crate::scalar::Real;
use crate::seed::Seed;

const GRAVITY: f64 = 9.8;
const MASS_CART: f64 = 1.0;
const MASS_POLE: f64 = 0.1;
const HALF_LENGTH: f64 = 0.5;
const FORCE_MAG: f64 = 10.0;
const DT: f64 = 0.02;
const X_LIMIT: f64 = 2.4;
const INIT_HALF_WIDTH: f64 = 0.05;

/// Classic cart-pole: Euler integration at Δt = 0.02, +1 reward per step,
/// terminates when |angle| > 12° or |x| > 2.4.
///
/// Observation is `[x, x_dot, theta, theta_dot]`; action 0 pushes left, 1 right.
#[derive(Debug, Clone)]
pub struct CartPole<R> {
    spec: MdpSpec<R>,
    state: [R; 4],
    done: bool,
}

impl<R: Real> CartPole<R> {
    pub fn new(gamma: R, horizon: usize) -> Result<Self> {
        let spec = MdpSpec {
            state_dim: 4,
            action_space: ActionSpace::Discrete(2),
            gamma,
            horizon,
            reward_min: R::zero(),
            reward_max: R::one(),
        };
        spec.validate()?;
        Ok(CartPole { spec, state: [R::zero(); 4], done: false })
    }

    pub fn angle_limit() -> R {
        R::lit(12.0 * 2.0 * std::f64::consts::PI / 360.0)
    }

    /// Overwrites the physical state; used by tests.
    pub fn set_state(&mut self, state: [R; 4]) {
        self.state = state;
        self.done = false;
    }
}

impl<R: Real> Default for CartPole<R> {
    fn default() -> Self {
        Self::new(R::lit(0.99), 200).expect("valid defaults")
    }
}

impl<R: Real> Environment<R> for CartPole<R> {
    fn spec(&self) -> &MdpSpec<R> {
        &self.spec
    }

    fn name(&self) -> &str {
        "cartpole"
    }

    fn reset(&mut self, seed: Seed) -> Vec<R> {
        let mut rng = seed.rng();
        for v in self.state.iter_mut() {
            *v = R::lit(rng.random_range(-INIT_HALF_WIDTH..INIT_HALF_WIDTH));
        }
        self.done = false;
        self.state.to_vec()
    }

    fn step(&mut self, action: &Action<R>) -> Result<Transition<R>> {
        if self.done {
            return domain("cartpole: step after terminal state");
        }
        let push = match action {
            Action::Discrete(0) => -FORCE_MAG,
            Action::Discrete(1) => FORCE_MAG,
            _ => return domain(format!("cartpole: invalid action {action:?}")),
        };
        let [x, x_dot, theta, theta_dot] = self.state;
        let l = |v: f64| R::lit(v);
        let total_mass = l(MASS_CART + MASS_POLE);
        let polemass_length = l(MASS_POLE * HALF_LENGTH);
        let (sin, cos) = (theta.sin(), theta.cos());
        let temp = (l(push) + polemass_length * theta_dot * theta_dot * sin) / total_mass;
        let theta_acc = (l(GRAVITY) * sin - cos * temp)
            / (l(HALF_LENGTH) * (l(4.0 / 3.0) - l(MASS_POLE) * cos * cos / total_mass));
        let x_acc = temp - polemass_length * theta_acc * cos / total_mass;
        let dt = l(DT);
        self.state = [x + dt * x_dot, x_dot + dt * x_acc, theta + dt * theta_dot, theta_dot + dt * theta_acc];
        let [x, _, theta, _] = self.state;
        self.done = x.abs() > l(X_LIMIT) || theta.abs() > Self::angle_limit();
        let reward = check_reward(&self.spec, R::one())?;
        Ok(Transition { next_state: self.state.to_vec(), reward, done: self.done })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_is_deterministic_in_seed() {
        let mut a = CartPole::<f64>::default();
        let mut b = CartPole::<f64>::default();
        let sa = a.reset(Seed(42));
        assert_eq!(sa, b.reset(Seed(42)));
        assert_ne!(sa, a.reset(Seed(43)));
        assert!(sa.iter().all(|v| v.abs() <= INIT_HALF_WIDTH));
    }

    #[test]
    fn terminates_beyond_twelve_degrees() {
        let mut env = CartPole::<f64>::default();
        env.set_state([0.0, 0.0, 0.25, 1.0]);
        let t = env.step(&Action::Discrete(1)).unwrap();
        assert!(t.done);
        assert_eq!(t.reward, 1.0);
        assert!(env.step(&Action::Discrete(0)).is_err());
    }

    #[test]
    fn upright_start_does_not_terminate() {
        let mut env = CartPole::<f64>::default();
        env.set_state([0.0; 4]);
        assert!(!env.step(&Action::Discrete(0)).unwrap().done);
    }
}
