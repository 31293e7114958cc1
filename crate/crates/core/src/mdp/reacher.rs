use rand::Rng;

use super::{check_reward, Action, ActionSpace, Environment, MdpSpec, Transition};
use crate::error::Result;
use crate::scalar::Real;
use crate::seed::Seed;

const DT: f64 = 0.1;
const INIT_BOX: f64 = 1.0;
const TARGET: [f64; 2] = [0.5, -0.5];

/// 2-D double integrator driven by accelerations in `[-1, 1]²`.
///
/// Observation is `[px − tx, py − ty, vx, vy]`; reward is the negated
/// distance to the target, clipped to `[-2, 0]`. Initial positions are
/// uniform in `[-1, 1]²` with zero velocity. Episodes end only by truncation.
#[derive(Debug, Clone)]
pub struct PointMassReacher<R> {
    spec: MdpSpec<R>,
    pos: [R; 2],
    vel: [R; 2],
    clip_actions: bool,
}

impl<R: Real> PointMassReacher<R> {
    pub fn new(gamma: R, horizon: usize, clip_actions: bool) -> Result<Self> {
        let spec = MdpSpec {
            state_dim: 4,
            action_space: ActionSpace::Continuous { low: vec![-R::one(); 2], high: vec![R::one(); 2] },
            gamma,
            horizon,
            reward_min: R::lit(-2.0),
            reward_max: R::zero(),
        };
        spec.validate()?;
        Ok(PointMassReacher { spec, pos: [R::zero(); 2], vel: [R::zero(); 2], clip_actions })
    }

    pub fn target() -> [R; 2] {
        [R::lit(TARGET[0]), R::lit(TARGET[1])]
    }

    pub fn init_box() -> R {
        R::lit(INIT_BOX)
    }

    pub fn clips_actions(&self) -> bool {
        self.clip_actions
    }

    fn observe(&self) -> Vec<R> {
        let t = Self::target();
        vec![self.pos[0] - t[0], self.pos[1] - t[1], self.vel[0], self.vel[1]]
    }
}

impl<R: Real> Default for PointMassReacher<R> {
    fn default() -> Self {
        Self::new(R::lit(0.99), 100, false).expect("valid defaults")
    }
}

impl<R: Real> Environment<R> for PointMassReacher<R> {
    fn spec(&self) -> &MdpSpec<R> {
        &self.spec
    }

    fn name(&self) -> &str {
        "reacher"
    }

    fn reset(&mut self, seed: Seed) -> Vec<R> {
        let mut rng = seed.rng();
        for p in self.pos.iter_mut() {
            *p = R::lit(rng.random_range(-INIT_BOX..INIT_BOX));
        }
        self.vel = [R::zero(); 2];
        self.observe()
    }

    fn step(&mut self, action: &Action<R>) -> Result<Transition<R>> {
        let admitted = self.spec.action_space.admit(action, self.clip_actions)?;
        let acc = admitted.as_continuous().expect("continuous space");
        let dt = R::lit(DT);
        for i in 0..2 {
            self.vel[i] += dt * acc[i];
            self.pos[i] += dt * self.vel[i];
        }
        let obs = self.observe();
        let dist = (obs[0] * obs[0] + obs[1] * obs[1]).sqrt();
        let reward = check_reward(&self.spec, (-dist).max(R::lit(-2.0)))?;
        Ok(Transition { next_state: obs, reward, done: false })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn reset_inside_init_box() {
        let mut env = PointMassReacher::<f64>::default();
        for k in 0..50 {
            let s = env.reset(Seed(k));
            let t = PointMassReacher::<f64>::target();
            assert!((s[0] + t[0]).abs() <= INIT_BOX && (s[1] + t[1]).abs() <= INIT_BOX);
            assert_eq!(&s[2..], &[0.0, 0.0]);
        }
    }

    #[test]
    fn out_of_bounds_rejected_unless_clipping() {
        let mut env = PointMassReacher::<f64>::default();
        env.reset(Seed(0));
        let big = Action::Continuous(vec![1.5, 0.0]);
        assert!(matches!(env.step(&big), Err(Error::Domain(_))));
        let mut clipped = PointMassReacher::<f64>::new(0.99, 100, true).unwrap();
        clipped.reset(Seed(0));
        let t = clipped.step(&big).unwrap();
        assert!(t.reward <= 0.0 && t.reward >= -2.0);
        assert!((t.next_state[2] - 0.1).abs() < 1e-12);
    }
}
