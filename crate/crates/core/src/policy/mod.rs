//! Parameterized policy families, sampling, log-likelihoods and their
//! gradients, and convex parameter mixing.
//!
//! Parameters are stored flat. For a family with `k` outputs (actions or
//! action dimensions) over `d` features, the first `k·d` entries form a
//! row-major weight matrix `W` with output `i = W_i · φ(s)`. Gaussian
//! families with a learned log-std append `action_dim` log-std entries.

mod checkpoint;
mod features;

pub use checkpoint::{decode_params, encode_params, CHECKPOINT_MAGIC};
pub use features::{normalize, FeatureMap};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::mdp::Action;
use crate::scalar::{all_finite, dot, Real};
use crate::seed::Seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogStd<R> {
    /// Log-std is the trailing segment of θ and is mixed/updated with it.
    Learned,
    Fixed(R),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind<R> {
    /// π(a|s) ∝ exp(W_a · φ̄(s)) with φ̄ = φ / max(1, ‖φ‖).
    Softmax { n_actions: usize },
    /// a ~ N(W φ(s), diag(σ²)).
    Gaussian { action_dim: usize, log_std: LogStd<R> },
    /// a = W φ(s).
    Deterministic { action_dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyFamily<R> {
    pub kind: PolicyKind<R>,
    pub features: FeatureMap,
}

impl<R: Real> PolicyFamily<R> {
    pub fn softmax(features: FeatureMap, n_actions: usize) -> Self {
        PolicyFamily { kind: PolicyKind::Softmax { n_actions }, features }
    }

    pub fn gaussian(features: FeatureMap, action_dim: usize, log_std: LogStd<R>) -> Self {
        PolicyFamily { kind: PolicyKind::Gaussian { action_dim, log_std }, features }
    }

    pub fn deterministic(features: FeatureMap, action_dim: usize) -> Self {
        PolicyFamily { kind: PolicyKind::Deterministic { action_dim }, features }
    }

    /// Rows of the weight matrix.
    pub fn outputs(&self) -> usize {
        match self.kind {
            PolicyKind::Softmax { n_actions } => n_actions,
            PolicyKind::Gaussian { action_dim, .. } | PolicyKind::Deterministic { action_dim } => action_dim,
        }
    }

    fn weight_count(&self) -> usize {
        self.outputs() * self.features.output_dim()
    }

    pub fn param_count(&self) -> usize {
        match self.kind {
            PolicyKind::Gaussian { action_dim, log_std: LogStd::Learned } => self.weight_count() + action_dim,
            _ => self.weight_count(),
        }
    }

    pub fn is_stochastic(&self) -> bool {
        !matches!(self.kind, PolicyKind::Deterministic { .. })
    }

    /// φ(s), normalized for the softmax family.
    pub fn phi(&self, state: &[R]) -> Result<Vec<R>> {
        let phi = self.features.features(state)?;
        Ok(match self.kind {
            PolicyKind::Softmax { .. } => normalize(phi),
            _ => phi,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams<R> {
    theta: Vec<R>,
    family: PolicyFamily<R>,
}

impl<R: Real> PolicyParams<R> {
    pub fn new(family: PolicyFamily<R>, theta: Vec<R>) -> Result<Self> {
        if theta.len() != family.param_count() {
            return domain(format!("theta has {} entries, family needs {}", theta.len(), family.param_count()));
        }
        if !all_finite(&theta) {
            return Err(Error::Numeric("non-finite policy parameters".into()));
        }
        Ok(PolicyParams { theta, family })
    }

    pub fn zeros(family: PolicyFamily<R>) -> Self {
        PolicyParams { theta: vec![R::zero(); family.param_count()], family }
    }

    pub fn theta(&self) -> &[R] {
        &self.theta
    }

    pub fn family(&self) -> &PolicyFamily<R> {
        &self.family
    }

    /// Replaces θ, keeping the family. Non-finite entries are allowed here so
    /// that diverged updates can still be represented and scored as failures.
    pub fn with_theta(&self, theta: Vec<R>) -> Result<Self> {
        if theta.len() != self.theta.len() {
            return domain("with_theta: length mismatch");
        }
        Ok(PolicyParams { theta, family: self.family })
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.theta)
    }

    /// FNV-1a over the IEEE-754 bit patterns of θ widened to f64.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for x in &self.theta {
            for b in x.as_f64().to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }

    fn row(&self, i: usize) -> &[R] {
        let d = self.family.features.output_dim();
        &self.theta[i * d..(i + 1) * d]
    }

    /// W φ(s): logits for softmax, the mean otherwise.
    pub fn linear_outputs(&self, state: &[R]) -> Result<(Vec<R>, Vec<R>)> {
        let phi = self.family.phi(state)?;
        let out: Vec<R> = (0..self.family.outputs()).map(|i| dot(self.row(i), &phi)).collect();
        if !all_finite(&out) {
            return Err(Error::Numeric("non-finite policy outputs; parameters diverged".into()));
        }
        Ok((out, phi))
    }

    /// Softmax action probabilities.
    pub fn probabilities(&self, state: &[R]) -> Result<Vec<R>> {
        if !matches!(self.family.kind, PolicyKind::Softmax { .. }) {
            return Err(Error::Unsupported("probabilities on a non-softmax family".into()));
        }
        let (logits, _) = self.linear_outputs(state)?;
        Ok(softmax(&logits))
    }

    /// Mean action W φ(s) for continuous families.
    pub fn mean(&self, state: &[R]) -> Result<Vec<R>> {
        if matches!(self.family.kind, PolicyKind::Softmax { .. }) {
            return Err(Error::Unsupported("mean of a softmax family".into()));
        }
        Ok(self.linear_outputs(state)?.0)
    }

    pub fn log_std(&self) -> Result<Vec<R>> {
        match self.family.kind {
            PolicyKind::Gaussian { action_dim, log_std: LogStd::Learned } => {
                Ok(self.theta[self.theta.len() - action_dim..].to_vec())
            }
            PolicyKind::Gaussian { action_dim, log_std: LogStd::Fixed(v) } => Ok(vec![v; action_dim]),
            _ => Err(Error::Unsupported("log_std of a non-Gaussian family".into())),
        }
    }

    pub fn act<G: Rng + ?Sized>(&self, state: &[R], rng: &mut G) -> Result<Action<R>> {
        match self.family.kind {
            PolicyKind::Softmax { .. } => {
                let probs = self.probabilities(state)?;
                let u = R::lit(rng.random::<f64>());
                let mut acc = R::zero();
                for (a, &p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return Ok(Action::Discrete(a));
                    }
                }
                Ok(Action::Discrete(probs.iter().rposition(|&p| p > R::zero()).unwrap_or(0)))
            }
            PolicyKind::Gaussian { .. } => {
                let mean = self.mean(state)?;
                let log_std = self.log_std()?;
                let a: Vec<R> = mean
                    .iter()
                    .zip(&log_std)
                    .map(|(&m, &ls)| m + ls.exp() * R::lit(rng.sample::<f64, _>(StandardNormal)))
                    .collect();
                if !all_finite(&a) {
                    return Err(Error::Numeric("non-finite Gaussian action".into()));
                }
                Ok(Action::Continuous(a))
            }
            PolicyKind::Deterministic { .. } => Ok(Action::Continuous(self.mean(state)?)),
        }
    }

    /// Samples an action from a fresh stream keyed by `seed`.
    pub fn act_seeded(&self, state: &[R], seed: Seed) -> Result<Action<R>> {
        self.act(state, &mut seed.rng())
    }

    pub fn log_prob(&self, state: &[R], action: &Action<R>) -> Result<R> {
        match self.family.kind {
            PolicyKind::Softmax { n_actions } => {
                let a = discrete_index(action, n_actions)?;
                let (logits, _) = self.linear_outputs(state)?;
                Ok(logits[a] - log_sum_exp(&logits))
            }
            PolicyKind::Gaussian { action_dim, .. } => {
                let a = continuous_values(action, action_dim)?;
                let mean = self.mean(state)?;
                let log_std = self.log_std()?;
                let half_ln_2pi = R::lit(0.5 * (2.0 * std::f64::consts::PI).ln());
                let mut lp = R::zero();
                for i in 0..action_dim {
                    let z = (a[i] - mean[i]) / log_std[i].exp();
                    lp -= R::lit(0.5) * z * z + log_std[i] + half_ln_2pi;
                }
                Ok(lp)
            }
            PolicyKind::Deterministic { .. } => {
                Err(Error::Unsupported("log_prob of a deterministic policy".into()))
            }
        }
    }

    /// ∇_θ log π_θ(a|s).
    pub fn grad_log_prob(&self, state: &[R], action: &Action<R>) -> Result<Vec<R>> {
        let d = self.family.features.output_dim();
        let mut grad = vec![R::zero(); self.theta.len()];
        match self.family.kind {
            PolicyKind::Softmax { n_actions } => {
                let a = discrete_index(action, n_actions)?;
                let (logits, phi) = self.linear_outputs(state)?;
                let probs = softmax(&logits);
                for b in 0..n_actions {
                    let coef = if b == a { R::one() - probs[b] } else { -probs[b] };
                    for j in 0..d {
                        grad[b * d + j] = coef * phi[j];
                    }
                }
            }
            PolicyKind::Gaussian { action_dim, log_std } => {
                let a = continuous_values(action, action_dim)?;
                let (mean, phi) = self.linear_outputs(state)?;
                let ls = self.log_std()?;
                for i in 0..action_dim {
                    let var = (ls[i] + ls[i]).exp();
                    let diff = a[i] - mean[i];
                    for j in 0..d {
                        grad[i * d + j] = diff / var * phi[j];
                    }
                    if log_std == LogStd::Learned {
                        grad[action_dim * d + i] = diff * diff / var - R::one();
                    }
                }
            }
            PolicyKind::Deterministic { .. } => {
                return Err(Error::Unsupported("grad_log_prob of a deterministic policy".into()))
            }
        }
        if !all_finite(&grad) {
            return Err(Error::Numeric("non-finite score function".into()));
        }
        Ok(grad)
    }

    /// Vector-Jacobian product `(∂μ(s)/∂θ)ᵀ g` for the mean map.
    pub fn mean_vjp(&self, state: &[R], g: &[R]) -> Result<Vec<R>> {
        let k = self.family.outputs();
        if matches!(self.family.kind, PolicyKind::Softmax { .. }) || g.len() != k {
            return domain("mean_vjp: needs a continuous family and an action-sized cotangent");
        }
        let phi = self.family.phi(state)?;
        let d = phi.len();
        let mut out = vec![R::zero(); self.theta.len()];
        for i in 0..k {
            for j in 0..d {
                out[i * d + j] = g[i] * phi[j];
            }
        }
        Ok(out)
    }
}

/// θ_mix = λ θ_new + (1 − λ) θ_old.
pub fn mix_params<R: Real>(old: &PolicyParams<R>, new: &PolicyParams<R>, lambda: R) -> Result<PolicyParams<R>> {
    if old.family != new.family {
        return domain("mix_params: policy families differ");
    }
    if !(lambda >= R::zero() && lambda <= R::one()) {
        return domain(format!("mix_params: lambda {lambda} outside [0,1]"));
    }
    let theta = if lambda == R::zero() {
        old.theta.clone()
    } else if lambda == R::one() {
        new.theta.clone()
    } else {
        old.theta.iter().zip(&new.theta).map(|(&o, &n)| lambda * n + (R::one() - lambda) * o).collect()
    };
    Ok(PolicyParams { theta, family: old.family })
}

pub(crate) fn softmax<R: Real>(logits: &[R]) -> Vec<R> {
    let max = logits.iter().copied().fold(R::neg_infinity(), R::max);
    let exps: Vec<R> = logits.iter().map(|&l| (l - max).exp()).collect();
    let z: R = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / z).collect()
}

fn log_sum_exp<R: Real>(logits: &[R]) -> R {
    let max = logits.iter().copied().fold(R::neg_infinity(), R::max);
    max + logits.iter().map(|&l| (l - max).exp()).sum::<R>().ln()
}

fn discrete_index<R: Real>(action: &Action<R>, n: usize) -> Result<usize> {
    match action {
        Action::Discrete(a) if *a < n => Ok(*a),
        _ => domain(format!("expected a discrete action in 0..{n}, got {action:?}")),
    }
}

fn continuous_values<R: Real>(action: &Action<R>, dim: usize) -> Result<&[R]> {
    match action {
        Action::Continuous(v) if v.len() == dim => Ok(v),
        _ => domain(format!("expected a {dim}-dim continuous action, got {action:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bandit() -> PolicyFamily<f64> {
        PolicyFamily::softmax(FeatureMap::OneHot { n_states: 1 }, 2)
    }

    #[test]
    fn zero_softmax_is_uniform() {
        let p = PolicyParams::zeros(bandit());
        assert_eq!(p.probabilities(&[0.0]).unwrap(), vec![0.5, 0.5]);
        for a in 0..2 {
            assert!((p.log_prob(&[0.0], &Action::Discrete(a)).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn bandit_score_at_zero() {
        let p = PolicyParams::zeros(bandit());
        let g = p.grad_log_prob(&[0.0], &Action::Discrete(0)).unwrap();
        assert_eq!(g, vec![0.5, -0.5]);
    }

    #[test]
    fn deterministic_identity_map() {
        let fam = PolicyFamily::deterministic(FeatureMap::Identity { dim: 2 }, 2);
        let p = PolicyParams::new(fam, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let a = p.act_seeded(&[0.3, -0.7], Seed(1)).unwrap();
        assert_eq!(a, Action::Continuous(vec![0.3, -0.7]));
        assert!(matches!(p.log_prob(&[0.3, -0.7], &a), Err(Error::Unsupported(_))));
        assert!(matches!(p.grad_log_prob(&[0.3, -0.7], &a), Err(Error::Unsupported(_))));
    }

    #[test]
    fn gaussian_standard_normal_density() {
        let fam = PolicyFamily::gaussian(FeatureMap::Identity { dim: 1 }, 2, LogStd::Learned);
        let p = PolicyParams::zeros(fam);
        let lp = p.log_prob(&[1.0], &Action::Continuous(vec![0.0, 0.0])).unwrap();
        let expect = -(2.0 * std::f64::consts::PI).ln();
        assert!((lp - expect).abs() < 1e-14);
        let a1 = p.act_seeded(&[1.0], Seed(9)).unwrap();
        assert_eq!(a1, p.act_seeded(&[1.0], Seed(9)).unwrap());
    }

    #[test]
    fn mixing_boundaries_and_midpoint() {
        let fam = PolicyFamily::softmax(FeatureMap::OneHot { n_states: 1 }, 2);
        let old = PolicyParams::new(fam, vec![0.0, 2.0]).unwrap();
        let new = PolicyParams::new(fam, vec![2.0, 0.0]).unwrap();
        assert_eq!(mix_params(&old, &new, 0.0).unwrap(), old);
        assert_eq!(mix_params(&old, &new, 1.0).unwrap(), new);
        assert_eq!(mix_params(&old, &new, 0.5).unwrap().theta(), &[1.0, 1.0]);
        assert!(mix_params(&old, &new, 1.5).is_err());
        assert!(mix_params(&old, &new, -0.1).is_err());
        let other = PolicyParams::zeros(PolicyFamily::softmax(FeatureMap::OneHot { n_states: 2 }, 1));
        assert!(mix_params(&old, &other, 0.5).is_err());
    }

    #[test]
    fn diverged_parameters_are_numeric_errors() {
        let fam = bandit();
        let p = PolicyParams::zeros(fam).with_theta(vec![f64::NAN, 0.0]).unwrap();
        assert!(matches!(p.act_seeded(&[0.0], Seed(0)), Err(Error::Numeric(_))));
        assert!(PolicyParams::new(fam, vec![f64::INFINITY, 0.0]).is_err());
        assert!(PolicyParams::new(fam, vec![0.0]).is_err());
    }

    #[test]
    fn works_in_f32() {
        let fam = PolicyFamily::<f32>::softmax(FeatureMap::OneHot { n_states: 1 }, 2);
        let p = PolicyParams::zeros(fam);
        let g = p.grad_log_prob(&[0.0f32], &Action::Discrete(1)).unwrap();
        assert_eq!(g, vec![-0.5f32, 0.5]);
    }
}
