//! Monte Carlo return estimates and Hoeffding evaluation budgets.

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::mdp::{discounted_return, return_bound, rollout, Environment, Trajectory};
use crate::policy::PolicyParams;
use crate::scalar::{mean_var, Real};
use crate::seed::Seed;

/// Rollout counts at or above this are evaluated on the rayon pool.
const PARALLEL_THRESHOLD: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnEstimate<R> {
    /// Ĵ: mean discounted return over the rollouts.
    pub j_hat: R,
    pub n_rollouts: usize,
    pub sample_variance: R,
    /// Hoeffding half-width at the per-test confidence used for the estimate.
    pub half_width: R,
    /// Return range B the half-width was computed with.
    pub return_range: R,
    /// 95% normal-approximation half-width; diagnostics only.
    pub clt_half_width: R,
}

impl<R: Real> ReturnEstimate<R> {
    /// Builds an estimate from raw returns.
    pub fn from_returns(returns: &[R], return_range: R, delta_per_test: R) -> Result<Self> {
        if returns.is_empty() {
            return domain("estimate needs at least one return");
        }
        let (j_hat, sample_variance) = mean_var(returns);
        let n = R::from_usize(returns.len()).unwrap();
        Ok(ReturnEstimate {
            j_hat,
            n_rollouts: returns.len(),
            sample_variance,
            half_width: hoeffding_half_width(return_range, returns.len(), delta_per_test)?,
            return_range,
            clt_half_width: R::lit(1.959_963_984_540_054) * (sample_variance / n).sqrt(),
        })
    }

    /// An exactly known value, e.g. from an oracle.
    pub fn exact(j: R, return_range: R) -> Self {
        ReturnEstimate {
            j_hat: j,
            n_rollouts: 1,
            sample_variance: R::zero(),
            half_width: R::zero(),
            return_range,
            clt_half_width: R::zero(),
        }
    }
}

/// Estimate plus the trajectories it was computed from.
#[derive(Debug, Clone)]
pub struct Evaluation<R> {
    pub estimate: ReturnEstimate<R>,
    pub trajectories: Vec<Trajectory<R>>,
}

impl<R: Real> Evaluation<R> {
    pub fn env_steps(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }
}

/// Ĵ(π) = (1/E) Σ_i G(τ_i) over `e` rollouts; rollout `i` uses `seed.child(i)`.
pub fn estimate_return<R: Real, E: Environment<R>>(
    policy: &PolicyParams<R>,
    env: &E,
    e: usize,
    seed: Seed,
    delta_per_test: R,
) -> Result<Evaluation<R>> {
    if e == 0 {
        return domain("estimate_return needs E >= 1");
    }
    let run = |i: usize| rollout(env, policy, seed.child(i as u64));
    let trajectories: Vec<Trajectory<R>> = if e >= PARALLEL_THRESHOLD {
        (0..e).into_par_iter().map(run).collect::<Result<_>>()?
    } else {
        (0..e).map(run).collect::<Result<_>>()?
    };
    let gamma = env.spec().gamma;
    let returns: Vec<R> = trajectories.iter().map(|t| discounted_return(t, gamma)).collect();
    let estimate = ReturnEstimate::from_returns(&returns, return_bound(env.spec()), delta_per_test)?;
    Ok(Evaluation { estimate, trajectories })
}

fn check_positive<R: Real>(name: &str, v: R) -> Result<()> {
    if v > R::zero() && v.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be positive and finite, got {v}"))
    }
}

fn check_delta<R: Real>(delta: R) -> Result<()> {
    if delta > R::zero() && delta < R::one() {
        Ok(())
    } else {
        domain(format!("delta must lie in (0,1), got {delta}"))
    }
}

/// E = max(1, ⌈B²/(2ε²) · ln(2T/δ)⌉).
pub fn required_rollouts<R: Real>(range: R, epsilon: R, delta: R, total_updates: usize) -> Result<usize> {
    check_positive("B", range)?;
    check_positive("epsilon", epsilon)?;
    check_delta(delta)?;
    if total_updates == 0 {
        return domain("T must be at least 1");
    }
    let t = R::from_usize(total_updates).unwrap();
    let raw = range * range / (R::lit(2.0) * epsilon * epsilon) * (R::lit(2.0) * t / delta).ln();
    let e = raw.ceil();
    Ok(if e < R::one() { 1 } else { e.to_usize().unwrap_or(usize::MAX) })
}

/// P(|Ĵ − J| ≥ ε) ≤ 2·exp(−2Eε²/B²), capped at 1. ε = 0 gives the vacuous bound 1.
pub fn hoeffding_failure_prob<R: Real>(range: R, epsilon: R, e: usize) -> Result<R> {
    check_positive("B", range)?;
    if !(epsilon >= R::zero()) {
        return domain(format!("epsilon must be nonnegative, got {epsilon}"));
    }
    if e == 0 {
        return domain("E must be at least 1");
    }
    let n = R::from_usize(e).unwrap();
    let p = R::lit(2.0) * (-(R::lit(2.0) * n * epsilon * epsilon) / (range * range)).exp();
    Ok(p.min(R::one()))
}

/// ε such that 2·exp(−2Eε²/B²) = δ.
pub fn hoeffding_half_width<R: Real>(range: R, e: usize, delta: R) -> Result<R> {
    if !(range >= R::zero()) {
        return domain("return range must be nonnegative");
    }
    check_delta(delta)?;
    if e == 0 {
        return domain("E must be at least 1");
    }
    let n = R::from_usize(e).unwrap();
    Ok(range * ((R::lit(2.0) / delta).ln() / (R::lit(2.0) * n)).sqrt())
}

/// (Ĵ − half_width, Ĵ + half_width).
pub fn confidence_interval<R: Real>(est: &ReturnEstimate<R>) -> (R, R) {
    (est.j_hat - est.half_width, est.j_hat + est.half_width)
}

/// Evaluation budget for a run of `total_updates` profiling rounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalBudget<R> {
    pub epsilon: R,
    pub delta: R,
    pub total_updates: usize,
    pub rollouts: usize,
    /// Failure probability allotted to each individual estimate.
    pub delta_per_test: R,
}

impl<R: Real> EvalBudget<R> {
    /// Sizes E from the concentration bound. Each of the `T` rounds gets δ/T;
    /// with more than two candidates per round the share is further split
    /// to δ/(kT).
    pub fn from_bound(range: R, epsilon: R, delta: R, total_updates: usize, candidates: usize) -> Result<Self> {
        let split = if candidates > 2 { R::from_usize(candidates).unwrap() } else { R::one() };
        let rollouts = required_rollouts(range, epsilon, delta / split, total_updates)?;
        Ok(EvalBudget {
            epsilon,
            delta,
            total_updates,
            rollouts,
            delta_per_test: Self::per_test(delta, total_updates, candidates),
        })
    }

    /// Budget with a manually chosen E (the theoretical bound is usually far
    /// more conservative than needed in practice).
    pub fn manual(rollouts: usize, epsilon: R, delta: R, total_updates: usize, candidates: usize) -> Result<Self> {
        if rollouts == 0 {
            return domain("E must be at least 1");
        }
        check_delta(delta)?;
        Ok(EvalBudget {
            epsilon,
            delta,
            total_updates,
            rollouts,
            delta_per_test: Self::per_test(delta, total_updates.max(1), candidates),
        })
    }

    fn per_test(delta: R, total_updates: usize, candidates: usize) -> R {
        let t = R::from_usize(total_updates.max(1)).unwrap();
        if candidates > 2 {
            delta / (R::from_usize(candidates).unwrap() * t)
        } else {
            delta / t
        }
    }
}
