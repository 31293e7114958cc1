//! Ground-truth machinery: exact policy evaluation, value iteration,
//! finite-difference gradients and brute-force return enumeration.

mod model;

pub use model::TabularModel;

use crate::error::{domain, Error, Result};
use crate::linalg::solve;
use crate::policy::PolicyParams;
use crate::scalar::{probability_tolerance, Real};

/// `π[s][a]`: action distribution per state.
pub type TabularPolicy<R> = Vec<Vec<R>>;

/// Path budget for [`enumerate_returns`].
pub const MAX_ENUMERATED_PATHS: usize = 1_000_000;

/// Tabulates a softmax policy over a tabular environment whose observations
/// are `[s]`.
pub fn tabular_policy<R: Real>(params: &PolicyParams<R>, n_states: usize) -> Result<TabularPolicy<R>> {
    (0..n_states).map(|s| params.probabilities(&[R::from_usize(s).unwrap()])).collect()
}

/// Deterministic policy choosing `actions[s]` in state `s`.
pub fn deterministic_policy<R: Real>(actions: &[usize], n_actions: usize) -> TabularPolicy<R> {
    actions
        .iter()
        .map(|&a| (0..n_actions).map(|b| if a == b { R::one() } else { R::zero() }).collect())
        .collect()
}

fn check_policy<R: Real>(model: &TabularModel<R>, policy: &TabularPolicy<R>) -> Result<()> {
    model.validate()?;
    if policy.len() != model.n_states || policy.iter().any(|row| row.len() != model.n_actions) {
        return domain("policy table does not match the model's shape");
    }
    for (s, row) in policy.iter().enumerate() {
        let total: R = row.iter().copied().sum();
        if row.iter().any(|&p| !(p >= R::zero())) || (total - R::one()).abs() > probability_tolerance() {
            return domain(format!("policy row {s} is not a distribution"));
        }
    }
    Ok(())
}

/// `(P_π, r_π)` for a fixed policy.
fn induced_chain<R: Real>(model: &TabularModel<R>, policy: &TabularPolicy<R>) -> (Vec<Vec<R>>, Vec<R>) {
    let n = model.n_states;
    let mut p = vec![vec![R::zero(); n]; n];
    let mut r = vec![R::zero(); n];
    for s in 0..n {
        for a in 0..model.n_actions {
            let w = policy[s][a];
            if w == R::zero() {
                continue;
            }
            r[s] += w * model.reward[s][a];
            for t in 0..n {
                p[s][t] += w * model.transition[s][a][t];
            }
        }
    }
    (p, r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyValue<R> {
    /// V^π per state.
    pub values: Vec<R>,
    /// J(π) = ρ · V^π.
    pub j: R,
}

/// Solves V = r_π + γ P_π V exactly.
pub fn exact_policy_value<R: Real>(model: &TabularModel<R>, policy: &TabularPolicy<R>) -> Result<PolicyValue<R>> {
    check_policy(model, policy)?;
    let n = model.n_states;
    let (p, r) = induced_chain(model, policy);
    let a = (0..n)
        .map(|s| (0..n).map(|t| if s == t { R::one() } else { R::zero() } - model.gamma * p[s][t]).collect())
        .collect();
    let values = solve(a, r)?;
    let j = model.rho.iter().zip(&values).map(|(&w, &v)| w * v).sum();
    Ok(PolicyValue { values, j })
}

/// Expected return truncated after `horizon` steps, by backward induction.
pub fn truncated_policy_value<R: Real>(
    model: &TabularModel<R>,
    policy: &TabularPolicy<R>,
    horizon: usize,
) -> Result<PolicyValue<R>> {
    check_policy(model, policy)?;
    let n = model.n_states;
    let (p, r) = induced_chain(model, policy);
    let mut values = vec![R::zero(); n];
    for _ in 0..horizon {
        values = (0..n)
            .map(|s| r[s] + model.gamma * (0..n).map(|t| p[s][t] * values[t]).sum::<R>())
            .collect();
    }
    let j = model.rho.iter().zip(&values).map(|(&w, &v)| w * v).sum();
    Ok(PolicyValue { values, j })
}

/// Q^π(s, a) = r(s, a) + γ Σ_s' P(s'|s,a) V^π(s').
pub fn q_values<R: Real>(model: &TabularModel<R>, values: &[R]) -> Vec<Vec<R>> {
    (0..model.n_states)
        .map(|s| {
            (0..model.n_actions)
                .map(|a| {
                    model.reward[s][a]
                        + model.gamma
                            * model.transition[s][a].iter().zip(values).map(|(&p, &v)| p * v).sum::<R>()
                })
                .collect()
        })
        .collect()
}

/// Normalized discounted state-visitation d^π = (1 − γ) ρᵀ (I − γ P_π)⁻¹.
pub fn discounted_visitation<R: Real>(model: &TabularModel<R>, policy: &TabularPolicy<R>) -> Result<Vec<R>> {
    check_policy(model, policy)?;
    let n = model.n_states;
    let (p, _) = induced_chain(model, policy);
    // Transposed system: (I − γ P_πᵀ) d = (1 − γ) ρ.
    let a = (0..n)
        .map(|s| (0..n).map(|t| if s == t { R::one() } else { R::zero() } - model.gamma * p[t][s]).collect())
        .collect();
    let b = model.rho.iter().map(|&x| (R::one() - model.gamma) * x).collect();
    solve(a, b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueIteration<R> {
    pub values: Vec<R>,
    /// Greedy action per state, lowest index on ties.
    pub greedy: Vec<usize>,
    pub iterations: usize,
}

/// Bellman optimality iteration to a sup-norm error below 1e-10.
pub fn value_iteration<R: Real>(model: &TabularModel<R>) -> Result<ValueIteration<R>> {
    model.validate()?;
    let n = model.n_states;
    let tol = R::lit(1e-11);
    let gamma = model.gamma;
    let mut values = vec![R::zero(); n];
    let mut iterations = 0;
    loop {
        let q = q_values(model, &values);
        let next: Vec<R> = q.iter().map(|row| row.iter().copied().fold(R::neg_infinity(), R::max)).collect();
        let diff = next.iter().zip(&values).map(|(&a, &b)| (a - b).abs()).fold(R::zero(), R::max);
        values = next;
        iterations += 1;
        // ‖V_k − V*‖∞ ≤ γ/(1−γ) ‖V_k − V_{k−1}‖∞.
        if diff * gamma <= tol * (R::one() - gamma) || iterations > 1_000_000 {
            break;
        }
    }
    let q = q_values(model, &values);
    let greedy = q
        .iter()
        .map(|row| {
            let best = row.iter().copied().fold(R::neg_infinity(), R::max);
            let slack = R::lit(1e-12) * best.abs().max(R::one());
            row.iter().position(|&x| x >= best - slack).unwrap_or(0)
        })
        .collect();
    Ok(ValueIteration { values, greedy, iterations })
}

/// Central differences (f(θ + h e_i) − f(θ − h e_i)) / 2h per coordinate.
pub fn finite_difference_grad<R: Real, F>(f: F, theta: &[R], h: R) -> Result<Vec<R>>
where
    F: Fn(&[R]) -> R,
{
    if !(h > R::zero()) {
        return domain("finite difference step must be positive");
    }
    let mut x = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        x[i] = theta[i] + h;
        let up = f(&x);
        x[i] = theta[i] - h;
        let down = f(&x);
        x[i] = theta[i];
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::Numeric(format!("non-finite objective around coordinate {i}")));
        }
        grad.push((up - down) / (h + h));
    }
    Ok(grad)
}

/// Exact expected truncated return by walking every positive-probability
/// path of length `horizon`.
pub fn enumerate_returns<R: Real>(model: &TabularModel<R>, policy: &TabularPolicy<R>, horizon: usize) -> Result<R> {
    check_policy(model, policy)?;
    struct Walk<'a, R> {
        model: &'a TabularModel<R>,
        policy: &'a TabularPolicy<R>,
        horizon: usize,
        paths: usize,
    }
    impl<R: Real> Walk<'_, R> {
        fn go(&mut self, s: usize, depth: usize, prob: R, discount: R, acc: R) -> Result<R> {
            if depth == self.horizon {
                self.paths += 1;
                if self.paths > MAX_ENUMERATED_PATHS {
                    return domain(format!("enumeration exceeds {MAX_ENUMERATED_PATHS} paths"));
                }
                return Ok(prob * acc);
            }
            let mut total = R::zero();
            for a in 0..self.model.n_actions {
                let pa = self.policy[s][a];
                if pa == R::zero() {
                    continue;
                }
                let acc = acc + discount * self.model.reward[s][a];
                for t in 0..self.model.n_states {
                    let pt = self.model.transition[s][a][t];
                    if pt == R::zero() {
                        continue;
                    }
                    total += self.go(t, depth + 1, prob * pa * pt, discount * self.model.gamma, acc)?;
                }
            }
            Ok(total)
        }
    }
    let mut walk = Walk { model, policy, horizon, paths: 0 };
    let mut total = R::zero();
    for s in 0..model.n_states {
        if model.rho[s] > R::zero() {
            total += walk.go(s, 0, model.rho[s], R::one(), R::zero())?;
        }
    }
    Ok(total)
}
