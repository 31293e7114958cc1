use crate::error::{domain, Result};
use crate::linalg::ridge_least_squares;
use crate::policy::FeatureMap;
use crate::scalar::{dot, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticFeatures {
    /// V(s) = w · φ(s).
    State(FeatureMap),
    /// Q(s, a) = w · ψ(φ(s), a) with ψ the full quadratic expansion
    /// `[1, x_i, x_i x_j (i ≤ j)]` of `x = (φ(s), a)`.
    StateAction { state: FeatureMap, action_dim: usize },
}

impl CriticFeatures {
    pub fn dim(&self) -> usize {
        match *self {
            CriticFeatures::State(f) => f.output_dim(),
            CriticFeatures::StateAction { state, action_dim } => {
                let n = state.output_dim() + action_dim;
                1 + n + n * (n + 1) / 2
            }
        }
    }
}

/// Linear-in-features value estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticParams<R> {
    pub w: Vec<R>,
    pub features: CriticFeatures,
}

impl<R: Real> CriticParams<R> {
    pub fn zeros(features: CriticFeatures) -> Self {
        CriticParams { w: vec![R::zero(); features.dim()], features }
    }

    pub fn state_features(&self, state: &[R]) -> Result<Vec<R>> {
        match self.features {
            CriticFeatures::State(f) => f.features(state),
            CriticFeatures::StateAction { .. } => domain("state critic features requested from a Q critic"),
        }
    }

    pub fn value(&self, state: &[R]) -> Result<R> {
        Ok(dot(&self.w, &self.state_features(state)?))
    }

    fn joint(&self, state: &[R], action: &[R]) -> Result<Vec<R>> {
        let CriticFeatures::StateAction { state: f, action_dim } = self.features else {
            return domain("Q features requested from a state-value critic");
        };
        if action.len() != action_dim {
            return domain("critic action dim mismatch");
        }
        let mut x = f.features(state)?;
        x.extend_from_slice(action);
        Ok(x)
    }

    pub fn q_features(&self, state: &[R], action: &[R]) -> Result<Vec<R>> {
        let x = self.joint(state, action)?;
        let n = x.len();
        let mut psi = Vec::with_capacity(self.w.len());
        psi.push(R::one());
        psi.extend_from_slice(&x);
        for i in 0..n {
            for j in i..n {
                psi.push(x[i] * x[j]);
            }
        }
        Ok(psi)
    }

    pub fn q(&self, state: &[R], action: &[R]) -> Result<R> {
        Ok(dot(&self.w, &self.q_features(state, action)?))
    }

    /// ∇_a Q(s, a).
    pub fn dq_da(&self, state: &[R], action: &[R]) -> Result<Vec<R>> {
        let x = self.joint(state, action)?;
        let n = x.len();
        let d = n - action.len();
        let mut grad_x = vec![R::zero(); n];
        for (p, g) in grad_x.iter_mut().enumerate() {
            *g = self.w[1 + p];
        }
        let mut k = 1 + n;
        for i in 0..n {
            for j in i..n {
                grad_x[i] += self.w[k] * x[j];
                grad_x[j] += self.w[k] * x[i];
                k += 1;
            }
        }
        Ok(grad_x[d..].to_vec())
    }

    /// Refits a state-value critic to `(state, target)` pairs by ridge
    /// least squares.
    pub fn fit_values(&self, states: &[&[R]], targets: &[R], ridge: R) -> Result<Self> {
        let rows = states.iter().map(|s| self.state_features(s)).collect::<Result<Vec<_>>>()?;
        let w = ridge_least_squares(&rows, targets, ridge)?;
        Ok(CriticParams { w, features: self.features })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::finite_difference_grad;

    #[test]
    fn dq_da_matches_finite_differences() {
        let feats = CriticFeatures::StateAction { state: FeatureMap::Identity { dim: 2 }, action_dim: 2 };
        let w: Vec<f64> = (0..feats.dim()).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let c = CriticParams { w, features: feats };
        let s = [0.3, -1.2];
        let a = [0.7, 0.1];
        let analytic = c.dq_da(&s, &a).unwrap();
        let fd = finite_difference_grad(|a: &[f64]| c.q(&s, a).unwrap(), &a, 1e-5).unwrap();
        for (x, y) in analytic.iter().zip(&fd) {
            assert!((x - y).abs() < 1e-7, "{x} vs {y}");
        }
    }

    #[test]
    fn value_fit_is_exact_on_tabular_features() {
        let c = CriticParams::<f64>::zeros(CriticFeatures::State(FeatureMap::OneHot { n_states: 3 }));
        let states: Vec<[f64; 1]> = vec![[0.0], [1.0], [2.0], [0.0]];
        let refs: Vec<&[f64]> = states.iter().map(|s| &s[..]).collect();
        let fit = c.fit_values(&refs, &[1.0, 2.0, 3.0, 3.0], 0.0).unwrap();
        assert!((fit.value(&[0.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!((fit.value(&[2.0]).unwrap() - 3.0).abs() < 1e-12);
    }
}
