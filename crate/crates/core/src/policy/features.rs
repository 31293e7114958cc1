use crate::error::{domain, Result};
use crate::scalar::{norm, Real};

/// State feature map φ(s).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureMap {
    /// φ(s) = s.
    Identity { dim: usize },
    /// One-hot encoding of a tabular state index carried as `s[0]`.
    OneHot { n_states: usize },
    /// `[1, s_i, s_i², …, s_i^degree]` for every coordinate (no cross terms),
    /// divided by `max(1, ‖·‖)` so the output norm is at most 1.
    Polynomial { input_dim: usize, degree: usize },
    /// Elementwise `tanh(s_i)`: linear near the origin, bounded far away.
    Tanh { dim: usize },
}

impl FeatureMap {
    pub fn input_dim(&self) -> usize {
        match *self {
            FeatureMap::Identity { dim } | FeatureMap::Tanh { dim } => dim,
            FeatureMap::OneHot { .. } => 1,
            FeatureMap::Polynomial { input_dim, .. } => input_dim,
        }
    }

    pub fn output_dim(&self) -> usize {
        match *self {
            FeatureMap::Identity { dim } | FeatureMap::Tanh { dim } => dim,
            FeatureMap::OneHot { n_states } => n_states,
            FeatureMap::Polynomial { input_dim, degree } => 1 + input_dim * degree,
        }
    }

    /// Whether every output is bounded whatever the state.
    pub fn is_bounded(&self) -> bool {
        !matches!(self, FeatureMap::Identity { .. })
    }

    pub fn features<R: Real>(&self, state: &[R]) -> Result<Vec<R>> {
        if state.len() != self.input_dim() {
            return domain(format!("state dim {} != feature input dim {}", state.len(), self.input_dim()));
        }
        match *self {
            FeatureMap::Identity { .. } => Ok(state.to_vec()),
            FeatureMap::Tanh { .. } => Ok(state.iter().map(|x| x.tanh()).collect()),
            FeatureMap::OneHot { n_states } => {
                let idx = state[0].to_usize().filter(|&i| i < n_states && R::from_usize(i) == Some(state[0]));
                let Some(idx) = idx else {
                    return domain(format!("tabular state {} outside 0..{n_states}", state[0]));
                };
                let mut out = vec![R::zero(); n_states];
                out[idx] = R::one();
                Ok(out)
            }
            FeatureMap::Polynomial { degree, .. } => {
                let mut out = Vec::with_capacity(self.output_dim());
                out.push(R::one());
                for &x in state {
                    let mut p = R::one();
                    for _ in 0..degree {
                        p *= x;
                        out.push(p);
                    }
                }
                Ok(normalize(out))
            }
        }
    }
}

/// Divides by `max(1, ‖v‖)`.
pub fn normalize<R: Real>(mut v: Vec<R>) -> Vec<R> {
    let n = norm(&v);
    if n > R::one() {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_hot_and_errors() {
        let f = FeatureMap::OneHot { n_states: 3 };
        assert_eq!(f.features(&[2.0f64]).unwrap(), vec![0.0, 0.0, 1.0]);
        assert!(f.features(&[3.0f64]).is_err());
        assert!(f.features(&[0.5f64]).is_err());
        assert!(f.features(&[0.0f64, 1.0]).is_err());
    }

    #[test]
    fn tanh_is_bounded() {
        let f = FeatureMap::Tanh { dim: 2 };
        assert!(f.is_bounded());
        let v = f.features(&[0.0f64, 1e6]).unwrap();
        assert_eq!(v, vec![0.0, 1.0]);
    }

    #[test]
    fn polynomial_is_normalized() {
        let f = FeatureMap::Polynomial { input_dim: 2, degree: 2 };
        assert_eq!(f.output_dim(), 5);
        let v = f.features(&[3.0f64, -4.0]).unwrap();
        assert!((norm(&v) - 1.0).abs() < 1e-12);
        let small = f.features(&[0.1f64, 0.0]).unwrap();
        assert!((small[0] - 1.0 / norm(&[1.0, 0.1, 0.01, 0.0, 0.0])).abs() < 1e-12);
    }
}
