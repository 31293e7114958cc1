use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::scalar::{probability_tolerance, Real};

/// Exact tabular MDP: transitions `P[s][a][s']`, rewards `r[s][a]`,
/// discount and initial distribution ρ.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularModel<R> {
    pub n_states: usize,
    pub n_actions: usize,
    pub transition: Vec<Vec<Vec<R>>>,
    pub reward: Vec<Vec<R>>,
    pub gamma: R,
    pub rho: Vec<R>,
    pub reward_min: R,
    pub reward_max: R,
}

impl<R: Real> TabularModel<R> {
    /// Deterministic chain of `n` states: action 0 steps left, action 1 steps
    /// right; "right" in the last state is a self-loop paying 1. Starts at 0.
    pub fn chain(n: usize, gamma: R) -> Self {
        let mut transition = vec![vec![vec![R::zero(); n]; 2]; n];
        let mut reward = vec![vec![R::zero(); 2]; n];
        for s in 0..n {
            transition[s][0][s.saturating_sub(1)] = R::one();
            transition[s][1][(s + 1).min(n - 1)] = R::one();
        }
        reward[n - 1][1] = R::one();
        let mut rho = vec![R::zero(); n];
        rho[0] = R::one();
        TabularModel {
            n_states: n,
            n_actions: 2,
            transition,
            reward,
            gamma,
            rho,
            reward_min: R::zero(),
            reward_max: R::one(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n_states, self.n_actions);
        if n == 0 || m == 0 {
            return domain("tabular model needs at least one state and action");
        }
        if !(self.gamma >= R::zero() && self.gamma < R::one()) {
            return domain("tabular model gamma outside [0,1)");
        }
        let stochastic = |row: &[R]| {
            row.len() == n
                && row.iter().all(|&p| p >= R::zero() && p.is_finite())
                && (row.iter().copied().sum::<R>() - R::one()).abs() <= probability_tolerance()
        };
        if !stochastic(&self.rho) {
            return domain("initial distribution is not a probability vector");
        }
        if self.transition.len() != n || self.reward.len() != n {
            return domain("transition/reward tables have the wrong number of states");
        }
        for s in 0..n {
            if self.transition[s].len() != m || self.reward[s].len() != m {
                return domain(format!("state {s}: wrong number of actions"));
            }
            for a in 0..m {
                if !stochastic(&self.transition[s][a]) {
                    return domain(format!("P[{s}][{a}] is not a probability vector"));
                }
                let r = self.reward[s][a];
                if !(r >= self.reward_min && r <= self.reward_max) {
                    return domain(format!("r[{s}][{a}] = {r} outside declared bounds"));
                }
            }
        }
        Ok(())
    }

    /// Parses the plain-text fixture format:
    ///
    /// ```text
    /// # comment
    /// states 3
    /// actions 2
    /// gamma 0.9
    /// rho 1 0 0
    /// reward_bounds 0 1
    /// P <s> <a> <p(s'=0)> ... <p(s'=n-1)>   # one line per (s, a)
    /// R <s> <a> <reward>                   # one line per (s, a)
    /// ```
    ///
    /// Keywords may appear in any order but `states` and `actions` must
    /// precede the first `P`/`R`/`rho` line. Every `(s, a)` needs both lines.
    pub fn parse_fixture(text: &str) -> Result<Self> {
        let mut n = None;
        let mut m = None;
        let mut gamma = None;
        let mut rho = None;
        let mut bounds = None;
        let mut transition: Vec<Vec<Option<Vec<R>>>> = Vec::new();
        let mut reward: Vec<Vec<Option<R>>> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tok = line.split_whitespace();
            let key = tok.next().unwrap();
            let rest: Vec<&str> = tok.collect();
            let num = |s: &str| -> Result<f64> { f64::from_str(s).map_err(|e| err(format!("bad number {s:?}: {e}"))) };
            let idx = |s: &str| -> Result<usize> { usize::from_str(s).map_err(|e| err(format!("bad index {s:?}: {e}"))) };
            let dims = |n: Option<usize>, m: Option<usize>| -> Result<(usize, usize)> {
                match (n, m) {
                    (Some(n), Some(m)) => Ok((n, m)),
                    _ => Err(err("`states` and `actions` must come first".into())),
                }
            };
            match key {
                "states" | "actions" => {
                    let [v] = rest[..] else { return Err(err(format!("`{key}` takes one value"))) };
                    let v = idx(v)?;
                    if key == "states" { n = Some(v) } else { m = Some(v) }
                    if let (Some(n), Some(m)) = (n, m) {
                        transition = vec![vec![None; m]; n];
                        reward = vec![vec![None; m]; n];
                    }
                }
                "gamma" => {
                    let [v] = rest[..] else { return Err(err("`gamma` takes one value".into())) };
                    gamma = Some(R::lit(num(v)?));
                }
                "reward_bounds" => {
                    let [lo, hi] = rest[..] else { return Err(err("`reward_bounds` takes two values".into())) };
                    bounds = Some((R::lit(num(lo)?), R::lit(num(hi)?)));
                }
                "rho" => {
                    let (n, _) = dims(n, m)?;
                    if rest.len() != n {
                        return Err(err(format!("`rho` needs {n} values")));
                    }
                    rho = Some(rest.iter().map(|v| num(v).map(R::lit)).collect::<Result<Vec<R>>>()?);
                }
                "P" | "R" => {
                    let (n, m) = dims(n, m)?;
                    if rest.len() < 2 {
                        return Err(err(format!("`{key}` needs a state and an action")));
                    }
                    let (s, a) = (idx(rest[0])?, idx(rest[1])?);
                    if s >= n || a >= m {
                        return Err(err(format!("({s}, {a}) out of range")));
                    }
                    let vals = rest[2..].iter().map(|v| num(v).map(R::lit)).collect::<Result<Vec<R>>>()?;
                    if key == "P" {
                        if vals.len() != n {
                            return Err(err(format!("`P` row needs {n} probabilities")));
                        }
                        transition[s][a] = Some(vals);
                    } else {
                        let [r] = vals[..] else { return Err(err("`R` takes one reward".into())) };
                        reward[s][a] = Some(r);
                    }
                }
                other => return Err(err(format!("unknown keyword `{other}`"))),
            }
        }
        let missing = |what: &str| Error::Parse { line: 0, msg: format!("missing `{what}`") };
        let n = n.ok_or_else(|| missing("states"))?;
        let m = m.ok_or_else(|| missing("actions"))?;
        let mut p_full = Vec::with_capacity(n);
        let mut r_full = Vec::with_capacity(n);
        for s in 0..n {
            let mut prow = Vec::with_capacity(m);
            let mut rrow = Vec::with_capacity(m);
            for a in 0..m {
                prow.push(transition[s][a].take().ok_or_else(|| missing(&format!("P {s} {a}")))?);
                rrow.push(reward[s][a].ok_or_else(|| missing(&format!("R {s} {a}")))?);
            }
            p_full.push(prow);
            r_full.push(rrow);
        }
        let (reward_min, reward_max) = bounds.ok_or_else(|| missing("reward_bounds"))?;
        let model = TabularModel {
            n_states: n,
            n_actions: m,
            transition: p_full,
            reward: r_full,
            gamma: gamma.ok_or_else(|| missing("gamma"))?,
            rho: rho.ok_or_else(|| missing("rho"))?,
            reward_min,
            reward_max,
        };
        model.validate()?;
        Ok(model)
    }

    /// Renders the model in the fixture format accepted by [`parse_fixture`](Self::parse_fixture).
    pub fn to_fixture(&self) -> String {
        let join = |v: &[R]| v.iter().map(|x| x.as_f64().to_string()).collect::<Vec<_>>().join(" ");
        let mut out = format!(
            "states {}\nactions {}\ngamma {}\nrho {}\nreward_bounds {} {}\n",
            self.n_states,
            self.n_actions,
            self.gamma.as_f64(),
            join(&self.rho),
            self.reward_min.as_f64(),
            self.reward_max.as_f64()
        );
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                out.push_str(&format!("P {s} {a} {}\n", join(&self.transition[s][a])));
                out.push_str(&format!("R {s} {a} {}\n", self.reward[s][a].as_f64()));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_is_valid_and_roundtrips() {
        let m = TabularModel::<f64>::chain(3, 0.9);
        m.validate().unwrap();
        let back = TabularModel::<f64>::parse_fixture(&m.to_fixture()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "states 1\nactions 1\ngamma 0.5\nrho 1\nreward_bounds 0 1\nP 0 0 0.5\nR 0 0 0\n";
        match TabularModel::<f64>::parse_fixture(text) {
            Err(Error::Domain(msg)) => assert!(msg.contains("P[0][0]")),
            other => panic!("unexpected {other:?}"),
        }
        let text = "states 1\nactions 1\nbogus 3\n";
        assert!(matches!(TabularModel::<f64>::parse_fixture(text), Err(Error::Parse { line: 3, .. })));
        let text = "states 1\nactions 1\ngamma 0.5\nrho 1\nreward_bounds 0 1\nP 0 0 1\n";
        assert!(matches!(TabularModel::<f64>::parse_fixture(text), Err(Error::Parse { .. })));
    }
}
