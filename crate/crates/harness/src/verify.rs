//! Property and statistical suites behind `rprof verify` and the acceptance
//! test. Each check is deterministic: every random draw is keyed by a fixed
//! seed, so a check either always passes or always fails on a given build.

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, ensure, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{Binomial, DiscreteCDF};

use rprof_core::estimation::{estimate_return, required_rollouts};
use rprof_core::oracle::{finite_difference_grad, tabular_policy, truncated_policy_value};
use rprof_core::pg::policy_gradient_estimate;
use rprof_core::profiling::{profiled_train, select, select_among, train_seed, Candidate};
use rprof_core::{
    return_bound, rollout, Action, AlgoConfig, AlgoKind, EnvKind, Environment, FeatureMap, LogStd, PolicyFamily, PolicyParams,
    ProfilingConfig, RoundRecord, Seed, TabularEnv, Tag, Trainer, Variant,
};

use crate::config::{AlgoName, ExperimentConfig};
use crate::experiment::{build_env, policy_family, run_experiment, run_cell};
use crate::metrics::{count_decreases, tail_variance, variance};
use crate::output::{write_experiment, RESULTS_FILE, SUMMARY_FILE};

/// Significance level of the one-sided binomial tests.
pub const COVERAGE_ALPHA: f64 = 0.01;
pub const MONOTONICITY_ALPHA: f64 = 0.05;
pub const RANK_ALPHA: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "C{:<2} {verdict} {} ({:.1}s): {}", self.id, self.title, self.seconds, self.detail)
    }
}

pub const TITLES: [&str; 12] = [
    "Hoeffding coverage",
    "budget formula",
    "monotonicity modulo 2 epsilon",
    "exact-comparison monotonicity",
    "gradient correctness",
    "softmax score bound",
    "selection algebra",
    "lookback stability on cartpole",
    "estimator scaling",
    "E-sensitivity on reacher",
    "determinism",
    "vanilla passthrough",
];

/// Runs the checks in `ids` (all twelve when `None`), in order.
pub fn run_all(ids: Option<&[u32]>) -> Vec<Outcome> {
    (1..=12).filter(|id| ids.is_none_or(|s| s.contains(id))).map(run_one).collect()
}

pub fn run_one(id: u32) -> Outcome {
    let started = Instant::now();
    let result = match id {
        1 => hoeffding_coverage(),
        2 => budget_formula(),
        3 => monotonicity_modulo_epsilon(),
        4 => exact_monotonicity(),
        5 => gradient_correctness(),
        6 => softmax_score_bound(),
        7 => selection_algebra(),
        8 => lookback_stability().map(|s| (s.passed(), s.detail)),
        9 => estimator_scaling(),
        10 => e_sensitivity(),
        11 => determinism(),
        12 => vanilla_passthrough(),
        _ => Err(anyhow!("no check with id {id}")),
    };
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e:#}")));
    let title = TITLES.get(id.wrapping_sub(1) as usize).copied().unwrap_or("unknown");
    Outcome { id, title, passed, detail, seconds: started.elapsed().as_secs_f64() }
}

/// P(X ≥ k) for X ~ Binomial(n, p).
pub fn binomial_upper_tail(k: u64, n: u64, p: f64) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    let dist = Binomial::new(p, n).map_err(|e| anyhow!("binomial({n}, {p}): {e}"))?;
    Ok(dist.sf(k - 1))
}

fn chain_env(horizon: usize) -> TabularEnv<f64> {
    TabularEnv::chain(horizon)
}

fn chain_family() -> PolicyFamily<f64> {
    PolicyFamily::softmax(FeatureMap::OneHot { n_states: 3 }, 2)
}

/// A fixed, mildly right-leaning chain policy.
fn chain_policy() -> PolicyParams<f64> {
    PolicyParams::new(chain_family(), vec![0.0, 0.3, -0.2, 0.4, 0.1, 0.5]).expect("six parameters")
}

fn truncated_j(env: &TabularEnv<f64>, params: &PolicyParams<f64>) -> Result<f64> {
    let model = env.model();
    let pi = tabular_policy(params, model.n_states)?;
    Ok(truncated_policy_value(model, &pi, env.spec().horizon)?.j)
}

fn hoeffding_coverage() -> Result<(bool, String)> {
    const ESTIMATES: u64 = 2000;
    let env = chain_env(100);
    let policy = chain_policy();
    let j = truncated_j(&env, &policy)?;
    let b = return_bound(env.spec());
    let mut worst = 1.0_f64;
    let mut lines = Vec::new();
    let mut passed = true;
    for (gi, &e) in [10usize, 40, 160].iter().enumerate() {
        for (pi, &p) in [0.01_f64, 0.05, 0.3].iter().enumerate() {
            // ε with 2·exp(−2Eε²/B²) = p.
            let eps = b * ((2.0 / p).ln() / (2.0 * e as f64)).sqrt();
            let base = Seed(1).path(&[gi as u64, pi as u64]);
            let mut failures = 0u64;
            for i in 0..ESTIMATES {
                let est = estimate_return(&policy, &env, e, base.child(i), 0.5)?;
                if (est.estimate.j_hat - j).abs() >= eps {
                    failures += 1;
                }
            }
            let p_value = binomial_upper_tail(failures, ESTIMATES, p)?;
            worst = worst.min(p_value);
            passed &= p_value >= COVERAGE_ALPHA;
            lines.push(format!("E={e} p={p}: {failures}/{ESTIMATES}"));
        }
    }
    Ok((passed, format!("{}; min p-value {worst:.3}", lines.join(", "))))
}

fn budget_formula() -> Result<(bool, String)> {
    let e = required_rollouts(100.0, 10.0, 0.05, 100)?;
    let bs = [1.0, 10.0, 100.0, 1000.0];
    let eps = [0.1, 1.0, 10.0, 100.0];
    let deltas = [0.01, 0.05, 0.1, 0.5];
    let ts = [1usize, 10, 100, 1000];
    let mut violations = 0;
    for ib in 0..4 {
        for ie in 0..4 {
            for id in 0..4 {
                for it in 0..4 {
                    let at = |b: usize, e: usize, d: usize, t: usize| required_rollouts(bs[b], eps[e], deltas[d], ts[t]);
                    let here = at(ib, ie, id, it)?;
                    // Nondecreasing in B and T, nonincreasing in ε and δ.
                    if ib < 3 && at(ib + 1, ie, id, it)? < here {
                        violations += 1;
                    }
                    if ie < 3 && at(ib, ie + 1, id, it)? > here {
                        violations += 1;
                    }
                    if id < 3 && at(ib, ie, id + 1, it)? > here {
                        violations += 1;
                    }
                    if it < 3 && at(ib, ie, id, it + 1)? < here {
                        violations += 1;
                    }
                }
            }
        }
    }
    Ok((e == 415 && violations == 0, format!("required_rollouts(100, 10, 0.05, 100) = {e}; {violations} monotonicity violations on 4^4 grid")))
}

fn monotonicity_modulo_epsilon() -> Result<(bool, String)> {
    const RUNS: u64 = 50;
    const EPSILON: f64 = 0.8;
    const DELTA: f64 = 0.1;
    let env = chain_env(100);
    let algo = AlgoConfig { kind: AlgoKind::Reinforce, learning_rate: 2.0, steps_per_round: 50 };
    let cfg = ProfilingConfig { variant: Variant::Lookback, epsilon: EPSILON, delta: DELTA, total_rounds: 20, ..Default::default() }
        .with_bound_rollouts(&env)?;
    ensure!(cfg.eval_rollouts <= 500, "bound gives E = {} > 500", cfg.eval_rollouts);
    let mut bad_runs = 0u64;
    let mut worst_drop = 0.0_f64;
    let mut accepted = 0;
    for run in 0..RUNS {
        let out = profiled_train(&env, PolicyParams::zeros(chain_family()), &algo, &cfg, Seed(300 + run))?;
        let mut bad = false;
        for r in &out.records {
            let (Some(after), Some(before)) = (r.oracle_j, r.oracle_j_old) else { continue };
            worst_drop = worst_drop.max(before - after);
            bad |= before - after > 2.0 * EPSILON;
            accepted += usize::from(r.selected != Tag::Old);
        }
        bad_runs += u64::from(bad);
    }
    let p_value = binomial_upper_tail(bad_runs, RUNS, DELTA)?;
    Ok((
        p_value >= MONOTONICITY_ALPHA,
        format!(
            "E={} from the bound; {bad_runs}/{RUNS} runs with a drop > 2eps (p-value {p_value:.3}); largest drop {worst_drop:.4}; {accepted} accepted updates",
            cfg.eval_rollouts
        ),
    ))
}

fn exact_monotonicity() -> Result<(bool, String)> {
    let env = chain_env(100);
    let algo = AlgoConfig { kind: AlgoKind::Reinforce, learning_rate: 0.5, steps_per_round: 200 };
    let cfg = ProfilingConfig {
        variant: Variant::Lookback,
        total_rounds: 30,
        eval_mode: rprof_core::profiling::EvalMode::Oracle,
        ..Default::default()
    };
    let mut rounds = 0;
    let mut violations = 0;
    let mut improved = 0;
    for seed in 0..10 {
        let out = profiled_train(&env, PolicyParams::zeros(chain_family()), &algo, &cfg, Seed(seed))?;
        for r in &out.records {
            let (after, before) = (r.oracle_j.unwrap_or(f64::NAN), r.oracle_j_old.unwrap_or(f64::NAN));
            rounds += 1;
            violations += usize::from(after.partial_cmp(&before).is_none_or(|o| o.is_lt()));
            improved += usize::from(after > before);
        }
    }
    Ok((violations == 0, format!("{violations} decreasing rounds out of {rounds} over 10 seeds ({improved} strict improvements)")))
}

fn gradient_correctness() -> Result<(bool, String)> {
    const SAMPLES: u64 = 100_000;
    const HORIZON: usize = 20;
    let env = chain_env(HORIZON);
    let policy = chain_policy();
    let gamma = 0.9;
    let dim = policy.theta().len();
    let (mut sum, mut sum_sq) = (vec![0.0; dim], vec![0.0; dim]);
    let base = Seed(5);
    for i in 0..SAMPLES {
        let traj = rollout(&env, &policy, base.child(i))?;
        let g = policy_gradient_estimate(&policy, std::slice::from_ref(&traj), gamma, None)?;
        for k in 0..dim {
            sum[k] += g[k];
            sum_sq[k] += g[k] * g[k];
        }
    }
    let n = SAMPLES as f64;
    let fd = finite_difference_grad(
        |theta: &[f64]| {
            let p = policy.with_theta(theta.to_vec()).expect("same length");
            truncated_j(&env, &p).unwrap_or(f64::NAN)
        },
        policy.theta(),
        1e-5,
    )?;
    let mut worst_z = 0.0_f64;
    for k in 0..dim {
        let mean = sum[k] / n;
        let var = (sum_sq[k] / n - mean * mean) * n / (n - 1.0);
        let se = (var / n).sqrt();
        let z = if se > 0.0 { (mean - fd[k]).abs() / se } else if (mean - fd[k]).abs() < 1e-9 { 0.0 } else { f64::INFINITY };
        worst_z = worst_z.max(z);
    }
    let (score_ok, score_detail) = score_function_check()?;
    Ok((worst_z <= 3.0 && score_ok, format!("max |mean - fd| / se = {worst_z:.2} over {dim} coordinates; {score_detail}")))
}

/// ‖g − fd‖ / max(‖g‖, ‖fd‖, 1e-12) for the score function of each
/// stochastic family on random (θ, s, a) triples.
fn score_function_check() -> Result<(bool, String)> {
    let families = [
        ("softmax", PolicyFamily::softmax(FeatureMap::Polynomial { input_dim: 3, degree: 2 }, 3)),
        ("gaussian-learned", PolicyFamily::gaussian(FeatureMap::Identity { dim: 3 }, 2, LogStd::Learned)),
        ("gaussian-fixed", PolicyFamily::gaussian(FeatureMap::Tanh { dim: 3 }, 2, LogStd::Fixed(-0.5))),
    ];
    let mut worst = 0.0_f64;
    for (fi, (_, family)) in families.iter().enumerate() {
        let mut rng = Seed(6).child(fi as u64).rng();
        for _ in 0..100 {
            let (params, state, action) = random_triple(family, &mut rng)?;
            let g = params.grad_log_prob(&state, &action)?;
            let fd = finite_difference_grad(
                |theta: &[f64]| {
                    params.with_theta(theta.to_vec()).and_then(|p| p.log_prob(&state, &action)).unwrap_or(f64::NAN)
                },
                params.theta(),
                1e-6,
            )?;
            let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
            worst = worst.max(norm(&diff) / norm(&g).max(norm(&fd)).max(1e-12));
        }
    }
    Ok((worst <= 1e-4, format!("score vs finite differences: max relative error {worst:.2e} over 3 families x 100 triples")))
}

fn random_triple<G: Rng>(family: &PolicyFamily<f64>, rng: &mut G) -> Result<(PolicyParams<f64>, Vec<f64>, Action<f64>)> {
    let mut normal = || rng.sample::<f64, _>(StandardNormal);
    let theta: Vec<f64> = (0..family.param_count()).map(|_| normal()).collect();
    let state: Vec<f64> = (0..family.features.input_dim()).map(|_| 2.0 * normal()).collect();
    let params = PolicyParams::new(*family, theta)?;
    let action = params.act(&state, rng)?;
    Ok((params, state, action))
}

fn softmax_score_bound() -> Result<(bool, String)> {
    let family = PolicyFamily::softmax(FeatureMap::Polynomial { input_dim: 4, degree: 3 }, 4);
    let mut rng = Seed(7).rng();
    let mut max_norm = 0.0_f64;
    for _ in 0..1000 {
        let scale = 10.0_f64.powf(rng.random_range(-1.0..2.0));
        let theta: Vec<f64> = (0..family.param_count()).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        let state: Vec<f64> = (0..4).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        let params = PolicyParams::new(family, theta)?;
        let action = Action::Discrete(rng.random_range(0..4));
        let g = params.grad_log_prob(&state, &action)?;
        max_norm = max_norm.max(g.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    Ok((max_norm <= 2.0 + 1e-9, format!("max score norm {max_norm:.6} over 1000 triples")))
}

fn selection_algebra() -> Result<(bool, String)> {
    let p = PolicyParams::zeros(chain_family());
    let tie = [Candidate::with_score(Tag::Old, p.clone(), 1.0), Candidate::with_score(Tag::New, p.clone(), 1.0)];
    let tie_ok = tie[select(&tie)?].tag == Tag::Old;

    let cfg = ExperimentConfig {
        env: EnvKind::CartPole,
        algo: AlgoName::Reinforce,
        variant: Variant::ThreePoints,
        rounds: 30,
        seeds: (0..5).collect(),
        ..Default::default()
    };
    let mut rounds = 0;
    let mut violations = 0;
    for &seed in &cfg.seeds {
        let run = run_cell(&cfg, seed)?;
        for r in &run.records {
            rounds += 1;
            let cands: Vec<Candidate<f64>> = [Tag::Old, Tag::New, Tag::Mix]
                .into_iter()
                .map(|tag| Candidate::with_score(tag, p.clone(), r.j_hat(tag).unwrap_or(f64::NEG_INFINITY)))
                .collect();
            let tp = select_among(&cands, Variant::ThreePoints)?.1;
            let lb = select_among(&cands, Variant::Lookback)?.1;
            let mu = select_among(&cands, Variant::Mixup)?.1;
            let recorded = r.j_hat_selected.unwrap_or(f64::NAN);
            violations += usize::from(!(tp >= lb && tp >= mu && recorded == tp));
        }
    }
    Ok((tie_ok && violations == 0, format!("tie resolves to old: {tie_ok}; {violations} dominance violations in {rounds} cartpole rounds")))
}

/// Per-seed comparison of Lookback against Vanilla on CartPole.
pub struct Stability {
    pub fewer_decreases: usize,
    pub lower_tail_variance: usize,
    pub seeds: usize,
    pub detail: String,
}

impl Stability {
    pub fn decreases_ok(&self) -> bool {
        self.fewer_decreases * 5 >= self.seeds * 4
    }

    pub fn variance_ok(&self) -> bool {
        self.lower_tail_variance * 5 >= self.seeds * 4
    }

    pub fn passed(&self) -> bool {
        self.decreases_ok() && self.variance_ok()
    }
}

fn selected_curve(records: &[RoundRecord<f64>]) -> Vec<f64> {
    records.iter().map(|r| r.j_hat_selected.unwrap_or(f64::NAN)).collect()
}

pub fn lookback_stability() -> Result<Stability> {
    let base = ExperimentConfig {
        env: EnvKind::CartPole,
        algo: AlgoName::Reinforce,
        eval_rollouts: 5,
        rounds: 100,
        seeds: (0..5).collect(),
        ..Default::default()
    };
    let (mut fewer, mut lower) = (0, 0);
    let mut per_seed = Vec::new();
    for &seed in &base.seeds {
        let lb = selected_curve(&run_cell(&ExperimentConfig { variant: Variant::Lookback, ..base.clone() }, seed)?.records);
        let va = selected_curve(&run_cell(&ExperimentConfig { variant: Variant::Vanilla, ..base.clone() }, seed)?.records);
        let (dl, dv) = (count_decreases(&lb), count_decreases(&va));
        let (vl, vv) = (tail_variance(&lb, 20), tail_variance(&va, 20));
        fewer += usize::from(dl < dv);
        lower += usize::from(vl < vv);
        per_seed.push(format!("seed {seed}: decreases {dl} vs {dv}, tail var {vl:.1} vs {vv:.1}"));
    }
    let seeds = base.seeds.len();
    let detail = format!(
        "(a) fewer decreases in {fewer}/{seeds} seeds, (b) lower final-20 variance in {lower}/{seeds} seeds [lookback vs vanilla; {}]",
        per_seed.join("; ")
    );
    Ok(Stability { fewer_decreases: fewer, lower_tail_variance: lower, seeds, detail })
}

fn estimator_scaling() -> Result<(bool, String)> {
    const REPLICATES: u64 = 400;
    let env = chain_env(100);
    let policy = chain_policy();
    let es = [10usize, 40, 160, 640];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, &e) in es.iter().enumerate() {
        let estimates: Vec<f64> = (0..REPLICATES)
            .map(|i| estimate_return(&policy, &env, e, Seed(9).path(&[k as u64, i]), 0.5).map(|ev| ev.estimate.j_hat))
            .collect::<rprof_core::Result<_>>()?;
        xs.push((e as f64).ln());
        ys.push(variance(&estimates).sqrt().ln());
    }
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    Ok(((slope + 0.5).abs() <= 0.1, format!("slope of log std(J_hat) on log E = {slope:.4}")))
}

fn e_sensitivity() -> Result<(bool, String)> {
    let es = [10usize, 50, 200];
    let cfg = ExperimentConfig {
        env: EnvKind::PointMassReacher,
        algo: AlgoName::Ddpg,
        variant: Variant::ThreePoints,
        rounds: 30,
        seeds: (0..10).collect(),
        grid: crate::config::Grid { eval_rollouts: es.to_vec(), ..Default::default() },
        ..Default::default()
    };
    let cells = run_experiment(&cfg)?;
    let mut vars = vec![Vec::new(); es.len()];
    let mut eval_steps = vec![Vec::new(); es.len()];
    for cell in &cells {
        let idx = es.iter().position(|&e| Some(e) == cell.point.eval_rollouts).expect("grid point");
        let records = cell.records.as_ref().map_err(|e| anyhow!("E={} seed {} failed: {e}", es[idx], cell.seed))?;
        vars[idx].push(variance(&selected_curve(records)));
        eval_steps[idx].push(records.iter().map(|r| r.eval_steps).collect::<Vec<_>>());
    }
    let seeds = cfg.seeds.len();
    let highest = (0..seeds).filter(|&s| vars[0][s] > vars[1][s] && vars[0][s] > vars[2][s]).count() as u64;
    let p_value = binomial_upper_tail(highest, seeds as u64, 1.0 / 3.0)?;
    let means: Vec<f64> = vars.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
    let mean_order = means[0] > means[1] && means[0] > means[2];
    let accounting = (0..seeds).all(|s| {
        eval_steps[1][s].iter().zip(&eval_steps[2][s]).all(|(&e50, &e200)| e200 >= 4 * e50 && e50 > 0)
    });
    Ok((
        mean_order && p_value < RANK_ALPHA && accounting,
        format!(
            "mean inter-round variance E=10/50/200: {:.1}/{:.1}/{:.1}; E=10 highest in {highest}/{seeds} seeds (p-value {p_value:.2e}); per-round eval steps E=200 >= 4x E=50: {accounting}",
            means[0], means[1], means[2]
        ),
    ))
}

fn scratch_dir(tag: &str) -> PathBuf {
    std::env::temp_dir().join(format!("rprof-verify-{}-{tag}", std::process::id()))
}

fn determinism() -> Result<(bool, String)> {
    let cfg = ExperimentConfig {
        env: EnvKind::CartPole,
        algo: AlgoName::Ppo,
        variant: Variant::ThreePoints,
        beta: Some((2.0, 2.0)),
        rounds: 8,
        steps_per_round: 500,
        seeds: (0..3).collect(),
        grid: crate::config::Grid { eval_rollouts: vec![3, 6], ..Default::default() },
        ..Default::default()
    };
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = scratch_dir(&format!("det{run}"));
        let _ = fs::remove_dir_all(&out);
        let c = ExperimentConfig { out: out.clone(), ..cfg.clone() };
        write_experiment(&c, &run_experiment(&c)?)?;
        let mut files = Vec::new();
        for label in ["e-3", "e-6"] {
            files.push(fs::read(out.join(label).join(RESULTS_FILE))?);
        }
        files.push(fs::read(out.join(SUMMARY_FILE))?);
        fs::remove_dir_all(&out)?;
        outputs.push(files);
    }
    let bytes: usize = outputs[0].iter().map(Vec::len).sum();
    Ok((outputs[0] == outputs[1], format!("two sweeps (2 points x 3 seeds): {bytes} bytes of CSV, identical: {}", outputs[0] == outputs[1])))
}

fn vanilla_passthrough() -> Result<(bool, String)> {
    let cases = [
        (EnvKind::ChainMdp, AlgoName::Reinforce),
        (EnvKind::CartPole, AlgoName::Baseline),
        (EnvKind::CartPole, AlgoName::Ppo),
        (EnvKind::PointMassReacher, AlgoName::Ddpg),
    ];
    let mut lines = Vec::new();
    let mut passed = true;
    for (env_kind, algo) in cases {
        let cfg = ExperimentConfig { env: env_kind, algo, variant: Variant::Vanilla, rounds: 5, steps_per_round: 400, ..Default::default() };
        let env = build_env(&cfg)?;
        let family = policy_family(&cfg)?;
        let algo_cfg = crate::experiment::algo_config(&cfg);
        let seed = Seed(42);
        let wrapped = profiled_train(&env, PolicyParams::zeros(family), &algo_cfg, &crate::experiment::profiling_config(&cfg), seed)?;

        let mut trainer = Trainer::new(algo_cfg, &env, &family)?;
        let mut params = PolicyParams::zeros(family);
        let mut same = true;
        for (t, r) in wrapped.records.iter().enumerate() {
            params = trainer.propose(&params, &env, train_seed(seed, t))?.params;
            same &= params.checksum() == r.selected_checksum && r.selected == Tag::New;
        }
        let bits = |p: &PolicyParams<f64>| p.theta().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        same &= bits(&params) == bits(&wrapped.final_params);
        passed &= same;
        lines.push(format!("{}/{}: {}", env_kind.name(), algo.name(), if same { "identical" } else { "differs" }));
    }
    Ok((passed, lines.join(", ")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_tail() {
        assert_eq!(binomial_upper_tail(0, 10, 0.5).unwrap(), 1.0);
        assert!((binomial_upper_tail(10, 10, 0.5).unwrap() - 0.5f64.powi(10)).abs() < 1e-15);
        assert!((binomial_upper_tail(1, 3, 1.0 / 3.0).unwrap() - (1.0 - (2.0f64 / 3.0).powi(3))).abs() < 1e-12);
    }

    #[test]
    fn cheap_checks_pass() {
        for o in run_all(Some(&[2, 6])) {
            assert!(o.passed, "{o}");
        }
    }

    #[test]
    fn unknown_id_fails() {
        assert!(!run_one(99).passed);
    }
}
