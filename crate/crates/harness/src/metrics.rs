//! Curve statistics and the per-(env, algo, variant) summary.

use std::collections::BTreeMap;

/// Window of the trailing mean applied before [`rounds_to_fraction`] in
/// summaries.
pub const SMOOTHING_WINDOW: usize = 3;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; 0 for fewer than two points.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Mean of each point and up to `window − 1` predecessors.
pub fn trailing_mean(curve: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    (0..curve.len()).map(|i| mean(&curve[i.saturating_sub(window - 1)..=i])).collect()
}

/// First index whose value reaches `fraction × max(curve)`. The threshold is
/// applied to the signed best value, so a negative best is usually never
/// reached.
pub fn rounds_to_fraction(curve: &[f64], fraction: f64) -> Option<usize> {
    let best = curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return None;
    }
    let threshold = fraction * best;
    curve.iter().position(|&x| x >= threshold)
}

/// `100 (1 − mean(variant) / mean(baseline))`; `None` when the baseline
/// variance is zero or either side is empty.
pub fn variability_reduction(variant_vars: &[f64], baseline_vars: &[f64]) -> Option<f64> {
    if variant_vars.is_empty() || baseline_vars.is_empty() {
        return None;
    }
    let base = mean(baseline_vars);
    if base == 0.0 || !base.is_finite() {
        return None;
    }
    Some(100.0 * (1.0 - mean(variant_vars) / base))
}

/// Rounds `t ≥ 1` with `curve[t] < curve[t − 1]`.
pub fn count_decreases(curve: &[f64]) -> usize {
    curve.windows(2).filter(|w| w[1] < w[0]).count()
}

/// Variance of the curve's values over its last `n` rounds.
pub fn tail_variance(curve: &[f64], n: usize) -> f64 {
    variance(&curve[curve.len().saturating_sub(n)..])
}

/// Per-round variance across seeds; curves are truncated to the shortest.
pub fn across_seed_variance(curves: &[Vec<f64>]) -> Vec<f64> {
    let len = curves.iter().map(Vec::len).min().unwrap_or(0);
    (0..len).map(|t| variance(&curves.iter().map(|c| c[t]).collect::<Vec<_>>())).collect()
}

/// Final return of one run: mean over its last `max(1, ⌈T/10⌉)` rounds.
pub fn final_return(curve: &[f64]) -> f64 {
    let n = curve.len().div_ceil(10).max(1);
    mean(&curve[curve.len().saturating_sub(n)..])
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    /// Sweep point label (empty for a single run).
    pub point: String,
    pub env: String,
    pub algo: String,
    pub variant: String,
    pub seeds: usize,
    pub failed: usize,
    pub final_return_mean: f64,
    pub final_return_std: f64,
    /// `None` is the not-reached marker.
    pub rounds_to_95: Option<usize>,
    /// `None` when undefined (no vanilla baseline or zero baseline variance).
    pub variance_reduction_pct: Option<f64>,
}

/// Curves of one (point, env, algo, variant) group, one per successful seed.
#[derive(Debug, Clone, Default)]
pub struct Group {
    pub curves: Vec<Vec<f64>>,
    pub failed: usize,
}

pub type GroupKey = (String, String, String, String);

/// Builds summary rows. The variance baseline of a group is the vanilla
/// group sharing its point (minus the variant axis), env and algo.
pub fn summarize(groups: &BTreeMap<GroupKey, Group>, point_base: impl Fn(&str) -> String) -> Vec<MetricsRecord> {
    let baseline = |key: &GroupKey| -> Option<Vec<f64>> {
        let base_point = point_base(&key.0);
        groups
            .iter()
            .find(|((p, e, a, v), _)| v == "vanilla" && e == &key.1 && a == &key.2 && point_base(p) == base_point)
            .map(|(_, g)| across_seed_variance(&g.curves))
    };
    groups
        .iter()
        .map(|(key, g)| {
            let finals: Vec<f64> = g.curves.iter().map(|c| final_return(c)).collect();
            let len = g.curves.iter().map(Vec::len).min().unwrap_or(0);
            let mean_curve: Vec<f64> = (0..len).map(|t| mean(&g.curves.iter().map(|c| c[t]).collect::<Vec<_>>())).collect();
            let vars = across_seed_variance(&g.curves);
            let reduction = if g.curves.len() < 2 {
                None
            } else {
                baseline(key).and_then(|b| {
                    let n = b.len().min(vars.len());
                    variability_reduction(&vars[..n], &b[..n])
                })
            };
            MetricsRecord {
                point: key.0.clone(),
                env: key.1.clone(),
                algo: key.2.clone(),
                variant: key.3.clone(),
                seeds: g.curves.len(),
                failed: g.failed,
                final_return_mean: if finals.is_empty() { f64::NAN } else { mean(&finals) },
                final_return_std: variance(&finals).sqrt(),
                rounds_to_95: rounds_to_fraction(&trailing_mean(&mean_curve, SMOOTHING_WINDOW), 0.95),
                variance_reduction_pct: reduction,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_to_fraction_examples() {
        assert_eq!(rounds_to_fraction(&[0.0, 50.0, 90.0, 96.0, 100.0], 0.95), Some(3));
        assert_eq!(rounds_to_fraction(&[7.0; 4], 0.95), Some(0));
        assert_eq!(rounds_to_fraction(&[-10.0, -4.0, -2.0], 0.95), None);
        assert_eq!(rounds_to_fraction(&[], 0.95), None);
    }

    #[test]
    fn variability_examples() {
        assert_eq!(variability_reduction(&[50.0], &[100.0]), Some(50.0));
        assert_eq!(variability_reduction(&[100.0], &[100.0]), Some(0.0));
        assert_eq!(variability_reduction(&[150.0], &[100.0]), Some(-50.0));
        assert_eq!(variability_reduction(&[1.0], &[0.0]), None);
    }

    #[test]
    fn curve_helpers() {
        assert_eq!(trailing_mean(&[3.0, 6.0, 9.0, 0.0], 3), vec![3.0, 4.5, 6.0, 5.0]);
        assert_eq!(count_decreases(&[1.0, 0.0, 0.0, 2.0, 1.0]), 2);
        assert_eq!(tail_variance(&[100.0, 1.0, 3.0], 2), 2.0);
        assert_eq!(final_return(&[0.0; 19].iter().copied().chain([4.0]).collect::<Vec<_>>()), 2.0);
        assert_eq!(across_seed_variance(&[vec![1.0, 2.0], vec![3.0, 2.0, 9.0]]), vec![2.0, 0.0]);
    }

    #[test]
    fn summary_uses_vanilla_of_the_same_point() {
        let mut groups = BTreeMap::new();
        let key = |p: &str, v: &str| (p.to_string(), "chain".to_string(), "reinforce".to_string(), v.to_string());
        groups.insert(key("e-5_variant-vanilla", "vanilla"), Group { curves: vec![vec![0.0, 0.0], vec![2.0, 4.0]], failed: 0 });
        groups.insert(key("e-5_variant-lb", "lb"), Group { curves: vec![vec![0.0, 1.0], vec![1.0, 2.0]], failed: 1 });
        let rows = summarize(&groups, crate::experiment::label_without_variant);
        let lb = rows.iter().find(|r| r.variant == "lb").unwrap();
        // Across-seed variances: vanilla (2, 8), lb (0.5, 0.5).
        assert_eq!(lb.variance_reduction_pct, Some(90.0));
        assert_eq!(lb.failed, 1);
        let vanilla = rows.iter().find(|r| r.variant == "vanilla").unwrap();
        assert_eq!(vanilla.variance_reduction_pct, Some(0.0));
        assert_eq!(vanilla.final_return_mean, 2.0);
    }
}
