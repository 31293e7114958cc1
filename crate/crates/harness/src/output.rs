//! Result files: per-round CSV, summary CSV, failures and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use rprof_core::{RoundRecord, Tag};

use crate::config::ExperimentConfig;
use crate::experiment::{label_without_variant, CellResult, GridPoint};
use crate::metrics::{summarize, Group, GroupKey, MetricsRecord};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const FAILURES_FILE: &str = "failures.txt";

pub const RESULTS_HEADER: &str =
    "seed,round,env,algo,variant,env_steps,j_hat_old,j_hat_new,j_hat_mix,selected,lambda,oracle_j,wall_ms";

pub const SUMMARY_HEADER: &str =
    "point,env,algo,variant,seeds,failed,final_return_mean,final_return_std,rounds_to_95,variance_reduction_pct";

/// One line of `results.csv`. `env_steps` is cumulative over the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub seed: u64,
    pub round: usize,
    pub env: String,
    pub algo: String,
    pub variant: String,
    pub env_steps: usize,
    pub j_hat_old: Option<f64>,
    pub j_hat_new: Option<f64>,
    pub j_hat_mix: Option<f64>,
    pub selected: String,
    pub lambda: Option<f64>,
    pub oracle_j: Option<f64>,
    pub wall_ms: Option<f64>,
}

impl CsvRow {
    pub fn selected_j_hat(&self) -> Option<f64> {
        match self.selected.as_str() {
            "old" => self.j_hat_old,
            "new" => self.j_hat_new,
            "mix" => self.j_hat_mix,
            _ => None,
        }
    }

    /// Value plotted for the round: the oracle value when one exists,
    /// otherwise the selected candidate's estimate.
    pub fn curve_value(&self) -> Option<f64> {
        self.oracle_j.or_else(|| self.selected_j_hat())
    }
}

pub fn rows_for(cfg: &ExperimentConfig, seed: u64, records: &[RoundRecord<f64>]) -> Vec<CsvRow> {
    let mut steps = 0;
    records
        .iter()
        .map(|r| {
            steps += r.env_steps_used;
            CsvRow {
                seed,
                round: r.round,
                env: cfg.env.name().to_string(),
                algo: cfg.algo.name().to_string(),
                variant: cfg.variant.name().to_string(),
                env_steps: steps,
                j_hat_old: r.j_hat(Tag::Old),
                j_hat_new: r.j_hat(Tag::New),
                j_hat_mix: r.j_hat(Tag::Mix),
                selected: r.selected.name().to_string(),
                lambda: r.lambda,
                oracle_j: r.oracle_j,
                wall_ms: r.wall_ms,
            }
        })
        .collect()
}

pub fn write_rows(path: &Path, rows: &[CsvRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    if rows.is_empty() {
        w.write_record(RESULTS_HEADER.split(','))?;
    }
    for row in rows {
        w.serialize(row).with_context(|| format!("writing {}", path.display()))?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != RESULTS_HEADER {
        anyhow::bail!("{} does not have the results header", path.display());
    }
    r.deserialize().collect::<Result<Vec<CsvRow>, _>>().with_context(|| format!("parsing {}", path.display()))
}

pub fn render_summary(rows: &[MetricsRecord]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for m in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            m.point,
            m.env,
            m.algo,
            m.variant,
            m.seeds,
            m.failed,
            m.final_return_mean,
            m.final_return_std,
            m.rounds_to_95.map(|r| r.to_string()).unwrap_or_else(|| "-".into()),
            m.variance_reduction_pct.map(|v| v.to_string()).unwrap_or_else(|| "n/a".into()),
        );
    }
    s
}

type CurvePoint = (usize, Option<f64>);

/// Groups curves by (point, env, algo, variant); rows missing a curve value
/// end their seed's curve.
pub fn group_rows(point: &str, rows: &[CsvRow], failed: &BTreeMap<String, usize>) -> BTreeMap<GroupKey, Group> {
    let mut by_seed: BTreeMap<(GroupKey, u64), Vec<CurvePoint>> = BTreeMap::new();
    for row in rows {
        let key = (point.to_string(), row.env.clone(), row.algo.clone(), row.variant.clone());
        by_seed.entry((key, row.seed)).or_default().push((row.round, row.curve_value()));
    }
    let mut groups: BTreeMap<GroupKey, Group> = BTreeMap::new();
    for ((key, _), mut points) in by_seed {
        points.sort_by_key(|p| p.0);
        let curve: Vec<f64> = points.iter().map_while(|p| p.1).collect();
        groups.entry(key).or_default().curves.push(curve);
    }
    for group in groups.values_mut() {
        group.failed = failed.get(point).copied().unwrap_or(0);
    }
    groups
}

fn point_dir(out: &Path, point: &GridPoint) -> PathBuf {
    let label = point.label();
    if label.is_empty() {
        out.to_path_buf()
    } else {
        out.join(label)
    }
}

/// Manifest lines: resolved config, code version and metric definitions.
pub fn render_manifest(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "code_version = \"rprof-harness {}\"", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "results_header = \"{RESULTS_HEADER}\"");
    let _ = writeln!(s, "env_steps = \"cumulative training plus gating rollout steps\"");
    let _ = writeln!(s, "curve = \"oracle_j when present, else j_hat of the selected candidate\"");
    let _ = writeln!(s, "final_return = \"mean of the curve over the last ceil(T/10) rounds, then mean/std over seeds\"");
    let _ = writeln!(s, "rounds_to_95 = \"first round where the 3-round trailing mean of the seed-mean curve reaches 0.95 x its max; - if never\"");
    let _ = writeln!(s, "variance_reduction_pct = \"100 * (1 - mean_t var_seeds(variant) / mean_t var_seeds(vanilla)); n/a if undefined\"");
    s.push_str(&cfg.to_toml());
    s
}

/// Writes results, failures, summary and manifest under `cfg.out`. Sweep
/// points get their own subdirectory holding `results.csv`.
pub fn write_experiment(cfg: &ExperimentConfig, cells: &[CellResult]) -> Result<Vec<MetricsRecord>> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let mut per_point: BTreeMap<String, (GridPoint, Vec<CsvRow>)> = BTreeMap::new();
    let mut failed: BTreeMap<String, usize> = BTreeMap::new();
    let mut failures = String::new();
    for cell in cells {
        let label = cell.point.label();
        let entry = per_point.entry(label.clone()).or_insert_with(|| (cell.point, Vec::new()));
        match &cell.records {
            Ok(records) => entry.1.extend(rows_for(&cell.point.apply(cfg), cell.seed, records)),
            Err(e) => {
                *failed.entry(label.clone()).or_default() += 1;
                let _ = writeln!(failures, "point={label} seed={} error={}", cell.seed, e.replace('\n', " "));
            }
        }
    }
    let mut groups = BTreeMap::new();
    for (label, (point, rows)) in &mut per_point {
        rows.sort_by_key(|r| (r.seed, r.round));
        let dir = point_dir(&cfg.out, point);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        write_rows(&dir.join(RESULTS_FILE), rows)?;
        groups.extend(group_rows(label, rows, &failed));
    }
    let summary = summarize(&groups, label_without_variant);
    let write = |name: &str, text: &str| {
        let path = cfg.out.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    };
    write(SUMMARY_FILE, &render_summary(&summary))?;
    write(MANIFEST_FILE, &render_manifest(cfg))?;
    write(FAILURES_FILE, &failures)?;
    Ok(summary)
}

/// Recomputes the summary from the `results.csv` files under `out`
/// (the directory itself and its immediate subdirectories).
pub fn summary_from_dir(out: &Path) -> Result<Vec<MetricsRecord>> {
    let mut sources: Vec<(String, PathBuf)> = Vec::new();
    if out.join(RESULTS_FILE).is_file() {
        sources.push((String::new(), out.join(RESULTS_FILE)));
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(out)
        .with_context(|| format!("listing {}", out.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(RESULTS_FILE).is_file())
        .collect();
    entries.sort();
    for dir in entries {
        let label = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        sources.push((label, dir.join(RESULTS_FILE)));
    }
    if sources.is_empty() {
        anyhow::bail!("no {RESULTS_FILE} found under {}", out.display());
    }
    let failed = read_failures(&out.join(FAILURES_FILE))?;
    let mut groups = BTreeMap::new();
    for (label, path) in sources {
        groups.extend(group_rows(&label, &read_rows(&path)?, &failed));
    }
    Ok(summarize(&groups, label_without_variant))
}

fn read_failures(path: &Path) -> Result<BTreeMap<String, usize>> {
    let mut failed = BTreeMap::new();
    if !path.is_file() {
        return Ok(failed);
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    for line in text.lines() {
        if let Some(label) = line.strip_prefix("point=").and_then(|l| l.split(' ').next()) {
            *failed.entry(label.to_string()).or_default() += 1;
        }
    }
    Ok(failed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: u64, round: usize, selected: &str) -> CsvRow {
        CsvRow {
            seed,
            round,
            env: "cartpole".into(),
            algo: "reinforce".into(),
            variant: "lb".into(),
            env_steps: 10 * (round + 1),
            j_hat_old: Some(1.5),
            j_hat_new: Some(2.0),
            j_hat_mix: None,
            selected: selected.into(),
            lambda: None,
            oracle_j: None,
            wall_ms: None,
        }
    }

    #[test]
    fn csv_roundtrip_keeps_header_and_empty_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(RESULTS_FILE);
        let rows = vec![row(0, 0, "new"), row(0, 1, "old")];
        write_rows(&path, &rows).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), RESULTS_HEADER);
        assert_eq!(text.lines().nth(1).unwrap(), "0,0,cartpole,reinforce,lb,10,1.5,2.0,,new,,,");
        assert_eq!(read_rows(&path).unwrap(), rows);
        assert_eq!(rows[1].curve_value(), Some(1.5));
    }

    #[test]
    fn io_errors_name_the_path() {
        let err = read_rows(Path::new("/nonexistent/results.csv")).unwrap_err();
        assert!(format!("{err:#}").contains("/nonexistent/results.csv"));
    }
}
