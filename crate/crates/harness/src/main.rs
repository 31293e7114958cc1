use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use rprof_harness::config::{parse_env, parse_list, parse_seeds, parse_variant, AlgoName, ExperimentConfig};
use rprof_harness::output::{render_summary, summary_from_dir};
use rprof_harness::{run_experiment, verify, write_experiment};

#[derive(Parser)]
#[command(name = "rprof", version, about = "Reward-profiled policy-gradient experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration over the seed list.
    Run(RunArgs),
    /// Run the grid product of the sweep axes.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated E values.
        #[arg(long, value_name = "LIST")]
        grid_eval_rollouts: Option<String>,
        /// Comma-separated variants.
        #[arg(long, value_name = "LIST")]
        grid_variants: Option<String>,
        /// Comma-separated fixed λ values.
        #[arg(long, value_name = "LIST")]
        grid_lambdas: Option<String>,
    },
    /// Run the verification suites and print one line per check.
    Verify {
        /// Only run the checks with these ids (comma-separated).
        #[arg(long, value_name = "LIST")]
        only: Option<String>,
    },
    /// Recompute the summary from the results under an output directory.
    Report {
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat TOML config; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["chain", "cartpole", "reacher"])]
    env: Option<String>,
    #[arg(long, value_parser = ["reinforce", "baseline", "ppo", "ddpg"])]
    algo: Option<String>,
    #[arg(long, value_parser = ["vanilla", "lb", "mu", "tp"])]
    variant: Option<String>,
    #[arg(long)]
    eval_rollouts: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Sample λ ~ Beta(a, b) each round.
    #[arg(long, value_name = "A,B")]
    beta: Option<String>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    steps_per_round: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Inclusive range `a..b` or a comma list.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    independent_eval_seeds: bool,
    #[arg(long, value_parser = ["full", "actor"])]
    rollback: Option<String>,
    /// Record per-round wall time (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
}

impl RunArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.env {
            cfg.env = parse_env(v)?;
        }
        if let Some(v) = &self.algo {
            cfg.algo = v.parse::<AlgoName>()?;
        }
        if let Some(v) = &self.variant {
            cfg.variant = parse_variant(v)?;
        }
        if let Some(v) = self.eval_rollouts {
            cfg.eval_rollouts = v;
        }
        if let Some(v) = self.lambda {
            cfg.lambda = v;
            cfg.beta = None;
        }
        if let Some(v) = &self.beta {
            let ab: Vec<f64> = parse_list(v)?;
            anyhow::ensure!(ab.len() == 2, "--beta expects `a,b`");
            cfg.beta = Some((ab[0], ab[1]));
        }
        if let Some(v) = self.rounds {
            cfg.rounds = v;
        }
        if let Some(v) = self.steps_per_round {
            cfg.steps_per_round = v;
        }
        if let Some(v) = self.learning_rate {
            cfg.learning_rate = Some(v);
        }
        if let Some(v) = &self.seeds {
            cfg.seeds = parse_seeds(v)?;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if self.independent_eval_seeds {
            cfg.independent_eval_seeds = true;
        }
        if let Some(v) = &self.rollback {
            cfg.merge_toml(&format!("rollback = {v:?}"))?;
        }
        if self.timing {
            cfg.timing = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cfg: &ExperimentConfig) -> Result<()> {
    let cells = run_experiment(cfg)?;
    let failures = cells.iter().filter(|c| c.records.is_err()).count();
    let summary = write_experiment(cfg, &cells)?;
    print!("{}", render_summary(&summary));
    if failures > 0 {
        eprintln!("{failures} cell(s) failed; see {}", cfg.out.join("failures.txt").display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(args) => execute(&args.resolve()?)?,
        Command::Sweep { run, grid_eval_rollouts, grid_variants, grid_lambdas } => {
            let mut cfg = run.resolve()?;
            if let Some(v) = grid_eval_rollouts {
                cfg.grid.eval_rollouts = parse_list(&v)?;
            }
            if let Some(v) = grid_variants {
                cfg.grid.variants = v.split(',').map(|s| parse_variant(s.trim())).collect::<Result<_>>()?;
            }
            if let Some(v) = grid_lambdas {
                cfg.grid.lambdas = parse_list(&v)?;
            }
            anyhow::ensure!(!cfg.grid.is_empty(), "sweep needs at least one grid axis");
            cfg.validate()?;
            execute(&cfg)?;
        }
        Command::Verify { only } => {
            let ids: Option<Vec<u32>> = only.map(|s| parse_list(&s)).transpose()?;
            let outcomes = verify::run_all(ids.as_deref());
            for o in &outcomes {
                println!("{o}");
            }
            if outcomes.iter().any(|o| !o.passed) {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Report { out } => {
            let summary = summary_from_dir(&out).with_context(|| format!("recomputing summary for {}", out.display()))?;
            print!("{}", render_summary(&summary));
        }
    }
    Ok(ExitCode::SUCCESS)
}
