use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use swarm_lob::draws::FlatPolicy;
use swarm_lob::flow::{FlatMoves, ModelKind, TrendComparator};
use swarm_lob::sim::ExpirePolicy;
use swarm_lob_cli::commands::{self, COMPARE_DIR};
use swarm_lob_cli::config::ExperimentConfig;

/// Order-flow market simulator with swarm (trend-following / contrary)
/// traders, and the statistics used to study its price draws.
#[derive(Parser)]
#[command(name = "swarm-lob", version, args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the selected models and write tick files.
    Simulate(Common),
    /// Diffusion, autocorrelation and draw distributions of existing runs.
    Analyze(RunArgs),
    /// Tail fits (log-normal, power law, semilog) of existing runs.
    Fit(RunArgs),
    /// KS and sum-of-squares comparison of two or more runs.
    Compare(RunArgs),
    /// Simulate, analyze, fit and compare all three models and check the
    /// results against the published values.
    Reproduce(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Model to run; repeat for several (default: from configuration).
    #[arg(long = "model", value_parser = parse_model)]
    models: Vec<ModelKind>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    replications: Option<u32>,
    /// `all` or `one`.
    #[arg(long, value_parser = parse_expire)]
    expire_policy: Option<ExpirePolicy>,
    /// `zero`, `skip` or `break`.
    #[arg(long, value_parser = parse_flat_policy)]
    flat_policy: Option<FlatPolicy>,
    /// Trend rule as `geN` (at least N of the window) or `gtN` (more than N).
    #[arg(long, value_parser = parse_trend_cmp)]
    trend_cmp: Option<(TrendComparator, usize)>,
    /// `ignore` or `neutral`.
    #[arg(long, value_parser = parse_flat_moves)]
    flat_moves: Option<FlatMoves>,
}

#[derive(Args)]
struct RunArgs {
    /// Run directories (`<out>/runs/<model>`).
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// TOML configuration supplying the analysis options.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// `zero`, `skip` or `break`.
    #[arg(long, value_parser = parse_flat_policy)]
    flat_policy: Option<FlatPolicy>,
    /// Where `compare` writes its tables (default: `<out>/compare` next to
    /// the first run).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_expire(s: &str) -> Result<ExpirePolicy, String> {
    match s {
        "all" => Ok(ExpirePolicy::All),
        "one" => Ok(ExpirePolicy::One),
        _ => Err(format!("expected all or one, got `{s}`")),
    }
}

fn parse_flat_policy(s: &str) -> Result<FlatPolicy, String> {
    match s {
        "zero" => Ok(FlatPolicy::Zero),
        "skip" => Ok(FlatPolicy::Skip),
        "break" => Ok(FlatPolicy::Break),
        _ => Err(format!("expected zero, skip or break, got `{s}`")),
    }
}

fn parse_flat_moves(s: &str) -> Result<FlatMoves, String> {
    match s {
        "ignore" => Ok(FlatMoves::Ignore),
        "neutral" => Ok(FlatMoves::Neutral),
        _ => Err(format!("expected ignore or neutral, got `{s}`")),
    }
}

fn parse_trend_cmp(s: &str) -> Result<(TrendComparator, usize), String> {
    let (cmp, n) = if let Some(n) = s.strip_prefix("ge") {
        (TrendComparator::AtLeast, n)
    } else if let Some(n) = s.strip_prefix("gt") {
        (TrendComparator::MoreThan, n)
    } else {
        return Err(format!("expected geN or gtN, got `{s}`"));
    };
    let n = n.parse().map_err(|_| format!("bad count in `{s}`"))?;
    Ok((cmp, n))
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring thread pool")?;
    }
    Ok(())
}

fn load_config(path: &Option<PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn build_config(c: &Common) -> Result<ExperimentConfig> {
    let mut config = load_config(&c.config)?;
    if let Some(seed) = c.seed {
        config.simulation.seed = seed;
    }
    if let Some(out) = &c.out {
        config.output.dir = out.clone();
    }
    if !c.models.is_empty() {
        config.models = c.models.clone();
    }
    if let Some(steps) = c.steps {
        config.simulation.steps = steps;
    }
    if let Some(r) = c.replications {
        config.simulation.replications = r;
    }
    if let Some(p) = c.expire_policy {
        config.simulation.expire_policy = p;
    }
    if let Some(p) = c.flat_policy {
        config.analysis.flat_policy = p;
    }
    if let Some((cmp, n)) = c.trend_cmp {
        config.flow.trend_cmp = cmp;
        config.flow.trend_threshold = n;
    }
    if let Some(f) = c.flat_moves {
        config.flow.flat_moves = f;
    }
    config.validate().context("invalid configuration")?;
    Ok(config)
}

fn run_config(r: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = load_config(&r.config)?;
    if let Some(p) = r.flat_policy {
        config.analysis.flat_policy = p;
    }
    config.validate().context("invalid configuration")?;
    Ok(config)
}

fn main_inner(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate(c) => {
            set_threads(c.threads)?;
            let config = build_config(&c)?;
            for dir in commands::simulate(&config, c.seed)? {
                println!("{}", dir.display());
            }
        }
        Command::Analyze(r) => {
            set_threads(r.threads)?;
            let config = run_config(&r)?;
            for dir in &r.runs {
                let a = commands::analyze(dir, &config.analysis)?;
                let s = &a.summary;
                println!(
                    "{}: trade ratio {:.4}, draw ratio {:.4}, H {:.4}, max |rho| {:.4} at lag {}",
                    s.model, s.trade_ratio.mean, s.draw_ratio.mean, s.hurst.mean, s.max_abs_autocorrelation, s.worst_lag
                );
            }
        }
        Command::Fit(r) => {
            set_threads(r.threads)?;
            let config = run_config(&r)?;
            for dir in &r.runs {
                let (_, f) = commands::fit(dir, &config.analysis)?;
                println!(
                    "{}: s {} m {:.5}; log-normal MLE alpha {:.3} beta {:.3} ({:?}); LSQ alpha {:.3} beta {:.3}; power index {:.3}",
                    f.model,
                    f.tail.s,
                    f.tail.m,
                    f.lognormal_mle.alpha,
                    f.lognormal_mle.beta,
                    f.lognormal_mle.status,
                    f.lognormal_lsq.alpha,
                    f.lognormal_lsq.beta,
                    f.powerlaw.exponent
                );
            }
        }
        Command::Compare(r) => {
            set_threads(r.threads)?;
            let config = run_config(&r)?;
            let out = match &r.out {
                Some(o) => o.clone(),
                None => {
                    let first = r.runs.first().ok_or_else(|| anyhow!("no runs given"))?;
                    // <out>/runs/<model> -> <out>/compare
                    first.parent().and_then(|p| p.parent()).map(|p| p.join(COMPARE_DIR)).unwrap_or_else(|| PathBuf::from(COMPARE_DIR))
                }
            };
            let c = commands::compare(&r.runs, &config.analysis, &out)?;
            for i in 0..c.names.len() {
                for j in i + 1..c.names.len() {
                    println!("{} vs {}: KS {:.4}, sum of squares {:.4e}", c.names[i], c.names[j], c.ks[i][j].scaled, c.sum_sq[i][j]);
                }
            }
        }
        Command::Reproduce(c) => {
            set_threads(c.threads)?;
            let config = build_config(&c)?;
            let summary = commands::reproduce(&config, c.seed)?;
            for check in &summary.checks {
                println!("{}", check.line());
            }
            return Ok(summary.checks.iter().all(|c| c.pass));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
