//! Subcommands. Each one reads its inputs from disk, so the stages can be
//! run separately; `reproduce` chains them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use swarm_lob::flow::ModelKind;
use swarm_lob::sim::{replication_seed, run, SimRecord};
use swarm_lob::stats::MeanSd;
use rayon::prelude::*;

use crate::checks::{self, Check, ModelResult};
use crate::config::{AnalysisConfig, ExperimentConfig};
use crate::io::{self, num, opt_num, LoadedRun, RunManifest};
use crate::pipeline::{self, Analysis, Comparison, FitReport};

pub const RUNS_DIR: &str = "runs";
pub const ANALYSIS_DIR: &str = "analysis";
pub const FIT_DIR: &str = "fit";
pub const COMPARE_DIR: &str = "compare";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

#[derive(Debug, Clone, Serialize)]
struct RunSummary {
    model: ModelKind,
    replications: u32,
    steps: u64,
    master_seed: u64,
    seed_override: Option<u64>,
    config_sha256: String,
    trade_ratio: MeanSd,
    swarm_ratio: MeanSd,
}

/// Runs every model in `config` and writes one directory per replication
/// with `ticks.csv` and `manifest.json`. Returns the per-model run
/// directories.
pub fn simulate(config: &ExperimentConfig, seed_override: Option<u64>) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let config_sha256 = config.sha256();
    let mut dirs = Vec::new();
    for &model in &config.models {
        let sim = config.sim_config(model);
        let run_dir = config.output.dir.join(RUNS_DIR).join(model.name());
        if run_dir.exists() {
            fs::remove_dir_all(&run_dir).with_context(|| format!("clearing {}", run_dir.display()))?;
        }
        create_dir(&run_dir)?;
        let records: Vec<SimRecord> = (0..u64::from(sim.replications))
            .into_par_iter()
            .map(|rep| run(&sim, replication_seed(sim.seed, rep)))
            .collect();
        for (rep, rec) in records.iter().enumerate() {
            let dir = io::replication_dir(&run_dir, rep as u32);
            create_dir(&dir)?;
            let ticks_sha256 = io::write_ticks(&dir.join(io::TICKS_FILE), &rec.ticks)?;
            let manifest = RunManifest {
                version: env!("CARGO_PKG_VERSION").to_string(),
                model,
                replication: rep as u32,
                seed: rec.seed,
                master_seed: sim.seed,
                seed_override,
                rng: sim.rng.name().to_string(),
                steps: sim.steps,
                expire_policy: sim.expire_policy,
                flow: sim.flow,
                config_sha256: config_sha256.clone(),
                counters: rec.counters,
                trade_ratio: rec.trade_ratio(),
                swarm_ratio: rec.swarm_ratio(),
                ticks_file: io::TICKS_FILE.to_string(),
                ticks_sha256,
            };
            io::write_json(&dir.join(io::MANIFEST_FILE), &manifest)?;
        }
        let trade: Vec<f64> = records.iter().filter_map(SimRecord::trade_ratio).collect();
        let swarm: Vec<f64> = records.iter().filter_map(SimRecord::swarm_ratio).collect();
        let summary = RunSummary {
            model,
            replications: sim.replications,
            steps: sim.steps,
            master_seed: sim.seed,
            seed_override,
            config_sha256: config_sha256.clone(),
            trade_ratio: MeanSd::of(&trade),
            swarm_ratio: MeanSd::of(&swarm),
        };
        io::write_json(&run_dir.join("run.json"), &summary)?;
        dirs.push(run_dir);
    }
    Ok(dirs)
}

/// Loads a run and writes diffusion, autocorrelation and draw distribution
/// tables to `<run_dir>/analysis`.
pub fn analyze(run_dir: &Path, opts: &AnalysisConfig) -> Result<Analysis> {
    let loaded = io::load_run(run_dir)?;
    let analysis = pipeline::analyze(loaded.model, &loaded.records, opts).with_context(|| format!("analyzing {}", run_dir.display()))?;
    write_analysis(run_dir, &loaded, &analysis)?;
    Ok(analysis)
}

fn write_analysis(run_dir: &Path, loaded: &LoadedRun, a: &Analysis) -> Result<()> {
    let out = run_dir.join(ANALYSIS_DIR);
    create_dir(&out)?;
    io::write_json(&out.join("analysis.json"), &a.summary)?;
    io::write_csv(&out.join("diffusion.csv"), &["tau", "sigma"], a.diffusion.iter().map(|(t, s)| vec![t.to_string(), num(*s)]))?;
    io::write_csv(
        &out.join("hurst.csv"),
        &["replication", "seed", "hurst"],
        a.hurst_per_rep.iter().zip(&loaded.manifests).map(|(h, m)| vec![m.replication.to_string(), m.seed.to_string(), num(*h)]),
    )?;
    io::write_csv(&out.join("autocorrelation.csv"), &["lag", "rho"], a.autocorrelation.iter().enumerate().map(|(k, r)| vec![k.to_string(), num(*r)]))?;
    for (name, dist) in [("draw_ccdf.csv", &a.draws), ("shuffled_ccdf.csv", &a.shuffled)] {
        io::write_csv(
            &out.join(name),
            &["size", "count_at_least", "rel"],
            dist.points.iter().map(|p| vec![p.size.to_string(), p.count_at_least.to_string(), num(p.rel)]),
        )?;
    }
    let binned = a.draws.binned.clone().unwrap_or_default();
    io::write_csv(&out.join("table3.csv"), &["class", "rel"], binned.iter().map(|b| vec![b.boundary.to_string(), num(b.rel)]))?;
    Ok(())
}

/// Analyzes a run and writes tail fits to `<run_dir>/fit`.
pub fn fit(run_dir: &Path, opts: &AnalysisConfig) -> Result<(Analysis, FitReport)> {
    let loaded = io::load_run(run_dir)?;
    let analysis = pipeline::analyze(loaded.model, &loaded.records, opts).with_context(|| format!("analyzing {}", run_dir.display()))?;
    let report = pipeline::fit(&analysis, opts).with_context(|| format!("fitting {}", run_dir.display()))?;
    write_fit(run_dir, &loaded, &analysis, &report)?;
    Ok((analysis, report))
}

fn write_fit(run_dir: &Path, loaded: &LoadedRun, a: &Analysis, r: &FitReport) -> Result<()> {
    let out = run_dir.join(FIT_DIR);
    create_dir(&out)?;
    io::write_json(&out.join("fit.json"), r)?;
    io::write_csv(
        &out.join("tail_ccdf.csv"),
        &["x", "empirical", "lognormal_mle", "lognormal_lsq", "powerlaw"],
        pipeline::tail_curve(a, r).into_iter().map(|(x, e, m, l, p)| vec![x.to_string(), num(e), opt_num(m), opt_num(l), num(p)]),
    )?;
    io::write_csv(
        &out.join("powerlaw_per_rep.csv"),
        &["replication", "seed", "exponent"],
        r.powerlaw_per_rep.iter().zip(&loaded.manifests).map(|(e, m)| vec![m.replication.to_string(), m.seed.to_string(), opt_num(*e)]),
    )?;
    Ok(())
}

/// Compares the draw distributions of two or more runs and writes the KS and
/// sum-of-squares matrices to `out`.
pub fn compare(run_dirs: &[PathBuf], opts: &AnalysisConfig, out: &Path) -> Result<Comparison> {
    if run_dirs.len() < 2 {
        bail!("compare needs at least 2 runs, got {}", run_dirs.len());
    }
    let mut analyses = Vec::with_capacity(run_dirs.len());
    for dir in run_dirs {
        let loaded = io::load_run(dir)?;
        let a = pipeline::analyze(loaded.model, &loaded.records, opts).with_context(|| format!("analyzing {}", dir.display()))?;
        analyses.push((run_name(&loaded, run_dirs), a));
    }
    let comparison = compare_analyses(&analyses, opts)?;
    write_comparison(out, &analyses, &comparison)?;
    Ok(comparison)
}

/// Runs are named by model unless two share a model, then by directory.
fn run_name(loaded: &LoadedRun, all: &[PathBuf]) -> String {
    let same_model = all.iter().filter(|d| d.file_name() == loaded.dir.file_name()).count();
    if same_model > 1 {
        loaded.dir.display().to_string()
    } else {
        loaded.model.name().to_string()
    }
}

fn compare_analyses(analyses: &[(String, Analysis)], opts: &AnalysisConfig) -> Result<Comparison> {
    let runs: Vec<(String, &swarm_lob::draws::CumulativeDistribution)> = analyses.iter().map(|(n, a)| (n.clone(), &a.draws)).collect();
    pipeline::compare(&runs, opts)
}

fn write_comparison(out: &Path, analyses: &[(String, Analysis)], c: &Comparison) -> Result<()> {
    create_dir(out)?;
    io::write_json(&out.join("comparison.json"), c)?;
    let mut pairs = Vec::new();
    for i in 0..c.names.len() {
        for j in i + 1..c.names.len() {
            let k = &c.ks[i][j];
            pairs.push(vec![
                c.names[i].clone(),
                c.names[j].clone(),
                num(k.d),
                num(k.scaled),
                k.at.to_string(),
                k.n_a.to_string(),
                k.n_b.to_string(),
                num(c.sum_sq[i][j]),
            ]);
        }
    }
    io::write_csv(&out.join("pairs.csv"), &["a", "b", "ks_d", "ks_scaled", "ks_at", "n_a", "n_b", "sum_sq"], pairs)?;
    let mut header = vec!["run"];
    header.extend(c.names.iter().map(String::as_str));
    let matrix = |cell: &dyn Fn(usize, usize) -> f64| {
        (0..c.names.len()).map(|i| std::iter::once(c.names[i].clone()).chain((0..c.names.len()).map(|j| num(cell(i, j)))).collect()).collect::<Vec<Vec<String>>>()
    };
    io::write_csv(&out.join("ks_matrix.csv"), &header, matrix(&|i, j| c.ks[i][j].scaled))?;
    io::write_csv(&out.join("sum_sq_matrix.csv"), &header, matrix(&|i, j| c.sum_sq[i][j]))?;

    let width = analyses[0].1.draws.class_width.unwrap_or(15);
    let upto = analyses.iter().map(|(_, a)| a.draws.max_size()).max().unwrap_or(0);
    let mut header = vec!["class"];
    header.extend(c.names.iter().map(String::as_str));
    let rows = (0..=upto / width).map(|k| {
        let b = k * width;
        std::iter::once(b.to_string()).chain(analyses.iter().map(|(_, a)| num(a.draws.rel_at_least(b)))).collect()
    });
    io::write_csv(&out.join("table3.csv"), &header, rows)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproduceSummary {
    pub config_sha256: String,
    pub master_seed: u64,
    pub steps: u64,
    pub replications: u32,
    pub full_scale: bool,
    pub checks: Vec<Check>,
}

/// simulate, analyze, fit and compare for all three models, then checks the
/// results against the published values. Stage failures carry the stage
/// name.
pub fn reproduce(config: &ExperimentConfig, seed_override: Option<u64>) -> Result<ReproduceSummary> {
    let mut config = config.clone();
    config.models = ModelKind::ALL.to_vec();
    let dirs = simulate(&config, seed_override).context("stage simulate")?;
    let opts = &config.analysis;
    let mut analyses = Vec::new();
    let mut fits = Vec::new();
    for dir in &dirs {
        let a = analyze(dir, opts).context("stage analyze")?;
        let (_, f) = fit(dir, opts).context("stage fit")?;
        analyses.push((a.summary.model.name().to_string(), a));
        fits.push(f);
    }
    let comparison = compare_analyses(&analyses, opts).context("stage compare")?;
    let out = config.output.dir.join(COMPARE_DIR);
    write_comparison(&out, &analyses, &comparison).context("stage compare")?;

    let results: BTreeMap<ModelKind, ModelResult<'_>> =
        analyses.iter().zip(&fits).map(|((_, a), f)| (a.summary.model, ModelResult { analysis: a, fit: f })).collect();
    let walk = checks::random_walk_hurst(config.simulation.seed, 1_000_000).context("stage report")?;
    let full_scale = config.is_full_scale();
    let checks = checks::evaluate(&results, &comparison, walk, full_scale).context("stage report")?;
    let summary = ReproduceSummary {
        config_sha256: config.sha256(),
        master_seed: config.simulation.seed,
        steps: config.simulation.steps,
        replications: config.simulation.replications,
        full_scale,
        checks,
    };
    io::write_json(&config.output.dir.join("summary.json"), &summary)?;
    io::write_csv(
        &config.output.dir.join("summary.csv"),
        &["id", "check", "published", "computed", "tolerance", "pass"],
        summary.checks.iter().map(|c| {
            vec![c.id.to_string(), c.name.clone(), c.published.clone(), c.computed.clone(), c.tolerance.clone(), c.pass.to_string()]
        }),
    )?;
    Ok(summary)
}
