//! Analysis, fitting and comparison of simulated runs, independent of where
//! the records came from.

use anyhow::{anyhow, bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use swarm_lob::draws::{
    autocorrelation, diffusion_and_hurst, draw_sizes, shuffle_gaps, CumulativeDistribution,
};
use swarm_lob::flow::ModelKind;
use swarm_lob::sim::{replication_seed, SimRecord};
use swarm_lob::stats::{LinFit, MeanSd};
use swarm_lob::tail::{
    fit_lognormal_lsq, fit_lognormal_mle, fit_powerlaw_mle, ks_two_sample_binned, select_tail, semilog_linfit,
    sum_sq_diff, tail_points, KsResult, LogNormalTailFit, PowerLawTailFit, SimplexOptions,
};

use crate::config::AnalysisConfig;

/// Stream index mixed into a replication seed for its gap shuffle.
const SHUFFLE_STREAM: u64 = 0x5348_5546;

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisSummary {
    pub model: ModelKind,
    pub replications: usize,
    pub steps: u64,
    pub trade_ratio: MeanSd,
    pub swarm_ratio: MeanSd,
    /// Draws per step.
    pub draw_ratio: MeanSd,
    pub hurst: MeanSd,
    /// Largest `|rho(k)|`, `1 <= k <= max_lag`, over all replications.
    pub max_abs_autocorrelation: f64,
    pub worst_lag: usize,
    /// Fewest lag-1 gaps in any replication.
    pub min_gap_count: usize,
    pub draw_count: usize,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub summary: AnalysisSummary,
    /// `(tau, sigma)` averaged over replications.
    pub diffusion: Vec<(usize, f64)>,
    pub hurst_per_rep: Vec<f64>,
    /// `rho(0..=max_lag)` averaged over replications.
    pub autocorrelation: Vec<f64>,
    pub draws_per_rep: Vec<Vec<u64>>,
    pub draws: CumulativeDistribution,
    pub shuffled: CumulativeDistribution,
}

pub fn analyze(model: ModelKind, records: &[SimRecord], opts: &AnalysisConfig) -> Result<Analysis> {
    if records.is_empty() {
        bail!("no replications to analyze");
    }
    let mut hurst_per_rep = Vec::with_capacity(records.len());
    let mut sigma_sum = vec![0.0; opts.taus.len()];
    let mut rho_sum = vec![0.0; opts.max_lag + 1];
    let (mut worst, mut worst_lag) = (0.0f64, 0);
    let mut min_gap_count = usize::MAX;
    let mut draws_per_rep = Vec::with_capacity(records.len());
    let mut shuffled_all = Vec::new();
    let mut draw_ratios = Vec::with_capacity(records.len());

    for (i, rec) in records.iter().enumerate() {
        let ctx = || format!("replication {i} (seed {})", rec.seed);
        if rec.ticks.is_empty() {
            return Err(anyhow!("no ticks")).with_context(ctx);
        }
        let diffusion = diffusion_and_hurst(&rec.ticks, &opts.taus).with_context(ctx)?;
        for (acc, (_, sigma)) in sigma_sum.iter_mut().zip(&diffusion.points) {
            *acc += sigma;
        }
        hurst_per_rep.push(diffusion.hurst);

        let gaps: Vec<f64> = rec.ticks.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
        min_gap_count = min_gap_count.min(gaps.len());
        let rho = autocorrelation(&gaps, opts.max_lag).with_context(ctx)?;
        for (k, r) in rho.iter().enumerate() {
            rho_sum[k] += r;
            if k >= 1 && r.abs() > worst {
                worst = r.abs();
                worst_lag = k;
            }
        }

        let sizes = draw_sizes(&rec.ticks, opts.flat_policy);
        if rec.counters.steps > 0 {
            draw_ratios.push(sizes.len() as f64 / rec.counters.steps as f64);
        }
        draws_per_rep.push(sizes);

        let mut rng = ChaCha8Rng::seed_from_u64(replication_seed(rec.seed, SHUFFLE_STREAM));
        shuffled_all.extend(draw_sizes(&shuffle_gaps(&rec.ticks, &mut rng), opts.flat_policy));
    }

    let n = records.len() as f64;
    let pooled: Vec<u64> = draws_per_rep.iter().flatten().copied().collect();
    let draws = CumulativeDistribution::new(&pooled, Some(opts.class_width))?;
    let shuffled = CumulativeDistribution::new(&shuffled_all, Some(opts.class_width))?;
    let trade: Vec<f64> = records.iter().filter_map(SimRecord::trade_ratio).collect();
    let swarm: Vec<f64> = records.iter().filter_map(SimRecord::swarm_ratio).collect();

    Ok(Analysis {
        summary: AnalysisSummary {
            model,
            replications: records.len(),
            steps: records[0].counters.steps,
            trade_ratio: MeanSd::of(&trade),
            swarm_ratio: MeanSd::of(&swarm),
            draw_ratio: MeanSd::of(&draw_ratios),
            hurst: MeanSd::of(&hurst_per_rep),
            max_abs_autocorrelation: worst,
            worst_lag,
            min_gap_count,
            draw_count: pooled.len(),
        },
        diffusion: opts.taus.iter().zip(&sigma_sum).map(|(&t, s)| (t, s / n)).collect(),
        hurst_per_rep,
        autocorrelation: rho_sum.iter().map(|r| r / n).collect(),
        draws_per_rep,
        draws,
        shuffled,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TailSummary {
    pub s: u64,
    pub m: f64,
    pub n: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub model: ModelKind,
    pub tail: TailSummary,
    pub lognormal_mle: LogNormalTailFit,
    pub lognormal_lsq: LogNormalTailFit,
    /// Power law fitted to the pooled tail.
    pub powerlaw: PowerLawTailFit,
    /// Power index fitted to each replication's own tail.
    pub powerlaw_per_rep: Vec<Option<f64>>,
    pub powerlaw_index: MeanSd,
    pub semilog: LinFit,
    pub semilog_shuffled: LinFit,
}

pub fn fit(analysis: &Analysis, opts: &AnalysisConfig) -> Result<FitReport> {
    let model = analysis.summary.model;
    let pooled: Vec<u64> = analysis.draws_per_rep.iter().flatten().copied().collect();
    let tail = select_tail(&pooled, opts.top_fraction, opts.tail_class_width).context("tail selection")?;
    let simplex = SimplexOptions::default();
    let mle = fit_lognormal_mle(&tail, &simplex).context("log-normal maximum likelihood")?;
    let points = tail_points(&analysis.draws, tail.s);
    let lsq = fit_lognormal_lsq(&points, tail.s, tail.m, opts.residual_scale, &simplex).context("log-normal least squares")?;
    let powerlaw = fit_powerlaw_mle(&tail, opts.continuity_correction).context("power-law fit")?;
    let powerlaw_per_rep: Vec<Option<f64>> = analysis
        .draws_per_rep
        .iter()
        .map(|sizes| {
            select_tail(sizes, opts.top_fraction, opts.tail_class_width)
                .and_then(|t| fit_powerlaw_mle(&t, opts.continuity_correction))
                .ok()
                .map(|f| f.exponent)
        })
        .collect();
    let fitted: Vec<f64> = powerlaw_per_rep.iter().flatten().copied().collect();
    let semilog = semilog_linfit(&analysis.draws, opts.cutoff).context("linearization")?;
    let semilog_shuffled = semilog_linfit(&analysis.shuffled, opts.cutoff).context("shuffled linearization")?;
    Ok(FitReport {
        model,
        tail: TailSummary { s: tail.s, m: tail.m, n: tail.len(), total: tail.total },
        lognormal_mle: mle,
        lognormal_lsq: lsq,
        powerlaw,
        powerlaw_index: MeanSd::of(&fitted),
        powerlaw_per_rep,
        semilog,
        semilog_shuffled,
    })
}

/// Rows `(x, empirical, log-normal MLE, log-normal LSQ, power law)` over the
/// fitted tail.
pub fn tail_curve(analysis: &Analysis, report: &FitReport) -> Vec<(u64, f64, Option<f64>, Option<f64>, f64)> {
    let mle = report.lognormal_mle.model();
    let lsq = report.lognormal_lsq.model();
    tail_points(&analysis.draws, report.tail.s)
        .into_iter()
        .map(|(x, p)| {
            let xf = x as f64;
            (x, p, mle.map(|m| m.ccdf(xf)), lsq.map(|m| m.ccdf(xf)), report.powerlaw.ccdf(xf))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub names: Vec<String>,
    /// `ks[i][j]` compares run `i` with run `j`.
    pub ks: Vec<Vec<KsResult>>,
    pub sum_sq: Vec<Vec<f64>>,
    pub cutoff: u64,
    /// Sum of squares (following vs plain) over (contrary vs plain), when all
    /// three models are present.
    pub sum_sq_ratio: Option<f64>,
    /// Whether KS(plain, following) > KS(following, contrary) > KS(contrary,
    /// plain) on the scaled statistic, when all three models are present.
    pub ks_ordering: Option<bool>,
}

pub fn compare(runs: &[(String, &CumulativeDistribution)], opts: &AnalysisConfig) -> Result<Comparison> {
    if runs.len() < 2 {
        bail!("compare needs at least 2 runs, got {}", runs.len());
    }
    let mut ks = Vec::with_capacity(runs.len());
    let mut sum_sq = Vec::with_capacity(runs.len());
    for (_, a) in runs {
        let mut ks_row = Vec::with_capacity(runs.len());
        let mut ss_row = Vec::with_capacity(runs.len());
        for (_, b) in runs {
            ks_row.push(ks_two_sample_binned(a, b, opts.class_width, opts.ks_cutoff)?);
            ss_row.push(sum_sq_diff(a, b, opts.cutoff));
        }
        ks.push(ks_row);
        sum_sq.push(ss_row);
    }
    let index = |m: ModelKind| runs.iter().position(|(n, _)| n == m.name());
    let (mut sum_sq_ratio, mut ks_ordering) = (None, None);
    if let (Some(p), Some(f), Some(c)) = (index(ModelKind::Plain), index(ModelKind::Following), index(ModelKind::Contrary)) {
        sum_sq_ratio = Some(sum_sq[f][p] / sum_sq[c][p]);
        let (pf, fc, cp) = (ks[p][f].scaled, ks[f][c].scaled, ks[c][p].scaled);
        ks_ordering = Some(pf > fc && fc > cp);
    }
    Ok(Comparison {
        names: runs.iter().map(|(n, _)| n.clone()).collect(),
        ks,
        sum_sq,
        cutoff: opts.cutoff,
        sum_sq_ratio,
        ks_ordering,
    })
}
