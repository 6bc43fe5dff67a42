//! Tail selection, tail fits and distribution comparisons for draw sizes.
//!
//! The log-normal tail model for `x >= s` is
//!
//! ```text
//! P>(x) = m ∫_x^∞ C(α, β) (1/t) exp(-α L(t) - β L(t)²) dt,   L(t) = ln(t / s)
//! C(α, β) = [ sqrt(π/β) exp(α²/4β) (1 - Φ(α / sqrt(2β))) ]⁻¹
//! ```
//!
//! Substituting `u = ln(t/s)` turns the integral into a Gaussian tail, so
//! `P>(x) = m Q(a + sqrt(2β) L(x)) exp(...) / Q(a)` with `a = α / sqrt(2β)`
//! and `Q = 1 - Φ`. All evaluations go through the scaled tail
//! `z²/2 + ln Q(z)`, which stays finite as β approaches 0 (the power-law
//! limit).

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::draws::CumulativeDistribution;
use crate::stats::{ols, LinFit};

#[derive(Debug, Error, PartialEq)]
pub enum TailError {
    #[error("empty sample")]
    Empty,
    #[error("top fraction {0} must lie in (0, 1]")]
    InvalidFraction(f64),
    #[error("class width must be positive")]
    ZeroClassWidth,
    #[error("beta must be positive (got {0})")]
    NonPositiveBeta(f64),
    #[error("tail threshold must be positive (got {0})")]
    NonPositiveThreshold(f64),
    #[error("need at least {need} observations, got {got}")]
    TooFewData { got: usize, need: usize },
    #[error("need at least {need} distinct support points, got {got}")]
    TooFewPoints { got: usize, need: usize },
    #[error("every observation equals the threshold; the estimate diverges")]
    Divergent,
}

// ---------------------------------------------------------------------------
// Gaussian tail
// ---------------------------------------------------------------------------

/// Below this `t`, `erfc(t)` comes from libm; above it the continued fraction
/// for `erfcx` is used.
const ERFC_SWITCH: f64 = 5.0;
const ERFCX_CF_TERMS: usize = 60;

/// `exp(t²) erfc(t)` for `t >= ERFC_SWITCH`, by backward evaluation of
/// `erfc(t) = exp(-t²)/√π · 1/(t + (1/2)/(t + 1/(t + (3/2)/(t + ...))))`.
fn erfcx_continued_fraction(t: f64) -> f64 {
    let mut f = t;
    for k in (1..=ERFCX_CF_TERMS).rev() {
        f = t + (k as f64 * 0.5) / f;
    }
    1.0 / (PI.sqrt() * f)
}

/// `z²/2 + ln Q(z)` where `Q(z) = 1 - Φ(z)`.
pub fn ln_scaled_upper_tail(z: f64) -> f64 {
    let t = z / SQRT_2;
    if t < ERFC_SWITCH {
        (0.5 * libm::erfc(t)).ln() + 0.5 * z * z
    } else {
        (0.5 * erfcx_continued_fraction(t)).ln()
    }
}

/// `Q(z) = 1 - Φ(z)`.
pub fn normal_upper_tail(z: f64) -> f64 {
    let t = z / SQRT_2;
    if t < ERFC_SWITCH {
        0.5 * libm::erfc(t)
    } else {
        (ln_scaled_upper_tail(z) - 0.5 * z * z).exp()
    }
}

/// `ln Q(z)`.
pub fn ln_normal_upper_tail(z: f64) -> f64 {
    if z < 0.0 {
        (-normal_upper_tail(-z)).ln_1p()
    } else {
        ln_scaled_upper_tail(z) - 0.5 * z * z
    }
}

/// Standard normal CDF `Φ(z)`.
pub fn normal_cdf(z: f64) -> f64 {
    normal_upper_tail(-z)
}

// ---------------------------------------------------------------------------
// Tail selection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSelection {
    /// Smallest draw size in the tail.
    pub s: u64,
    /// Fraction of all draws with size `>= s`.
    pub m: f64,
    pub total: usize,
    /// Tail draw sizes, ascending.
    pub data: Vec<u64>,
}

impl TailSelection {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Selects the tail holding the largest `top_fraction` of draws by count.
///
/// The draw sitting at the `ceil(top_fraction * N)`-th largest position
/// falls in a class `[k w, (k + 1) w)`; every draw in that class and above
/// is kept, so `s = k w` (or the smallest kept draw when that is larger).
pub fn select_tail(sizes: &[u64], top_fraction: f64, class_width: u64) -> Result<TailSelection, TailError> {
    if sizes.is_empty() {
        return Err(TailError::Empty);
    }
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(TailError::InvalidFraction(top_fraction));
    }
    if class_width == 0 {
        return Err(TailError::ZeroClassWidth);
    }
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    let total = sorted.len();
    let k = ((top_fraction * total as f64).ceil() as usize).clamp(1, total);
    let pivot = sorted[total - k];
    let boundary = pivot / class_width * class_width;
    let first = sorted.partition_point(|&x| x < boundary);
    let data = sorted.split_off(first);
    Ok(TailSelection { s: data[0], m: data.len() as f64 / total as f64, total, data })
}

// ---------------------------------------------------------------------------
// Log-normal tail model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalTail {
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
    pub m: f64,
}

impl LogNormalTail {
    pub fn new(alpha: f64, beta: f64, s: f64, m: f64) -> Result<Self, TailError> {
        if !(beta > 0.0) {
            return Err(TailError::NonPositiveBeta(beta));
        }
        if !(s > 0.0) {
            return Err(TailError::NonPositiveThreshold(s));
        }
        Ok(LogNormalTail { alpha, beta, s, m })
    }

    fn shift(&self) -> f64 {
        self.alpha / (2.0 * self.beta).sqrt()
    }

    /// `ln C(α, β)`.
    pub fn ln_norm_const(&self) -> f64 {
        -(0.5 * (PI / self.beta).ln() + ln_scaled_upper_tail(self.shift()))
    }

    pub fn norm_const(&self) -> f64 {
        self.ln_norm_const().exp()
    }

    /// Log of the conditional density on `[s, ∞)` (without the factor `m`).
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x < self.s {
            return f64::NEG_INFINITY;
        }
        let l = (x / self.s).ln();
        self.ln_norm_const() - x.ln() - self.alpha * l - self.beta * l * l
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// `P>(x)`; equals `m` for `x <= s`.
    pub fn ccdf(&self, x: f64) -> f64 {
        if x <= self.s {
            return self.m;
        }
        let l = (x / self.s).ln();
        let a = self.shift();
        let b = a + (2.0 * self.beta).sqrt() * l;
        // P>(x) / m = Q(b) / Q(a); for a >= 0 the ratio is taken through the
        // scaled tails so that the Gaussian factors cancel analytically
        let ln_ratio = if a >= 0.0 {
            ln_scaled_upper_tail(b) - ln_scaled_upper_tail(a) - self.alpha * l - self.beta * l * l
        } else {
            ln_normal_upper_tail(b) - ln_normal_upper_tail(a)
        };
        self.m * ln_ratio.exp()
    }
}

pub fn lognormal_tail_ccdf(x: f64, alpha: f64, beta: f64, s: f64, m: f64) -> Result<f64, TailError> {
    Ok(LogNormalTail::new(alpha, beta, s, m)?.ccdf(x))
}

// ---------------------------------------------------------------------------
// Simplex search
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexOptions {
    pub x_tol: f64,
    pub f_tol: f64,
    pub max_iter: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { x_tol: 1e-6, f_tol: 1e-9, max_iter: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct SimplexResult {
    x: [f64; 2],
    fx: f64,
    iterations: usize,
    converged: bool,
}

/// Nelder-Mead in two dimensions. Non-finite objective values are treated
/// as `+inf`.
fn nelder_mead<F: Fn([f64; 2]) -> f64>(f: F, start: [f64; 2], step: [f64; 2], opts: &SimplexOptions) -> SimplexResult {
    let eval = |x: [f64; 2]| {
        let v = f(x);
        if v.is_finite() { v } else { f64::INFINITY }
    };
    let mut pts = [start, [start[0] + step[0], start[1]], [start[0], start[1] + step[1]]];
    let mut vals = pts.map(eval);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        pts = order.map(|i| pts[i]);
        vals = order.map(|i| vals[i]);

        let f_spread = (vals[2] - vals[0]).abs();
        let x_spread = pts[1..]
            .iter()
            .flat_map(|p| [(p[0] - pts[0][0]).abs(), (p[1] - pts[0][1]).abs()])
            .fold(0.0, f64::max);
        if f_spread <= opts.f_tol && x_spread <= opts.x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid = [(pts[0][0] + pts[1][0]) / 2.0, (pts[0][1] + pts[1][1]) / 2.0];
        let along = |t: f64| [centroid[0] + t * (pts[2][0] - centroid[0]), centroid[1] + t * (pts[2][1] - centroid[1])];

        let reflected = along(-1.0);
        let fr = eval(reflected);
        if fr < vals[0] {
            let expanded = along(-2.0);
            let fe = eval(expanded);
            if fe < fr {
                (pts[2], vals[2]) = (expanded, fe);
            } else {
                (pts[2], vals[2]) = (reflected, fr);
            }
            continue;
        }
        if fr < vals[1] {
            (pts[2], vals[2]) = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < vals[2] {
            let c = along(-0.5);
            (c, eval(c))
        } else {
            let c = along(0.5);
            (c, eval(c))
        };
        if fc < vals[2].min(fr) {
            (pts[2], vals[2]) = (contracted, fc);
            continue;
        }
        for i in 1..3 {
            pts[i] = [pts[0][0] + 0.5 * (pts[i][0] - pts[0][0]), pts[0][1] + 0.5 * (pts[i][1] - pts[0][1])];
            vals[i] = eval(pts[i]);
        }
    }
    let best = (0..3).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap_or(0);
    SimplexResult { x: pts[best], fx: vals[best], iterations, converged }
}

// ---------------------------------------------------------------------------
// Log-normal fits
// ---------------------------------------------------------------------------

/// Below this the fitted β is reported as sitting on the β → 0 boundary.
pub const BETA_BOUNDARY: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    MaximumLikelihood,
    LeastSquares,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    Converged,
    /// The optimum runs off to β → 0; no interior log-normal fits better than
    /// the pure power law.
    Boundary,
    NotConverged,
    /// The data carry no spread to fit.
    Degenerate,
}

impl FitStatus {
    pub fn is_ok(self) -> bool {
        self == FitStatus::Converged
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalTailFit {
    pub alpha: f64,
    pub beta: f64,
    pub s: u64,
    pub m: f64,
    pub n: usize,
    pub method: FitMethod,
    /// Mean negative log-likelihood (MLE) or sum of squared CCDF residuals in
    /// units of the tail mass (least squares).
    pub objective: f64,
    pub iterations: usize,
    pub status: FitStatus,
}

impl LogNormalTailFit {
    pub fn model(&self) -> Option<LogNormalTail> {
        LogNormalTail::new(self.alpha, self.beta, self.s as f64, self.m).ok()
    }
}

/// Runs the simplex from five perturbations of `(alpha0, beta0)` over
/// `(alpha, ln beta)` and keeps the best end point.
fn multistart<F: Fn(f64, f64) -> f64>(objective: F, alpha0: f64, beta0: f64, opts: &SimplexOptions) -> SimplexResult {
    let starts = [(1.0, 1.0), (0.5, 2.0), (1.5, 0.5), (1.0, 8.0), (0.25, 0.125)];
    let f = |p: [f64; 2]| objective(p[0], p[1].exp());
    starts
        .iter()
        .map(|&(ka, kb)| {
            let start = [alpha0 * ka, (beta0 * kb).ln()];
            let step = [0.25 * alpha0.abs().max(0.5), 0.5];
            nelder_mead(f, start, step, opts)
        })
        .min_by(|a, b| a.fx.total_cmp(&b.fx))
        .expect("at least one start")
}

fn classify(result: &SimplexResult) -> FitStatus {
    if result.x[1].exp() < BETA_BOUNDARY {
        FitStatus::Boundary
    } else if result.converged {
        FitStatus::Converged
    } else {
        FitStatus::NotConverged
    }
}

/// Maximum-likelihood fit of `(α, β)` with `s` and `m` taken from the tail
/// selection.
///
/// The log-likelihood depends on the data only through the means of `L` and
/// `L²` (`L = ln(x/s)`), and is concave in `(α, β)`. When the data are at
/// least as heavy as a power law the maximum sits on `β = 0` and the fit is
/// reported with [`FitStatus::Boundary`].
pub fn fit_lognormal_mle(tail: &TailSelection, opts: &SimplexOptions) -> Result<LogNormalTailFit, TailError> {
    const MIN_DATA: usize = 10;
    if tail.len() < MIN_DATA {
        return Err(TailError::TooFewData { got: tail.len(), need: MIN_DATA });
    }
    if tail.s == 0 {
        return Err(TailError::NonPositiveThreshold(0.0));
    }
    let s = tail.s as f64;
    let n = tail.len() as f64;
    let (sum_l, sum_l2) = tail.data.iter().fold((0.0, 0.0), |(a, b), &x| {
        let l = (x as f64 / s).ln();
        (a + l, b + l * l)
    });
    let mean_l = sum_l / n;
    let mean_l2 = sum_l2 / n;
    let mean_ln_x = tail.data.iter().map(|&x| (x as f64).ln()).sum::<f64>() / n;
    let base = LogNormalTailFit {
        alpha: f64::NAN,
        beta: f64::NAN,
        s: tail.s,
        m: tail.m,
        n: tail.len(),
        method: FitMethod::MaximumLikelihood,
        objective: f64::NAN,
        iterations: 0,
        status: FitStatus::Degenerate,
    };
    if mean_l2 <= 0.0 {
        return Ok(base);
    }

    let nll = |alpha: f64, beta: f64| {
        let model = LogNormalTail { alpha, beta, s, m: tail.m };
        -model.ln_norm_const() + mean_ln_x + alpha * mean_l + beta * mean_l2
    };
    let alpha0 = 1.0 / mean_l;
    let beta0 = 0.5 / mean_l2;
    let result = multistart(nll, alpha0, beta0, opts);
    Ok(LogNormalTailFit {
        alpha: result.x[0],
        beta: result.x[1].exp(),
        objective: result.fx,
        iterations: result.iterations,
        status: classify(&result),
        ..base
    })
}

/// Scale on which least-squares residuals are taken.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualScale {
    /// `(model - data) / m`
    #[default]
    Linear,
    /// `log10(model) - log10(data)`
    Log,
}

/// Least-squares fit of the model CCDF to empirical `(x, P>(x))` points.
pub fn fit_lognormal_lsq(
    points: &[(u64, f64)],
    s: u64,
    m: f64,
    scale: ResidualScale,
    opts: &SimplexOptions,
) -> Result<LogNormalTailFit, TailError> {
    const MIN_POINTS: usize = 3;
    let mut xs: Vec<u64> = points.iter().map(|p| p.0).collect();
    xs.dedup();
    if xs.len() < MIN_POINTS {
        return Err(TailError::TooFewPoints { got: xs.len(), need: MIN_POINTS });
    }
    if s == 0 {
        return Err(TailError::NonPositiveThreshold(0.0));
    }
    let sf = s as f64;
    let sse = |alpha: f64, beta: f64| {
        let model = LogNormalTail { alpha, beta, s: sf, m };
        points
            .iter()
            .map(|&(x, p)| {
                let r = match scale {
                    ResidualScale::Linear => (model.ccdf(x as f64) - p) / m,
                    ResidualScale::Log => model.ccdf(x as f64).log10() - p.log10(),
                };
                r * r
            })
            .sum::<f64>()
    };
    // exponential-in-log start from the far end of the points
    let (x_last, p_last) = points.iter().copied().max_by_key(|p| p.0).expect("non-empty");
    let l_last = (x_last as f64 / sf).ln();
    let alpha0 = if l_last > 0.0 && p_last > 0.0 { ((m / p_last).ln() / l_last).max(0.5) } else { 2.0 };
    let result = multistart(sse, alpha0, 0.5, opts);
    Ok(LogNormalTailFit {
        alpha: result.x[0],
        beta: result.x[1].exp(),
        s,
        m,
        n: points.len(),
        method: FitMethod::LeastSquares,
        objective: result.fx,
        iterations: result.iterations,
        status: classify(&result),
    })
}

/// Empirical `(x, P>(x))` at every distinct tail size, relative to all draws.
pub fn tail_points(dist: &CumulativeDistribution, s: u64) -> Vec<(u64, f64)> {
    dist.points.iter().filter(|p| p.size >= s).map(|p| (p.size, p.rel)).collect()
}

// ---------------------------------------------------------------------------
// Power law
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawTailFit {
    /// Exponent `a` of `P>(x) ∝ x^-a`.
    pub exponent: f64,
    pub s: u64,
    pub m: f64,
    pub n: usize,
    pub log_likelihood: f64,
    /// Whether the threshold was shifted to `s - 1/2` for integer data.
    pub continuity_correction: bool,
}

impl PowerLawTailFit {
    fn threshold(&self) -> f64 {
        if self.continuity_correction { self.s as f64 - 0.5 } else { self.s as f64 }
    }

    /// `m (x / s)^-a` for `x >= s`.
    pub fn ccdf(&self, x: f64) -> f64 {
        if x <= self.s as f64 {
            return self.m;
        }
        self.m * (x / self.threshold()).powf(-self.exponent) / (self.s as f64 / self.threshold()).powf(-self.exponent)
    }
}

/// Continuous Pareto MLE `a = n / Σ ln(x_i / s)`.
pub fn fit_powerlaw_mle(tail: &TailSelection, continuity_correction: bool) -> Result<PowerLawTailFit, TailError> {
    if tail.len() < 2 {
        return Err(TailError::TooFewData { got: tail.len(), need: 2 });
    }
    if tail.s == 0 {
        return Err(TailError::NonPositiveThreshold(0.0));
    }
    let threshold = if continuity_correction { tail.s as f64 - 0.5 } else { tail.s as f64 };
    let n = tail.len() as f64;
    let sum_log: f64 = tail.data.iter().map(|&x| (x as f64 / threshold).ln()).sum();
    if !(sum_log > 0.0) {
        return Err(TailError::Divergent);
    }
    let a = n / sum_log;
    let sum_ln_x: f64 = tail.data.iter().map(|&x| (x as f64).ln()).sum();
    Ok(PowerLawTailFit {
        exponent: a,
        s: tail.s,
        m: tail.m,
        n: tail.len(),
        log_likelihood: n * a.ln() + n * a * threshold.ln() - (a + 1.0) * sum_ln_x,
        continuity_correction,
    })
}

/// Pareto MLE on raw values with threshold `s` (no selection step).
pub fn powerlaw_exponent(data: &[f64], s: f64) -> Result<f64, TailError> {
    if data.len() < 2 {
        return Err(TailError::TooFewData { got: data.len(), need: 2 });
    }
    let sum_log: f64 = data.iter().map(|&x| (x / s).ln()).sum();
    if !(sum_log > 0.0) {
        return Err(TailError::Divergent);
    }
    Ok(data.len() as f64 / sum_log)
}

// ---------------------------------------------------------------------------
// Comparisons
// ---------------------------------------------------------------------------

/// OLS of `log10 P>(x)` on `x` over the distinct sizes `x >= cutoff`.
pub fn semilog_linfit(dist: &CumulativeDistribution, cutoff: u64) -> Result<LinFit, TailError> {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        dist.points.iter().filter(|p| p.size >= cutoff).map(|p| (p.size as f64, p.rel.log10())).unzip();
    if xs.len() < 3 {
        return Err(TailError::TooFewPoints { got: xs.len(), need: 3 });
    }
    ols(&xs, &ys).ok_or(TailError::TooFewPoints { got: xs.len(), need: 3 })
}

/// `Σ_{x >= cutoff} (P>_a(x) - P>_b(x))²` over every integer up to the larger
/// of the two maxima.
pub fn sum_sq_diff(a: &CumulativeDistribution, b: &CumulativeDistribution, cutoff: u64) -> f64 {
    let upto = a.max_size().max(b.max_size());
    (cutoff..=upto).map(|x| (a.rel_at_least(x) - b.rel_at_least(x)).powi(2)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub class_width: u64,
    pub cutoff: u64,
    /// Largest absolute difference between the binned cumulative relative
    /// frequencies.
    pub d: f64,
    /// `d * sqrt(n_a n_b / (n_a + n_b))`.
    pub scaled: f64,
    /// Class boundary where `d` is attained.
    pub at: u64,
    pub n_a: usize,
    pub n_b: usize,
}

/// Two-sample Kolmogorov-Smirnov statistic on class boundaries `0, w, 2w, ...`,
/// restricted to draws of size `>= cutoff` (use 0 for the whole sample).
/// Relative frequencies and sample sizes refer to the restricted samples.
pub fn ks_two_sample_binned(
    a: &CumulativeDistribution,
    b: &CumulativeDistribution,
    class_width: u64,
    cutoff: u64,
) -> Result<KsResult, TailError> {
    if class_width == 0 {
        return Err(TailError::ZeroClassWidth);
    }
    let (na, nb) = (a.count_at_least(cutoff), b.count_at_least(cutoff));
    if na == 0 || nb == 0 {
        return Err(TailError::Empty);
    }
    let rel = |d: &CumulativeDistribution, n: usize, x: u64| d.count_at_least(x.max(cutoff)) as f64 / n as f64;
    let upto = a.max_size().max(b.max_size()) + class_width;
    let (mut d, mut at) = (0.0, 0);
    for k in 0..=upto / class_width {
        let boundary = k * class_width;
        let diff = (rel(a, na, boundary) - rel(b, nb, boundary)).abs();
        if diff > d {
            d = diff;
            at = boundary;
        }
    }
    let (fa, fb) = (na as f64, nb as f64);
    Ok(KsResult { class_width, cutoff, d, scaled: d * (fa * fb / (fa + fb)).sqrt(), at, n_a: na, n_b: nb })
}

// ---------------------------------------------------------------------------
// Log-normal as a slowly varying power law
// ---------------------------------------------------------------------------

/// `ξ(x) = ln(x / e^μ) / (2σ²)`, the local correction to the `-1` power in
/// the log-normal density.
pub fn lognormal_local_exponent(x: f64, mu: f64, sigma: f64) -> f64 {
    (x.ln() - mu) / (2.0 * sigma * sigma)
}

/// Log-normal density in its usual form.
pub fn lognormal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x.ln() - mu) / sigma;
    (-(0.5 * z * z)).exp() / (x * sigma * (2.0 * PI).sqrt())
}

/// The same density written as a power of `x / e^μ` with exponent
/// `-1 - ξ(x)`.
pub fn lognormal_pdf_power_form(x: f64, mu: f64, sigma: f64) -> f64 {
    let xi = lognormal_local_exponent(x, mu, sigma);
    let scale = mu.exp();
    (x / scale).powf(-1.0 - xi) / (scale * (2.0 * PI * sigma * sigma).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_tail_reference_values() {
        // mpmath, 30 digits
        let cases = [
            (0.0, 0.5),
            (1.0, 0.158655253931457051414767454368),
            (-2.5, 0.993790334674223864833021895426),
            (5.0, 2.86651571879193911673752333462e-7),
            (7.5, 3.19089167291089622776728834473e-14),
            (10.0, 7.61985302416052606597334325145e-24),
            (20.0, 2.7536241186062336950756227809e-89),
        ];
        for (z, want) in cases {
            let got = normal_upper_tail(z);
            assert!(((got - want) / want).abs() < 1e-12, "Q({z}) = {got}, want {want}");
        }
        assert!((normal_cdf(1.0) - 0.841344746068542948585232545632).abs() < 1e-15);
    }

    #[test]
    fn scaled_tail_is_continuous_at_switch() {
        let z = ERFC_SWITCH * SQRT_2;
        let below = (0.5 * libm::erfc(ERFC_SWITCH)).ln() + 0.5 * z * z;
        let above = (0.5 * erfcx_continued_fraction(ERFC_SWITCH)).ln();
        assert!((below - above).abs() < 1e-12, "{below} vs {above}");
    }

    #[test]
    fn norm_const_standard_case() {
        let t = LogNormalTail::new(0.0, 1.0, 1.0, 1.0).unwrap();
        assert!((t.norm_const() - 2.0 / PI.sqrt()).abs() < 1e-14);
        assert!((t.norm_const() - 1.128_379_167_095_512_6).abs() < 1e-14);
    }

    #[test]
    fn ccdf_at_threshold_is_m() {
        let t = LogNormalTail::new(3.89, 1.77, 41.0, 0.0052).unwrap();
        assert_eq!(t.ccdf(41.0), 0.0052);
        assert!(t.ccdf(41.5) < 0.0052);
        assert_eq!(lognormal_tail_ccdf(50.0, 1.0, 0.0, 41.0, 1.0), Err(TailError::NonPositiveBeta(0.0)));
    }

    #[test]
    fn ccdf_approaches_power_law_as_beta_vanishes() {
        let t = LogNormalTail::new(4.0, 1e-12, 10.0, 1.0).unwrap();
        for x in [20.0, 100.0, 1e4] {
            let want = (x / 10.0f64).powf(-4.0);
            assert!(((t.ccdf(x) - want) / want).abs() < 1e-6, "{x}");
        }
    }

    #[test]
    fn select_tail_full_fraction() {
        let t = select_tail(&[5, 3, 9, 3], 1.0, 15).unwrap();
        assert_eq!(t.s, 3);
        assert_eq!(t.m, 1.0);
        assert_eq!(t.data, vec![3, 3, 5, 9]);
        assert_eq!(select_tail(&[], 0.5, 1), Err(TailError::Empty));
        assert_eq!(select_tail(&[1], 0.0, 1), Err(TailError::InvalidFraction(0.0)));
    }

    #[test]
    fn select_tail_uniform_toy() {
        // 1..=200, top 0.5% is one draw (200); its class of width 15 is [195, 210)
        let sizes: Vec<u64> = (1..=200).collect();
        let t = select_tail(&sizes, 0.005, 15).unwrap();
        assert_eq!(t.s, 195);
        assert_eq!(t.len(), 6);
        let t = select_tail(&sizes, 0.005, 1).unwrap();
        assert_eq!((t.s, t.len()), (200, 1));
        // top 5% = 10 draws, smallest is 191 in class [180, 195)
        let t = select_tail(&sizes, 0.05, 15).unwrap();
        assert_eq!(t.s, 180);
        assert!((t.m - 21.0 / 200.0).abs() < 1e-15);
    }

    #[test]
    fn mle_flags_degenerate_data() {
        let tail = TailSelection { s: 41, m: 0.01, total: 1200, data: vec![41; 12] };
        let fit = fit_lognormal_mle(&tail, &SimplexOptions::default()).unwrap();
        assert_eq!(fit.status, FitStatus::Degenerate);
        let small = TailSelection { s: 41, m: 0.01, total: 500, data: vec![41, 50, 60] };
        assert!(matches!(fit_lognormal_mle(&small, &SimplexOptions::default()), Err(TailError::TooFewData { .. })));
    }

    #[test]
    fn lsq_recovers_exact_model_points() {
        let truth = LogNormalTail::new(2.5, 0.6, 20.0, 0.01).unwrap();
        let points: Vec<(u64, f64)> = (20..200).step_by(3).map(|x| (x, truth.ccdf(x as f64))).collect();
        let fit = fit_lognormal_lsq(&points, 20, 0.01, ResidualScale::Linear, &SimplexOptions::default()).unwrap();
        assert!(fit.objective < 1e-12, "{}", fit.objective);
        assert!((fit.alpha - 2.5).abs() < 1e-3, "{fit:?}");
        assert!((fit.beta - 0.6).abs() < 1e-3, "{fit:?}");
        assert_eq!(fit.status, FitStatus::Converged);
        assert!(matches!(
            fit_lognormal_lsq(&[(20, 0.01)], 20, 0.01, ResidualScale::Linear, &SimplexOptions::default()),
            Err(TailError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn powerlaw_closed_form() {
        let e = std::f64::consts::E;
        assert!((powerlaw_exponent(&[10.0 * e, 10.0 * e, 10.0 * e], 10.0).unwrap() - 1.0).abs() < 1e-12);
        let tail = TailSelection { s: 5, m: 1.0, total: 3, data: vec![5, 5, 5] };
        assert_eq!(fit_powerlaw_mle(&tail, false), Err(TailError::Divergent));
        // the half-tick shift makes the same data finite
        let fit = fit_powerlaw_mle(&tail, true).unwrap();
        assert!((fit.exponent - 1.0 / (5.0f64 / 4.5).ln()).abs() < 1e-12);
        assert_eq!(fit.ccdf(5.0), 1.0);
    }

    #[test]
    fn semilog_exact_line() {
        // 10^(-0.05 x) shaped counts are not integers, so build the CCDF points
        // directly.
        let points: Vec<_> = (16..80)
            .map(|x| crate::draws::CcdfPoint { size: x, count_at_least: 0, rel: 10f64.powf(-0.05 * x as f64) })
            .collect();
        let dist = CumulativeDistribution { total: 1, points, class_width: None, binned: None };
        let fit = semilog_linfit(&dist, 16).unwrap();
        assert!((fit.slope + 0.05).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(matches!(semilog_linfit(&dist, 79), Err(TailError::TooFewPoints { .. })));
    }

    #[test]
    fn sum_sq_small_cases() {
        let a = CumulativeDistribution::new(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10], None).unwrap();
        assert_eq!(sum_sq_diff(&a, &a, 0), 0.0);
        // b moves one draw from 1 to 3: P>(2) and P>(3) each rise by 0.1
        let b = CumulativeDistribution::new(&[3, 2, 3, 4, 5, 6, 7, 8, 9, 10], None).unwrap();
        assert!((sum_sq_diff(&a, &b, 0) - 0.02).abs() < 1e-15);
        // c also moves 2 to 3: P>(2) rises by 0.1, P>(3) by 0.2
        let c = CumulativeDistribution::new(&[3, 3, 3, 4, 5, 6, 7, 8, 9, 10], None).unwrap();
        assert!((sum_sq_diff(&a, &c, 0) - 0.05).abs() < 1e-15);
        assert!((sum_sq_diff(&a, &c, 3) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn ks_small_cases() {
        let a = CumulativeDistribution::new(&(1..=10).collect::<Vec<_>>(), None).unwrap();
        let b = CumulativeDistribution::new(&(1000..=1010).collect::<Vec<_>>(), None).unwrap();
        let same = ks_two_sample_binned(&a, &a, 15, 0).unwrap();
        assert_eq!(same.d, 0.0);
        let ab = ks_two_sample_binned(&a, &b, 15, 0).unwrap();
        assert_eq!(ab.d, 1.0);
        assert!((ab.scaled - (110.0f64 / 21.0).sqrt()).abs() < 1e-12);
        let ba = ks_two_sample_binned(&b, &a, 15, 0).unwrap();
        assert_eq!(ab.d, ba.d);
        assert_eq!(ab.scaled, ba.scaled);
        assert_eq!(ks_two_sample_binned(&a, &b, 15, 2000), Err(TailError::Empty));
    }

    #[test]
    fn ks_cutoff_conditions_on_tail() {
        // above 16 both samples are {20, 40}, in different proportions
        let a = CumulativeDistribution::new(&[1, 2, 3, 20, 40], None).unwrap();
        let b = CumulativeDistribution::new(&[5, 20, 40, 40, 40], None).unwrap();
        let r = ks_two_sample_binned(&a, &b, 15, 16).unwrap();
        assert_eq!((r.n_a, r.n_b), (2, 4));
        // P(>= 30): 1/2 vs 3/4
        assert!((r.d - 0.25).abs() < 1e-15);
        assert_eq!(r.at, 30);
        assert!((r.scaled - 0.25 * (8.0f64 / 6.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn local_exponent_closed_forms() {
        assert_eq!(lognormal_local_exponent(2f64.exp(), 2.0, 0.7), 0.0);
        let sigma = 0.5f64.sqrt();
        assert!((lognormal_local_exponent((1.3f64 + 1.0).exp(), 1.3, sigma) - 1.0).abs() < 1e-12);
    }
}
