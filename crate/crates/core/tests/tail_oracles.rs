use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarm_lob::tail::{
    fit_lognormal_mle, fit_powerlaw_mle, lognormal_pdf, lognormal_pdf_power_form, FitStatus, LogNormalTail,
    SimplexOptions, TailSelection,
};

mod support;
use support::simpson;

/// `∫_x^∞ pdf(t) dt` in the variable `u = ln t`, truncated where the
/// integrand is far below double precision.
fn tail_integral(model: &LogNormalTail, x: f64) -> f64 {
    let g = |u: f64| {
        let t = u.exp();
        model.pdf(t) * t
    };
    let lo = x.ln();
    let scale = (0..400).map(|k| g(lo + 0.1 * k as f64)).fold(0.0, f64::max);
    simpson(&g, lo, lo + 40.0, 1e-13 * scale)
}

#[test]
fn density_integrates_to_one() {
    for (alpha, beta) in [(3.89, 1.77), (4.0, 0.13), (-1.5, 0.4), (0.0, 1.0), (2.0, 0.01), (8.0, 5.0)] {
        let model = LogNormalTail::new(alpha, beta, 41.0, 1.0).unwrap();
        let total = tail_integral(&model, 41.0);
        assert!((total - 1.0).abs() < 1e-6, "({alpha}, {beta}) integrates to {total}");
    }
}

#[test]
fn closed_form_ccdf_matches_quadrature() {
    for (alpha, beta) in [(3.89, 1.77), (4.0, 0.13), (-1.5, 0.4)] {
        let m = 0.0052;
        let model = LogNormalTail::new(alpha, beta, 41.0, m).unwrap();
        for x in [41.5, 50.0, 80.0, 150.0, 400.0] {
            let want = m * tail_integral(&model, x);
            let got = model.ccdf(x);
            assert!(((got - want) / want).abs() < 1e-8, "({alpha}, {beta}) at {x}: {got} vs {want}");
        }
    }
}

#[test]
fn ccdf_reference_values() {
    // mpmath quad of m ∫_x^∞ C (1/t) exp(-αL - βL²) dt, 30 digits
    let model = LogNormalTail::new(3.89, 1.77, 41.0, 0.0052).unwrap();
    let cases = [
        (50.0, 1.96931303826548605812948503285e-3),
        (100.0, 2.42435471371338010018888038168e-5),
    ];
    for (x, want) in cases {
        let got = model.ccdf(x);
        assert!(((got - want) / want).abs() < 1e-10, "{x}: {got} vs {want}");
    }
}

/// `ln(x/s)` has density proportional to `exp(-αu - βu²)` on `u >= 0`. With
/// `α > 0` this is an `Exp(α)` proposal accepted with probability
/// `exp(-βu²)`.
fn sample_tail(alpha: f64, beta: f64, s: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let u = -(1.0 - rng.gen::<f64>()).ln() / alpha;
        if rng.gen::<f64>() < (-beta * u * u).exp() {
            out.push((s * u.exp()).round() as u64);
        }
    }
    out
}

#[test]
fn mle_recovers_known_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let s = 1e6;
    for (alpha, beta) in [(3.89, 1.77), (2.5, 0.8), (4.0, 0.13)] {
        let mut data = sample_tail(alpha, beta, s, 100_000, &mut rng);
        data.sort_unstable();
        let tail = TailSelection { s: s as u64, m: 1.0, total: data.len(), data };
        let fit = fit_lognormal_mle(&tail, &SimplexOptions::default()).unwrap();
        assert_eq!(fit.status, FitStatus::Converged);
        assert!((fit.alpha - alpha).abs() < 0.1, "alpha {} vs {alpha}", fit.alpha);
        assert!((fit.beta - beta).abs() < 0.1, "beta {} vs {beta}", fit.beta);
    }
}

#[test]
fn mle_on_heavier_than_power_law_hits_boundary() {
    // a mixture of two Pareto tails is heavier than any single power law, so
    // the likelihood keeps rising as β goes to 0
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s = 1e6;
    let mut data: Vec<u64> = (0..50_000)
        .map(|i| {
            let a = if i % 2 == 0 { 2.0 } else { 6.0 };
            (s * (1.0 - rng.gen::<f64>()).powf(-1.0 / a)).round() as u64
        })
        .collect();
    data.sort_unstable();
    let tail = TailSelection { s: s as u64, m: 1.0, total: data.len(), data };
    let fit = fit_lognormal_mle(&tail, &SimplexOptions::default()).unwrap();
    assert_eq!(fit.status, FitStatus::Boundary, "{fit:?}");
}

#[test]
fn pareto_mle_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = 3.0;
    let s = 1e6;
    for n in [1_000, 10_000, 100_000] {
        let data: Vec<u64> = (0..n).map(|_| (s * (1.0 - rng.gen::<f64>()).powf(-1.0 / a)).round() as u64).collect();
        let tail = TailSelection { s: s as u64, m: 1.0, total: n, data };
        let fit = fit_powerlaw_mle(&tail, false).unwrap();
        let se = a / (n as f64).sqrt();
        assert!((fit.exponent - a).abs() < 4.0 * se, "n = {n}: {}", fit.exponent);
        if n == 100_000 {
            assert!((fit.exponent - a).abs() < 0.03);
        }
    }
}

#[test]
fn power_form_density_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        let mu = rng.gen_range(-3.0..5.0);
        let sigma = rng.gen_range(0.2..3.0);
        let x = (mu + sigma * rng.gen_range(-4.0..4.0f64)).exp();
        let a = lognormal_pdf(x, mu, sigma);
        let b = lognormal_pdf_power_form(x, mu, sigma);
        assert!(((a - b) / a).abs() < 1e-12, "x={x} mu={mu} sigma={sigma}: {a} vs {b}");
    }
}
