//! Statistics of execution-price series.
//!
//! A *draw* is a maximal run of consecutive price changes in one direction;
//! its *size* is the absolute price move over the run. Everything here is a
//! pure function of the tick series.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::book::Price;
use crate::stats::{ols, LinFit};

#[derive(Debug, Error, PartialEq)]
pub enum DrawError {
    #[error("series of length {len} is too short (need more than {need})")]
    TooShort { len: usize, need: usize },
    #[error("lag must be at least 1")]
    ZeroLag,
    #[error("no lags given")]
    NoLags,
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("price gaps at lag {tau} have zero spread; diffusion is degenerate")]
    Degenerate { tau: usize },
    #[error("empty sample")]
    Empty,
}

/// Overlapping differences `ticks[i + tau] - ticks[i]`.
pub fn gaps(ticks: &[Price], tau: usize) -> Result<Vec<i64>, DrawError> {
    if tau == 0 {
        return Err(DrawError::ZeroLag);
    }
    if ticks.len() <= tau {
        return Err(DrawError::TooShort { len: ticks.len(), need: tau });
    }
    Ok(ticks.windows(tau + 1).map(|w| w[tau] - w[0]).collect())
}

fn sample_sd(values: &[i64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    let ss: f64 = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum();
    (ss / (n - 1.0)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diffusion {
    /// `(tau, sigma(tau))` pairs in the order requested.
    pub points: Vec<(usize, f64)>,
    /// Slope of `ln sigma` against `ln tau`.
    pub hurst: f64,
    pub fit: LinFit,
}

/// About twenty log-spaced lags between 1 and 1000.
pub fn default_taus() -> Vec<usize> {
    let mut taus: Vec<usize> = (0..24).map(|k| 10f64.powf(3.0 * k as f64 / 23.0).round() as usize).collect();
    taus.dedup();
    taus
}

/// Standard deviation of price gaps for every lag in `taus`, and the Hurst
/// exponent fitted on log-log axes.
pub fn diffusion_and_hurst(ticks: &[Price], taus: &[usize]) -> Result<Diffusion, DrawError> {
    if taus.is_empty() {
        return Err(DrawError::NoLags);
    }
    let mut points = Vec::with_capacity(taus.len());
    for &tau in taus {
        let g = gaps(ticks, tau)?;
        if g.len() < 2 {
            return Err(DrawError::TooShort { len: ticks.len(), need: tau + 1 });
        }
        let sd = sample_sd(&g);
        if !(sd > 0.0) {
            return Err(DrawError::Degenerate { tau });
        }
        points.push((tau, sd));
    }
    let xs: Vec<f64> = points.iter().map(|&(t, _)| (t as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, s)| s.ln()).collect();
    let fit = ols(&xs, &ys).ok_or(DrawError::TooShort { len: taus.len(), need: 1 })?;
    Ok(Diffusion { points, hurst: fit.slope, fit })
}

/// Sample autocorrelation `rho(0..=max_lag)`, each lag normalised by the
/// lag-0 sum of squares, so `rho(0) == 1`.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>, DrawError> {
    let n = series.len();
    if n <= max_lag {
        return Err(DrawError::TooShort { len: n, need: max_lag });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum();
    if !(c0 > 0.0) {
        return Err(DrawError::ZeroVariance);
    }
    Ok((0..=max_lag)
        .map(|k| centered[..n - k].iter().zip(&centered[k..]).map(|(a, b)| a * b).sum::<f64>() / c0)
        .collect())
}

/// How zero price changes are treated while scanning for draws.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlatPolicy {
    /// Every maximal run of zero changes is a draw of size 0.
    #[default]
    Zero,
    /// A zero change neither extends nor ends a run.
    Skip,
    /// A zero change ends the current run.
    Break,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Flat,
}

/// One draw up or draw down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawSegment {
    /// Index of the tick where the run starts.
    pub start: usize,
    /// Index of the last tick of the run.
    pub end: usize,
    pub direction: Direction,
    pub size: u64,
}

impl DrawSegment {
    pub fn signed_size(&self) -> i64 {
        match self.direction {
            Direction::Up => self.size as i64,
            Direction::Down => -(self.size as i64),
            Direction::Flat => 0,
        }
    }
}

/// Splits the series into maximal one-directional runs. The last run is kept
/// even though the series may end in the middle of it.
pub fn extract_draws(ticks: &[Price], policy: FlatPolicy) -> Vec<DrawSegment> {
    let mut out = Vec::new();
    // (start index, direction, index of last non-flat move's endpoint)
    let mut open: Option<(usize, Direction, usize)> = None;
    for i in 1..ticks.len() {
        let gap = ticks[i] - ticks[i - 1];
        let dir = match gap.signum() {
            1 => Direction::Up,
            -1 => Direction::Down,
            _ if policy == FlatPolicy::Zero => Direction::Flat,
            _ => {
                if policy == FlatPolicy::Break {
                    if let Some((start, d, end)) = open.take() {
                        out.push(segment(ticks, start, end, d));
                    }
                }
                continue;
            }
        };
        open = match open {
            Some((start, d, _)) if d == dir => Some((start, d, i)),
            Some((start, d, end)) => {
                out.push(segment(ticks, start, end, d));
                Some((end, dir, i))
            }
            None => Some((i - 1, dir, i)),
        };
    }
    if let Some((start, d, end)) = open {
        out.push(segment(ticks, start, end, d));
    }
    out
}

fn segment(ticks: &[Price], start: usize, end: usize, direction: Direction) -> DrawSegment {
    DrawSegment { start, end, direction, size: ticks[end].abs_diff(ticks[start]) }
}

pub fn draw_sizes(ticks: &[Price], policy: FlatPolicy) -> Vec<u64> {
    extract_draws(ticks, policy).into_iter().map(|d| d.size).collect()
}

/// Rebuilds a series from the same starting price with its lag-1 gaps in a
/// uniformly random order.
pub fn shuffle_gaps<R: Rng + ?Sized>(ticks: &[Price], rng: &mut R) -> Vec<Price> {
    let Some(&first) = ticks.first() else {
        return Vec::new();
    };
    let mut g: Vec<i64> = ticks.windows(2).map(|w| w[1] - w[0]).collect();
    g.shuffle(rng);
    std::iter::once(first)
        .chain(g.into_iter().scan(first, |p, d| {
            *p += d;
            Some(*p)
        }))
        .collect()
}

/// One support point of an empirical complementary CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcdfPoint {
    pub size: u64,
    /// Number of observations `>= size`.
    pub count_at_least: usize,
    /// `count_at_least / total`.
    pub rel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinnedPoint {
    pub boundary: u64,
    /// Fraction of observations `>= boundary`.
    pub rel: f64,
}

/// Empirical "at least x" distribution of draw sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeDistribution {
    pub total: usize,
    /// Ascending by size, one entry per distinct observed size.
    pub points: Vec<CcdfPoint>,
    pub class_width: Option<u64>,
    /// Values at `0, w, 2w, ...` up to the largest observation.
    pub binned: Option<Vec<BinnedPoint>>,
}

impl CumulativeDistribution {
    pub fn new(sizes: &[u64], class_width: Option<u64>) -> Result<Self, DrawError> {
        if sizes.is_empty() {
            return Err(DrawError::Empty);
        }
        let mut sorted = sizes.to_vec();
        sorted.sort_unstable();
        let total = sorted.len();
        let mut points = Vec::new();
        let mut i = 0;
        while i < total {
            let size = sorted[i];
            let count_at_least = total - i;
            points.push(CcdfPoint { size, count_at_least, rel: count_at_least as f64 / total as f64 });
            while i < total && sorted[i] == size {
                i += 1;
            }
        }
        let mut dist = CumulativeDistribution { total, points, class_width, binned: None };
        if let Some(w) = class_width.filter(|&w| w > 0) {
            dist.binned = Some(dist.binned_at(w, dist.max_size()));
        }
        Ok(dist)
    }

    pub fn max_size(&self) -> u64 {
        self.points.last().map_or(0, |p| p.size)
    }

    pub fn min_size(&self) -> u64 {
        self.points.first().map_or(0, |p| p.size)
    }

    /// Number of observations `>= x`.
    pub fn count_at_least(&self, x: u64) -> usize {
        let idx = self.points.partition_point(|p| p.size < x);
        self.points.get(idx).map_or(0, |p| p.count_at_least)
    }

    /// Fraction of observations `>= x`.
    pub fn rel_at_least(&self, x: u64) -> f64 {
        self.count_at_least(x) as f64 / self.total as f64
    }

    /// Values at class boundaries `0, w, 2w, ...` not exceeding `upto`.
    pub fn binned_at(&self, width: u64, upto: u64) -> Vec<BinnedPoint> {
        assert!(width > 0, "class width must be positive");
        (0..=upto / width)
            .map(|k| {
                let boundary = k * width;
                BinnedPoint { boundary, rel: self.rel_at_least(boundary) }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gaps_small() {
        assert_eq!(gaps(&[0, 1, 3], 1).unwrap(), vec![1, 2]);
        assert_eq!(gaps(&[0, 1, 3], 2).unwrap(), vec![3]);
        assert_eq!(gaps(&[4, 4, 4, 4], 2).unwrap(), vec![0, 0]);
        assert_eq!(gaps(&[0, 1, 3], 3), Err(DrawError::TooShort { len: 3, need: 3 }));
        assert_eq!(gaps(&[0, 1], 0), Err(DrawError::ZeroLag));
    }

    #[test]
    fn ramp_is_degenerate() {
        let ramp: Vec<Price> = (0..100).collect();
        assert_eq!(diffusion_and_hurst(&ramp, &[1, 2, 4]), Err(DrawError::Degenerate { tau: 1 }));
        assert_eq!(diffusion_and_hurst(&ramp, &[]), Err(DrawError::NoLags));
    }

    #[test]
    fn default_taus_are_log_spaced() {
        let taus = default_taus();
        assert_eq!(taus.first(), Some(&1));
        assert_eq!(taus.last(), Some(&1000));
        assert!(taus.len() >= 18 && taus.len() <= 24, "{taus:?}");
        assert!(taus.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn alternating_series_has_rho1_minus_one() {
        let s: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let rho = autocorrelation(&s, 2).unwrap();
        assert_eq!(rho[0], 1.0);
        // finite-sample normalisation: (n-1)/n
        assert!((rho[1] + 0.999).abs() < 1e-12, "{}", rho[1]);
        assert!((rho[2] - 0.998).abs() < 1e-12);
        assert_eq!(autocorrelation(&[2.0; 10], 1), Err(DrawError::ZeroVariance));
        assert!(autocorrelation(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn draws_hand_traced() {
        let d = extract_draws(&[0, 1, 2, 1], FlatPolicy::Skip);
        assert_eq!(
            d,
            vec![
                DrawSegment { start: 0, end: 2, direction: Direction::Up, size: 2 },
                DrawSegment { start: 2, end: 3, direction: Direction::Down, size: 1 },
            ]
        );
        assert_eq!(draw_sizes(&[0, 1, 1, 2, 0], FlatPolicy::Skip), vec![2, 2]);
        assert_eq!(draw_sizes(&[0, 1, 1, 2, 0], FlatPolicy::Break), vec![1, 1, 2]);
        assert_eq!(draw_sizes(&[0, 1, 1, 1, 2, 0], FlatPolicy::Zero), vec![1, 0, 1, 2]);
        assert_eq!(
            extract_draws(&[4, 4, 4], FlatPolicy::Zero),
            vec![DrawSegment { start: 0, end: 2, direction: Direction::Flat, size: 0 }]
        );
        assert!(extract_draws(&[3], FlatPolicy::Skip).is_empty());
        assert!(extract_draws(&[3, 3, 3], FlatPolicy::Skip).is_empty());
    }

    #[test]
    fn short_shuffle_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(shuffle_gaps(&[5, 9], &mut rng), vec![5, 9]);
        assert!(shuffle_gaps(&[], &mut rng).is_empty());
    }

    #[test]
    fn ccdf_small() {
        let dist = CumulativeDistribution::new(&[1, 1, 2], Some(15)).unwrap();
        assert_eq!(dist.binned.as_ref().unwrap(), &vec![BinnedPoint { boundary: 0, rel: 1.0 }]);
        assert_eq!(dist.count_at_least(1), 3);
        assert_eq!(dist.count_at_least(2), 1);
        assert_eq!(dist.count_at_least(3), 0);
        assert!((dist.rel_at_least(2) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(CumulativeDistribution::new(&[], None), Err(DrawError::Empty));
    }
}
