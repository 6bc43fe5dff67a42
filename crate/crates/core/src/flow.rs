//! Order generation for the plain, following and contrary investor models.
//!
//! Orders are placed within `half_width` ticks of the base price. Without a
//! trend (or under the plain model) the offset is uniform over the full range.
//! Under a trend the range is split into three bands and one of them is chosen
//! with the configured probabilities before drawing a uniform tick inside it.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::book::{Price, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Plain,
    Following,
    Contrary,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Plain, ModelKind::Following, ModelKind::Contrary];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Plain => "plain",
            ModelKind::Following => "following",
            ModelKind::Contrary => "contrary",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(ModelKind::Plain),
            "following" => Ok(ModelKind::Following),
            "contrary" => Ok(ModelKind::Contrary),
            other => Err(format!("unknown model `{other}` (expected plain, following or contrary)")),
        }
    }
}

/// How the up/down count in the window is compared against the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrendComparator {
    /// `count >= threshold`
    AtLeast,
    /// `count > threshold`
    MoreThan,
}

/// What a zero price change does to the trend window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlatMoves {
    /// Skipped; the window holds the last `window_len` non-zero moves.
    Ignore,
    /// Occupies a slot and counts towards neither direction.
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowParams {
    /// Orders are placed within `base ± half_width`.
    pub half_width: i64,
    /// The middle band is `base ± inner_half_width`.
    pub inner_half_width: i64,
    /// Number of execution-price movements remembered.
    pub window_len: usize,
    pub trend_threshold: usize,
    pub trend_cmp: TrendComparator,
    pub flat_moves: FlatMoves,
    /// Probability of the outer band the trend points at (following) or away
    /// from (contrary).
    pub favored_prob: f64,
    pub inner_prob: f64,
    pub opposite_prob: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            half_width: 15,
            inner_half_width: 5,
            window_len: 10,
            trend_threshold: 10,
            trend_cmp: TrendComparator::AtLeast,
            flat_moves: FlatMoves::Ignore,
            favored_prob: 0.8,
            inner_prob: 0.1,
            opposite_prob: 0.1,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FlowParamsError {
    #[error("band widths must satisfy 0 < inner_half_width ({inner}) < half_width ({outer})")]
    BandWidths { inner: i64, outer: i64 },
    #[error("trend threshold {threshold} must be in 1..={window_len}")]
    Threshold { threshold: usize, window_len: usize },
    #[error("band probabilities must be non-negative and sum to 1 (got {0})")]
    Probabilities(f64),
}

impl FlowParams {
    pub fn validate(&self) -> Result<(), FlowParamsError> {
        if !(0 < self.inner_half_width && self.inner_half_width < self.half_width) {
            return Err(FlowParamsError::BandWidths { inner: self.inner_half_width, outer: self.half_width });
        }
        if self.trend_threshold == 0 || self.trend_threshold > self.window_len {
            return Err(FlowParamsError::Threshold { threshold: self.trend_threshold, window_len: self.window_len });
        }
        let probs = [self.favored_prob, self.inner_prob, self.opposite_prob];
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(FlowParamsError::Probabilities(sum));
        }
        Ok(())
    }
}

/// Direction of one execution-to-execution price change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Up,
    Down,
    Flat,
}

impl Move {
    pub fn between(prev: Price, next: Price) -> Move {
        match next.cmp(&prev) {
            std::cmp::Ordering::Greater => Move::Up,
            std::cmp::Ordering::Less => Move::Down,
            std::cmp::Ordering::Equal => Move::Flat,
        }
    }
}

/// The most recent execution-price movements, oldest first.
#[derive(Debug, Clone)]
pub struct TrendWindow {
    moves: VecDeque<Move>,
    capacity: usize,
    ups: usize,
    downs: usize,
}

impl TrendWindow {
    pub fn new(capacity: usize) -> Self {
        TrendWindow { moves: VecDeque::with_capacity(capacity + 1), capacity, ups: 0, downs: 0 }
    }

    pub fn push(&mut self, mv: Move) {
        self.moves.push_back(mv);
        self.count(mv, true);
        if self.moves.len() > self.capacity {
            let old = self.moves.pop_front().expect("non-empty window");
            self.count(old, false);
        }
    }

    /// Records an execution-price change under the given flat-move rule.
    pub fn observe(&mut self, mv: Move, flats: FlatMoves) {
        if mv == Move::Flat && flats == FlatMoves::Ignore {
            return;
        }
        self.push(mv);
    }

    fn count(&mut self, mv: Move, add: bool) {
        let slot = match mv {
            Move::Up => &mut self.ups,
            Move::Down => &mut self.downs,
            Move::Flat => return,
        };
        if add {
            *slot += 1;
        } else {
            *slot -= 1;
        }
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.moves.len() == self.capacity
    }

    pub fn ups(&self) -> usize {
        self.ups
    }

    pub fn downs(&self) -> usize {
        self.downs
    }

    pub fn iter(&self) -> impl Iterator<Item = Move> + '_ {
        self.moves.iter().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Up,
    Down,
    Neutral,
}

/// Classifies the window. A trend needs a full window; flat moves held in
/// the window count towards neither direction.
pub fn classify_trend(window: &TrendWindow, params: &FlowParams) -> Trend {
    if !window.is_full() {
        return Trend::Neutral;
    }
    let hit = |count: usize| match params.trend_cmp {
        TrendComparator::AtLeast => count >= params.trend_threshold,
        TrendComparator::MoreThan => count > params.trend_threshold,
    };
    match (hit(window.ups()), hit(window.downs())) {
        (true, false) => Trend::Up,
        (false, true) => Trend::Down,
        // Only reachable when the threshold is at most half the window.
        _ => Trend::Neutral,
    }
}

/// Price band relative to the base price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Band {
    Lower,
    Inner,
    Upper,
    /// The whole placement range, used when no bias applies.
    Full,
}

impl Band {
    /// Inclusive offset range of the band.
    pub fn offsets(self, params: &FlowParams) -> (i64, i64) {
        let outer = params.half_width;
        let inner = params.inner_half_width;
        match self {
            Band::Lower => (-outer, -inner - 1),
            Band::Inner => (-inner, inner),
            Band::Upper => (inner + 1, outer),
            Band::Full => (-outer, outer),
        }
    }
}

/// The outer band a swarm crowds into, if any.
pub fn favored_band(model: ModelKind, trend: Trend) -> Option<Band> {
    match (model, trend) {
        (ModelKind::Plain, _) | (_, Trend::Neutral) => None,
        (ModelKind::Following, Trend::Up) | (ModelKind::Contrary, Trend::Down) => Some(Band::Upper),
        (ModelKind::Following, Trend::Down) | (ModelKind::Contrary, Trend::Up) => Some(Band::Lower),
    }
}

pub fn select_band<R: Rng + ?Sized>(model: ModelKind, trend: Trend, params: &FlowParams, rng: &mut R) -> Band {
    let Some(favored) = favored_band(model, trend) else {
        return Band::Full;
    };
    let opposite = if favored == Band::Upper { Band::Lower } else { Band::Upper };
    let u: f64 = rng.gen();
    if u < params.favored_prob {
        favored
    } else if u < params.favored_prob + params.inner_prob {
        Band::Inner
    } else {
        opposite
    }
}

/// Draws the side and price of the next order. The side is drawn first, then
/// the band, then the tick inside the band.
pub fn draw_order<R: Rng + ?Sized>(
    model: ModelKind,
    trend: Trend,
    base: Price,
    params: &FlowParams,
    rng: &mut R,
) -> (Side, Price) {
    let side = if rng.gen_bool(0.5) { Side::Bid } else { Side::Ask };
    let band = select_band(model, trend, params, rng);
    let (lo, hi) = band.offsets(params);
    (side, base + rng.gen_range(lo..=hi))
}
