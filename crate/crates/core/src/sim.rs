//! Step protocol and replication harness.
//!
//! Each step first looks for resting orders farther than `half_width` ticks
//! from the base price. If there are any they are removed and the step ends.
//! Otherwise one new order is drawn from the model and sent to the book. The
//! base price is the latest execution price (0 before the first trade).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::book::{MatchOutcome, OrderBook, OrderId, Price};
use crate::flow::{classify_trend, draw_order, favored_band, FlowParams, FlowParamsError, ModelKind, Move, TrendWindow};
use crate::stats::MeanSd;

/// What to remove when out-of-range orders are found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpirePolicy {
    /// Every out-of-range order goes in the same step.
    All,
    /// Only the oldest out-of-range order goes; the rest wait for later steps.
    One,
}

/// Deterministic generator used for every run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RngAlgorithm {
    /// `rand_chacha::ChaCha8Rng`, seeded through `seed_from_u64`.
    Chacha8,
}

impl RngAlgorithm {
    pub fn name(self) -> &'static str {
        match self {
            RngAlgorithm::Chacha8 => "chacha8",
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `rep` under master seed `seed`:
/// `splitmix64(seed ^ splitmix64(rep))`.
pub fn replication_seed(seed: u64, rep: u64) -> u64 {
    splitmix64(seed ^ splitmix64(rep))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub model: ModelKind,
    pub flow: FlowParams,
    pub steps: u64,
    pub replications: u32,
    pub seed: u64,
    pub rng: RngAlgorithm,
    pub expire_policy: ExpirePolicy,
}

impl SimConfig {
    pub fn new(model: ModelKind) -> Self {
        SimConfig {
            model,
            flow: FlowParams::default(),
            steps: 1_000_000,
            replications: 30,
            seed: 20_190_601,
            rng: RngAlgorithm::Chacha8,
            expire_policy: ExpirePolicy::One,
        }
    }

    pub fn validate(&self) -> Result<(), SimConfigError> {
        if self.steps == 0 {
            return Err(SimConfigError::ZeroSteps);
        }
        if self.replications == 0 {
            return Err(SimConfigError::ZeroReplications);
        }
        self.flow.validate()?;
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimConfigError {
    #[error("steps must be positive")]
    ZeroSteps,
    #[error("replications must be positive")]
    ZeroReplications,
    #[error(transparent)]
    Flow(#[from] FlowParamsError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub steps: u64,
    /// Steps that removed orders instead of placing one.
    pub expiry_steps: u64,
    pub expired_orders: u64,
    pub placements: u64,
    pub trades: u64,
    /// Placements drawn from a biased band distribution.
    pub swarm_placements: u64,
    /// Trades triggered by a placement drawn from a biased band distribution.
    pub swarm_trades: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepEvent {
    Expired(usize),
    Placed,
    Traded(Price),
}

/// Full state of one simulation.
#[derive(Debug, Clone)]
pub struct MarketState {
    pub book: OrderBook,
    pub base_price: Price,
    pub window: TrendWindow,
    pub counters: Counters,
    last_trade: Option<Price>,
    next_id: OrderId,
}

impl MarketState {
    pub fn new(params: &FlowParams) -> Self {
        MarketState {
            book: OrderBook::new(),
            base_price: 0,
            window: TrendWindow::new(params.window_len),
            counters: Counters::default(),
            last_trade: None,
            next_id: 1,
        }
    }

    pub fn last_trade(&self) -> Option<Price> {
        self.last_trade
    }

    /// Runs one step. On a trade the execution price is pushed to `ticks`.
    pub fn step<R: rand::Rng + ?Sized>(
        &mut self,
        model: ModelKind,
        params: &FlowParams,
        policy: ExpirePolicy,
        rng: &mut R,
        ticks: &mut Vec<Price>,
    ) -> StepEvent {
        self.counters.steps += 1;
        if self.book.has_out_of_range(self.base_price, params.half_width) {
            let removed = match policy {
                ExpirePolicy::All => self.book.expire_out_of_range(self.base_price, params.half_width),
                ExpirePolicy::One => {
                    usize::from(self.book.expire_oldest_out_of_range(self.base_price, params.half_width).is_some())
                }
            };
            self.counters.expiry_steps += 1;
            self.counters.expired_orders += removed as u64;
            return StepEvent::Expired(removed);
        }

        let trend = classify_trend(&self.window, params);
        let biased = favored_band(model, trend).is_some();
        let (side, price) = draw_order(model, trend, self.base_price, params, rng);
        let id = self.next_id;
        self.next_id += 1;
        self.counters.placements += 1;
        self.counters.swarm_placements += u64::from(biased);

        let outcome = self.book.insert_limit(side, price, id).expect("ids are issued in increasing order");
        match outcome {
            MatchOutcome::Rested => StepEvent::Placed,
            MatchOutcome::Traded { price, .. } => {
                if let Some(prev) = self.last_trade {
                    self.window.observe(Move::between(prev, price), params.flat_moves);
                }
                self.last_trade = Some(price);
                self.base_price = price;
                self.counters.trades += 1;
                self.counters.swarm_trades += u64::from(biased);
                ticks.push(price);
                StepEvent::Traded(price)
            }
        }
    }
}

/// Output of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub model: ModelKind,
    pub seed: u64,
    pub counters: Counters,
    /// Execution prices in trade order.
    pub ticks: Vec<Price>,
}

impl SimRecord {
    /// Trades per step; `None` for an empty run.
    pub fn trade_ratio(&self) -> Option<f64> {
        ratio(self.counters.trades, self.counters.steps)
    }

    /// Orders placed by a swarm (drawn from the biased bands) per trade;
    /// `None` without trades.
    pub fn swarm_ratio(&self) -> Option<f64> {
        ratio(self.counters.swarm_placements, self.counters.trades)
    }

    /// Trades triggered by a swarm order per trade; `None` without trades.
    pub fn swarm_trade_ratio(&self) -> Option<f64> {
        ratio(self.counters.swarm_trades, self.counters.trades)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn make_rng(algorithm: RngAlgorithm, seed: u64) -> ChaCha8Rng {
    match algorithm {
        RngAlgorithm::Chacha8 => ChaCha8Rng::seed_from_u64(seed),
    }
}

/// Runs `config.steps` steps from a fresh state with the given seed.
/// `config.replications` and `config.seed` are ignored.
pub fn run(config: &SimConfig, seed: u64) -> SimRecord {
    let mut rng = make_rng(config.rng, seed);
    let mut state = MarketState::new(&config.flow);
    // roughly 29% of steps trade
    let mut ticks = Vec::with_capacity((config.steps as usize) * 3 / 10 + 16);
    for _ in 0..config.steps {
        state.step(config.model, &config.flow, config.expire_policy, &mut rng, &mut ticks);
    }
    SimRecord { model: config.model, seed, counters: state.counters, ticks }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub records: Vec<SimRecord>,
    pub trade_ratio: MeanSd,
    pub swarm_ratio: MeanSd,
}

/// Runs every replication of `config` in parallel. Replication `r` is seeded
/// with [`replication_seed`]`(config.seed, r)`; records come back in
/// replication order regardless of scheduling.
pub fn run_replications(config: &SimConfig) -> ReplicationSummary {
    let records: Vec<SimRecord> = (0..u64::from(config.replications))
        .into_par_iter()
        .map(|rep| run(config, replication_seed(config.seed, rep)))
        .collect();
    let trade: Vec<f64> = records.iter().filter_map(SimRecord::trade_ratio).collect();
    let swarm: Vec<f64> = records.iter().filter_map(SimRecord::swarm_ratio).collect();
    ReplicationSummary { trade_ratio: MeanSd::of(&trade), swarm_ratio: MeanSd::of(&swarm), records }
}
