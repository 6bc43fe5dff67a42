//! Stochastic continuous double auction with swarm order flow.
//!
//! Investors send one-unit limit orders around the latest execution price.
//! In the *plain* model the price offset is uniform; in the *following* and
//! *contrary* models a recent run of rising or falling executions pushes new
//! orders towards (or against) the trend. The analysis side extracts draw
//! sizes (absolute moves over maximal one-directional runs) from the tick
//! series and characterises their tails.
//!
//! - [`book`]: the order book and matching rules
//! - [`flow`]: trend classification and order generation
//! - [`sim`]: step protocol, runs and seeded replications
//! - [`draws`]: gaps, diffusion, autocorrelation, draws and their distribution
//! - [`tail`]: tail selection, log-normal and power-law fits, distribution
//!   comparisons

pub mod book;
pub mod draws;
pub mod flow;
pub mod sim;
pub mod stats;
pub mod tail;

pub use book::{BookError, MatchOutcome, Order, OrderBook, OrderId, Price, Side};
pub use flow::{Band, FlatMoves, FlowParams, ModelKind, Trend, TrendComparator, TrendWindow};
pub use sim::{run, run_replications, ExpirePolicy, MarketState, ReplicationSummary, SimConfig, SimRecord, StepEvent};
