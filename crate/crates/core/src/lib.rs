//! Range-liquidity arithmetic and liquidity-provision strategies for
//! Uniswap-v3 style AMMs.
//!
//! The crate is `no_std` (it needs `alloc` for path buffers) so it can be
//! embedded anywhere; file formats, the worker pool and the command line
//! live in the `rangelp` crate.
//!
//! Modules:
//! - [`amm`]: token amounts of range positions, trade deltas, decomposition.
//! - [`price`]: seeded GBM and mean-reverting price generators.
//! - [`strategy`]: the liquidity-chasing update, the arbitrage-gated update,
//!   reference dynamics and safe-interval solvers.
//! - [`estimate`]: GBM and mean-reversion parameter estimators.
//! - [`sim`]: one Monte Carlo round and ensemble statistics.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod amm;
pub mod error;
pub mod estimate;
pub mod price;
mod roots;
pub mod sim;
pub mod strategy;
mod sum;

pub use amm::{LiquidityPosition, Price, PriceRange, TokenAmounts, TradeDeltas};
pub use error::{Error, Result};
pub use estimate::{EstimatedParams, PairedSeries};
pub use price::{GbmParams, JointPath, MeanRevParams, SimGrid, MINUTES_PER_YEAR};
pub use sim::{ExperimentConfig, GateSpec, Model, StrategyKind, TrajectoryStats};
pub use strategy::{ChasingConfig, Deviation, DriftDiffusion, GateConfig, GatedStep};
