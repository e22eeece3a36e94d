//! One-day-ahead Value-at-Risk forecasting.
//!
//! The crate bundles four forecasters (historical simulation, constant mean,
//! GARCH(1,1), and an LSTM mixture density network sampled by Monte Carlo)
//! together with the coverage and independence backtests used to judge them.
//!
//! Modules are layered bottom-up:
//!
//! - [`series`]: price ingestion, gap repair, returns, splits and windows.
//! - [`dist`]: seeded RNG, normal / GED / chi-square / Gaussian mixture.
//! - [`classic`]: historical simulation, constant mean and GARCH(1,1).
//! - [`nn`]: LSTM -> Dense -> MDN network with exact gradients and Adam.
//! - [`forecast`]: Monte Carlo VaR and rolling forecast series.
//! - [`backtest`]: breach indicators, POF / independence / CC tests.
//! - [`harness`]: configuration, persisted artifacts and the CLI pipeline.

pub mod backtest;
pub mod classic;
pub mod dist;
pub mod error;
pub mod forecast;
pub mod harness;
pub mod nn;
pub mod series;

pub use error::{Error, Result};

/// Engine version recorded in run manifests.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
