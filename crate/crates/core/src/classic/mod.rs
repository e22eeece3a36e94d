//! Benchmark VaR models: historical simulation, constant mean and GARCH(1,1).
//!
//! VaR is reported as a positive loss in units of the asset value `P`.

mod garch;
mod simplex;

pub use garch::{
    fit_garch11, garch_aic, garch_forecast_variance, garch_loglik, garch_simulate, garch_var,
    garch_var_from_sigma, select_innovation, GarchFit, GarchParams, Innovation, InnovationKind,
    InnovationSelection, MIN_GARCH_WINDOW,
};

use serde::{Deserialize, Serialize};

use crate::dist::normal_quantile;
use crate::series::sample_stats;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VaRConfig {
    pub alpha: f64,
    /// Forecast horizon in days. Only 1 is supported.
    pub horizon: usize,
    pub window: usize,
    pub asset_value: f64,
}

impl Default for VaRConfig {
    fn default() -> Self {
        VaRConfig {
            alpha: 0.99,
            horizon: 1,
            window: 250,
            asset_value: 1.0,
        }
    }
}

impl VaRConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        VaRConfig {
            alpha,
            ..VaRConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.horizon != 1 {
            return Err(Error::Domain(format!(
                "only a one-day horizon is supported, got {}",
                self.horizon
            )));
        }
        if self.window < 2 {
            return Err(Error::Domain(format!("window must be >= 2, got {}", self.window)));
        }
        if !(self.asset_value.is_finite() && self.asset_value > 0.0) {
            return Err(Error::Domain(format!(
                "asset value must be positive, got {}",
                self.asset_value
            )));
        }
        Ok(())
    }
}

/// 1-based rank `ceil(alpha * n)` of the empirical alpha-quantile, clamped to `1..=n`.
///
/// A relative slack of 1e-12 keeps products such as `0.95 * 100` from
/// rounding up past the intended integer.
pub fn order_statistic_rank(alpha: f64, n: usize) -> usize {
    let x = alpha * n as f64;
    let rank = (x - 1e-12 * x.max(1.0)).ceil() as usize;
    rank.clamp(1, n)
}

/// Historical-simulation VaR: the `ceil(alpha T)`-th ascending loss, times `P`.
pub fn var_hs(losses: &[f64], config: &VaRConfig) -> Result<f64> {
    config.validate()?;
    if losses.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: losses.len(),
        });
    }
    let mut sorted = losses.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = order_statistic_rank(config.alpha, sorted.len());
    Ok(sorted[rank - 1] * config.asset_value)
}

/// Constant-mean VaR `-(mu + z_{1-alpha} sigma) P` with 1/T moments.
///
/// Negative values (large positive mean) are returned as computed.
pub fn var_cmm(returns: &[f64], config: &VaRConfig) -> Result<f64> {
    config.validate()?;
    if returns.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: returns.len(),
        });
    }
    let (mean, sd) = sample_stats(returns)?;
    let z = normal_quantile(1.0 - config.alpha)?;
    Ok(-(mean + z * sd) * config.asset_value)
}
