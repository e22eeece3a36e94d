//! Day-ahead VaR forecasting: Monte Carlo VaR from a mixture and the rolling
//! driver that applies any model over an evaluation period.

use std::fmt::Write as _;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classic::{fit_garch11, garch_var, order_statistic_rank, var_cmm, var_hs, InnovationKind, VaRConfig};
use crate::dist::{mixture_sample, MixtureParams, Rng};
use crate::nn::{forward, NetworkParams};
use crate::series::{Date, ReturnSeries};
use crate::{Error, Result};

pub const MIN_MC_SAMPLES: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub n_samples: usize,
    pub alpha: f64,
    pub asset_value: f64,
    pub seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            n_samples: 100_000,
            alpha: 0.99,
            asset_value: 1.0,
            seed: 0,
        }
    }
}

impl MonteCarloConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < MIN_MC_SAMPLES {
            return Err(Error::Config(format!(
                "Monte Carlo sample count must be >= {MIN_MC_SAMPLES}, got {}",
                self.n_samples
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
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

/// Simulated VaR: the `ceil(alpha N)`-th ascending loss of `N` mixture draws, times `P`.
pub fn mc_var(params: &MixtureParams, config: &MonteCarloConfig, rng: &mut Rng) -> Result<f64> {
    config.validate()?;
    let mut losses = mixture_sample(params, config.n_samples, rng);
    losses.iter_mut().for_each(|x| *x = -*x);
    let rank = order_statistic_rank(config.alpha, losses.len());
    let (_, v, _) = losses.select_nth_unstable_by(rank - 1, f64::total_cmp);
    Ok(*v * config.asset_value)
}

/// A model that turns the returns preceding a day into that day's VaR.
pub trait VarForecaster: Sync {
    fn model_id(&self) -> &str;
    fn alpha(&self) -> f64;
    /// Number of prior returns each forecast consumes.
    fn lookback(&self) -> usize;
    /// VaR for day `day` (index into the full series) given the `lookback()` returns before it.
    fn forecast(&self, history: &[f64], day: usize) -> Result<f64>;
}

#[derive(Clone, Debug)]
pub struct HsForecaster {
    pub config: VaRConfig,
}

impl VarForecaster for HsForecaster {
    fn model_id(&self) -> &str {
        "hs"
    }
    fn alpha(&self) -> f64 {
        self.config.alpha
    }
    fn lookback(&self) -> usize {
        self.config.window
    }
    fn forecast(&self, history: &[f64], _day: usize) -> Result<f64> {
        let losses: Vec<f64> = history.iter().map(|r| -r).collect();
        var_hs(&losses, &self.config)
    }
}

#[derive(Clone, Debug)]
pub struct CmmForecaster {
    pub config: VaRConfig,
}

impl VarForecaster for CmmForecaster {
    fn model_id(&self) -> &str {
        "cmm"
    }
    fn alpha(&self) -> f64 {
        self.config.alpha
    }
    fn lookback(&self) -> usize {
        self.config.window
    }
    fn forecast(&self, history: &[f64], _day: usize) -> Result<f64> {
        var_cmm(history, &self.config)
    }
}

/// Refits GARCH(1,1) with a fixed innovation family on every rolling window.
#[derive(Clone, Debug)]
pub struct GarchForecaster {
    pub config: VaRConfig,
    pub innovation: InnovationKind,
}

impl VarForecaster for GarchForecaster {
    fn model_id(&self) -> &str {
        "garch"
    }
    fn alpha(&self) -> f64 {
        self.config.alpha
    }
    fn lookback(&self) -> usize {
        self.config.window
    }
    fn forecast(&self, history: &[f64], _day: usize) -> Result<f64> {
        let fit = fit_garch11(history, self.innovation)?;
        garch_var(&fit, &self.config)
    }
}

/// Trained mixture-density network plus Monte Carlo settings. Each day draws
/// from its own child stream of `mc.seed`.
#[derive(Clone, Debug)]
pub struct MdnForecaster {
    pub id: String,
    pub params: NetworkParams,
    pub mc: MonteCarloConfig,
}

impl MdnForecaster {
    pub fn mixture(&self, history: &[f64]) -> Result<MixtureParams> {
        forward(history, &self.params)
    }
}

impl VarForecaster for MdnForecaster {
    fn model_id(&self) -> &str {
        &self.id
    }
    fn alpha(&self) -> f64 {
        self.mc.alpha
    }
    fn lookback(&self) -> usize {
        self.params.config().lookback
    }
    fn forecast(&self, history: &[f64], day: usize) -> Result<f64> {
        let mix = self.mixture(history)?;
        let mut rng = Rng::new(self.mc.seed).split(day as u64);
        mc_var(&mix, &self.mc, &mut rng)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForecastSeries {
    pub model_id: String,
    pub alpha: f64,
    pub dates: Vec<Date>,
    pub values: Vec<f64>,
}

impl ForecastSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("date,var_forecast,model_id,alpha\n");
        for (d, v) in self.dates.iter().zip(&self.values) {
            let _ = writeln!(out, "{d},{v:?},{},{:?}", self.model_id, self.alpha);
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "date,var_forecast,model_id,alpha" => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: "expected header date,var_forecast,model_id,alpha".into(),
                })
            }
        }
        let mut series: Option<ForecastSeries> = None;
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::Parse { line: i + 1, message: m };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(err(format!("expected 4 fields, got {}", fields.len())));
            }
            let date: Date = fields[0].parse().map_err(|e: Error| err(e.to_string()))?;
            let value: f64 = fields[1].parse().map_err(|_| err(format!("bad VaR '{}'", fields[1])))?;
            let alpha: f64 = fields[3].parse().map_err(|_| err(format!("bad alpha '{}'", fields[3])))?;
            let s = series.get_or_insert_with(|| ForecastSeries {
                model_id: fields[2].to_string(),
                alpha,
                dates: Vec::new(),
                values: Vec::new(),
            });
            if s.model_id != fields[2] || s.alpha != alpha {
                return Err(err("model_id and alpha must be constant".into()));
            }
            if let Some(prev) = s.dates.last() {
                if date <= *prev {
                    return Err(Error::Ordering {
                        line: i + 1,
                        previous: prev.to_string(),
                        date: date.to_string(),
                    });
                }
            }
            s.dates.push(date);
            s.values.push(value);
        }
        series.ok_or(Error::EmptyInput)
    }
}

/// Applies `model` to each day in `test` (indices into `returns`), using only
/// the `lookback()` returns strictly before that day. Days run in parallel.
pub fn forecast_series(
    model: &dyn VarForecaster,
    returns: &ReturnSeries,
    test: Range<usize>,
) -> Result<ForecastSeries> {
    if test.is_empty() || test.end > returns.len() {
        return Err(Error::Range(format!(
            "test range {test:?} is empty or exceeds series length {}",
            returns.len()
        )));
    }
    let d = model.lookback();
    if test.start < d {
        return Err(Error::InsufficientHistory {
            date: returns.dates()[test.start].to_string(),
        });
    }
    let r = returns.returns();
    let values = test
        .clone()
        .into_par_iter()
        .map(|t| model.forecast(&r[t - d..t], t))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ForecastSeries {
        model_id: model.model_id().to_string(),
        alpha: model.alpha(),
        dates: returns.dates()[test].to_vec(),
        values,
    })
}
