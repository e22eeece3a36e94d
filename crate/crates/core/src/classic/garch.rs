//! GARCH(1,1) with zero mean and normal or GED innovations.
//!
//! sigma_t^2 = alpha0 + alpha1 eps_{t-1}^2 + beta1 sigma_{t-1}^2, eps_t = sigma_t eta_t.
//!
//! Maximum likelihood runs Nelder-Mead over an unconstrained map:
//! `alpha0 = v exp(u0)` (v = sample variance), persistence
//! `p = logistic(u1)`, `alpha1 = p logistic(u2)`, `beta1 = p - alpha1`, and for
//! GED `nu = 0.5 + 4.5 logistic(u3)`. Positivity and `alpha1 + beta1 < 1`
//! therefore hold for every candidate.

use serde::{Deserialize, Serialize};

use super::simplex::{self, Options};
use super::VaRConfig;
use crate::dist::{ged_quantile, ged_sample, normal_quantile, GedShape, Rng};
use crate::series::{sample_stats, ReturnSeries};
use crate::{Error, Result};

/// Shortest window accepted by [`fit_garch11`].
pub const MIN_GARCH_WINDOW: usize = 50;

const NU_MIN: f64 = 0.5;
const NU_MAX: f64 = 5.0;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnovationKind {
    Normal,
    Ged,
}

impl std::fmt::Display for InnovationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InnovationKind::Normal => "normal",
            InnovationKind::Ged => "ged",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Innovation {
    Normal,
    Ged { nu: GedShape },
}

impl Innovation {
    pub fn kind(&self) -> InnovationKind {
        match self {
            Innovation::Normal => InnovationKind::Normal,
            Innovation::Ged { .. } => InnovationKind::Ged,
        }
    }

    /// Quantile of the unit-variance innovation.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        match self {
            Innovation::Normal => normal_quantile(p),
            Innovation::Ged { nu } => ged_quantile(p, *nu),
        }
    }

    fn sample(&self, rng: &mut Rng) -> f64 {
        match self {
            Innovation::Normal => rng.standard_normal(),
            Innovation::Ged { nu } => ged_sample(*nu, rng),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub innovation: Innovation,
}

impl GarchParams {
    pub fn new(alpha0: f64, alpha1: f64, beta1: f64, innovation: Innovation) -> Result<Self> {
        let p = GarchParams {
            alpha0,
            alpha1,
            beta1,
            innovation,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0.is_finite() && self.alpha0 > 0.0) {
            return Err(Error::Domain(format!("alpha0 must be positive, got {}", self.alpha0)));
        }
        if !(self.alpha1 >= 0.0 && self.beta1 >= 0.0) {
            return Err(Error::Domain(format!(
                "alpha1 and beta1 must be nonnegative, got {} and {}",
                self.alpha1, self.beta1
            )));
        }
        if self.persistence() >= 1.0 {
            return Err(Error::Nonstationary {
                persistence: self.persistence(),
            });
        }
        Ok(())
    }

    /// The fixed mean of the return equation.
    pub fn mu(&self) -> f64 {
        0.0
    }

    pub fn persistence(&self) -> f64 {
        self.alpha1 + self.beta1
    }

    pub fn unconditional_variance(&self) -> Result<f64> {
        let p = self.persistence();
        if p >= 1.0 {
            return Err(Error::Nonstationary { persistence: p });
        }
        Ok(self.alpha0 / (1.0 - p))
    }

    /// Number of estimated parameters (the mean is fixed, not estimated).
    pub fn parameter_count(&self) -> usize {
        match self.innovation {
            Innovation::Normal => 3,
            Innovation::Ged { .. } => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GarchFit {
    pub params: GarchParams,
    /// sigma_t^2 for each observation in the window.
    pub variances: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Variance used to seed the recursion (sample variance of the window).
    pub initial_variance: f64,
    /// One-step-ahead variance sigma_{T+1|T}^2.
    pub next_variance: f64,
    pub loglik: f64,
    pub aic: f64,
    pub k: usize,
}

/// Log-likelihood of `returns` under `params`, with the recursion seeded at
/// `initial_variance`. Also returns the conditional variance path.
pub fn garch_loglik(
    returns: &[f64],
    params: &GarchParams,
    initial_variance: f64,
) -> (f64, Vec<f64>) {
    let mut variances = Vec::with_capacity(returns.len());
    let mut var = initial_variance;
    let mut ll = 0.0;
    let ged = match params.innovation {
        Innovation::Ged { nu } => Some((nu.nu(), crate::dist::ged::ged_log_norm(nu))),
        Innovation::Normal => None,
    };
    for (t, &eps) in returns.iter().enumerate() {
        if t > 0 {
            let prev = returns[t - 1];
            var = params.alpha0 + params.alpha1 * prev * prev + params.beta1 * var;
        }
        variances.push(var);
        ll += match ged {
            None => -0.5 * (LN_2PI + var.ln() + eps * eps / var),
            Some((nu, (c, lambda))) => {
                let sd = var.sqrt();
                c - 0.5 * (eps / (sd * lambda)).abs().powf(nu) - sd.ln()
            }
        };
    }
    (ll, variances)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn decode(u: &[f64], scale: f64, kind: InnovationKind) -> GarchParams {
    let p = logistic(u[1]);
    let alpha1 = p * logistic(u[2]);
    let innovation = match kind {
        InnovationKind::Normal => Innovation::Normal,
        InnovationKind::Ged => Innovation::Ged {
            nu: GedShape::new(NU_MIN + (NU_MAX - NU_MIN) * logistic(u[3])).expect("nu > 0"),
        },
    };
    GarchParams {
        alpha0: scale * u[0].exp(),
        alpha1,
        beta1: (p - alpha1).max(0.0),
        innovation,
    }
}

/// Deterministic starting points as (persistence, alpha1 share of persistence).
const STARTS: [(f64, f64); 5] = [(0.90, 0.10), (0.95, 0.08), (0.70, 0.20), (0.98, 0.05), (0.50, 0.30)];

/// Maximum-likelihood GARCH(1,1) with zero mean.
pub fn fit_garch11(returns: &[f64], kind: InnovationKind) -> Result<GarchFit> {
    if returns.len() < MIN_GARCH_WINDOW {
        return Err(Error::InsufficientData {
            needed: MIN_GARCH_WINDOW,
            got: returns.len(),
        });
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(Error::Domain("returns must be finite".into()));
    }
    let (mean, sd) = sample_stats(returns)?;
    let sample_var = sd * sd;
    if sample_var <= (1e-7 * mean).powi(2) {
        return Err(Error::Fit {
            message: "window has zero variance".into(),
            best_loglik: f64::NAN,
        });
    }

    let objective = |u: &[f64]| -garch_loglik(returns, &decode(u, sample_var, kind), sample_var).0;
    let opts = Options::default();

    let mut best: Option<simplex::Minimum> = None;
    let mut any_converged = false;
    for &(p, share) in &STARTS {
        let mut u0 = vec![(1.0 - p).ln(), logit(p), logit(share)];
        if kind == InnovationKind::Ged {
            u0.push(logit((1.5 - NU_MIN) / (NU_MAX - NU_MIN)));
        }
        let m = simplex::minimize(objective, &u0, &opts);
        any_converged |= m.converged;
        if best.as_ref().is_none_or(|b| m.f < b.f) {
            best = Some(m);
        }
    }
    let mut best = best.expect("at least one start");
    // Restart from the incumbent to escape a collapsed simplex.
    let polished = simplex::minimize(objective, &best.x, &opts);
    if polished.f <= best.f {
        any_converged |= polished.converged;
        best = polished;
    }

    if !any_converged || !best.f.is_finite() {
        return Err(Error::Fit {
            message: format!("no start converged for {kind} innovations"),
            best_loglik: -best.f,
        });
    }

    let params = decode(&best.x, sample_var, kind);
    let (loglik, variances) = garch_loglik(returns, &params, sample_var);
    if variances.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Fit {
            message: "non-positive conditional variance".into(),
            best_loglik: loglik,
        });
    }
    let last = returns.len() - 1;
    let next_variance =
        params.alpha0 + params.alpha1 * returns[last] * returns[last] + params.beta1 * variances[last];
    let k = params.parameter_count();
    Ok(GarchFit {
        params,
        variances,
        residuals: returns.to_vec(),
        initial_variance: sample_var,
        next_variance,
        loglik,
        aic: garch_aic(loglik, k),
        k,
    })
}

/// AIC = -2 ln L + 2k.
pub fn garch_aic(loglik: f64, k: usize) -> f64 {
    -2.0 * loglik + 2.0 * k as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct InnovationSelection {
    pub chosen: InnovationKind,
    pub normal: Option<GarchFit>,
    pub ged: Option<GarchFit>,
}

impl InnovationSelection {
    pub fn aic(&self, kind: InnovationKind) -> Option<f64> {
        match kind {
            InnovationKind::Normal => self.normal.as_ref().map(|f| f.aic),
            InnovationKind::Ged => self.ged.as_ref().map(|f| f.aic),
        }
    }
}

/// Fits both innovations and keeps the lower AIC; ties go to Normal.
pub fn select_innovation(returns: &[f64]) -> Result<InnovationSelection> {
    let (normal, ged) = rayon::join(
        || fit_garch11(returns, InnovationKind::Normal),
        || fit_garch11(returns, InnovationKind::Ged),
    );
    let chosen = match (&normal, &ged) {
        (Ok(n), Ok(g)) => {
            if g.aic < n.aic {
                InnovationKind::Ged
            } else {
                InnovationKind::Normal
            }
        }
        (Ok(_), Err(_)) => InnovationKind::Normal,
        (Err(_), Ok(_)) => InnovationKind::Ged,
        (Err(a), Err(b)) => {
            return Err(Error::Selection(format!("normal fit: {a}; GED fit: {b}")));
        }
    };
    Ok(InnovationSelection {
        chosen,
        normal: normal.ok(),
        ged: ged.ok(),
    })
}

/// k-step-ahead conditional variance
/// `sigma^2 + (alpha1 + beta1)^(k-1) (sigma_{T+1|T}^2 - sigma^2)`.
pub fn garch_forecast_variance(fit: &GarchFit, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("forecast step must be >= 1".into()));
    }
    let long_run = fit.params.unconditional_variance()?;
    let p = fit.params.persistence();
    Ok(long_run + p.powi(k as i32 - 1) * (fit.next_variance - long_run))
}

/// `-(sigma_{T+1} q_{1-alpha}) P`; the mean is omitted.
pub fn garch_var(fit: &GarchFit, config: &VaRConfig) -> Result<f64> {
    garch_var_from_sigma(fit.next_variance.sqrt(), &fit.params.innovation, config)
}

pub fn garch_var_from_sigma(sigma: f64, innovation: &Innovation, config: &VaRConfig) -> Result<f64> {
    config.validate()?;
    let q = innovation.quantile(1.0 - config.alpha)?;
    Ok(-(sigma * q) * config.asset_value)
}

/// Simulates `len` returns, starting the recursion at the unconditional variance.
pub fn garch_simulate(params: &GarchParams, len: usize, rng: &mut Rng) -> Result<ReturnSeries> {
    params.validate()?;
    if len == 0 {
        return Err(Error::Domain("simulation length must be >= 1".into()));
    }
    let mut var = params.unconditional_variance()?;
    let mut out = Vec::with_capacity(len);
    for t in 0..len {
        if t > 0 {
            let prev: f64 = out[t - 1];
            var = params.alpha0 + params.alpha1 * prev * prev + params.beta1 * var;
        }
        out.push(var.sqrt() * params.innovation.sample(rng));
    }
    Ok(ReturnSeries::synthetic(out))
}
