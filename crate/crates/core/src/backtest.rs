//! Breach indicators, coverage and independence likelihood-ratio tests, and
//! the rolling-volatility reactivity check.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::chi2_sf;
use crate::forecast::ForecastSeries;
use crate::series::Date;
use crate::{Error, Result};

pub const SIGNIFICANCE: f64 = 0.05;
pub const DEFAULT_VOL_WINDOW: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorSeries {
    pub dates: Vec<Date>,
    pub values: Vec<u8>,
}

impl IndicatorSeries {
    /// Breach indicators for a forecast series against losses on `loss_dates`.
    pub fn from_forecast(loss_dates: &[Date], losses: &[f64], forecast: &ForecastSeries) -> Result<Self> {
        if loss_dates.len() != losses.len() {
            return Err(Error::Alignment(format!(
                "{} loss dates for {} losses",
                loss_dates.len(),
                losses.len()
            )));
        }
        if loss_dates != forecast.dates.as_slice() {
            let first = loss_dates
                .iter()
                .zip(&forecast.dates)
                .position(|(a, b)| a != b)
                .unwrap_or(loss_dates.len().min(forecast.dates.len()));
            return Err(Error::Alignment(format!(
                "forecast '{}' dates diverge from losses at position {first} ({} vs {} days)",
                forecast.model_id,
                forecast.dates.len(),
                loss_dates.len()
            )));
        }
        Ok(IndicatorSeries {
            dates: loss_dates.to_vec(),
            values: indicator_series(losses, &forecast.values)?,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn breaches(&self) -> usize {
        self.values.iter().map(|&v| v as usize).sum()
    }
}

/// `I_t = 1` iff `loss_t > var_t`.
pub fn indicator_series(losses: &[f64], var: &[f64]) -> Result<Vec<u8>> {
    if losses.len() != var.len() {
        return Err(Error::Alignment(format!(
            "{} losses vs {} forecasts",
            losses.len(),
            var.len()
        )));
    }
    Ok(losses.iter().zip(var).map(|(l, v)| u8::from(l > v)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrTest {
    pub lr: f64,
    pub p_value: f64,
}

impl LrTest {
    pub fn passes(&self) -> bool {
        self.p_value >= SIGNIFICANCE
    }
}

/// `n ln(x)` with `0 ln 0 = 0`.
fn xlogy(n: f64, x: f64) -> f64 {
    if n == 0.0 {
        0.0
    } else {
        n * x.ln()
    }
}

/// Kupiec proportion-of-failures test against expected breach rate `1 - alpha`.
pub fn pof_test(ind: &[u8], alpha: f64) -> Result<LrTest> {
    crate::dist::check_probability(alpha)?;
    if ind.is_empty() {
        return Err(Error::EmptyInput);
    }
    let t = ind.len() as f64;
    let i = ind.iter().map(|&v| v as f64).sum::<f64>();
    let expected = 1.0 - alpha;
    let observed = i / t;
    let lr = if (observed - expected).abs() <= 1e-12 * expected {
        0.0
    } else {
        let lr = 2.0
            * (xlogy(t - i, (1.0 - observed) / (1.0 - expected)) + xlogy(i, observed / expected));
        lr.max(0.0)
    };
    Ok(LrTest {
        lr,
        p_value: chi2_sf(lr, 1)?,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionCounts {
    pub n00: usize,
    pub n01: usize,
    pub n10: usize,
    pub n11: usize,
}

impl TransitionCounts {
    pub fn from_indicators(ind: &[u8]) -> Self {
        let mut c = TransitionCounts::default();
        for w in ind.windows(2) {
            match (w[0], w[1]) {
                (0, 0) => c.n00 += 1,
                (0, _) => c.n01 += 1,
                (_, 0) => c.n10 += 1,
                _ => c.n11 += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.n00 + self.n01 + self.n10 + self.n11
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndependenceTest {
    pub lr: f64,
    pub p_value: f64,
    pub counts: TransitionCounts,
}

/// Christoffersen independence test on first-order transitions.
///
/// Without a breach, or without any day following a breach, the alternative
/// is undefined and the test reports `LR = 0, p = 1`.
pub fn independence_test(ind: &[u8]) -> Result<IndependenceTest> {
    if ind.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: ind.len(),
        });
    }
    let counts = TransitionCounts::from_indicators(ind);
    let TransitionCounts { n00, n01, n10, n11 } = counts;
    let degenerate = n01 + n11 == 0 || n10 + n11 == 0 || n00 + n01 == 0;
    let lr = if degenerate {
        0.0
    } else {
        let (n00, n01, n10, n11) = (n00 as f64, n01 as f64, n10 as f64, n11 as f64);
        let pi = (n01 + n11) / (n00 + n01 + n10 + n11);
        let pi0 = n01 / (n00 + n01);
        let pi1 = n11 / (n10 + n11);
        let null = xlogy(n00 + n10, 1.0 - pi) + xlogy(n01 + n11, pi);
        let alt = xlogy(n00, 1.0 - pi0) + xlogy(n01, pi0) + xlogy(n10, 1.0 - pi1) + xlogy(n11, pi1);
        if pi0 == pi1 {
            0.0
        } else {
            (-2.0 * (null - alt)).max(0.0)
        }
    };
    Ok(IndependenceTest {
        lr,
        p_value: chi2_sf(lr, 1)?,
        counts,
    })
}

/// Joint conditional-coverage test, `LR_CC = LR_POF + LR_I` on two degrees of freedom.
pub fn cc_test(lr_pof: f64, lr_ind: f64) -> Result<LrTest> {
    if !(lr_pof >= 0.0 && lr_ind >= 0.0) {
        return Err(Error::Domain(format!(
            "likelihood ratios must be >= 0, got {lr_pof} and {lr_ind}"
        )));
    }
    let lr = lr_pof + lr_ind;
    Ok(LrTest {
        lr,
        p_value: chi2_sf(lr, 2)?,
    })
}

/// Trailing sample standard deviation (1/(d-1)) of `losses`; element `i`
/// covers `losses[i..i + d]`, i.e. it is dated at index `i + d - 1`.
pub fn rolling_volatility(losses: &[f64], d: usize) -> Result<Vec<f64>> {
    if d < 2 {
        return Err(Error::Domain(format!("rolling window must be >= 2, got {d}")));
    }
    if d > losses.len() {
        return Err(Error::InsufficientData {
            needed: d,
            got: losses.len(),
        });
    }
    Ok(losses
        .windows(d)
        .map(|w| {
            let mean = w.iter().sum::<f64>() / d as f64;
            let ss = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
            (ss / (d - 1) as f64).sqrt()
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RollingVolSeries {
    pub window: usize,
    pub dates: Vec<Date>,
    pub values: Vec<f64>,
}

impl RollingVolSeries {
    pub fn new(dates: &[Date], losses: &[f64], window: usize) -> Result<Self> {
        if dates.len() != losses.len() {
            return Err(Error::Alignment(format!(
                "{} dates for {} losses",
                dates.len(),
                losses.len()
            )));
        }
        let values = rolling_volatility(losses, window)?;
        Ok(RollingVolSeries {
            window,
            dates: dates[window - 1..].to_vec(),
            values,
        })
    }
}

pub fn pearson_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Alignment(format!("{} vs {} values", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: a.len(),
        });
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "one of the series is constant".into(),
        ));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub model_id: String,
    pub alpha: f64,
    pub observations: usize,
    pub breaches: usize,
    /// Breaches divided by observations.
    pub overshoot: f64,
    pub counts: TransitionCounts,
    pub pof: LrTest,
    pub independence: LrTest,
    pub cc: LrTest,
    pub pof_pass: bool,
    pub independence_pass: bool,
    pub cc_pass: bool,
}

impl BacktestReport {
    pub fn from_indicators(model_id: &str, alpha: f64, ind: &[u8]) -> Result<Self> {
        let pof = pof_test(ind, alpha)?;
        let it = independence_test(ind)?;
        let independence = LrTest {
            lr: it.lr,
            p_value: it.p_value,
        };
        let cc = cc_test(pof.lr, it.lr)?;
        let breaches = ind.iter().map(|&v| v as usize).sum();
        Ok(BacktestReport {
            model_id: model_id.to_string(),
            alpha,
            observations: ind.len(),
            breaches,
            overshoot: breaches as f64 / ind.len() as f64,
            counts: it.counts,
            pof,
            independence,
            cc,
            pof_pass: pof.passes(),
            independence_pass: independence.passes(),
            cc_pass: cc.passes(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Backtests every forecast series against the same ex-post losses.
pub fn run_backtest(
    forecasts: &[ForecastSeries],
    loss_dates: &[Date],
    losses: &[f64],
) -> Result<Vec<BacktestReport>> {
    forecasts
        .par_iter()
        .map(|f| {
            let ind = IndicatorSeries::from_forecast(loss_dates, losses, f)?;
            BacktestReport::from_indicators(&f.model_id, f.alpha, &ind.values)
        })
        .collect()
}

/// Metric rows by model columns: overshoot percentage and the three p-values.
pub fn table_csv(reports: &[BacktestReport]) -> String {
    let mut out = String::from("metric");
    for r in reports {
        out.push(',');
        out.push_str(&r.model_id);
    }
    out.push('\n');
    let rows: [(&str, fn(&BacktestReport) -> f64); 4] = [
        ("overshoots_pct", |r| 100.0 * r.overshoot),
        ("uc_p", |r| r.pof.p_value),
        ("ind_p", |r| r.independence.p_value),
        ("cc_p", |r| r.cc.p_value),
    ];
    for (name, get) in rows {
        out.push_str(name);
        for r in reports {
            let _ = write!(out, ",{:.3}", get(r));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Rng;
    use proptest::prelude::*;

    fn pattern(t: usize, breaches: &[usize]) -> Vec<u8> {
        let mut v = vec![0u8; t];
        for &b in breaches {
            v[b] = 1;
        }
        v
    }

    #[test]
    fn indicator_examples() {
        assert_eq!(indicator_series(&[0.01, 0.03], &[0.02, 0.02]).unwrap(), vec![0, 1]);
        assert_eq!(indicator_series(&[0.02], &[0.02]).unwrap(), vec![0]);
        assert_eq!(indicator_series(&[0.5, 0.9], &[1e300, 1e300]).unwrap(), vec![0, 0]);
        assert!(matches!(indicator_series(&[0.1], &[]), Err(Error::Alignment(_))));
    }

    #[test]
    fn pof_examples() {
        let ind = pattern(505, &(0..11).map(|k| 40 * k + 5).collect::<Vec<_>>());
        let r = pof_test(&ind, 0.99).unwrap();
        assert!((r.lr - 5.2982).abs() < 1e-3, "{}", r.lr);
        assert!((r.p_value - 0.021).abs() < 0.0015);

        let r = pof_test(&vec![0; 505], 0.99).unwrap();
        assert!((r.lr - 10.1508).abs() < 1e-3);
        assert!((r.p_value - 0.001).abs() < 0.0015);

        let r = pof_test(&pattern(500, &[1, 90, 200, 300, 499]), 0.99).unwrap();
        assert_eq!(r.lr, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn independence_examples() {
        let r = independence_test(&vec![0; 505]).unwrap();
        assert_eq!((r.lr, r.p_value), (0.0, 1.0));

        let r = independence_test(&[0, 0, 1, 0, 0, 1, 1, 0, 0, 0]).unwrap();
        assert_eq!(r.counts, TransitionCounts { n00: 4, n01: 2, n10: 2, n11: 1 });
        assert_eq!((r.lr, r.p_value), (0.0, 1.0));

        let r = independence_test(&[1, 1, 1, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        assert_eq!(r.counts, TransitionCounts { n00: 6, n01: 0, n10: 1, n11: 2 });
        // 2 [ln(1/3) + 2 ln(2/3) - 7 ln(7/9) - 2 ln(2/9)]
        let oracle = 2.0
            * ((1.0f64 / 3.0).ln() + 2.0 * (2.0f64 / 3.0).ln()
                - 7.0 * (7.0f64 / 9.0).ln()
                - 2.0 * (2.0f64 / 9.0).ln());
        assert!((r.lr - oracle).abs() < 1e-12);
        assert!((r.lr - 5.72).abs() < 0.01);
        assert!((r.p_value - 0.017).abs() < 0.001);
    }

    #[test]
    fn one_breach_pair_reproduces_published_row() {
        // 11 breaches in 505 days with exactly one consecutive pair.
        let mut b: Vec<usize> = (0..10).map(|k| 45 * k + 7).collect();
        b.push(8);
        let ind = pattern(505, &b);
        let it = independence_test(&ind).unwrap();
        assert_eq!(it.counts, TransitionCounts { n00: 483, n01: 10, n10: 10, n11: 1 });
        assert!((it.p_value - 0.229).abs() < 0.0015, "{}", it.p_value);
        let rep = BacktestReport::from_indicators("hs", 0.99, &ind).unwrap();
        assert!((rep.cc.p_value - 0.034).abs() < 0.0015, "{}", rep.cc.p_value);
    }

    #[test]
    fn cc_examples() {
        let r = cc_test(10.1508, 0.0).unwrap();
        assert!((r.p_value - 0.006).abs() < 0.0015);
        assert_eq!(cc_test(0.0, 0.0).unwrap().p_value, 1.0);
        assert!((cc_test(5.991, 0.0).unwrap().p_value - 0.05).abs() < 1e-4);
        assert!(cc_test(-1.0, 0.0).is_err());
    }

    #[test]
    fn rolling_volatility_examples() {
        assert!(rolling_volatility(&[0.3; 8], 5).unwrap().iter().all(|v| *v == 0.0));
        let v = rolling_volatility(&[1.0, 2.0, 3.0, 4.0, 5.0], 5).unwrap();
        assert_eq!(v.len(), 1);
        assert!((v[0] - 2.5f64.sqrt()).abs() < 1e-15);
        let v = rolling_volatility(&[0.0, 0.02], 2).unwrap();
        assert!((v[0] - 0.014_142_135_623_730_95).abs() < 1e-15);
        assert!(rolling_volatility(&[0.0; 3], 5).is_err());
    }

    #[test]
    fn correlation_examples() {
        let a = [0.1, -0.2, 0.5, 0.3];
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        assert!((pearson_correlation(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson_correlation(&a, &neg).unwrap() + 1.0).abs() < 1e-15);
        // Centred sums: s_ab = 5, s_aa = 2, s_bb = 114/9.
        let oracle = 5.0 / (2.0f64 * 114.0 / 9.0).sqrt();
        let r = pearson_correlation(&[1.0, 2.0, 3.0], &[2.0, 4.0, 7.0]).unwrap();
        assert!((r - oracle).abs() < 1e-12);
        assert!((r - 0.9934).abs() < 1e-4);
        assert!(matches!(
            pearson_correlation(&[1.0, 1.0], &[0.0, 1.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn report_composes_standalone_tests() {
        let ind = [0, 1, 0, 1];
        let rep = BacktestReport::from_indicators("m", 0.99, &ind).unwrap();
        assert_eq!(rep.overshoot, 0.5);
        assert_eq!(rep.pof, pof_test(&ind, 0.99).unwrap());
        let it = independence_test(&ind).unwrap();
        assert_eq!(rep.independence.lr.to_bits(), it.lr.to_bits());
        assert_eq!(rep.cc.lr, rep.pof.lr + rep.independence.lr);
        assert_eq!(rep.counts.total(), ind.len() - 1);
        assert_eq!(BacktestReport::from_json(&rep.to_json().unwrap()).unwrap(), rep);
    }

    #[test]
    fn run_backtest_checks_alignment() {
        let dates: Vec<Date> = (0..4).map(Date::synthetic).collect();
        let f = ForecastSeries {
            model_id: "x".into(),
            alpha: 0.99,
            dates: dates.clone(),
            values: vec![0.02; 4],
        };
        let losses = [0.0, 0.03, 0.0, 0.05];
        let reps = run_backtest(std::slice::from_ref(&f), &dates, &losses).unwrap();
        assert_eq!(reps[0].breaches, 2);
        assert!(matches!(
            run_backtest(&[f], &dates[1..], &losses[1..]),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn table_layout() {
        let a = BacktestReport::from_indicators("hs", 0.99, &vec![0; 505]).unwrap();
        let csv = table_csv(&[a]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "metric,hs");
        assert_eq!(lines[1], "overshoots_pct,0.000");
        assert_eq!(lines[2], "uc_p,0.001");
        assert_eq!(lines[3], "ind_p,1.000");
        assert_eq!(lines[4], "cc_p,0.006");
    }

    #[test]
    fn pof_size_under_the_null() {
        let rejections = (0..2000u64)
            .filter(|&s| {
                let mut rng = Rng::new(s);
                let ind: Vec<u8> = (0..505).map(|_| u8::from(rng.uniform() < 0.01)).collect();
                !pof_test(&ind, 0.99).unwrap().passes()
            })
            .count();
        let rate = rejections as f64 / 2000.0;
        assert!((rate - 0.05).abs() <= 0.02, "{rate}");
    }

    proptest! {
        #[test]
        fn counts_and_composition(ind in prop::collection::vec(0u8..2, 2..600)) {
            let rep = BacktestReport::from_indicators("p", 0.99, &ind).unwrap();
            prop_assert_eq!(rep.counts.total(), ind.len() - 1);
            prop_assert_eq!(rep.cc.lr, rep.pof.lr + rep.independence.lr);
            prop_assert_eq!(rep.cc.p_value, (-rep.cc.lr / 2.0).exp());
            prop_assert!(rep.pof.lr >= 0.0 && rep.independence.lr >= 0.0);
        }

        #[test]
        fn rolling_vol_translation_invariant(
            xs in prop::collection::vec(-0.1f64..0.1, 5..100),
            c in -1.0f64..1.0,
        ) {
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let a = rolling_volatility(&xs, 5).unwrap();
            let b = rolling_volatility(&shifted, 5).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
