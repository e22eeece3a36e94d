//! Experiment driver: ingest -> fit -> forecast -> backtest -> report, with
//! every stage reading and writing flat files under the output directory.

mod config;
mod manifest;
mod svg;

pub use config::{ExperimentConfig, ModelId};
pub use manifest::{write_atomic, ModelArtifacts, RunManifest, MANIFEST_FILE};
pub use svg::line_chart;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand_core::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backtest::{pearson_correlation, rolling_volatility, run_backtest, table_csv, BacktestReport};
use crate::classic::{select_innovation, GarchParams, InnovationKind, VaRConfig};
use crate::dist::Rng;
use crate::forecast::{
    forecast_series, CmmForecaster, ForecastSeries, GarchForecaster, HsForecaster, MdnForecaster,
    MonteCarloConfig, VarForecaster,
};
use crate::nn::{train_best_of, NetworkParams, SeedRun, TrainConfig, TrainHistory};
use crate::series::{sample_stats, PriceSeries, ReturnSeries, Split, WindowedDataset, MISSING_WARN_FRACTION};
use crate::{Error, Result};

pub const RETURNS_FILE: &str = "returns.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodStats {
    pub observations: usize,
    pub mean: f64,
    pub sd: f64,
}

impl PeriodStats {
    fn of(xs: &[f64]) -> Result<Self> {
        let (mean, sd) = sample_stats(xs)?;
        Ok(PeriodStats {
            observations: xs.len(),
            mean,
            sd,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub prices: usize,
    pub missing: usize,
    pub missing_fraction: f64,
    pub returns: usize,
    pub train: PeriodStats,
    pub validation: PeriodStats,
    pub test: PeriodStats,
    pub dropped_after: usize,
}

impl IngestSummary {
    pub fn warn_missing(&self) -> bool {
        self.missing_fraction > MISSING_WARN_FRACTION
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct BenchmarkArtifact {
    model: ModelId,
    alpha: f64,
    window: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GarchArtifact {
    pub model: ModelId,
    pub alpha: f64,
    pub window: usize,
    pub innovation: InnovationKind,
    pub selection_start: String,
    pub selection_end: String,
    pub aic_normal: Option<f64>,
    pub aic_ged: Option<f64>,
    pub params_normal: Option<GarchParams>,
    pub params_ged: Option<GarchParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryArtifact {
    pub model: ModelId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chosen_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub runs: Vec<SeedRun>,
    pub history: TrainHistory,
}

fn rel(dir: &str, name: &str) -> PathBuf {
    Path::new(dir).join(name)
}

fn model_file(m: ModelId) -> PathBuf {
    rel("models", &format!("{m}.json"))
}

fn history_file(m: ModelId) -> PathBuf {
    rel("models", &format!("{m}.history.json"))
}

fn forecast_file(m: ModelId) -> PathBuf {
    rel("forecasts", &format!("{m}.csv"))
}

fn report_file(m: ModelId) -> PathBuf {
    rel("reports", &format!("{m}.json"))
}

fn read_artifact(dir: &Path, model: &str, p: &Path) -> Result<String> {
    let full = dir.join(p);
    if !full.exists() {
        return Err(Error::MissingArtifact {
            model: model.into(),
            path: full,
        });
    }
    Ok(fs::read_to_string(full)?)
}

fn invalid(path: &Path, e: impl ToString) -> Error {
    Error::InvalidArtifact {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn var_config(cfg: &ExperimentConfig) -> VaRConfig {
    VaRConfig {
        alpha: cfg.alpha,
        horizon: 1,
        window: cfg.benchmark_window,
        asset_value: 1.0,
    }
}

/// Seed for the Monte Carlo streams of `model`, derived from the master seed.
pub fn model_seed(master_seed: u64, model: ModelId) -> u64 {
    Rng::new(master_seed).split(model.stream()).next_u64()
}

/// Loads the ingested returns and the split they imply for `cfg`.
pub fn load_returns(cfg: &ExperimentConfig) -> Result<(ReturnSeries, Split)> {
    let text = read_artifact(&cfg.output_dir, "returns", Path::new(RETURNS_FILE))?;
    let returns = ReturnSeries::from_csv_str(&text)?;
    let split = returns.split(&cfg.split_spec())?;
    Ok((returns, split))
}

fn timed<T>(
    cfg: &ExperimentConfig,
    stage: &str,
    body: impl FnOnce(&mut RunManifest) -> Result<T>,
) -> Result<T> {
    let existed = RunManifest::path(&cfg.output_dir).exists();
    let mut manifest = RunManifest::load_or_new(cfg)?;
    let start = Instant::now();
    let out = body(&mut manifest);
    if out.is_err() && !existed {
        return out;
    }
    manifest
        .timings
        .insert(stage.to_string(), start.elapsed().as_secs_f64());
    manifest.save(&cfg.output_dir)?;
    out
}

/// Reads the source, fills interior gaps, and writes `returns.csv`.
pub fn cmd_ingest(cfg: &ExperimentConfig) -> Result<IngestSummary> {
    cfg.validate()?;
    timed(cfg, "ingest", |manifest| {
        let prices = PriceSeries::from_csv_bytes(&crate::series::read_source(&cfg.source)?)?;
        let filled = prices.interpolate_missing()?;
        let returns = filled.to_returns()?;
        let split = returns.split(&cfg.split_spec())?;
        write_atomic(
            &cfg.output_dir.join(RETURNS_FILE),
            returns.to_csv_string().as_bytes(),
        )?;
        manifest.returns = Some(RETURNS_FILE.into());
        let r = returns.returns();
        Ok(IngestSummary {
            prices: prices.len(),
            missing: prices.missing_count(),
            missing_fraction: prices.missing_fraction(),
            returns: returns.len(),
            train: PeriodStats::of(&r[split.train.clone()])?,
            validation: PeriodStats::of(&r[split.validation.clone()])?,
            test: PeriodStats::of(&r[split.test.clone()])?,
            dropped_after: split.dropped_after,
        })
    })
}

fn train_config(cfg: &ExperimentConfig) -> TrainConfig {
    TrainConfig {
        max_epochs: cfg.max_epochs,
        patience: cfg.patience,
        seeds: cfg.train_seeds.clone(),
        ..TrainConfig::default()
    }
}

fn fit_one(cfg: &ExperimentConfig, returns: &ReturnSeries, split: &Split, model: ModelId) -> Result<ModelArtifacts> {
    let dir = &cfg.output_dir;
    let r = returns.returns();
    let mut art = ModelArtifacts {
        model: Some(model_file(model)),
        ..ModelArtifacts::default()
    };
    match model {
        ModelId::Hs | ModelId::Cmm => {
            let a = BenchmarkArtifact {
                model,
                alpha: cfg.alpha,
                window: cfg.benchmark_window,
            };
            write_atomic(&dir.join(model_file(model)), &json(&a)?)?;
        }
        ModelId::Garch => {
            let end = split.test.start;
            if end < cfg.benchmark_window {
                return Err(Error::InsufficientHistory {
                    date: returns.dates()[end].to_string(),
                });
            }
            let start = end - cfg.benchmark_window;
            let sel = select_innovation(&r[start..end])?;
            let a = GarchArtifact {
                model,
                alpha: cfg.alpha,
                window: cfg.benchmark_window,
                innovation: sel.chosen,
                selection_start: returns.dates()[start].to_string(),
                selection_end: returns.dates()[end - 1].to_string(),
                aic_normal: sel.aic(InnovationKind::Normal),
                aic_ged: sel.aic(InnovationKind::Ged),
                params_normal: sel.normal.as_ref().map(|f| f.params),
                params_ged: sel.ged.as_ref().map(|f| f.params),
            };
            write_atomic(&dir.join(model_file(model)), &json(&a)?)?;
        }
        _ => {
            let net = model.network().expect("network model");
            let net = crate::nn::NetworkConfig {
                lookback: cfg.nn_lookback,
                ..net
            };
            let pre = WindowedDataset::new(&r[..split.test.start], cfg.nn_lookback)?;
            let train = pre.select_targets(split.train.clone());
            let validation = pre.select_targets(split.validation.clone());
            art.history = Some(history_file(model));
            match train_best_of(&train, &validation, &net, &train_config(cfg)) {
                Ok(best) => {
                    write_atomic(&dir.join(model_file(model)), best.network.params.to_json()?.as_bytes())?;
                    let h = HistoryArtifact {
                        model,
                        chosen_seed: Some(best.network.history.seed),
                        error: None,
                        runs: best.runs,
                        history: best.network.history,
                    };
                    write_atomic(&dir.join(history_file(model)), &json(&h)?)?;
                }
                Err(Error::Training {
                    epoch,
                    message,
                    history,
                }) => {
                    let h = HistoryArtifact {
                        model,
                        chosen_seed: None,
                        error: Some(message.clone()),
                        runs: Vec::new(),
                        history: history.clone(),
                    };
                    write_atomic(&dir.join(history_file(model)), &json(&h)?)?;
                    return Err(Error::Training {
                        epoch,
                        message,
                        history,
                    });
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(art)
}

/// Fits the given models (all configured models if empty) and records the artifacts.
pub fn cmd_fit(cfg: &ExperimentConfig, models: &[ModelId]) -> Result<()> {
    cfg.validate()?;
    let models = if models.is_empty() { cfg.models.clone() } else { models.to_vec() };
    timed(cfg, "fit", |manifest| {
        let (returns, split) = load_returns(cfg)?;
        let results: Vec<(ModelId, Result<ModelArtifacts>)> = models
            .par_iter()
            .map(|&m| (m, fit_one(cfg, &returns, &split, m)))
            .collect();
        let mut first_err = None;
        for (m, res) in results {
            match res {
                Ok(a) => {
                    let e = manifest.entry(m.as_str());
                    e.model = a.model;
                    e.history = a.history;
                }
                Err(err) => {
                    if m.is_network() && cfg.output_dir.join(history_file(m)).exists() {
                        manifest.entry(m.as_str()).history = Some(history_file(m));
                    }
                    first_err.get_or_insert(err);
                }
            }
        }
        first_err.map_or(Ok(()), Err)
    })
}

fn forecaster(cfg: &ExperimentConfig, model: ModelId) -> Result<Box<dyn VarForecaster>> {
    let dir = &cfg.output_dir;
    let path = model_file(model);
    let text = read_artifact(dir, model.as_str(), &path)?;
    Ok(match model {
        ModelId::Hs => Box::new(HsForecaster { config: var_config(cfg) }),
        ModelId::Cmm => Box::new(CmmForecaster { config: var_config(cfg) }),
        ModelId::Garch => {
            let a: GarchArtifact = serde_json::from_str(&text).map_err(|e| invalid(&dir.join(&path), e))?;
            Box::new(GarchForecaster {
                config: var_config(cfg),
                innovation: a.innovation,
            })
        }
        _ => {
            let params = NetworkParams::from_json(&text).map_err(|e| invalid(&dir.join(&path), e))?;
            if params.config().lookback != cfg.nn_lookback {
                return Err(invalid(&dir.join(&path), "lookback differs from the configuration"));
            }
            Box::new(MdnForecaster {
                id: model.as_str().into(),
                params,
                mc: MonteCarloConfig {
                    n_samples: cfg.mc_samples,
                    alpha: cfg.alpha,
                    asset_value: 1.0,
                    seed: model_seed(cfg.master_seed, model),
                },
            })
        }
    })
}

/// Writes `forecasts/<model>.csv` for the given models (all if empty).
pub fn cmd_forecast(cfg: &ExperimentConfig, models: &[ModelId]) -> Result<()> {
    cfg.validate()?;
    let models = if models.is_empty() { cfg.models.clone() } else { models.to_vec() };
    timed(cfg, "forecast", |manifest| {
        let (returns, split) = load_returns(cfg)?;
        for m in models {
            let f = forecaster(cfg, m)?;
            let series = forecast_series(f.as_ref(), &returns, split.test.clone())?;
            write_atomic(&cfg.output_dir.join(forecast_file(m)), series.to_csv_string().as_bytes())?;
            manifest.entry(m.as_str()).forecast = Some(forecast_file(m));
        }
        Ok(())
    })
}

fn load_forecast(cfg: &ExperimentConfig, model: ModelId) -> Result<ForecastSeries> {
    let path = forecast_file(model);
    let text = read_artifact(&cfg.output_dir, model.as_str(), &path)?;
    let f = ForecastSeries::from_csv_str(&text).map_err(|e| invalid(&cfg.output_dir.join(&path), e))?;
    if f.model_id != model.as_str() {
        return Err(invalid(&cfg.output_dir.join(&path), format!("holds model '{}'", f.model_id)));
    }
    Ok(f)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub model: String,
    /// `None` when either series is constant.
    pub r: Option<f64>,
}

/// Correlation of each VaR series with the trailing `d`-day volatility of
/// test-period losses, over the dates where the volatility is defined.
pub fn reactivity(forecasts: &[ForecastSeries], losses: &[f64], d: usize) -> Result<Vec<Correlation>> {
    let vol = rolling_volatility(losses, d)?;
    forecasts
        .iter()
        .map(|f| {
            if f.values.len() != losses.len() {
                return Err(Error::Alignment(format!("forecast '{}' length", f.model_id)));
            }
            let r = match pearson_correlation(&f.values[d - 1..], &vol) {
                Ok(r) => Some(r),
                Err(Error::UndefinedCorrelation(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(Correlation {
                model: f.model_id.clone(),
                r,
            })
        })
        .collect()
}

/// Backtests every configured model's forecasts and writes the reports,
/// the combined results table, correlations and plot data.
pub fn cmd_backtest(cfg: &ExperimentConfig) -> Result<Vec<BacktestReport>> {
    cfg.validate()?;
    timed(cfg, "backtest", |manifest| {
        let dir = &cfg.output_dir;
        let (returns, split) = load_returns(cfg)?;
        let forecasts = cfg
            .models
            .iter()
            .map(|&m| load_forecast(cfg, m))
            .collect::<Result<Vec<_>>>()?;
        let dates = &returns.dates()[split.test.clone()];
        let losses = &returns.losses()[split.test.clone()];
        let reports = run_backtest(&forecasts, dates, losses)?;
        for (m, rep) in cfg.models.iter().zip(&reports) {
            write_atomic(&dir.join(report_file(*m)), &json(rep)?)?;
            manifest.entry(m.as_str()).report = Some(report_file(*m));
        }
        write_atomic(&dir.join("table.csv"), table_csv(&reports).as_bytes())?;
        manifest.tables.insert("table".into(), "table.csv".into());

        let correlations = reactivity(&forecasts, losses, cfg.vol_window)?;
        let mut csv = String::from("model,r\n");
        for c in &correlations {
            let _ = writeln!(csv, "{},{}", c.model, c.r.map_or(String::new(), |r| format!("{r:?}")));
        }
        write_atomic(&dir.join("correlation.csv"), csv.as_bytes())?;
        manifest.tables.insert("correlation".into(), "correlation.csv".into());

        let vol = rolling_volatility(losses, cfg.vol_window)?;
        let mut plot = String::from("date,loss,rolling_vol");
        for f in &forecasts {
            plot.push(',');
            plot.push_str(&f.model_id);
        }
        plot.push('\n');
        for (i, (d, l)) in dates.iter().zip(losses).enumerate() {
            let v = i
                .checked_sub(cfg.vol_window - 1)
                .map_or(String::new(), |j| format!("{:?}", vol[j]));
            let _ = write!(plot, "{d},{l:?},{v}");
            for f in &forecasts {
                let _ = write!(plot, ",{:?}", f.values[i]);
            }
            plot.push('\n');
        }
        write_atomic(&dir.join("plot_data.csv"), plot.as_bytes())?;
        manifest.tables.insert("plot_data".into(), "plot_data.csv".into());

        if cfg.svg_plots {
            let mut series: Vec<(&str, &[f64])> = vec![("loss", losses)];
            series.extend(forecasts.iter().map(|f| (f.model_id.as_str(), f.values.as_slice())));
            let svg = line_chart(
                &format!("Losses and {}% VaR", 100.0 * cfg.alpha),
                &dates[0].to_string(),
                &dates[dates.len() - 1].to_string(),
                &series,
            );
            write_atomic(&dir.join("plot.svg"), svg.as_bytes())?;
            manifest.tables.insert("plot_svg".into(), "plot.svg".into());
        }
        Ok(reports)
    })
}

fn pass(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "FAIL"
    }
}

/// Renders `summary.md` from the manifest and the artifacts it lists.
pub fn cmd_report(output_dir: &Path) -> Result<String> {
    let manifest = RunManifest::load(output_dir)?;
    manifest.check_artifacts(output_dir)?;
    let cfg = &manifest.config;
    let mut out = String::new();
    let _ = writeln!(out, "# VaR backtest summary\n");
    let _ = writeln!(out, "- engine version: {}", manifest.engine_version);
    let _ = writeln!(out, "- config hash: `{}`", manifest.config_hash);
    let _ = writeln!(out, "- source: `{}`", cfg.source);
    let _ = writeln!(out, "- evaluation: {} to {}", cfg.eval_start, cfg.eval_end);
    let _ = writeln!(out, "- alpha: {}, master seed: {}\n", cfg.alpha, cfg.master_seed);

    let mut correlations = std::collections::BTreeMap::new();
    if let Some(p) = manifest.tables.get("correlation") {
        for line in fs::read_to_string(output_dir.join(p))?.lines().skip(1) {
            if let Some((m, r)) = line.split_once(',') {
                correlations.insert(m.to_string(), r.to_string());
            }
        }
    }

    let _ = writeln!(out, "| model | days | breaches | overshoot % | UC p | Ind p | CC p | UC | Ind | CC | corr(VaR, vol) |");
    let _ = writeln!(out, "|---|---|---|---|---|---|---|---|---|---|---|");
    for m in &cfg.models {
        let id = m.as_str();
        let Some(path) = manifest.models.get(id).and_then(|a| a.report.as_ref()) else {
            let _ = writeln!(out, "| {id} | | | | | | | not backtested | | | |");
            continue;
        };
        let text = fs::read_to_string(output_dir.join(path))?;
        let r = BacktestReport::from_json(&text).map_err(|e| invalid(&output_dir.join(path), e))?;
        let _ = writeln!(
            out,
            "| {id} | {} | {} | {:.3} | {:.3} | {:.3} | {:.3} | {} | {} | {} | {} |",
            r.observations,
            r.breaches,
            100.0 * r.overshoot,
            r.pof.p_value,
            r.independence.p_value,
            r.cc.p_value,
            pass(r.pof_pass),
            pass(r.independence_pass),
            pass(r.cc_pass),
            correlations
                .get(id)
                .filter(|s| !s.is_empty())
                .and_then(|s| s.parse::<f64>().ok())
                .map_or("n/a".to_string(), |r| format!("{r:.3}")),
        );
    }
    let _ = writeln!(out, "\nTests at 5% significance.\n\n## Timings (s)\n");
    for (stage, secs) in &manifest.timings {
        let _ = writeln!(out, "- {stage}: {secs:.2}");
    }
    let _ = writeln!(out, "\n## Configuration\n\n```json\n{}\n```", cfg.to_json());
    write_atomic(&output_dir.join("summary.md"), out.as_bytes())?;
    Ok(out)
}

/// All stages in order.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<RunManifest> {
    cmd_ingest(cfg)?;
    cmd_fit(cfg, &[])?;
    cmd_forecast(cfg, &[])?;
    cmd_backtest(cfg)?;
    cmd_report(&cfg.output_dir)?;
    RunManifest::load(&cfg.output_dir)
}

/// Two-regime synthetic prices: Gaussian returns whose volatility alternates
/// between `sigmas` every `block` days, compounded from a price of 100.
pub fn two_regime_prices(n_returns: usize, block: usize, sigmas: (f64, f64), seed: u64) -> PriceSeries {
    let mut rng = Rng::new(seed);
    let mut prices = Vec::with_capacity(n_returns + 1);
    let mut p = 100.0;
    prices.push(p);
    for t in 0..n_returns {
        let sigma = if (t / block) % 2 == 0 { sigmas.0 } else { sigmas.1 };
        p *= 1.0 + sigma * rng.standard_normal();
        prices.push(p);
    }
    let dates = (0..prices.len()).map(crate::series::Date::synthetic).collect();
    PriceSeries::from_values(dates, &prices).expect("positive synthetic prices")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_prices(dir: &Path, prices: &PriceSeries) -> String {
        let mut csv = String::from("date,close\n");
        for (d, p) in prices.dates().iter().zip(prices.prices()) {
            let _ = writeln!(csv, "{d},{:?}", p.unwrap());
        }
        let path = dir.join("prices.csv");
        fs::write(&path, csv).unwrap();
        path.to_string_lossy().into_owned()
    }

    fn small_config(dir: &Path, models: Vec<ModelId>) -> ExperimentConfig {
        let prices = two_regime_prices(900, 100, (0.008, 0.02), 5);
        let source = write_prices(dir, &prices);
        let dates = prices.dates();
        let mut cfg = ExperimentConfig::new(source, dates[801], dates[900]);
        cfg.models = models;
        cfg.mc_samples = 2000;
        cfg.max_epochs = 3;
        cfg.output_dir = dir.join("out");
        cfg
    }

    #[test]
    fn benchmark_pipeline_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(dir.path(), vec![ModelId::Hs, ModelId::Cmm]);
        let m = run_pipeline(&cfg).unwrap();
        assert_eq!(m.models.len(), 2);
        m.check_artifacts(&cfg.output_dir).unwrap();
        let table = fs::read_to_string(cfg.output_dir.join("table.csv")).unwrap();
        assert!(table.starts_with("metric,hs,cmm\n"));
        let summary = fs::read_to_string(cfg.output_dir.join("summary.md")).unwrap();
        assert_eq!(summary.matches("| hs |").count(), 1);
        assert_eq!(summary.matches("| cmm |").count(), 1);
        let again = cmd_report(&cfg.output_dir).unwrap();
        assert_eq!(again, summary);
    }

    #[test]
    fn network_fit_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(dir.path(), vec![ModelId::Nnet1]);
        cmd_ingest(&cfg).unwrap();
        cmd_fit(&cfg, &[]).unwrap();
        let a = fs::read(cfg.output_dir.join("models/nnet1.json")).unwrap();
        cmd_fit(&cfg, &[]).unwrap();
        let b = fs::read(cfg.output_dir.join("models/nnet1.json")).unwrap();
        assert_eq!(a, b);
        assert!(cfg.output_dir.join("models/nnet1.history.json").exists());
    }

    #[test]
    fn backtest_names_missing_forecast() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(dir.path(), vec![ModelId::Hs]);
        cmd_ingest(&cfg).unwrap();
        match cmd_backtest(&cfg) {
            Err(Error::MissingArtifact { model, .. }) => assert_eq!(model, "hs"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identical_forecasts_give_identical_rows() {
        let dates: Vec<_> = (0..20).map(crate::series::Date::synthetic).collect();
        let losses: Vec<f64> = (0..20).map(|i| ((i * 7) % 5) as f64 * 0.01).collect();
        let f = |id: &str| ForecastSeries {
            model_id: id.into(),
            alpha: 0.99,
            dates: dates.clone(),
            values: vec![0.03; 20],
        };
        let reps = run_backtest(&[f("a"), f("b")], &dates, &losses).unwrap();
        let strip = |r: &BacktestReport| BacktestReport { model_id: String::new(), ..r.clone() };
        assert_eq!(strip(&reps[0]), strip(&reps[1]));
    }

    #[test]
    fn report_fails_on_deleted_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(dir.path(), vec![ModelId::Hs]);
        run_pipeline(&cfg).unwrap();
        fs::remove_file(cfg.output_dir.join("forecasts/hs.csv")).unwrap();
        assert!(matches!(cmd_report(&cfg.output_dir), Err(Error::MissingArtifact { .. })));
    }

    #[test]
    fn truncating_after_eval_end_keeps_forecasts() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(dir.path(), vec![ModelId::Hs, ModelId::Cmm]);
        let end = cfg.eval_end;
        cfg.eval_end = crate::series::Date::synthetic(850);
        cmd_ingest(&cfg).unwrap();
        cmd_fit(&cfg, &[]).unwrap();
        cmd_forecast(&cfg, &[]).unwrap();
        let full = fs::read(cfg.output_dir.join("forecasts/cmm.csv")).unwrap();

        let prices = PriceSeries::from_csv_str(&fs::read_to_string(&cfg.source).unwrap()).unwrap();
        let n = prices.dates().partition_point(|d| *d <= cfg.eval_end);
        let cut = PriceSeries::new(prices.dates()[..n].to_vec(), prices.prices()[..n].to_vec()).unwrap();
        let sub = dir.path().join("cut");
        fs::create_dir_all(&sub).unwrap();
        let mut cfg2 = cfg.clone();
        cfg2.source = write_prices(&sub, &cut);
        cfg2.output_dir = sub.join("out");
        cmd_ingest(&cfg2).unwrap();
        cmd_fit(&cfg2, &[]).unwrap();
        cmd_forecast(&cfg2, &[]).unwrap();
        assert_eq!(full, fs::read(cfg2.output_dir.join("forecasts/cmm.csv")).unwrap());
        assert!(end > cfg.eval_end);
    }
}
