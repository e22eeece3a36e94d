//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Set `ACCEPTANCE_ONLY=4,8` to run a subset.

mod common;

use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use common::max_relative_error;
use mdnvar::backtest::{cc_test, independence_test, pof_test};
use mdnvar::classic::{fit_garch11, garch_simulate, select_innovation, GarchParams, Innovation, InnovationKind};
use mdnvar::dist::{chi2_sf, mixture_quantile, normal_quantile, GedShape, MixtureParams, Rng};
use mdnvar::forecast::{mc_var, MonteCarloConfig};
use mdnvar::harness::{run_pipeline, two_regime_prices, ExperimentConfig, ModelId};
use mdnvar::nn::{CellActivation, LossKind};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn indicators(t: usize, breaches: usize) -> Vec<u8> {
    let mut v = vec![0u8; t];
    for k in 0..breaches {
        v[k * (t / breaches.max(1)) + 3] = 1;
    }
    v
}

fn c1_pof() -> Outcome {
    let a = pof_test(&indicators(505, 11), 0.99).unwrap();
    let b = pof_test(&indicators(505, 0), 0.99).unwrap();
    let pass = (a.p_value - 0.021).abs() <= 0.0015 && (b.p_value - 0.001).abs() <= 0.0008;
    outcome(
        pass,
        format!("I=11: LR {:.4} p {:.4}; I=0: LR {:.4} p {:.5}", a.lr, a.p_value, b.lr, b.p_value),
    )
}

fn c2_cc() -> Outcome {
    let ind = indicators(505, 0);
    let pof = pof_test(&ind, 0.99).unwrap();
    let it = independence_test(&ind).unwrap();
    let cc = cc_test(pof.lr, it.lr).unwrap();
    let max_gap = (0..=400)
        .map(|i| i as f64 * 0.05)
        .map(|x| (chi2_sf(x, 2).unwrap() - (-x / 2.0).exp()).abs())
        .fold(0.0, f64::max);
    let pass = (cc.p_value - 0.006).abs() <= 0.0015 && max_gap <= 1e-12;
    outcome(pass, format!("LR_CC {:.4} p {:.5}; max |sf - exp(-x/2)| {max_gap:e}", cc.lr, cc.p_value))
}

fn c3_independence() -> Outcome {
    let it = independence_test(&vec![0u8; 505]).unwrap();
    outcome(it.p_value == 1.0, format!("all-zero series: LR {} p {}", it.lr, it.p_value))
}

fn c4_gradients() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in [2, 3] {
        for loss in [LossKind::Nll, LossKind::Regularized { lambda: 0.1 }] {
            let cfg = common::config(k, loss, CellActivation::Relu);
            let errs: Vec<f64> = (0..20u64)
                .into_par_iter()
                .map(|s| max_relative_error(&cfg, 5000 + s))
                .collect();
            worst = errs.into_iter().fold(worst, f64::max);
        }
    }
    outcome(
        worst <= 1e-4,
        format!("max relative error {worst:.3e} over 80 configurations (K in {{2,3}}, both losses)"),
    )
}

fn c5_mc_var() -> Outcome {
    let cfg = MonteCarloConfig {
        seed: 2024,
        ..MonteCarloConfig::default()
    };
    let single = MixtureParams::single(0.0, 0.01).unwrap();
    let v1 = mc_var(&single, &cfg, &mut Rng::new(2024)).unwrap();
    let oracle1 = -0.01 * normal_quantile(0.01).unwrap();
    let mix = MixtureParams::new(vec![0.5, 0.5], vec![0.0, 0.0], vec![0.01, 0.02]).unwrap();
    let v2 = mc_var(&mix, &cfg, &mut Rng::new(2025)).unwrap();
    let oracle2 = -mixture_quantile(0.01, &mix).unwrap();
    let pass = (v1 - 0.0232635).abs() <= 0.0012 && (v2 - oracle2).abs() <= 0.0012;
    outcome(
        pass,
        format!("K=1: {v1:.5} vs {oracle1:.5}; K=2: {v2:.5} vs {oracle2:.5}"),
    )
}

fn c6_garch() -> Outcome {
    let normal = GarchParams::new(1e-6, 0.1, 0.85, Innovation::Normal).unwrap();
    let ged = GarchParams::new(
        1e-6,
        0.1,
        0.85,
        Innovation::Ged {
            nu: GedShape::new(1.2).unwrap(),
        },
    )
    .unwrap();
    let trials: Vec<(bool, bool, bool)> = (0..20u64)
        .into_par_iter()
        .map(|s| {
            let x = garch_simulate(&normal, 5000, &mut Rng::new(s)).unwrap();
            let recovered = fit_garch11(x.returns(), InnovationKind::Normal)
                .map(|f| (f.params.persistence() - 0.95).abs() <= 0.05)
                .unwrap_or(false);
            let g = garch_simulate(&ged, 5000, &mut Rng::new(1000 + s)).unwrap();
            let picks_ged = select_innovation(g.returns())
                .map(|sel| sel.chosen == InnovationKind::Ged)
                .unwrap_or(false);
            let n = garch_simulate(&normal, 5000, &mut Rng::new(2000 + s)).unwrap();
            let picks_normal = select_innovation(n.returns())
                .map(|sel| sel.chosen == InnovationKind::Normal)
                .unwrap_or(false);
            (recovered, picks_ged, picks_normal)
        })
        .collect();
    let count = |f: fn(&(bool, bool, bool)) -> bool| trials.iter().filter(|t| f(t)).count();
    let (rec, g, n) = (count(|t| t.0), count(|t| t.1), count(|t| t.2));
    outcome(
        rec >= 18 && g >= 18 && n >= 18,
        format!("persistence recovered {rec}/20; AIC picks GED on GED(1.2) {g}/20, Normal on normal {n}/20"),
    )
}

fn c7_pof_size() -> Outcome {
    let rejections = (0..2000u64)
        .into_par_iter()
        .filter(|&s| {
            let mut rng = Rng::new(70_000 + s);
            let ind: Vec<u8> = (0..505).map(|_| u8::from(rng.uniform() < 0.01)).collect();
            !pof_test(&ind, 0.99).unwrap().passes()
        })
        .count();
    let rate = rejections as f64 / 2000.0;
    outcome((rate - 0.05).abs() <= 0.02, format!("rejection rate {:.2}%", 100.0 * rate))
}

fn smoke_config(dir: &Path) -> ExperimentConfig {
    let prices = two_regime_prices(4000, 250, (0.008, 0.02), 8);
    let mut csv = String::from("date,close\n");
    for (d, p) in prices.dates().iter().zip(prices.prices()) {
        csv.push_str(&format!("{d},{:?}\n", p.unwrap()));
    }
    fs::create_dir_all(dir).unwrap();
    let source = dir.join("two_regime.csv");
    fs::write(&source, csv).unwrap();
    // Returns are dated by their closing price; the last 500 are evaluated.
    let dates = prices.dates();
    let mut cfg = ExperimentConfig::new(source.to_string_lossy(), dates[3501], dates[4000]);
    cfg.models = vec![ModelId::Nnet2];
    cfg.master_seed = 8;
    cfg.output_dir = dir.join("out");
    cfg
}

fn read_correlation(out: &Path) -> Option<f64> {
    let text = fs::read_to_string(out.join("correlation.csv")).ok()?;
    text.lines()
        .find_map(|l| l.strip_prefix("nnet2,"))
        .and_then(|r| r.parse().ok())
}

fn c8_smoke(root: &Path) -> Outcome {
    let cfg = smoke_config(&root.join("run1"));
    let start = Instant::now();
    let result = run_pipeline(&cfg);
    let secs = start.elapsed().as_secs_f64();
    if let Err(e) = result {
        return outcome(false, format!("pipeline failed: {e}"));
    }
    let forecasts = fs::read_to_string(cfg.output_dir.join("forecasts/nnet2.csv")).unwrap();
    let days = forecasts.lines().count() - 1;
    let r = read_correlation(&cfg.output_dir);
    let pass = days == 500 && r.is_some_and(|r| r > 0.2) && secs < 600.0;
    outcome(
        pass,
        format!("{days} forecasts, corr(VaR, 5-day vol) = {r:?}, {secs:.1}s"),
    )
}

fn c9_determinism(root: &Path) -> Outcome {
    let first = smoke_config(&root.join("run1"));
    if !first.output_dir.join("forecasts/nnet2.csv").exists() {
        if let Err(e) = run_pipeline(&first) {
            return outcome(false, format!("first run failed: {e}"));
        }
    }
    let second = smoke_config(&root.join("run2"));
    if let Err(e) = run_pipeline(&second) {
        return outcome(false, format!("second run failed: {e}"));
    }
    let files = [
        "models/nnet2.json",
        "forecasts/nnet2.csv",
        "reports/nnet2.json",
        "table.csv",
        "correlation.csv",
        "plot_data.csv",
    ];
    let differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| fs::read(first.output_dir.join(f)).ok() != fs::read(second.output_dir.join(f)).ok())
        .collect();
    outcome(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} artifacts byte-identical across runs", files.len())
        } else {
            format!("differing: {differing:?}")
        },
    )
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |n: u32| only.as_ref().is_none_or(|o| o.contains(&n));
    let root = tempfile::tempdir().unwrap();

    let criteria: Vec<(u32, &str, Box<dyn Fn() -> Outcome>)> = vec![
        (1, "POF oracle", Box::new(c1_pof)),
        (2, "joint-test oracle", Box::new(c2_cc)),
        (3, "zero-breach independence", Box::new(c3_independence)),
        (4, "gradient correctness", Box::new(c4_gradients)),
        (5, "MC VaR convergence", Box::new(c5_mc_var)),
        (6, "GARCH recovery and AIC selection", Box::new(c6_garch)),
        (7, "POF size calibration", Box::new(c7_pof_size)),
        (8, "end-to-end smoke", Box::new(|| c8_smoke(root.path()))),
        (9, "determinism", Box::new(|| c9_determinism(root.path()))),
    ];

    let mut failed = 0;
    for (n, name, run) in criteria {
        if !wanted(n) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {n} {verdict}: {name}: {} [{:.1}s]",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
