use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mdnvar::harness::{
    cmd_backtest, cmd_fit, cmd_forecast, cmd_ingest, cmd_report, run_pipeline, ExperimentConfig,
    IngestSummary, ModelId,
};
use mdnvar::series::Date;
use mdnvar::{Error, Result};

const USAGE_EXIT: u8 = 64;

/// One-day-ahead Value-at-Risk: HS, CMM, GARCH(1,1) and LSTM mixture density networks.
#[derive(Debug, Parser)]
#[command(name = "mdnvar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read prices, interpolate gaps and write returns.csv.
    Ingest(Overrides),
    /// Fit models (all configured models when none are named).
    Fit(ModelArgs),
    /// Produce VaR forecasts over the evaluation window.
    Forecast(ModelArgs),
    /// Run coverage tests and write tables.
    Backtest(Overrides),
    /// Render summary.md from a finished run.
    Report {
        /// Run directory holding manifest.json.
        #[arg(long, default_value = "out")]
        output_dir: PathBuf,
    },
    /// ingest, fit, forecast, backtest and report in one go.
    Run(Overrides),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Models to process: hs, cmm, garch, nnet1, nnet2, nnet3.
    #[arg(value_name = "MODEL")]
    only: Vec<String>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct Overrides {
    /// Experiment config (JSON). Flags below override its fields.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    eval_start: Option<Date>,
    #[arg(long)]
    eval_end: Option<Date>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Comma-separated model list replacing the configured one.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Also render plot.svg.
    #[arg(long)]
    svg: bool,
}

fn parse_models(names: &[String]) -> Result<Vec<ModelId>> {
    names.iter().map(|s| s.parse()).collect()
}

impl Overrides {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => {
                let (Some(source), Some(start), Some(end)) = (&self.source, self.eval_start, self.eval_end) else {
                    return Err(Error::Usage(
                        "either --config or all of --source, --eval-start and --eval-end are required".into(),
                    ));
                };
                ExperimentConfig::new(source.clone(), start, end)
            }
        };
        if let Some(v) = &self.source {
            cfg.source = v.clone();
        }
        if let Some(v) = self.eval_start {
            cfg.eval_start = v;
        }
        if let Some(v) = self.eval_end {
            cfg.eval_end = v;
        }
        if let Some(v) = &self.output_dir {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = self.master_seed {
            cfg.master_seed = v;
        }
        if let Some(v) = self.mc_samples {
            cfg.mc_samples = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.max_epochs {
            cfg.max_epochs = v;
        }
        if let Some(v) = &self.models {
            cfg.models = parse_models(v)?;
        }
        cfg.svg_plots |= self.svg;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_ingest(s: &IngestSummary) {
    println!(
        "{} prices, {} missing ({:.2}%), {} returns",
        s.prices,
        s.missing,
        100.0 * s.missing_fraction,
        s.returns
    );
    for (name, p) in [("train", &s.train), ("validation", &s.validation), ("test", &s.test)] {
        println!("{name:>10}: n = {:>5}  mean = {:+.6}  sd = {:.5}", p.observations, p.mean, p.sd);
    }
    if s.dropped_after > 0 {
        println!("{} returns after eval_end dropped", s.dropped_after);
    }
    if s.warn_missing() {
        eprintln!("warning: {:.2}% of prices were missing and interpolated", 100.0 * s.missing_fraction);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(o) => print_ingest(&cmd_ingest(&o.resolve()?)?),
        Command::Fit(a) => {
            let models = parse_models(&a.only)?;
            cmd_fit(&a.overrides.resolve()?, &models)?;
        }
        Command::Forecast(a) => {
            let models = parse_models(&a.only)?;
            cmd_forecast(&a.overrides.resolve()?, &models)?;
        }
        Command::Backtest(o) => {
            for r in cmd_backtest(&o.resolve()?)? {
                println!(
                    "{:>6}: {} breaches / {} days, UC p {:.3}, Ind p {:.3}, CC p {:.3}",
                    r.model_id, r.breaches, r.observations, r.pof.p_value, r.independence.p_value, r.cc.p_value
                );
            }
        }
        Command::Report { output_dir } => print!("{}", cmd_report(&output_dir)?),
        Command::Run(o) => {
            let cfg = o.resolve()?;
            run_pipeline(&cfg)?;
            println!("summary written to {}", cfg.output_dir.join("summary.md").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(USAGE_EXIT) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_config() {
        let cli = Cli::try_parse_from([
            "mdnvar", "fit", "nnet1", "--source", "p.csv", "--eval-start", "2017-01-02",
            "--eval-end", "2018-12-31", "--models", "hs,nnet1", "--master-seed", "7",
        ])
        .unwrap();
        let Command::Fit(a) = cli.command else { panic!() };
        let cfg = a.overrides.resolve().unwrap();
        assert_eq!(cfg.models, vec![ModelId::Hs, ModelId::Nnet1]);
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(parse_models(&a.only).unwrap(), vec![ModelId::Nnet1]);
    }

    #[test]
    fn missing_source_is_usage_error() {
        let cli = Cli::try_parse_from(["mdnvar", "ingest"]).unwrap();
        let Command::Ingest(o) = cli.command else { panic!() };
        assert_eq!(o.resolve().unwrap_err().exit_code(), 64);
    }
}
