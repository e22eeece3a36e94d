use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::nn::NetworkConfig;
use crate::series::{Date, SplitSpec};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelId {
    Hs,
    Cmm,
    Garch,
    Nnet1,
    Nnet2,
    Nnet3,
}

impl ModelId {
    pub const ALL: [ModelId; 6] = [
        ModelId::Hs,
        ModelId::Cmm,
        ModelId::Garch,
        ModelId::Nnet1,
        ModelId::Nnet2,
        ModelId::Nnet3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Hs => "hs",
            ModelId::Cmm => "cmm",
            ModelId::Garch => "garch",
            ModelId::Nnet1 => "nnet1",
            ModelId::Nnet2 => "nnet2",
            ModelId::Nnet3 => "nnet3",
        }
    }

    pub fn network(self) -> Option<NetworkConfig> {
        match self {
            ModelId::Nnet1 => Some(NetworkConfig::nnet1()),
            ModelId::Nnet2 => Some(NetworkConfig::nnet2()),
            ModelId::Nnet3 => Some(NetworkConfig::nnet3()),
            _ => None,
        }
    }

    pub fn is_network(self) -> bool {
        self.network().is_some()
    }

    /// Stable per-model stream index for seed derivation.
    pub fn stream(self) -> u64 {
        ModelId::ALL.iter().position(|m| *m == self).unwrap() as u64
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Usage(format!("unknown model '{s}' (expected one of hs, cmm, garch, nnet1, nnet2, nnet3)")))
    }
}

fn d_alpha() -> f64 {
    0.99
}
fn d_window() -> usize {
    250
}
fn d_lookback() -> usize {
    10
}
fn d_models() -> Vec<ModelId> {
    ModelId::ALL.to_vec()
}
fn d_mc() -> usize {
    100_000
}
fn d_seeds() -> Vec<u64> {
    vec![911, 6969, 9999]
}
fn d_epochs() -> usize {
    100
}
fn d_patience() -> usize {
    5
}
fn d_fraction() -> f64 {
    0.9
}
fn d_vol() -> usize {
    5
}
fn d_out() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment: a price source, an evaluation window and the models to run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// CSV path or http(s) URL with `date,close` rows.
    pub source: String,
    pub eval_start: Date,
    pub eval_end: Date,
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    #[serde(default = "d_window")]
    pub benchmark_window: usize,
    #[serde(default = "d_lookback")]
    pub nn_lookback: usize,
    #[serde(default = "d_models")]
    pub models: Vec<ModelId>,
    #[serde(default = "d_mc")]
    pub mc_samples: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "d_seeds")]
    pub train_seeds: Vec<u64>,
    #[serde(default = "d_epochs")]
    pub max_epochs: usize,
    #[serde(default = "d_patience")]
    pub patience: usize,
    #[serde(default = "d_fraction")]
    pub train_fraction: f64,
    #[serde(default = "d_vol")]
    pub vol_window: usize,
    #[serde(default)]
    pub svg_plots: bool,
    #[serde(default = "d_out")]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(source: impl Into<String>, eval_start: Date, eval_end: Date) -> Self {
        ExperimentConfig {
            source: source.into(),
            eval_start,
            eval_end,
            alpha: d_alpha(),
            benchmark_window: d_window(),
            nn_lookback: d_lookback(),
            models: d_models(),
            mc_samples: d_mc(),
            master_seed: 0,
            train_seeds: d_seeds(),
            max_epochs: d_epochs(),
            patience: d_patience(),
            train_fraction: d_fraction(),
            vol_window: d_vol(),
            svg_plots: false,
            output_dir: d_out(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::SourceNotFound(path.to_path_buf()));
        }
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.models.is_empty() {
            return bad("at least one model is required".into());
        }
        let mut seen = self.models.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.models.len() {
            return bad("model list contains duplicates".into());
        }
        if self.eval_start > self.eval_end {
            return bad(format!("eval_start {} is after eval_end {}", self.eval_start, self.eval_end));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.benchmark_window < 2 || self.nn_lookback < 1 {
            return bad("benchmark_window must be >= 2 and nn_lookback >= 1".into());
        }
        if self.mc_samples < crate::forecast::MIN_MC_SAMPLES {
            return bad(format!("mc_samples must be >= {}", crate::forecast::MIN_MC_SAMPLES));
        }
        if self.train_seeds.is_empty() || self.max_epochs == 0 || self.patience == 0 {
            return bad("train_seeds, max_epochs and patience must be non-empty / positive".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction must lie in (0, 1), got {}", self.train_fraction));
        }
        if self.vol_window < 2 {
            return bad("vol_window must be >= 2".into());
        }
        Ok(())
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            eval_start: self.eval_start,
            eval_end: self.eval_end,
            train_fraction: self.train_fraction,
        }
    }

    /// SHA-256 over every field except `output_dir`, as hex.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("output_dir");
            obj.remove("svg_plots");
        }
        // serde_json maps are ordered by key, so this rendering is canonical.
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig::new(
            "prices.csv",
            "2017-01-01".parse().unwrap(),
            "2018-12-31".parse().unwrap(),
        )
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_json(
            r#"{"source":"a.csv","eval_start":"2017-01-01","eval_end":"2018-12-31"}"#,
        )
        .unwrap();
        assert_eq!(cfg, ExperimentConfig { source: "a.csv".into(), ..base() });
    }

    #[test]
    fn unknown_fields_and_bad_values_rejected() {
        assert!(ExperimentConfig::from_json(
            r#"{"source":"a","eval_start":"2017-01-01","eval_end":"2018-12-31","horizon":2}"#
        )
        .is_err());
        let mut cfg = base();
        cfg.models.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = base();
        cfg.eval_end = "2016-01-01".parse().unwrap();
        assert!(cfg.validate().is_err());
        assert!(matches!("nnet4".parse::<ModelId>(), Err(Error::Usage(_))));
    }

    #[test]
    fn hash_tracks_semantic_fields_only() {
        let a = base();
        let mut b = base();
        b.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        for change in [
            |c: &mut ExperimentConfig| c.alpha = 0.95,
            |c: &mut ExperimentConfig| c.master_seed = 1,
            |c: &mut ExperimentConfig| c.models = vec![ModelId::Hs],
            |c: &mut ExperimentConfig| c.source = "b.csv".into(),
            |c: &mut ExperimentConfig| c.mc_samples = 5000,
        ] {
            let mut c = base();
            change(&mut c);
            assert_ne!(a.hash(), c.hash());
        }
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn json_roundtrip() {
        let a = base();
        assert_eq!(ExperimentConfig::from_json(&a.to_json()).unwrap(), a);
    }
}
