use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_FORMAT: &str = "mdnvar.manifest";

/// Writes `bytes` to a sibling temp file, syncs it and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifacts {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub history: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forecast: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

impl ModelArtifacts {
    fn paths(&self) -> impl Iterator<Item = &PathBuf> {
        [&self.model, &self.history, &self.forecast, &self.report]
            .into_iter()
            .flatten()
    }
}

/// Index of everything a run has produced, with paths relative to the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub config_hash: String,
    pub engine_version: String,
    pub config: ExperimentConfig,
    #[serde(default)]
    pub returns: Option<PathBuf>,
    #[serde(default)]
    pub models: BTreeMap<String, ModelArtifacts>,
    /// Combined outputs of the backtest stage (table, correlation, plot data, svg).
    #[serde(default)]
    pub tables: BTreeMap<String, PathBuf>,
    /// Wall-clock seconds per stage.
    #[serde(default)]
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig) -> Self {
        RunManifest {
            format: MANIFEST_FORMAT.into(),
            config_hash: config.hash(),
            engine_version: crate::ENGINE_VERSION.into(),
            config: config.clone(),
            returns: None,
            models: BTreeMap::new(),
            tables: BTreeMap::new(),
            timings: BTreeMap::new(),
        }
    }

    pub fn path(dir: &Path) -> PathBuf {
        dir.join(MANIFEST_FILE)
    }

    /// Reads and validates the manifest in `dir`.
    pub fn load(dir: &Path) -> Result<Self> {
        let path = Self::path(dir);
        if !path.exists() {
            return Err(Error::MissingArtifact {
                model: "manifest".into(),
                path,
            });
        }
        let text = fs::read_to_string(&path)?;
        let m: RunManifest = serde_json::from_str(&text).map_err(|e| Error::InvalidArtifact {
            path: path.clone(),
            message: e.to_string(),
        })?;
        if m.format != MANIFEST_FORMAT {
            return Err(Error::InvalidArtifact {
                path,
                message: format!("unknown format '{}'", m.format),
            });
        }
        if m.config_hash != m.config.hash() {
            return Err(Error::InvalidArtifact {
                path,
                message: "config hash does not match the recorded config".into(),
            });
        }
        Ok(m)
    }

    /// The manifest in `config.output_dir` if it belongs to the same config, else a fresh one.
    pub fn load_or_new(config: &ExperimentConfig) -> Result<Self> {
        match Self::load(&config.output_dir) {
            Ok(m) if m.config_hash == config.hash() => {
                let mut m = m;
                m.config = config.clone();
                Ok(m)
            }
            Ok(_) | Err(Error::MissingArtifact { .. }) => Ok(Self::new(config)),
            Err(e) => Err(e),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        write_atomic(&Self::path(dir), text.as_bytes())
    }

    pub fn entry(&mut self, model: &str) -> &mut ModelArtifacts {
        self.models.entry(model.to_string()).or_default()
    }

    /// Every listed artifact must exist under `dir`.
    pub fn check_artifacts(&self, dir: &Path) -> Result<()> {
        let missing = |model: &str, p: &PathBuf| -> Result<()> {
            let full = dir.join(p);
            if full.exists() {
                Ok(())
            } else {
                Err(Error::MissingArtifact {
                    model: model.to_string(),
                    path: full,
                })
            }
        };
        if let Some(p) = &self.returns {
            missing("returns", p)?;
        }
        for (id, a) in &self.models {
            for p in a.paths() {
                missing(id, p)?;
            }
        }
        for (name, p) in &self.tables {
            missing(name, p)?;
        }
        Ok(())
    }
}
