//! Flat parameter storage for the LSTM -> Dense -> MDN stack.
//!
//! All weights and biases live in one `Vec<f64>` so the optimizer, the
//! finite-difference checks and serialization treat them uniformly. Matrices
//! are row-major with shape `[out, in]`; the LSTM gate matrices act on the
//! concatenation `[x_t, h_{t-1}]`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::NetworkConfig;
use crate::dist::Rng;
use crate::{Error, Result};

/// Single-feature input: one return per time step.
pub const INPUT_DIM: usize = 1;

pub const FORMAT_NAME: &str = "mdnvar.network";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Layout {
    pub w_f: Range<usize>,
    pub w_i: Range<usize>,
    pub w_c: Range<usize>,
    pub w_o: Range<usize>,
    pub b_f: Range<usize>,
    pub b_i: Range<usize>,
    pub b_c: Range<usize>,
    pub b_o: Range<usize>,
    pub dense_w: Range<usize>,
    pub dense_b: Range<usize>,
    pub pi_w: Range<usize>,
    pub pi_b: Range<usize>,
    pub mu_w: Range<usize>,
    pub mu_b: Range<usize>,
    pub sigma_w: Range<usize>,
    pub sigma_b: Range<usize>,
    pub total: usize,
}

/// Tensor name, shape, and whether it is a weight matrix (`true`) or a bias.
pub(crate) fn tensor_specs(cfg: &NetworkConfig) -> Vec<(&'static str, Vec<usize>, bool)> {
    let (h, m, k) = (cfg.lstm_units, cfg.dense_units, cfg.components);
    let z = INPUT_DIM + h;
    vec![
        ("lstm.w_forget", vec![h, z], true),
        ("lstm.w_input", vec![h, z], true),
        ("lstm.w_candidate", vec![h, z], true),
        ("lstm.w_output", vec![h, z], true),
        ("lstm.b_forget", vec![h], false),
        ("lstm.b_input", vec![h], false),
        ("lstm.b_candidate", vec![h], false),
        ("lstm.b_output", vec![h], false),
        ("dense.w", vec![m, h], true),
        ("dense.b", vec![m], false),
        ("mdn.w_pi", vec![k, m], true),
        ("mdn.b_pi", vec![k], false),
        ("mdn.w_mu", vec![k, m], true),
        ("mdn.b_mu", vec![k], false),
        ("mdn.w_sigma", vec![k, m], true),
        ("mdn.b_sigma", vec![k], false),
    ]
}

impl Layout {
    pub fn new(cfg: &NetworkConfig) -> Layout {
        let mut ranges = Vec::new();
        let mut at = 0;
        for (_, shape, _) in tensor_specs(cfg) {
            let len: usize = shape.iter().product();
            ranges.push(at..at + len);
            at += len;
        }
        let mut it = ranges.into_iter();
        let mut next = || it.next().expect("16 tensors");
        Layout {
            w_f: next(),
            w_i: next(),
            w_c: next(),
            w_o: next(),
            b_f: next(),
            b_i: next(),
            b_c: next(),
            b_o: next(),
            dense_w: next(),
            dense_b: next(),
            pi_w: next(),
            pi_b: next(),
            mu_w: next(),
            mu_b: next(),
            sigma_w: next(),
            sigma_b: next(),
            total: at,
        }
    }
}

/// All network weights and biases plus the configuration that shapes them.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    config: NetworkConfig,
    values: Vec<f64>,
}

impl NetworkParams {
    pub fn zeros(config: &NetworkConfig) -> Result<Self> {
        config.validate()?;
        let n = Layout::new(config).total;
        Ok(NetworkParams {
            config: config.clone(),
            values: vec![0.0; n],
        })
    }

    /// Glorot-uniform weights, zero biases.
    ///
    /// Each LSTM gate matrix uses fan-in `1 + lstm_units` and fan-out
    /// `lstm_units`; dense and head matrices use their input/output widths.
    pub fn glorot(config: &NetworkConfig, rng: &mut Rng) -> Result<Self> {
        let mut p = NetworkParams::zeros(config)?;
        let mut at = 0;
        for (_, shape, is_weight) in tensor_specs(config) {
            let len: usize = shape.iter().product();
            if is_weight {
                let w = glorot_uniform(shape[1], shape[0], rng);
                p.values[at..at + len].copy_from_slice(&w);
            }
            at += len;
        }
        Ok(p)
    }

    pub fn from_values(config: &NetworkConfig, values: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let n = Layout::new(config).total;
        if values.len() != n {
            return Err(Error::Shape(format!(
                "expected {n} parameters, got {}",
                values.len()
            )));
        }
        Ok(NetworkParams {
            config: config.clone(),
            values,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn layout(&self) -> Layout {
        Layout::new(&self.config)
    }

    /// Named view of one tensor.
    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        let mut at = 0;
        for (n, shape, _) in tensor_specs(&self.config) {
            let len: usize = shape.iter().product();
            if n == name {
                return Some(&self.values[at..at + len]);
            }
            at += len;
        }
        None
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let mut at = 0;
        for (n, shape, _) in tensor_specs(&self.config) {
            let len: usize = shape.iter().product();
            if n == name {
                return Some(&mut self.values[at..at + len]);
            }
            at += len;
        }
        None
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut tensors = Vec::new();
        let mut at = 0;
        for (name, shape, _) in tensor_specs(&self.config) {
            let len: usize = shape.iter().product();
            tensors.push(TensorRecord {
                name: name.to_string(),
                shape,
                values: self.values[at..at + len].to_vec(),
            });
            at += len;
        }
        let doc = NetworkDocument {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            config: self.config.clone(),
            tensors,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NetworkDocument = serde_json::from_str(text)?;
        let bad = |m: String| Error::Shape(format!("network file: {m}"));
        if doc.format != FORMAT_NAME {
            return Err(bad(format!("unknown format '{}'", doc.format)));
        }
        if doc.version != FORMAT_VERSION {
            return Err(bad(format!("unsupported version {}", doc.version)));
        }
        doc.config.validate()?;
        let specs = tensor_specs(&doc.config);
        if specs.len() != doc.tensors.len() {
            return Err(bad(format!(
                "expected {} tensors, got {}",
                specs.len(),
                doc.tensors.len()
            )));
        }
        let mut values = Vec::new();
        for ((name, shape, _), t) in specs.iter().zip(&doc.tensors) {
            if t.name != *name || t.shape != *shape {
                return Err(bad(format!(
                    "expected tensor {name} {shape:?}, got {} {:?}",
                    t.name, t.shape
                )));
            }
            if t.values.len() != shape.iter().product::<usize>() {
                return Err(bad(format!("tensor {name} has {} values", t.values.len())));
            }
            values.extend_from_slice(&t.values);
        }
        let p = NetworkParams::from_values(&doc.config, values)?;
        if !p.is_finite() {
            return Err(bad("non-finite parameter values".into()));
        }
        Ok(p)
    }
}

#[derive(Serialize, Deserialize)]
struct NetworkDocument {
    format: String,
    version: u32,
    config: NetworkConfig,
    tensors: Vec<TensorRecord>,
}

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

/// `n_out x n_in` row-major matrix with entries uniform on `+-sqrt(6 / (n_in + n_out))`.
pub fn glorot_uniform(n_in: usize, n_out: usize, rng: &mut Rng) -> Vec<f64> {
    let bound = (6.0 / (n_in + n_out) as f64).sqrt();
    (0..n_in * n_out)
        .map(|_| (2.0 * rng.uniform() - 1.0) * bound)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glorot_bound() {
        let bound = (6.0f64 / 18.0).sqrt();
        assert!((bound - 0.5774).abs() < 1e-4);
        let w = glorot_uniform(6, 12, &mut Rng::new(1));
        assert_eq!(w.len(), 72);
        assert!(w.iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn glorot_mean_near_zero() {
        let w = glorot_uniform(100, 100, &mut Rng::new(2));
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        assert!(mean.abs() < 0.02, "{mean}");
    }

    #[test]
    fn glorot_deterministic() {
        assert_eq!(
            glorot_uniform(6, 12, &mut Rng::new(911)),
            glorot_uniform(6, 12, &mut Rng::new(911))
        );
    }

    #[test]
    fn biases_start_at_zero() {
        let p = NetworkParams::glorot(&NetworkConfig::nnet1(), &mut Rng::new(5)).unwrap();
        for name in ["lstm.b_forget", "lstm.b_output", "dense.b", "mdn.b_pi", "mdn.b_sigma"] {
            assert!(p.tensor(name).unwrap().iter().all(|v| *v == 0.0), "{name}");
        }
        assert!(p.tensor("dense.w").unwrap().iter().any(|v| *v != 0.0));
    }

    #[test]
    fn parameter_count() {
        // 4 gates x (6 x 7 + 6) + (12 x 6 + 12) + 3 heads x (2 x 12 + 2)
        let p = NetworkParams::zeros(&NetworkConfig::nnet1()).unwrap();
        assert_eq!(p.len(), 4 * 48 + 84 + 3 * 26);
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let p = NetworkParams::glorot(&NetworkConfig::nnet3(), &mut Rng::new(9)).unwrap();
        let back = NetworkParams::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn json_rejects_wrong_shape() {
        let p = NetworkParams::zeros(&NetworkConfig::nnet1()).unwrap();
        let mut doc: serde_json::Value = serde_json::from_str(&p.to_json().unwrap()).unwrap();
        doc["config"]["components"] = serde_json::json!(3);
        assert!(NetworkParams::from_json(&doc.to_string()).is_err());
        let text = p.to_json().unwrap().replace("mdnvar.network", "other");
        assert!(NetworkParams::from_json(&text).is_err());
    }
}
