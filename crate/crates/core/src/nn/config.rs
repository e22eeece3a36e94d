use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Nonlinearity used inside the LSTM (candidate and output squashing) or the dense layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellActivation {
    Relu,
    Tanh,
}

impl CellActivation {
    #[inline]
    pub(crate) fn apply(self, x: f64) -> f64 {
        match self {
            CellActivation::Relu => x.max(0.0),
            CellActivation::Tanh => x.tanh(),
        }
    }

    /// Derivative given the pre-activation `x` and the activated value `y`.
    #[inline]
    pub(crate) fn grad(self, x: f64, y: f64) -> f64 {
        match self {
            CellActivation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            CellActivation::Tanh => 1.0 - y * y,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossKind {
    /// Mixture negative log-likelihood.
    Nll,
    /// Negative log-likelihood plus `lambda * sum_k pi_k^2`.
    Regularized { lambda: f64 },
}

impl LossKind {
    pub fn lambda(&self) -> f64 {
        match self {
            LossKind::Nll => 0.0,
            LossKind::Regularized { lambda } => *lambda,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub lookback: usize,
    pub lstm_units: usize,
    pub dense_units: usize,
    pub components: usize,
    pub loss: LossKind,
    pub lstm_activation: CellActivation,
    pub dense_activation: CellActivation,
}

impl NetworkConfig {
    /// Two components, plain NLL.
    pub fn nnet1() -> Self {
        NetworkConfig {
            lookback: 10,
            lstm_units: 6,
            dense_units: 12,
            components: 2,
            loss: LossKind::Nll,
            lstm_activation: CellActivation::Relu,
            dense_activation: CellActivation::Relu,
        }
    }

    /// Two components, L2 penalty on the mixture weights with lambda 0.1.
    pub fn nnet2() -> Self {
        NetworkConfig {
            loss: LossKind::Regularized { lambda: 0.1 },
            ..NetworkConfig::nnet1()
        }
    }

    /// Three components, plain NLL.
    pub fn nnet3() -> Self {
        NetworkConfig {
            components: 3,
            ..NetworkConfig::nnet1()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lookback == 0 || self.lstm_units == 0 || self.dense_units == 0 || self.components == 0
        {
            return Err(Error::Config(format!(
                "network sizes must be positive: {self:?}"
            )));
        }
        let lambda = self.loss.lambda();
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub batch_size: usize,
    pub seeds: Vec<u64>,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 100,
            patience: 5,
            batch_size: 32,
            seeds: vec![911, 6969, 9999],
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.patience == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "max_epochs, patience and batch_size must be >= 1".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one training seed is required".into()));
        }
        Ok(())
    }
}
