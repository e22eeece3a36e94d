use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::network::{batch_loss, loss_and_gradient};
use super::{NetworkConfig, NetworkParams, TrainConfig};
use crate::dist::Rng;
use crate::series::WindowedDataset;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose weights were kept; 0 if no epoch completed.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainHistory {
    pub fn best_val_loss(&self) -> Option<f64> {
        self.epochs
            .iter()
            .find(|e| e.epoch == self.best_epoch)
            .map(|e| e.val_loss)
    }
}

/// Patience rule on a monitored loss. Only strict improvements reset the counter.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    wait: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            wait: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, loss: f64) -> StopDecision {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = epoch;
            self.wait = 0;
            return StopDecision::Improved;
        }
        self.wait += 1;
        if self.wait >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best(&self) -> f64 {
        self.best
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedNetwork {
    pub params: NetworkParams,
    pub history: TrainHistory,
}

fn diverged(epoch: usize, message: impl Into<String>, history: &TrainHistory) -> Error {
    Error::Training {
        epoch,
        message: message.into(),
        history: history.clone(),
    }
}

/// Trains one network. Initial weights and the per-epoch shuffles both draw from `rng`.
pub fn train(
    train_set: &WindowedDataset,
    validation: &WindowedDataset,
    config: &NetworkConfig,
    train_config: &TrainConfig,
    rng: &mut Rng,
) -> Result<TrainedNetwork> {
    config.validate()?;
    train_config.validate()?;
    if train_set.is_empty() || validation.is_empty() {
        return Err(Error::InsufficientData {
            needed: 1,
            got: train_set.len().min(validation.len()),
        });
    }
    if train_set.lookback() != config.lookback || validation.lookback() != config.lookback {
        return Err(Error::Shape(format!(
            "dataset lookback {} does not match network lookback {}",
            train_set.lookback(),
            config.lookback
        )));
    }

    let mut params = NetworkParams::glorot(config, rng)?;
    let mut adam = AdamState::new(params.len(), train_config.adam.clone());
    let mut history = TrainHistory {
        seed: rng.seed(),
        ..TrainHistory::default()
    };
    let mut stopper = EarlyStopping::new(train_config.patience);
    let mut best = params.clone();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let inputs = train_set.inputs();
    let targets = train_set.targets();

    for epoch in 1..=train_config.max_epochs {
        rng.shuffle(&mut order);
        let mut sum = 0.0;
        for chunk in order.chunks(train_config.batch_size) {
            let batch = chunk.iter().map(|&i| (inputs[i].as_slice(), targets[i]));
            let (loss, grad) = match loss_and_gradient(batch, &params) {
                Ok(v) => v,
                Err(e) => return Err(diverged(epoch, e.to_string(), &history)),
            };
            if !loss.is_finite() {
                return Err(diverged(epoch, format!("training loss {loss}"), &history));
            }
            sum += loss * chunk.len() as f64;
            adam_step(params.values_mut(), &grad, &mut adam)?;
        }
        if !params.is_finite() {
            return Err(diverged(epoch, "non-finite parameters", &history));
        }
        let val_loss = match batch_loss(validation.pairs(), &params) {
            Ok(v) if v.is_finite() => v,
            Ok(v) => return Err(diverged(epoch, format!("validation loss {v}"), &history)),
            Err(e) => return Err(diverged(epoch, e.to_string(), &history)),
        };
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: sum / train_set.len() as f64,
            val_loss,
        });
        match stopper.observe(epoch, val_loss) {
            StopDecision::Improved => best = params.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => {
                history.stopped_early = true;
                break;
            }
        }
    }
    history.best_epoch = stopper.best_epoch();
    Ok(TrainedNetwork {
        params: best,
        history,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub best_val_loss: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BestOfSeeds {
    pub network: TrainedNetwork,
    pub runs: Vec<SeedRun>,
}

/// Trains once per seed in `train_config.seeds` (in parallel) and keeps the
/// run with the lowest validation loss; ties go to the earlier seed.
/// Fails only if every seed fails, returning the first seed's error.
pub fn train_best_of(
    train_set: &WindowedDataset,
    validation: &WindowedDataset,
    config: &NetworkConfig,
    train_config: &TrainConfig,
) -> Result<BestOfSeeds> {
    train_config.validate()?;
    let results: Vec<Result<TrainedNetwork>> = train_config
        .seeds
        .par_iter()
        .map(|&seed| train(train_set, validation, config, train_config, &mut Rng::new(seed)))
        .collect();

    let runs = train_config
        .seeds
        .iter()
        .zip(&results)
        .map(|(&seed, r)| SeedRun {
            seed,
            best_val_loss: r.as_ref().ok().and_then(|n| n.history.best_val_loss()),
            error: r.as_ref().err().map(|e| e.to_string()),
        })
        .collect();

    let mut chosen: Option<(f64, TrainedNetwork)> = None;
    let mut first_error = None;
    for r in results {
        match r {
            Ok(net) => {
                let loss = net.history.best_val_loss().unwrap_or(f64::INFINITY);
                if chosen.as_ref().map_or(true, |(b, _)| loss < *b) {
                    chosen = Some((loss, net));
                }
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    match (chosen, first_error) {
        (Some((_, network)), _) => Ok(BestOfSeeds { network, runs }),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!("seed list validated non-empty"),
    }
}
