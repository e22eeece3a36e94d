//! Shared helpers for integration tests.
#![allow(dead_code)]

use mdnvar::dist::Rng;
use mdnvar::nn::{backward, batch_loss, CellActivation, LossKind, NetworkConfig, NetworkParams};

pub const STEP: f64 = 1e-5;
pub const TOL: f64 = 1e-4;

pub fn config(components: usize, loss: LossKind, act: CellActivation) -> NetworkConfig {
    NetworkConfig {
        lookback: 4,
        lstm_units: 3,
        dense_units: 5,
        components,
        loss,
        lstm_activation: act,
        dense_activation: CellActivation::Relu,
    }
}

fn batch(rng: &mut Rng, n: usize, lookback: usize) -> Vec<(Vec<f64>, f64)> {
    (0..n)
        .map(|_| {
            let w = (0..lookback).map(|_| rng.standard_normal()).collect();
            (w, 0.5 * rng.standard_normal())
        })
        .collect()
}

/// Largest relative error over all parameters; the denominator is floored so
/// gradients that are zero to rounding do not blow the ratio up.
pub fn max_relative_error(cfg: &NetworkConfig, seed: u64) -> f64 {
    let mut rng = Rng::new(seed);
    let mut params = NetworkParams::glorot(cfg, &mut rng).unwrap();
    // Non-zero biases so the zero-bias symmetry is not the only point tested.
    for v in params.values_mut().iter_mut().filter(|v| **v == 0.0) {
        *v = 0.1 * rng.standard_normal();
    }
    let data = batch(&mut rng, 6, cfg.lookback);
    let pairs = || data.iter().map(|(w, y)| (w.as_slice(), *y));
    let analytic = backward(pairs(), &params).unwrap();

    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let orig = params.values()[i];
        params.values_mut()[i] = orig + STEP;
        let up = batch_loss(pairs(), &params).unwrap();
        params.values_mut()[i] = orig - STEP;
        let down = batch_loss(pairs(), &params).unwrap();
        params.values_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * STEP);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}

