use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
    /// ELU shifted up by one: `x + 1` for `x > 0`, `e^x` otherwise.
    Elu1,
    Softmax,
}

/// Applies `kind` to `input`. Softmax subtracts the maximum before exponentiating.
pub fn activate(kind: Activation, input: &[f64]) -> Result<Vec<f64>> {
    if input.is_empty() {
        return Err(Error::Shape("activation input is empty".into()));
    }
    if input.iter().any(|x| x.is_nan()) {
        return Err(Error::Numeric {
            layer: "activation",
            message: format!("NaN input to {kind:?}"),
        });
    }
    Ok(match kind {
        Activation::Softmax => softmax(input),
        _ => input.iter().map(|&x| scalar(kind, x)).collect(),
    })
}

pub(crate) fn scalar(kind: Activation, x: f64) -> f64 {
    match kind {
        Activation::Sigmoid => sigmoid(x),
        Activation::Tanh => x.tanh(),
        Activation::Relu => x.max(0.0),
        Activation::Elu1 => elu1(x),
        Activation::Softmax => panic!("softmax is not elementwise"),
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub(crate) fn elu1(x: f64) -> f64 {
    if x > 0.0 {
        x + 1.0
    } else {
        x.exp()
    }
}

#[inline]
pub(crate) fn elu1_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

pub(crate) fn softmax(input: &[f64]) -> Vec<f64> {
    let max = input.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = input.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_zero() {
        assert_eq!(activate(Activation::Sigmoid, &[0.0]).unwrap(), vec![0.5]);
        assert_eq!(activate(Activation::Tanh, &[0.0]).unwrap(), vec![0.0]);
        assert_eq!(activate(Activation::Relu, &[-3.0]).unwrap(), vec![0.0]);
        assert_eq!(activate(Activation::Elu1, &[0.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn softmax_symmetry_and_stability() {
        assert_eq!(activate(Activation::Softmax, &[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        let s = activate(Activation::Softmax, &[1000.0, 1000.0, 1000.0]).unwrap();
        for v in s {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_shift_invariant() {
        let a = softmax(&[0.3, -1.2, 2.5]);
        let b = softmax(&[10.3, 8.8, 12.5]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn elu1_is_nonnegative_and_continuous() {
        assert!(elu1(-50.0) > 0.0);
        assert!((elu1(1e-12) - elu1(-1e-12)).abs() < 1e-11);
        assert_eq!(elu1(2.0), 3.0);
    }

    #[test]
    fn sigmoid_extremes() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
    }

    #[test]
    fn nan_and_empty_rejected() {
        assert!(activate(Activation::Relu, &[f64::NAN]).is_err());
        assert!(activate(Activation::Softmax, &[]).is_err());
    }
}
