//! Analytic gradients against central finite differences.

mod common;

use common::{config, max_relative_error, STEP, TOL};
use mdnvar::nn::{backward, batch_loss, CellActivation, LossKind, NetworkParams};

fn check(components: usize, loss: LossKind, act: CellActivation) {
    let cfg = config(components, loss, act);
    for seed in 0..20 {
        let err = max_relative_error(&cfg, 1000 + seed);
        assert!(err <= TOL, "K={components} {loss:?} {act:?} seed {seed}: {err:e}");
    }
}

#[test]
fn gradient_k2_nll() {
    check(2, LossKind::Nll, CellActivation::Relu);
}

#[test]
fn gradient_k3_nll() {
    check(3, LossKind::Nll, CellActivation::Relu);
}

#[test]
fn gradient_k2_regularized() {
    check(2, LossKind::Regularized { lambda: 0.1 }, CellActivation::Relu);
}

#[test]
fn gradient_tanh_cell() {
    check(3, LossKind::Regularized { lambda: 0.1 }, CellActivation::Tanh);
}

#[test]
fn mu_gradient_sign_at_symmetric_point() {
    // Equal components centred on the target: the mu-gradients vanish; moving
    // the target breaks the tie and the sign must agree with finite differences.
    let cfg = config(2, LossKind::Nll, CellActivation::Relu);
    let mut params = NetworkParams::zeros(&cfg).unwrap();
    let window = [0.3, -0.2, 0.1, 0.4];
    for y in [0.0, 0.25, -0.25] {
        let pairs = [(&window[..], y)];
        let g = backward(pairs.iter().copied(), &params).unwrap();
        let name_offset = offset_of(&params, "mdn.b_mu");
        for k in 0..2 {
            let i = name_offset + k;
            let orig = params.values()[i];
            params.values_mut()[i] = orig + STEP;
            let up = batch_loss(pairs.iter().copied(), &params).unwrap();
            params.values_mut()[i] = orig - STEP;
            let down = batch_loss(pairs.iter().copied(), &params).unwrap();
            params.values_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * STEP);
            if y == 0.0 {
                assert_eq!(g[i], 0.0);
                assert!(numeric.abs() < 1e-9);
            } else {
                assert_eq!(g[i].signum(), numeric.signum(), "y={y}");
                assert!((g[i] - numeric).abs() < 1e-8);
            }
        }
    }
}

fn offset_of(params: &NetworkParams, name: &str) -> usize {
    let target = params.tensor(name).unwrap().as_ptr();
    (target as usize - params.values().as_ptr() as usize) / std::mem::size_of::<f64>()
}
