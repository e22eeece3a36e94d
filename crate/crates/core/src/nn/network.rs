//! Forward pass, losses and exact reverse-mode gradients.
//!
//! The forward pass caches every intermediate needed for backpropagation
//! through time; `backward` walks the cache in reverse. Gradients are of the
//! mean per-sample loss over the batch.

use super::activation::{elu1, elu1_grad, sigmoid, softmax};
use super::params::{Layout, NetworkParams, INPUT_DIM};
use super::LossKind;
use crate::dist::{mixture_logpdf, MixtureParams};
use crate::{Error, Result};

/// Lower bound applied to the sigma head after ELU+1.
pub const SIGMA_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(units: usize) -> Self {
        LstmState {
            h: vec![0.0; units],
            c: vec![0.0; units],
        }
    }
}

#[derive(Clone, Debug)]
struct StepCache {
    z: Vec<f64>,
    f: Vec<f64>,
    i: Vec<f64>,
    o: Vec<f64>,
    cand_pre: Vec<f64>,
    cand: Vec<f64>,
    c_prev: Vec<f64>,
    c: Vec<f64>,
    c_act: Vec<f64>,
}

#[derive(Clone, Debug)]
struct Cache {
    steps: Vec<StepCache>,
    h_last: Vec<f64>,
    dense_pre: Vec<f64>,
    dense: Vec<f64>,
    sigma_pre: Vec<f64>,
    out: MixtureParams,
}

/// `out[r] = b[r] + sum_c w[r, c] x[c]` for a row-major `w`.
#[inline]
fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let cols = x.len();
    b.iter()
        .enumerate()
        .map(|(r, &bias)| {
            bias + w[r * cols..(r + 1) * cols]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .collect()
}

fn check_finite(layer: &'static str, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric {
            layer,
            message: format!("{xs:?}"),
        })
    }
}

fn step_cached(
    x: &[f64],
    prev: &LstmState,
    params: &NetworkParams,
    layout: &Layout,
) -> Result<(LstmState, StepCache)> {
    let cfg = params.config();
    let units = cfg.lstm_units;
    if x.len() != INPUT_DIM || prev.h.len() != units || prev.c.len() != units {
        return Err(Error::Shape(format!(
            "LSTM step expects input {INPUT_DIM} and state {units}, got {} and {}/{}",
            x.len(),
            prev.h.len(),
            prev.c.len()
        )));
    }
    let v = params.values();
    let act = cfg.lstm_activation;
    let mut z = Vec::with_capacity(INPUT_DIM + units);
    z.extend_from_slice(x);
    z.extend_from_slice(&prev.h);

    let gate = |w: &std::ops::Range<usize>, b: &std::ops::Range<usize>| {
        affine(&v[w.clone()], &v[b.clone()], &z)
    };
    let f: Vec<f64> = gate(&layout.w_f, &layout.b_f).into_iter().map(sigmoid).collect();
    let i: Vec<f64> = gate(&layout.w_i, &layout.b_i).into_iter().map(sigmoid).collect();
    let o: Vec<f64> = gate(&layout.w_o, &layout.b_o).into_iter().map(sigmoid).collect();
    let cand_pre = gate(&layout.w_c, &layout.b_c);
    let cand: Vec<f64> = cand_pre.iter().map(|&a| act.apply(a)).collect();

    let c: Vec<f64> = (0..units).map(|u| f[u] * prev.c[u] + i[u] * cand[u]).collect();
    let c_act: Vec<f64> = c.iter().map(|&x| act.apply(x)).collect();
    let h: Vec<f64> = (0..units).map(|u| c_act[u] * o[u]).collect();
    check_finite("lstm", &h)?;
    check_finite("lstm", &c)?;

    let state = LstmState { h, c: c.clone() };
    let cache = StepCache {
        z,
        f,
        i,
        o,
        cand_pre,
        cand,
        c_prev: prev.c.clone(),
        c,
        c_act,
    };
    Ok((state, cache))
}

/// One LSTM time step on input `x` from `state`.
pub fn lstm_step(x: &[f64], state: &LstmState, params: &NetworkParams) -> Result<LstmState> {
    step_cached(x, state, params, &params.layout()).map(|(s, _)| s)
}

fn forward_cached(window: &[f64], params: &NetworkParams, layout: &Layout) -> Result<Cache> {
    let cfg = params.config();
    if window.len() != cfg.lookback {
        return Err(Error::Shape(format!(
            "window has {} returns, network expects {}",
            window.len(),
            cfg.lookback
        )));
    }
    let v = params.values();
    let mut state = LstmState::zeros(cfg.lstm_units);
    let mut steps = Vec::with_capacity(window.len());
    for &x in window {
        let (next, cache) = step_cached(&[x], &state, params, layout)?;
        steps.push(cache);
        state = next;
    }

    let dense_pre = affine(&v[layout.dense_w.clone()], &v[layout.dense_b.clone()], &state.h);
    let dense: Vec<f64> = dense_pre.iter().map(|&x| cfg.dense_activation.apply(x)).collect();
    check_finite("dense", &dense)?;

    let pi_pre = affine(&v[layout.pi_w.clone()], &v[layout.pi_b.clone()], &dense);
    let mu = affine(&v[layout.mu_w.clone()], &v[layout.mu_b.clone()], &dense);
    let sigma_pre = affine(&v[layout.sigma_w.clone()], &v[layout.sigma_b.clone()], &dense);
    check_finite("mdn", &pi_pre)?;
    check_finite("mdn", &mu)?;
    check_finite("mdn", &sigma_pre)?;
    let pi = softmax(&pi_pre);
    let sigma: Vec<f64> = sigma_pre.iter().map(|&x| elu1(x).max(SIGMA_FLOOR)).collect();
    let out = MixtureParams::new(pi, mu, sigma).map_err(|e| Error::Numeric {
        layer: "mdn",
        message: e.to_string(),
    })?;

    Ok(Cache {
        steps,
        h_last: state.h,
        dense_pre,
        dense,
        sigma_pre,
        out,
    })
}

/// Runs the LSTM over `window` from a zero state and maps the final hidden
/// state through the dense layer and the three mixture heads.
pub fn forward(window: &[f64], params: &NetworkParams) -> Result<MixtureParams> {
    forward_cached(window, params, &params.layout()).map(|c| c.out)
}

pub fn nll_loss(pred: &MixtureParams, y: f64) -> f64 {
    -mixture_logpdf(y, pred)
}

pub fn reg_nll_loss(pred: &MixtureParams, y: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return nll_loss(pred, y);
    }
    nll_loss(pred, y) + lambda * pred.pi().iter().map(|p| p * p).sum::<f64>()
}

pub fn sample_loss(pred: &MixtureParams, y: f64, loss: &LossKind) -> f64 {
    match loss {
        LossKind::Nll => nll_loss(pred, y),
        LossKind::Regularized { lambda } => reg_nll_loss(pred, y, *lambda),
    }
}

/// Mean loss over `(window, target)` pairs.
pub fn batch_loss<'a, I>(batch: I, params: &NetworkParams) -> Result<f64>
where
    I: IntoIterator<Item = (&'a [f64], f64)>,
{
    let layout = params.layout();
    let (mut total, mut n) = (0.0, 0usize);
    for (window, y) in batch {
        let cache = forward_cached(window, params, &layout)?;
        total += sample_loss(&cache.out, y, &params.config().loss);
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(total / n as f64)
}

/// Mean batch loss and its gradient with respect to every parameter.
pub fn loss_and_gradient<'a, I>(batch: I, params: &NetworkParams) -> Result<(f64, Vec<f64>)>
where
    I: IntoIterator<Item = (&'a [f64], f64)>,
{
    let layout = params.layout();
    let mut grad = vec![0.0; params.len()];
    let (mut total, mut n) = (0.0, 0usize);
    for (window, y) in batch {
        let cache = forward_cached(window, params, &layout)?;
        total += sample_loss(&cache.out, y, &params.config().loss);
        accumulate_gradient(&cache, y, params, &layout, &mut grad);
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let scale = 1.0 / n as f64;
    grad.iter_mut().for_each(|g| *g *= scale);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numeric {
            layer: "backward",
            message: "non-finite gradient".into(),
        });
    }
    Ok((total * scale, grad))
}

/// Gradient of the mean batch loss; see [`loss_and_gradient`].
pub fn backward<'a, I>(batch: I, params: &NetworkParams) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = (&'a [f64], f64)>,
{
    loss_and_gradient(batch, params).map(|(_, g)| g)
}

/// `g[W] += d (outer) x` and `g[b] += d`.
#[inline]
fn outer_acc(grad: &mut [f64], w: &std::ops::Range<usize>, b: &std::ops::Range<usize>, d: &[f64], x: &[f64]) {
    let cols = x.len();
    let gw = &mut grad[w.clone()];
    for (r, &dr) in d.iter().enumerate() {
        if dr != 0.0 {
            for (g, &xc) in gw[r * cols..(r + 1) * cols].iter_mut().zip(x) {
                *g += dr * xc;
            }
        }
    }
    for (g, &dr) in grad[b.clone()].iter_mut().zip(d) {
        *g += dr;
    }
}

/// `out += W^T d`.
#[inline]
fn transpose_acc(out: &mut [f64], w: &[f64], d: &[f64]) {
    let cols = out.len();
    for (r, &dr) in d.iter().enumerate() {
        if dr != 0.0 {
            for (o, &wv) in out.iter_mut().zip(&w[r * cols..(r + 1) * cols]) {
                *o += wv * dr;
            }
        }
    }
}

fn accumulate_gradient(cache: &Cache, y: f64, params: &NetworkParams, layout: &Layout, grad: &mut [f64]) {
    let cfg = params.config();
    let v = params.values();
    let out = &cache.out;
    let k = out.k();
    let lambda = cfg.loss.lambda();

    // Posterior responsibilities gamma_k, computed in log space.
    let log_terms: Vec<f64> = (0..k)
        .map(|j| {
            let s = out.sigma()[j];
            let r = (y - out.mu()[j]) / s;
            out.pi()[j].ln() - 0.5 * r * r - s.ln()
        })
        .collect();
    let max = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_terms.iter().map(|t| (t - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let gamma: Vec<f64> = weights.iter().map(|w| w / total).collect();

    let pi_sq: f64 = out.pi().iter().map(|p| p * p).sum();
    let mut d_pi = vec![0.0; k];
    let mut d_mu = vec![0.0; k];
    let mut d_sigma = vec![0.0; k];
    for j in 0..k {
        let (p, m, s) = (out.pi()[j], out.mu()[j], out.sigma()[j]);
        let r = y - m;
        d_pi[j] = p - gamma[j] + 2.0 * lambda * p * (p - pi_sq);
        d_mu[j] = -gamma[j] * r / (s * s);
        let ds = gamma[j] * (1.0 / s - r * r / (s * s * s));
        let pre = cache.sigma_pre[j];
        d_sigma[j] = if elu1(pre) < SIGMA_FLOOR { 0.0 } else { ds * elu1_grad(pre) };
    }

    outer_acc(grad, &layout.pi_w, &layout.pi_b, &d_pi, &cache.dense);
    outer_acc(grad, &layout.mu_w, &layout.mu_b, &d_mu, &cache.dense);
    outer_acc(grad, &layout.sigma_w, &layout.sigma_b, &d_sigma, &cache.dense);

    let mut d_dense = vec![0.0; cfg.dense_units];
    transpose_acc(&mut d_dense, &v[layout.pi_w.clone()], &d_pi);
    transpose_acc(&mut d_dense, &v[layout.mu_w.clone()], &d_mu);
    transpose_acc(&mut d_dense, &v[layout.sigma_w.clone()], &d_sigma);
    let d_dense_pre: Vec<f64> = d_dense
        .iter()
        .zip(&cache.dense_pre)
        .zip(&cache.dense)
        .map(|((d, &x), &yv)| d * cfg.dense_activation.grad(x, yv))
        .collect();
    outer_acc(grad, &layout.dense_w, &layout.dense_b, &d_dense_pre, &cache.h_last);

    let units = cfg.lstm_units;
    let mut d_h = vec![0.0; units];
    transpose_acc(&mut d_h, &v[layout.dense_w.clone()], &d_dense_pre);
    let mut d_c = vec![0.0; units];
    let act = cfg.lstm_activation;

    let mut d_f = vec![0.0; units];
    let mut d_i = vec![0.0; units];
    let mut d_o = vec![0.0; units];
    let mut d_cand = vec![0.0; units];
    for step in cache.steps.iter().rev() {
        for u in 0..units {
            let dh = d_h[u];
            let dc = d_c[u] + dh * step.o[u] * act.grad(step.c[u], step.c_act[u]);
            let d_o_post = dh * step.c_act[u];
            d_o[u] = d_o_post * step.o[u] * (1.0 - step.o[u]);
            d_f[u] = dc * step.c_prev[u] * step.f[u] * (1.0 - step.f[u]);
            d_i[u] = dc * step.cand[u] * step.i[u] * (1.0 - step.i[u]);
            d_cand[u] = dc * step.i[u] * act.grad(step.cand_pre[u], step.cand[u]);
            d_c[u] = dc * step.f[u];
        }
        outer_acc(grad, &layout.w_f, &layout.b_f, &d_f, &step.z);
        outer_acc(grad, &layout.w_i, &layout.b_i, &d_i, &step.z);
        outer_acc(grad, &layout.w_o, &layout.b_o, &d_o, &step.z);
        outer_acc(grad, &layout.w_c, &layout.b_c, &d_cand, &step.z);

        let mut d_z = vec![0.0; INPUT_DIM + units];
        transpose_acc(&mut d_z, &v[layout.w_f.clone()], &d_f);
        transpose_acc(&mut d_z, &v[layout.w_i.clone()], &d_i);
        transpose_acc(&mut d_z, &v[layout.w_o.clone()], &d_o);
        transpose_acc(&mut d_z, &v[layout.w_c.clone()], &d_cand);
        d_h.copy_from_slice(&d_z[INPUT_DIM..]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Rng;
    use crate::nn::{CellActivation, NetworkConfig};

    fn scalar_cell(act: CellActivation) -> NetworkParams {
        let cfg = NetworkConfig {
            lookback: 1,
            lstm_units: 1,
            dense_units: 1,
            components: 1,
            loss: LossKind::Nll,
            lstm_activation: act,
            dense_activation: CellActivation::Relu,
        };
        NetworkParams::zeros(&cfg).unwrap()
    }

    #[test]
    fn zero_cell_from_zero_state() {
        let p = scalar_cell(CellActivation::Relu);
        let s = lstm_step(&[0.3], &LstmState::zeros(1), &p).unwrap();
        assert_eq!(s, LstmState { h: vec![0.0], c: vec![0.0] });
        let (_, cache) = step_cached(&[0.3], &LstmState::zeros(1), &p, &p.layout()).unwrap();
        assert_eq!((cache.f[0], cache.i[0], cache.o[0]), (0.5, 0.5, 0.5));
    }

    #[test]
    fn zero_cell_relu_carries_half_the_cell() {
        let p = scalar_cell(CellActivation::Relu);
        let prev = LstmState { h: vec![0.0], c: vec![2.0] };
        let s = lstm_step(&[0.0], &prev, &p).unwrap();
        assert_eq!(s.c, vec![1.0]);
        assert_eq!(s.h, vec![0.5]);
    }

    #[test]
    fn zero_cell_tanh_variant() {
        let p = scalar_cell(CellActivation::Tanh);
        let prev = LstmState { h: vec![0.0], c: vec![2.0] };
        let s = lstm_step(&[0.0], &prev, &p).unwrap();
        assert!((s.h[0] - 0.5 * 1.0f64.tanh()).abs() < 1e-15);
        assert!((s.h[0] - 0.3808).abs() < 1e-4);
    }

    #[test]
    fn step_shape_mismatch() {
        let p = scalar_cell(CellActivation::Relu);
        assert!(matches!(
            lstm_step(&[0.0, 1.0], &LstmState::zeros(1), &p),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            lstm_step(&[0.0], &LstmState::zeros(3), &p),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn zero_network_output() {
        let p = NetworkParams::zeros(&NetworkConfig::nnet1()).unwrap();
        for window in [[0.0; 10], [0.05; 10], [-0.3, 0.2, 0.1, 0.0, 0.4, -0.1, 0.01, 0.02, 0.0, 1.0]] {
            let m = forward(&window, &p).unwrap();
            assert_eq!(m.pi(), &[0.5, 0.5]);
            assert_eq!(m.mu(), &[0.0, 0.0]);
            assert_eq!(m.sigma(), &[1.0, 1.0]);
        }
    }

    #[test]
    fn forward_respects_constraints_and_is_deterministic() {
        let p = NetworkParams::glorot(&NetworkConfig::nnet3(), &mut Rng::new(4)).unwrap();
        let mut rng = Rng::new(8);
        for _ in 0..50 {
            let w: Vec<f64> = (0..10).map(|_| 0.05 * rng.standard_normal()).collect();
            let a = forward(&w, &p).unwrap();
            let b = forward(&w, &p).unwrap();
            assert_eq!(a, b);
            assert!((a.pi().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(a.sigma().iter().all(|s| *s >= SIGMA_FLOOR));
        }
    }

    #[test]
    fn sigma_floor_applies() {
        let mut p = NetworkParams::zeros(&NetworkConfig::nnet1()).unwrap();
        p.tensor_mut("mdn.b_sigma").unwrap().fill(-100.0);
        let m = forward(&[0.0; 10], &p).unwrap();
        assert_eq!(m.sigma(), &[SIGMA_FLOOR, SIGMA_FLOOR]);
    }

    #[test]
    fn wrong_window_length() {
        let p = NetworkParams::zeros(&NetworkConfig::nnet1()).unwrap();
        assert!(matches!(forward(&[0.0; 9], &p), Err(Error::Shape(_))));
    }

    #[test]
    fn loss_examples() {
        let m = MixtureParams::single(0.0, 1.0).unwrap();
        assert!((nll_loss(&m, 0.0) - 0.918_938_533_204_672_7).abs() < 1e-12);
        let m = MixtureParams::new(vec![0.5, 0.5], vec![0.0, 0.3], vec![1.0, 2.0]).unwrap();
        assert_eq!(reg_nll_loss(&m, 0.1, 0.0).to_bits(), nll_loss(&m, 0.1).to_bits());
        let penalty = reg_nll_loss(&m, 0.1, 0.1) - nll_loss(&m, 0.1);
        assert!((penalty - 0.05).abs() < 1e-15);
    }

    #[test]
    fn duplicated_batch_has_same_gradient() {
        let p = NetworkParams::glorot(&NetworkConfig::nnet2(), &mut Rng::new(3)).unwrap();
        let mut rng = Rng::new(6);
        let data: Vec<(Vec<f64>, f64)> = (0..5)
            .map(|_| ((0..10).map(|_| 0.5 * rng.standard_normal()).collect(), 0.3 * rng.standard_normal()))
            .collect();
        let once = backward(data.iter().map(|(w, y)| (w.as_slice(), *y)), &p).unwrap();
        let twice = backward(
            data.iter().chain(data.iter()).map(|(w, y)| (w.as_slice(), *y)),
            &p,
        )
        .unwrap();
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
        }
    }

    #[test]
    fn empty_batch_rejected() {
        let p = NetworkParams::zeros(&NetworkConfig::nnet1()).unwrap();
        assert!(backward(std::iter::empty(), &p).is_err());
    }
}
