//! C ABI over the mdnvar engine.
//!
//! Every fallible call returns an [`MdnvarStatus`]; on failure the message is
//! kept per thread and can be copied out with [`mdnvar_last_error`].
//! Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use mdnvar::backtest::{cc_test, independence_test, pof_test};
use mdnvar::classic::{
    fit_garch11, garch_var, select_innovation, var_cmm, var_hs, GarchFit, Innovation, InnovationKind, VaRConfig,
};
use mdnvar::dist::Rng;
use mdnvar::forecast::{mc_var, MonteCarloConfig};
use mdnvar::nn::{forward, NetworkParams};
use mdnvar::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MdnvarStatus {
    Ok = 0,
    NullPointer = 1,
    Io = 2,
    Data = 3,
    Numeric = 4,
    InvalidArgument = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Which innovation law a GARCH fit uses. `Auto` picks by AIC.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MdnvarInnovation {
    Normal = 0,
    Ged = 1,
    Auto = 2,
}

/// Opaque trained network.
pub struct MdnvarNetwork {
    params: NetworkParams,
}

/// Opaque fitted GARCH(1,1).
pub struct MdnvarGarch {
    fit: GarchFit,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct MdnvarGarchParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta1: f64,
    /// GED shape; 0 for Normal innovations.
    pub nu: f64,
    pub loglik: f64,
    pub aic: f64,
    pub next_variance: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct MdnvarTest {
    pub lr: f64,
    pub p_value: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct MdnvarBacktest {
    pub observations: usize,
    pub breaches: usize,
    pub pof: MdnvarTest,
    pub independence: MdnvarTest,
    pub conditional_coverage: MdnvarTest,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> MdnvarStatus {
    match err.exit_code() {
        2 => MdnvarStatus::Io,
        3 => MdnvarStatus::Data,
        4 => MdnvarStatus::Numeric,
        _ => MdnvarStatus::InvalidArgument,
    }
}

struct Fail(MdnvarStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(MdnvarStatus::NullPointer, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> MdnvarStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MdnvarStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MdnvarStatus::Panic
        }
    }
}

unsafe fn input<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(data, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail(MdnvarStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mdnvar_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mdnvar_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Historical-simulation VaR over the given losses (positive = loss).
///
/// # Safety
/// `losses` must point to `n` doubles; `var_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdnvar_var_hs(losses: *const f64, n: usize, alpha: f64, var_out: *mut f64) -> MdnvarStatus {
    guard(|| {
        let xs = input(losses, n, "losses")?;
        let cfg = VaRConfig { window: n.max(2), ..VaRConfig::with_alpha(alpha) };
        *out(var_out, "var_out")? = var_hs(xs, &cfg)?;
        Ok(())
    })
}

/// Constant-mean Gaussian VaR over the given returns.
///
/// # Safety
/// `returns` must point to `n` doubles; `var_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdnvar_var_cmm(returns: *const f64, n: usize, alpha: f64, var_out: *mut f64) -> MdnvarStatus {
    guard(|| {
        let xs = input(returns, n, "returns")?;
        let cfg = VaRConfig { window: n.max(2), ..VaRConfig::with_alpha(alpha) };
        *out(var_out, "var_out")? = var_cmm(xs, &cfg)?;
        Ok(())
    })
}

/// Fits a zero-mean GARCH(1,1) to `returns`.
///
/// # Safety
/// `returns` must point to `n` doubles; `handle_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdnvar_garch_fit(
    returns: *const f64,
    n: usize,
    innovation: MdnvarInnovation,
    handle_out: *mut *mut MdnvarGarch,
) -> MdnvarStatus {
    guard(|| {
        let slot = out(handle_out, "handle_out")?;
        *slot = ptr::null_mut();
        let xs = input(returns, n, "returns")?;
        let fit = match innovation {
            MdnvarInnovation::Normal => fit_garch11(xs, InnovationKind::Normal)?,
            MdnvarInnovation::Ged => fit_garch11(xs, InnovationKind::Ged)?,
            MdnvarInnovation::Auto => {
                let sel = select_innovation(xs)?;
                let chosen = match sel.chosen {
                    InnovationKind::Normal => sel.normal,
                    InnovationKind::Ged => sel.ged,
                };
                chosen.expect("selection keeps the chosen fit")
            }
        };
        *slot = Box::into_raw(Box::new(MdnvarGarch { fit }));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`mdnvar_garch_fit`]; `params_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdnvar_garch_params(handle: *const MdnvarGarch, params_out: *mut MdnvarGarchParams) -> MdnvarStatus {
    guard(|| {
        let g = handle.as_ref().ok_or_else(|| null("handle"))?;
        let p = &g.fit.params;
        *out(params_out, "params_out")? = MdnvarGarchParams {
            alpha0: p.alpha0,
            alpha1: p.alpha1,
            beta1: p.beta1,
            nu: match p.innovation {
                Innovation::Normal => 0.0,
                Innovation::Ged { nu } => nu.nu(),
            },
            loglik: g.fit.loglik,
            aic: g.fit.aic,
            next_variance: g.fit.next_variance,
        };
        Ok(())
    })
}

/// One-day VaR from the fitted model's next-day variance.
///
/// # Safety
/// `handle` must come from [`mdnvar_garch_fit`]; `var_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdnvar_garch_var(handle: *const MdnvarGarch, alpha: f64, var_out: *mut f64) -> MdnvarStatus {
    guard(|| {
        let g = handle.as_ref().ok_or_else(|| null("handle"))?;
        *out(var_out, "var_out")? = garch_var(&g.fit, &VaRConfig::with_alpha(alpha))?;
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or come from [`mdnvar_garch_fit`], and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mdnvar_garch_free(handle: *mut MdnvarGarch) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Loads a trained network from its JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `handle_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdnvar_network_from_json(json: *const c_char, handle_out: *mut *mut MdnvarNetwork) -> MdnvarStatus {
    guard(|| {
        let slot = out(handle_out, "handle_out")?;
        *slot = ptr::null_mut();
        let params = NetworkParams::from_json(text(json, "json")?)?;
        *slot = Box::into_raw(Box::new(MdnvarNetwork { params }));
        Ok(())
    })
}

/// Loads a trained network from a model file written by `mdnvar fit`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `handle_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdnvar_network_load(path: *const c_char, handle_out: *mut *mut MdnvarNetwork) -> MdnvarStatus {
    guard(|| {
        let slot = out(handle_out, "handle_out")?;
        *slot = ptr::null_mut();
        let path = text(path, "path")?;
        let json = std::fs::read_to_string(path).map_err(|e| Fail(MdnvarStatus::Io, format!("{path}: {e}")))?;
        let params = NetworkParams::from_json(&json)?;
        *slot = Box::into_raw(Box::new(MdnvarNetwork { params }));
        Ok(())
    })
}

/// Lookback window length and number of mixture components.
///
/// # Safety
/// `handle` must come from a network constructor; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn mdnvar_network_shape(
    handle: *const MdnvarNetwork,
    lookback_out: *mut usize,
    components_out: *mut usize,
) -> MdnvarStatus {
    guard(|| {
        let net = handle.as_ref().ok_or_else(|| null("handle"))?;
        if let Some(l) = lookback_out.as_mut() {
            *l = net.params.config().lookback;
        }
        if let Some(k) = components_out.as_mut() {
            *k = net.params.config().components;
        }
        Ok(())
    })
}

/// Mixture parameters for the next day given the last `lookback` returns.
/// Each output array must hold `k` entries, `k` equal to the component count.
///
/// # Safety
/// `window` must point to `len` doubles; `pi`, `mu`, `sigma` to `k` writable doubles each.
#[no_mangle]
pub unsafe extern "C" fn mdnvar_network_mixture(
    handle: *const MdnvarNetwork,
    window: *const f64,
    len: usize,
    pi: *mut f64,
    mu: *mut f64,
    sigma: *mut f64,
    k: usize,
) -> MdnvarStatus {
    guard(|| {
        let net = handle.as_ref().ok_or_else(|| null("handle"))?;
        let mix = forward(input(window, len, "window")?, &net.params)?;
        if k < mix.pi().len() {
            return Err(Fail(
                MdnvarStatus::BufferTooSmall,
                format!("need {} components, buffers hold {k}", mix.pi().len()),
            ));
        }
        for (dst, src, what) in [(pi, mix.pi(), "pi"), (mu, mix.mu(), "mu"), (sigma, mix.sigma(), "sigma")] {
            if dst.is_null() {
                return Err(null(what));
            }
            ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
        }
        Ok(())
    })
}

/// Monte Carlo VaR from the network's mixture for the next day.
///
/// # Safety
/// `window` must point to `len` doubles; `var_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdnvar_network_var(
    handle: *const MdnvarNetwork,
    window: *const f64,
    len: usize,
    alpha: f64,
    n_samples: usize,
    seed: u64,
    var_out: *mut f64,
) -> MdnvarStatus {
    guard(|| {
        let net = handle.as_ref().ok_or_else(|| null("handle"))?;
        let mix = forward(input(window, len, "window")?, &net.params)?;
        let mc = MonteCarloConfig {
            n_samples,
            alpha,
            seed,
            ..MonteCarloConfig::default()
        };
        *out(var_out, "var_out")? = mc_var(&mix, &mc, &mut Rng::new(seed))?;
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or come from a network constructor, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mdnvar_network_free(handle: *mut MdnvarNetwork) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Kupiec, Christoffersen and joint coverage tests on a 0/1 breach series.
///
/// # Safety
/// `indicators` must point to `n` bytes, each 0 or 1; `result_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdnvar_backtest(
    indicators: *const u8,
    n: usize,
    alpha: f64,
    result_out: *mut MdnvarBacktest,
) -> MdnvarStatus {
    guard(|| {
        if indicators.is_null() && n > 0 {
            return Err(null("indicators"));
        }
        let ind: &[u8] = if n == 0 { &[] } else { slice::from_raw_parts(indicators, n) };
        if ind.iter().any(|&b| b > 1) {
            return Err(Fail(MdnvarStatus::InvalidArgument, "indicators must be 0 or 1".into()));
        }
        let pof = pof_test(ind, alpha)?;
        let it = independence_test(ind)?;
        let cc = cc_test(pof.lr, it.lr)?;
        *out(result_out, "result_out")? = MdnvarBacktest {
            observations: n,
            breaches: ind.iter().map(|&b| b as usize).sum(),
            pof: MdnvarTest { lr: pof.lr, p_value: pof.p_value },
            independence: MdnvarTest { lr: it.lr, p_value: it.p_value },
            conditional_coverage: MdnvarTest { lr: cc.lr, p_value: cc.p_value },
        };
        Ok(())
    })
}
