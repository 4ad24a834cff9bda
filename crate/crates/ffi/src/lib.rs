//! C ABI over `cqrel`.
//!
//! Every function returns a [`CqStatus`]; on failure a message is kept per
//! thread and can be read with [`cq_last_error_message`]. Channels are opaque
//! handles created by [`cq_channel_from_json`] or [`cq_channel_load`] and
//! released with [`cq_channel_free`]. Prior arguments may be null, in which
//! case the prior stored with the channel is used.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use cqrel::channel::{holevo_quantity, load_channel, load_channel_file, Channel, Prior};
use cqrel::coding::random_code_trial;
use cqrel::exponent::{eq_aux, eq_derivative};
use cqrel::inequality::{evaluate, tau, InequalityId};
use cqrel::rate::{capacity_estimate, max_over_prior};
use cqrel::Error;

pub const CQ_ABI_VERSION: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Malformed = 4,
    Io = 5,
    Numerical = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CqInequality {
    Theorem = 0,
    Eq3 = 1,
    TwoState = 2,
    Jensen = 3,
    JensenTrace = 4,
    TracePair = 5,
}

impl From<CqInequality> for InequalityId {
    fn from(k: CqInequality) -> Self {
        match k {
            CqInequality::Theorem => InequalityId::Theorem,
            CqInequality::Eq3 => InequalityId::Eq3,
            CqInequality::TwoState => InequalityId::TwoState,
            CqInequality::Jensen => InequalityId::Jensen,
            CqInequality::JensenTrace => InequalityId::JensenTrace,
            CqInequality::TracePair => InequalityId::TracePair,
        }
    }
}

/// Opaque channel handle.
pub struct CqChannel {
    channel: Channel,
    prior: Prior,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CqGapReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`; nonnegative when the inequality holds.
    pub gap: f64,
    pub scale: f64,
    pub imag_residue: f64,
    /// NaN when not computed.
    pub formulation_residual: f64,
    pub support_restricted: bool,
    /// `gap >= -tau * scale` at the default tolerance.
    pub holds: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CqRatePoint {
    pub rate: f64,
    pub s_star: f64,
    pub value: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CqTrialSummary {
    pub n: usize,
    pub m: usize,
    pub rate_nats: f64,
    pub trials: usize,
    pub mean_average_error: f64,
    pub mean_max_error: f64,
    /// Infinity when no trial made an error.
    pub exponent_proxy: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(CqStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Malformed(_) | Error::NotSquare { .. } | Error::NonFinite { .. } => CqStatus::Malformed,
            Error::Io(_) => CqStatus::Io,
            Error::InvalidParameter(_)
            | Error::InvalidPrior(_)
            | Error::DimensionMismatch { .. }
            | Error::DimensionCap { .. }
            | Error::Trace { .. }
            | Error::NotPsd { index: Some(_), .. }
            | Error::NotHermitian { .. } => CqStatus::InvalidArgument,
            _ => CqStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult = Result<(), Failure>;

fn null(what: &str) -> Failure {
    Failure(CqStatus::NullPointer, format!("{what} is null"))
}

fn guard<F: FnOnce() -> FfiResult>(f: F) -> CqStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(Failure(CqStatus::Panic, format!("panic: {msg}")))
    });
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|e| e.borrow_mut().clear());
            CqStatus::Ok
        }
        Err(Failure(status, msg)) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = msg);
            status
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CqStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a>(ch: *const CqChannel) -> Result<&'a CqChannel, Failure> {
    ch.as_ref().ok_or_else(|| null("channel"))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> FfiResult {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn prior_arg(h: &CqChannel, prior: *const f64, len: usize) -> Result<Prior, Failure> {
    if prior.is_null() {
        return Ok(h.prior.clone());
    }
    let p = Prior::new(std::slice::from_raw_parts(prior, len).to_vec())?;
    h.channel.check_prior(&p)?;
    Ok(p)
}

unsafe fn write_weights(out: *mut f64, len: usize, weights: &[f64]) -> FfiResult {
    if out.is_null() {
        return Ok(());
    }
    if len < weights.len() {
        return Err(Failure(
            CqStatus::BufferTooSmall,
            format!("prior buffer holds {len} values, need {}", weights.len()),
        ));
    }
    std::slice::from_raw_parts_mut(out, weights.len()).copy_from_slice(weights);
    Ok(())
}

fn boxed(channel: Channel, prior: Prior) -> *mut CqChannel {
    Box::into_raw(Box::new(CqChannel { channel, prior }))
}

#[no_mangle]
pub extern "C" fn cq_abi_version() -> u32 {
    CQ_ABI_VERSION
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`) and returns the full length including
/// the terminator. Pass a null `buf` to query the length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn cq_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len() + 1
    })
}

/// Parses a channel JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cq_channel_from_json(json: *const c_char, out: *mut *mut CqChannel) -> CqStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let (ch, prior) = load_channel(text)?;
        write(out, boxed(ch, prior), "out")
    })
}

/// Loads a channel JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cq_channel_load(path: *const c_char, out: *mut *mut CqChannel) -> CqStatus {
    guard(|| {
        let path = read_str(path, "path")?;
        let (ch, prior) = load_channel_file(Path::new(path))?;
        write(out, boxed(ch, prior), "out")
    })
}

/// # Safety
/// `ch` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cq_channel_free(ch: *mut CqChannel) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

/// # Safety
/// `ch` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cq_channel_alphabet_size(ch: *const CqChannel, out: *mut usize) -> CqStatus {
    guard(|| write(out, handle(ch)?.channel.alphabet_size(), "out"))
}

/// # Safety
/// `ch` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cq_channel_dim(ch: *const CqChannel, out: *mut usize) -> CqStatus {
    guard(|| write(out, handle(ch)?.channel.dim(), "out"))
}

/// `E_q(prior, s)` in nats.
///
/// # Safety
/// `ch` must be a live handle; `prior` null or valid for `prior_len`
/// values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cq_eq_aux(
    ch: *const CqChannel,
    prior: *const f64,
    prior_len: usize,
    s: f64,
    out: *mut f64,
) -> CqStatus {
    guard(|| {
        let h = handle(ch)?;
        let p = prior_arg(h, prior, prior_len)?;
        write(out, eq_aux(&h.channel, &p, s)?, "out")
    })
}

/// `dE_q/ds` by extrapolated finite differences.
///
/// # Safety
/// As [`cq_eq_aux`].
#[no_mangle]
pub unsafe extern "C" fn cq_eq_derivative(
    ch: *const CqChannel,
    prior: *const f64,
    prior_len: usize,
    s: f64,
    out: *mut f64,
) -> CqStatus {
    guard(|| {
        let h = handle(ch)?;
        let p = prior_arg(h, prior, prior_len)?;
        write(out, eq_derivative(&h.channel, &p, s)?, "out")
    })
}

/// Holevo quantity in nats.
///
/// # Safety
/// As [`cq_eq_aux`].
#[no_mangle]
pub unsafe extern "C" fn cq_holevo_quantity(
    ch: *const CqChannel,
    prior: *const f64,
    prior_len: usize,
    out: *mut f64,
) -> CqStatus {
    guard(|| {
        let h = handle(ch)?;
        let p = prior_arg(h, prior, prior_len)?;
        write(out, holevo_quantity(&h.channel, &p)?, "out")
    })
}

/// Maximized Holevo quantity. The maximizing prior is copied to
/// `prior_out` when it is not null.
///
/// # Safety
/// `ch` live; `out` writable; `prior_out` null or valid for `prior_out_len`.
#[no_mangle]
pub unsafe extern "C" fn cq_capacity_estimate(
    ch: *const CqChannel,
    seed: u64,
    out: *mut f64,
    prior_out: *mut f64,
    prior_out_len: usize,
) -> CqStatus {
    guard(|| {
        let h = handle(ch)?;
        let (c, p) = capacity_estimate(&h.channel, seed)?;
        write_weights(prior_out, prior_out_len, p.weights())?;
        write(out, c, "out")
    })
}

/// Random-coding exponent at `rate` (nats). The maximizing prior is copied
/// to `prior_out` when it is not null.
///
/// # Safety
/// As [`cq_capacity_estimate`].
#[no_mangle]
pub unsafe extern "C" fn cq_random_coding_exponent(
    ch: *const CqChannel,
    rate: f64,
    seed: u64,
    out: *mut CqRatePoint,
    prior_out: *mut f64,
    prior_out_len: usize,
) -> CqStatus {
    guard(|| {
        let h = handle(ch)?;
        let p = max_over_prior(&h.channel, rate, seed)?;
        write_weights(prior_out, prior_out_len, p.prior_star.weights())?;
        write(
            out,
            CqRatePoint {
                rate: p.rate,
                s_star: p.s_star,
                value: p.value,
            },
            "out",
        )
    })
}

/// Evaluates one trace inequality on the channel's states.
///
/// # Safety
/// As [`cq_eq_aux`].
#[no_mangle]
pub unsafe extern "C" fn cq_inequality_gap(
    ch: *const CqChannel,
    kind: CqInequality,
    prior: *const f64,
    prior_len: usize,
    s: f64,
    out: *mut CqGapReport,
) -> CqStatus {
    guard(|| {
        let h = handle(ch)?;
        let p = prior_arg(h, prior, prior_len)?;
        let r = evaluate(kind.into(), &h.channel, &p, s)?;
        write(
            out,
            CqGapReport {
                lhs: r.lhs,
                rhs: r.rhs,
                gap: r.gap,
                scale: r.scale,
                imag_residue: r.imag_residue,
                formulation_residual: r.formulation_residual.unwrap_or(f64::NAN),
                support_restricted: r.support_restricted,
                holds: r.holds(tau()),
            },
            "out",
        )
    })
}

/// Shorthand for [`cq_inequality_gap`] with [`CqInequality::Theorem`].
///
/// # Safety
/// As [`cq_eq_aux`].
#[no_mangle]
pub unsafe extern "C" fn cq_theorem_gap(
    ch: *const CqChannel,
    prior: *const f64,
    prior_len: usize,
    s: f64,
    out: *mut CqGapReport,
) -> CqStatus {
    cq_inequality_gap(ch, CqInequality::Theorem, prior, prior_len, s, out)
}

/// Random-coding trials with square-root-measurement decoding.
///
/// # Safety
/// As [`cq_eq_aux`].
#[no_mangle]
pub unsafe extern "C" fn cq_simulate(
    ch: *const CqChannel,
    prior: *const f64,
    prior_len: usize,
    n: usize,
    m: usize,
    trials: usize,
    seed: u64,
    out: *mut CqTrialSummary,
) -> CqStatus {
    guard(|| {
        let h = handle(ch)?;
        let p = prior_arg(h, prior, prior_len)?;
        let t = random_code_trial(&h.channel, &p, n, m, trials, seed)?;
        write(
            out,
            CqTrialSummary {
                n: t.n,
                m: t.m,
                rate_nats: t.rate_nats,
                trials: t.trials,
                mean_average_error: t.mean_average_error,
                mean_max_error: t.mean_max_error,
                exponent_proxy: t.exponent_proxy.unwrap_or(f64::INFINITY),
            },
            "out",
        )
    })
}
