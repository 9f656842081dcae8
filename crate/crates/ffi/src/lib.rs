//! C interface to `channel-metric`.
//!
//! Every function returns a [`CmStatus`]; results come back through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`cm_last_error_message`]. Infinite metric values are reported as IEEE
//! `+inf`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use channel_metric::channels::{Channel, ChannelFamily, ChannelSpec, ChannelTangent, ChoiMap};
use channel_metric::linalg::{c, ComplexMatrix};
use channel_metric::metrics::{self, MetricOptions};
use channel_metric::states::{self, DensityMatrix, StateTangent};
use channel_metric::{Error, ErrorKind};

/// Status codes. Numeric values match the CLI exit codes where they overlap.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Invalid input: bad spec, unknown family, malformed matrix.
    Config = 2,
    Numeric = 3,
    Budget = 4,
    Degenerate = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// Optimizer settings; start from [`cm_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct CmOptions {
    pub restarts: u32,
    pub max_iter: u32,
    pub tol: f64,
    pub seed: u64,
    /// Worker cap; 0 means no cap.
    pub threads: u32,
}

/// A channel with a tangent, optionally tied to a catalog family point.
pub struct CmChannelPoint {
    channel: Channel,
    tangent: ChannelTangent,
    family: Option<(ChannelFamily, f64)>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
    Ok(s) => s,
    Err(_) => panic!("version string"),
};

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("interior NULs removed"));
}

struct Failure(CmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.kind() {
            ErrorKind::Config => CmStatus::Config,
            ErrorKind::Numeric => CmStatus::Numeric,
            ErrorKind::Budget => CmStatus::Budget,
            ErrorKind::Degenerate => CmStatus::Degenerate,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CmStatus::NullPointer, format!("`{what}` is null"))
}

fn config(msg: impl Into<String>) -> Failure {
    Failure(CmStatus::Config, msg.into())
}

/// Runs `f` behind the panic guard and records any failure.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CmStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CmStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| config(format!("`{what}` is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn point_arg<'a>(p: *const CmChannelPoint) -> Result<&'a CmChannelPoint, Failure> {
    p.as_ref().ok_or_else(|| null("point"))
}

unsafe fn options_arg(p: *const CmOptions) -> Result<MetricOptions, Failure> {
    let Some(c) = p.as_ref() else {
        return Ok(MetricOptions::default());
    };
    if c.restarts == 0 || c.max_iter == 0 || c.tol.is_nan() || c.tol <= 0.0 {
        return Err(config("options: restarts and max_iter must be positive and tol > 0"));
    }
    Ok(MetricOptions {
        restarts: c.restarts as usize,
        max_iter: c.max_iter as usize,
        tol: c.tol,
        seed: c.seed,
        threads: (c.threads > 0).then_some(c.threads as usize),
    })
}

/// Row-major `dim × dim` complex matrix from interleaved `(re, im)` pairs.
unsafe fn matrix_arg(p: *const f64, dim: usize, what: &str) -> Result<ComplexMatrix, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    if dim == 0 {
        return Err(config(format!("`{what}` has dimension 0")));
    }
    let len = dim
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(2))
        .ok_or_else(|| config("dimension overflow"))?;
    let data = std::slice::from_raw_parts(p, len);
    Ok(ComplexMatrix::from_fn(dim, dim, |i, j| {
        let k = 2 * (i * dim + j);
        c(data[k], data[k + 1])
    }))
}

fn store(p: CmChannelPoint, out: &mut *mut CmChannelPoint) {
    *out = Box::into_raw(Box::new(p));
}

/// Library defaults.
#[no_mangle]
pub extern "C" fn cm_options_default() -> CmOptions {
    let o = MetricOptions::default();
    CmOptions {
        restarts: o.restarts as u32,
        max_iter: o.max_iter as u32,
        tol: o.tol,
        seed: o.seed,
        threads: 0,
    }
}

/// Point `θ` of a catalog family. `params_json` may be null.
///
/// # Safety
/// `name` and a non-null `params_json` must be NUL-terminated strings, and
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn cm_point_from_family(
    name: *const c_char,
    params_json: *const c_char,
    theta: f64,
    out: *mut *mut CmChannelPoint,
) -> CmStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let name = str_arg(name, "name")?;
        let params = if params_json.is_null() {
            serde_json::Value::Null
        } else {
            serde_json::from_str(str_arg(params_json, "params_json")?).map_err(|e| config(format!("params: {e}")))?
        };
        let family = ChannelFamily::from_catalog(name, &params)?;
        let (channel, tangent) = family.point(theta)?;
        store(
            CmChannelPoint {
                channel,
                tangent,
                family: Some((family, theta)),
            },
            out,
        );
        Ok(())
    })
}

/// Point from a channel-spec JSON document (catalog or explicit Choi form).
/// Explicit specs must carry a tangent.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for a pointer
/// write.
#[no_mangle]
pub unsafe extern "C" fn cm_point_from_spec_json(json: *const c_char, out: *mut *mut CmChannelPoint) -> CmStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let spec = ChannelSpec::from_json(str_arg(json, "json")?)?;
        let r = spec.resolve()?;
        let tangent = r.tangent.ok_or_else(|| config("spec has no tangent"))?;
        let family = r.family.zip(r.theta);
        store(
            CmChannelPoint {
                channel: r.channel,
                tangent,
                family,
            },
            out,
        );
        Ok(())
    })
}

/// # Safety
/// `point` must be null or come from a `cm_point_*` constructor and not have
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn cm_point_free(point: *mut CmChannelPoint) {
    if !point.is_null() {
        drop(Box::from_raw(point));
    }
}

/// # Safety
/// `point` must be a live handle; `d_in` and `d_out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cm_point_dims(point: *const CmChannelPoint, d_in: *mut usize, d_out: *mut usize) -> CmStatus {
    guard(|| {
        let p = point_arg(point)?;
        let (a, b) = (out_arg(d_in, "d_in")?, out_arg(d_out, "d_out")?);
        *a = p.channel.d_in();
        *b = p.channel.d_out();
        Ok(())
    })
}

/// Smallest monotone metric. `options` may be null.
///
/// # Safety
/// `point` must be a live handle, `options` null or valid, `value` valid
/// for a write.
#[no_mangle]
pub unsafe extern "C" fn cm_g_min(
    point: *const CmChannelPoint,
    options: *const CmOptions,
    value: *mut f64,
) -> CmStatus {
    guard(|| {
        let p = point_arg(point)?;
        let out = out_arg(value, "value")?;
        *out = metrics::g_min(&p.channel, &p.tangent, &options_arg(options)?)?
            .value
            .value();
        Ok(())
    })
}

/// Output RLD quantity. `options` may be null.
///
/// # Safety
/// As [`cm_g_min`].
#[no_mangle]
pub unsafe extern "C" fn cm_g_r_output(
    point: *const CmChannelPoint,
    options: *const CmOptions,
    value: *mut f64,
) -> CmStatus {
    guard(|| {
        let p = point_arg(point)?;
        let out = out_arg(value, "value")?;
        *out = metrics::g_r_output(&p.channel, &p.tangent, &options_arg(options)?)?
            .value
            .value();
        Ok(())
    })
}

/// Upper bound on the largest monotone metric.
///
/// # Safety
/// `point` must be a live handle and `value` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn cm_g_max_upper(point: *const CmChannelPoint, value: *mut f64) -> CmStatus {
    guard(|| {
        let p = point_arg(point)?;
        let out = out_arg(value, "value")?;
        let rep = match &p.family {
            Some((f, theta)) => metrics::g_max_upper_family(f, *theta)?,
            None => metrics::g_max_upper(&p.channel, &p.tangent, &[])?,
        };
        *out = rep.value.value();
        Ok(())
    })
}

/// Largest ε keeping `Φ ± εΔ` completely positive. `capped` is set to 1
/// when the tangent vanishes and the radius is the cap, else 0; it may be
/// null.
///
/// # Safety
/// `point` must be a live handle, `radius` valid for a write, `capped` null
/// or valid.
#[no_mangle]
pub unsafe extern "C" fn cm_cp_ball_radius(
    point: *const CmChannelPoint,
    radius: *mut f64,
    capped: *mut u8,
) -> CmStatus {
    guard(|| {
        let p = point_arg(point)?;
        let out = out_arg(radius, "radius")?;
        let ball = metrics::cp_ball_radius(&p.channel, &p.tangent)?;
        *out = ball.radius;
        if let Some(c) = capped.as_mut() {
            *c = u8::from(ball.capped);
        }
        Ok(())
    })
}

unsafe fn state_pair(rho: *const f64, delta: *const f64, dim: usize) -> Result<(DensityMatrix, StateTangent), Failure> {
    let r = DensityMatrix::from_matrix(matrix_arg(rho, dim, "rho")?)?;
    let d = StateTangent::from_matrix(matrix_arg(delta, dim, "delta")?)?;
    Ok((r, d))
}

/// SLD Fisher information of `(ρ, δ)`, both row-major `dim × dim` with
/// interleaved real and imaginary parts.
///
/// # Safety
/// `rho` and `delta` must each point to `2·dim²` doubles; `value` must be
/// valid for a write.
#[no_mangle]
pub unsafe extern "C" fn cm_sld_fisher(rho: *const f64, delta: *const f64, dim: usize, value: *mut f64) -> CmStatus {
    guard(|| {
        let out = out_arg(value, "value")?;
        let (r, d) = state_pair(rho, delta, dim)?;
        *out = states::sld_fisher(&r, &d)?.value();
        Ok(())
    })
}

/// RLD Fisher information, same layout as [`cm_sld_fisher`].
///
/// # Safety
/// As [`cm_sld_fisher`].
#[no_mangle]
pub unsafe extern "C" fn cm_rld_fisher(rho: *const f64, delta: *const f64, dim: usize, value: *mut f64) -> CmStatus {
    guard(|| {
        let out = out_arg(value, "value")?;
        let (r, d) = state_pair(rho, delta, dim)?;
        *out = states::rld_fisher(&r, &d)?.value();
        Ok(())
    })
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn cm_version() -> *const c_char {
    VERSION.as_ptr()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, CmStatus::Panic);
        let msg = unsafe { CStr::from_ptr(cm_last_error_message()) }.to_str().unwrap();
        assert_eq!(msg, "panic: boom");
    }

    #[test]
    fn error_kinds_map_to_status() {
        let f: Failure = Error::BudgetExceeded("x".into()).into();
        assert_eq!(f.0, CmStatus::Budget);
        let f: Failure = Error::UnknownFamily("x".into()).into();
        assert_eq!(f.0, CmStatus::Config);
        let f: Failure = Error::Degenerate("x".into()).into();
        assert_eq!(f.0, CmStatus::Degenerate);
    }

    #[test]
    fn interior_nul_does_not_panic() {
        set_error("a\0b");
        let msg = unsafe { CStr::from_ptr(cm_last_error_message()) }.to_str().unwrap();
        assert_eq!(msg, "a b");
    }
}
