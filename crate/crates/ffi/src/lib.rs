//! C ABI over `bergman-core`.
//!
//! Points are passed in real layout `[Re z_1, Im z_1, …]` of length `2n`.
//! Every fallible call returns a [`BergmanStatus`]; the message of the last
//! failure on the calling thread is available from
//! [`bergman_last_error_message`]. Handles are opaque and must be released
//! with the matching `_free` function.

use bergman_core::domains::Domain;
use bergman_core::fridman::{fridman_upper, FridmanOptions};
use bergman_core::geodesics::{bergman_distance as core_distance, DistanceOptions};
use bergman_core::kernel::{build_kernel, KernelModel, KernelOptions};
use bergman_core::metric::metric_tensor;
use bergman_core::points::from_real;
use bergman_core::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BergmanStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownDomain = 3,
    OutsideDomain = 4,
    Unsupported = 5,
    DegenerateMetric = 6,
    LeftDomain = 7,
    NoConvergence = 8,
    NoEmbedding = 9,
    BufferTooSmall = 10,
    Panic = 11,
    Other = 12,
}

/// Opaque domain handle.
pub struct BergmanDomain {
    inner: Domain,
}

/// Opaque kernel handle.
pub struct BergmanKernel {
    inner: KernelModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> BergmanStatus {
    match e {
        Error::NotInDomain { .. } | Error::OutsideDomain { .. } => BergmanStatus::OutsideDomain,
        Error::UnknownDomainId(_) => BergmanStatus::UnknownDomain,
        Error::UnsupportedDomain(_) | Error::NoChart(_) | Error::UnsupportedIntersection(_) | Error::QuadratureUnavailable(_) => {
            BergmanStatus::Unsupported
        }
        Error::DegenerateMetric { .. } => BergmanStatus::DegenerateMetric,
        Error::LeftDomain { .. } => BergmanStatus::LeftDomain,
        Error::NoConvergence(_) => BergmanStatus::NoConvergence,
        Error::NoEmbeddingFound(_) => BergmanStatus::NoEmbedding,
        Error::InvalidArgument(_) | Error::UnknownClass(_) | Error::ApproachLeavesCone { .. } | Error::Config(_) => {
            BergmanStatus::InvalidArgument
        }
        _ => BergmanStatus::Other,
    }
}

fn guard(f: impl FnOnce() -> Result<(), BergmanStatus>) -> BergmanStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BergmanStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside bergman-core");
            BergmanStatus::Panic
        }
    }
}

fn fail(e: Error) -> BergmanStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> BergmanStatus {
    set_error(format!("{what} is null"));
    BergmanStatus::NullPointer
}

unsafe fn point<'a>(ptr: *const f64, n: usize, what: &str) -> Result<Vec<num_complex::Complex64>, BergmanStatus> {
    if ptr.is_null() {
        return Err(null(what));
    }
    let x: &'a [f64] = std::slice::from_raw_parts(ptr, 2 * n);
    Ok(from_real(x))
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, BergmanStatus> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), BergmanStatus> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bergman_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn bergman_status_str(status: BergmanStatus) -> *const c_char {
    let s: &'static str = match status {
        BergmanStatus::Ok => "ok\0",
        BergmanStatus::NullPointer => "null pointer\0",
        BergmanStatus::InvalidArgument => "invalid argument\0",
        BergmanStatus::UnknownDomain => "unknown domain identifier\0",
        BergmanStatus::OutsideDomain => "point outside the domain\0",
        BergmanStatus::Unsupported => "unsupported domain\0",
        BergmanStatus::DegenerateMetric => "degenerate metric\0",
        BergmanStatus::LeftDomain => "geodesic left the trusted region\0",
        BergmanStatus::NoConvergence => "no convergence\0",
        BergmanStatus::NoEmbedding => "no embedding found\0",
        BergmanStatus::BufferTooSmall => "buffer too small\0",
        BergmanStatus::Panic => "internal panic\0",
        BergmanStatus::Other => "error\0",
    };
    s.as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (truncated,
/// always NUL-terminated when `len > 0`) and returns the full message
/// length without the terminator; 0 when there is none.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn bergman_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let k = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), k);
            *buf.add(k) = 0;
        }
        bytes.len()
    })
}

/// Parses a catalogue identifier such as `disc`, `ball:2` or `egg:2:4`.
///
/// # Safety
/// `id` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bergman_domain_new(id: *const c_char, out: *mut *mut BergmanDomain) -> BergmanStatus {
    guard(|| {
        if id.is_null() {
            return Err(null("id"));
        }
        let id = CStr::from_ptr(id).to_str().map_err(|_| {
            set_error("id is not UTF-8");
            BergmanStatus::InvalidArgument
        })?;
        let d = Domain::from_id(id).map_err(fail)?;
        write(out, Box::into_raw(Box::new(BergmanDomain { inner: d })), "out")
    })
}

/// # Safety
/// `domain` must come from [`bergman_domain_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn bergman_domain_free(domain: *mut BergmanDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// # Safety
/// `domain` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bergman_domain_dim(domain: *const BergmanDomain, out: *mut usize) -> BergmanStatus {
    guard(|| {
        let d = handle(domain, "domain")?;
        write(out, d.inner.dim(), "out")
    })
}

/// # Safety
/// `z` must hold `2n` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bergman_domain_contains(domain: *const BergmanDomain, z: *const f64, out: *mut bool) -> BergmanStatus {
    guard(|| {
        let d = handle(domain, "domain")?;
        let z = point(z, d.inner.dim(), "z")?;
        write(out, d.inner.membership(&z), "out")
    })
}

/// Builds the kernel of a domain. `degree = 0` keeps the default series
/// degree; closed forms are preferred when available.
///
/// # Safety
/// `domain` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bergman_kernel_new(domain: *const BergmanDomain, degree: usize, out: *mut *mut BergmanKernel) -> BergmanStatus {
    guard(|| {
        let d = handle(domain, "domain")?;
        let mut opts = KernelOptions::default();
        if degree > 0 {
            opts.degree = degree;
        }
        let k = build_kernel(&d.inner, &opts).map_err(fail)?;
        write(out, Box::into_raw(Box::new(BergmanKernel { inner: k })), "out")
    })
}

/// # Safety
/// `kernel` must come from [`bergman_kernel_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn bergman_kernel_free(kernel: *mut BergmanKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// `K(z, w)` as real and imaginary parts.
///
/// # Safety
/// `z`, `w` must hold `2n` doubles; `re`, `im` writable.
#[no_mangle]
pub unsafe extern "C" fn bergman_kernel_eval(
    kernel: *const BergmanKernel,
    z: *const f64,
    w: *const f64,
    re: *mut f64,
    im: *mut f64,
) -> BergmanStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        let n = k.inner.dim();
        let (z, w) = (point(z, n, "z")?, point(w, n, "w")?);
        let v = k.inner.kernel_eval(&z, &w).map_err(fail)?.value;
        write(re, v.re, "re")?;
        write(im, v.im, "im")
    })
}

/// Metric tensor `g_{ab}` at `z`, row-major with interleaved real and
/// imaginary parts; `out` needs `2n^2` doubles.
///
/// # Safety
/// `z` must hold `2n` doubles; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bergman_metric_tensor(kernel: *const BergmanKernel, z: *const f64, out: *mut f64, len: usize) -> BergmanStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        let n = k.inner.dim();
        let z = point(z, n, "z")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if len < 2 * n * n {
            set_error(format!("need {} doubles, got {len}", 2 * n * n));
            return Err(BergmanStatus::BufferTooSmall);
        }
        let g = metric_tensor(&k.inner, &z).map_err(fail)?.g;
        let buf = std::slice::from_raw_parts_mut(out, 2 * n * n);
        for a in 0..n {
            for b in 0..n {
                buf[2 * (a * n + b)] = g[(a, b)].re;
                buf[2 * (a * n + b) + 1] = g[(a, b)].im;
            }
        }
        Ok(())
    })
}

/// Bergman distance with default options.
///
/// # Safety
/// `z`, `w` must hold `2n` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bergman_distance(kernel: *const BergmanKernel, z: *const f64, w: *const f64, out: *mut f64) -> BergmanStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        let n = k.inner.dim();
        let (z, w) = (point(z, n, "z")?, point(w, n, "w")?);
        let d = core_distance(&k.inner, &z, &w, &DistanceOptions::default()).map_err(fail)?;
        write(out, d.distance, "out")
    })
}

/// Upper bound for the Fridman invariant with default options; `0` for
/// registered ball biholomorphs.
///
/// # Safety
/// `z` must hold `2n` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bergman_fridman_upper(kernel: *const BergmanKernel, z: *const f64, out: *mut f64) -> BergmanStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        let z = point(z, k.inner.dim(), "z")?;
        let e = fridman_upper(&k.inner, &z, &FridmanOptions::default()).map_err(fail)?;
        write(out, e.u, "out")
    })
}
