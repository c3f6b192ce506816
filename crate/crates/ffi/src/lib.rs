//! C ABI over `extopo`.
//!
//! Fields and masks are opaque handles released with the matching
//! `*_free`. Every fallible call returns an [`ExtopoStatus`]; on failure the
//! message is kept per thread and can be copied out with
//! [`extopo_last_error`]. Output pointers are written only on success, except
//! the `needed` sizes reported alongside `EXTOPO_STATUS_BUFFER_TOO_SMALL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use extopo::ensemble::analytic_chi_gaussian;
use extopo::grf::{generate_smoothed, read_field, sample_moments, write_field, FieldGrid};
use extopo::spectrum::PowerSpectrumModel;
use extopo::states::count_states_formula;
use extopo::topo2d::{
    analyze_2d, excursion_mask, hole_spectrum, ExcursionMask, SigmaMode, TopoStats,
};
use extopo::topo3d::betti3d;
use extopo::{Dim, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtopoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Domain = 5,
    Degenerate = 6,
    Divergent = 7,
    SizeGuard = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// A real-valued field on a periodic 2D or 3D grid.
pub struct ExtopoField(FieldGrid);

/// A binary excursion mask.
pub struct ExtopoMask(ExcursionMask);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExtopoMoments {
    pub mean: f64,
    pub sigma0: f64,
    pub sigma1: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtopoTopoStats {
    pub b0: u64,
    pub b1: u64,
    pub b2: u64,
    pub chi: i64,
    pub bsum: u64,
}

impl From<TopoStats> for ExtopoTopoStats {
    fn from(s: TopoStats) -> Self {
        Self {
            b0: s.b0,
            b1: s.b1,
            b2: s.b2,
            chi: s.chi,
            bsum: s.bsum,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ExtopoStatus {
    match e {
        Error::Config(_) => ExtopoStatus::InvalidArgument,
        Error::Io(_) => ExtopoStatus::Io,
        Error::Format(_) | Error::Csv(_) | Error::Json(_) => ExtopoStatus::Format,
        Error::Domain(_) => ExtopoStatus::Domain,
        Error::DegenerateField(_) => ExtopoStatus::Degenerate,
        Error::Divergent { .. } => ExtopoStatus::Divergent,
        Error::Size(_) => ExtopoStatus::SizeGuard,
    }
}

struct Fail(ExtopoStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(ExtopoStatus::NullPointer, format!("{what} is NULL"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(ExtopoStatus::InvalidArgument, msg.into())
}

/// Runs `f`, records any failure and converts panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ExtopoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ExtopoStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ExtopoStatus::Panic
        }
    }
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid("path is not valid UTF-8"))?;
    Ok(Path::new(s))
}

fn dim(d: u32) -> Result<Dim, Fail> {
    Ok(Dim::from_usize(d as usize)?)
}

fn optional(x: f64) -> Option<f64> {
    (!x.is_nan()).then_some(x)
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`) and returns the full message length
/// excluding the terminator; 0 when no error has been recorded.
///
/// `buf` must be NULL or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn extopo_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn extopo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Draws a Gaussian random field with `P(k) = amplitude k^alpha`, optional
/// cutoffs (`NaN` for none), smoothed on scale `rs`. `seed` and `stream`
/// select the generator stream; equal arguments give equal fields.
///
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn extopo_field_generate(
    amplitude: f64,
    alpha: f64,
    k_low: f64,
    k_high: f64,
    side: usize,
    box_size: f64,
    dimension: u32,
    rs: f64,
    seed: u64,
    stream: u64,
    out: *mut *mut ExtopoField,
) -> ExtopoStatus {
    guard(|| {
        let model = PowerSpectrumModel::new(amplitude, alpha, optional(k_low), optional(k_high))?;
        let f = generate_smoothed(&model, side, box_size, dim(dimension)?, rs, seed, stream)?;
        put(out, Box::into_raw(Box::new(ExtopoField(f))))
    })
}

/// Wraps `len = side^dimension` row-major samples copied from `values`.
///
/// `values` must be valid for `len` reads and `out` for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn extopo_field_from_values(
    dimension: u32,
    side: usize,
    box_size: f64,
    values: *const f64,
    len: usize,
    out: *mut *mut ExtopoField,
) -> ExtopoStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        let d = dim(dimension)?;
        if side.checked_pow(d.as_usize() as u32) != Some(len) {
            return Err(invalid(format!(
                "expected side^{} samples, got {len}",
                d.as_usize()
            )));
        }
        let v = std::slice::from_raw_parts(values, len).to_vec();
        let f = FieldGrid::from_values(d, side, box_size, v)?;
        put(out, Box::into_raw(Box::new(ExtopoField(f))))
    })
}

/// `file` must be a NUL-terminated string and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn extopo_field_read(
    file: *const c_char,
    out: *mut *mut ExtopoField,
) -> ExtopoStatus {
    guard(|| {
        let f = read_field(path(file)?)?;
        put(out, Box::into_raw(Box::new(ExtopoField(f))))
    })
}

/// Writes the binary dump and its JSON sidecar.
///
/// `field` must come from this library; `file` must be NUL terminated.
#[no_mangle]
pub unsafe extern "C" fn extopo_field_write(
    field: *const ExtopoField,
    file: *const c_char,
) -> ExtopoStatus {
    guard(|| {
        let f = deref(field, "field")?;
        Ok(write_field(path(file)?, &f.0)?)
    })
}

/// `field` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn extopo_field_free(field: *mut ExtopoField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of samples, 0 for NULL.
///
/// `field` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn extopo_field_len(field: *const ExtopoField) -> usize {
    field.as_ref().map_or(0, |f| f.0.len())
}

/// Copies the samples into `buf`, which must hold `extopo_field_len` values.
///
/// `field` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn extopo_field_values(
    field: *const ExtopoField,
    buf: *mut f64,
    len: usize,
) -> ExtopoStatus {
    guard(|| {
        let f = deref(field, "field")?;
        if buf.is_null() {
            return Err(null("buffer"));
        }
        if len < f.0.len() {
            return Err(Fail(
                ExtopoStatus::BufferTooSmall,
                format!("need {} values, got room for {len}", f.0.len()),
            ));
        }
        ptr::copy_nonoverlapping(f.0.values.as_ptr(), buf, f.0.len());
        Ok(())
    })
}

/// Sample mean, standard deviation and RMS gradient.
///
/// `field` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn extopo_field_moments(
    field: *const ExtopoField,
    out: *mut ExtopoMoments,
) -> ExtopoStatus {
    guard(|| {
        let m = sample_moments(&deref(field, "field")?.0);
        put(
            out,
            ExtopoMoments {
                mean: m.mean,
                sigma0: m.sigma0,
                sigma1: m.sigma1,
            },
        )
    })
}

/// Excursion set `{f >= nu sigma0}`. `sigma0 > 0` fixes the normalisation;
/// any other value uses the field's sample standard deviation.
///
/// `field` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn extopo_mask_threshold(
    field: *const ExtopoField,
    nu: f64,
    sigma0: f64,
    out: *mut *mut ExtopoMask,
) -> ExtopoStatus {
    guard(|| {
        let mode = if sigma0 > 0.0 {
            SigmaMode::Ensemble(sigma0)
        } else {
            SigmaMode::Sample
        };
        let m = excursion_mask(&deref(field, "field")?.0, nu, mode)?;
        put(out, Box::into_raw(Box::new(ExtopoMask(m))))
    })
}

/// Mask from `len = side^dimension` bytes, non-zero meaning foreground.
///
/// `bits` must be valid for `len` reads and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn extopo_mask_from_bits(
    dimension: u32,
    side: usize,
    bits: *const u8,
    len: usize,
    out: *mut *mut ExtopoMask,
) -> ExtopoStatus {
    guard(|| {
        if bits.is_null() {
            return Err(null("bits"));
        }
        let d = dim(dimension)?;
        if side.checked_pow(d.as_usize() as u32) != Some(len) {
            return Err(invalid(format!(
                "expected side^{} cells, got {len}",
                d.as_usize()
            )));
        }
        let b = std::slice::from_raw_parts(bits, len)
            .iter()
            .map(|&v| v != 0)
            .collect();
        put(
            out,
            Box::into_raw(Box::new(ExtopoMask(ExcursionMask::from_bits(d, side, b)?))),
        )
    })
}

/// `mask` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn extopo_mask_free(mask: *mut ExtopoMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

/// Betti numbers, Euler characteristic and their sum (2D or 3D).
///
/// `mask` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn extopo_mask_stats(
    mask: *const ExtopoMask,
    out: *mut ExtopoTopoStats,
) -> ExtopoStatus {
    guard(|| {
        let m = &deref(mask, "mask")?.0;
        let s = match m.dim {
            Dim::Two => analyze_2d(m)?.1,
            Dim::Three => betti3d(m)?,
        };
        put(out, s.into())
    })
}

/// Hole spectrum of a 2D mask: writes `m_0 .. m_jmax` into `counts` and
/// `jmax + 1` into `needed`. With fewer than `jmax + 1` slots nothing is
/// copied and `EXTOPO_STATUS_BUFFER_TOO_SMALL` is returned. An empty mask
/// has `needed = 0`.
///
/// `mask` must be a live handle, `counts` valid for `len` writes (or NULL
/// when `len` is 0) and `needed` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn extopo_mask_hole_spectrum(
    mask: *const ExtopoMask,
    counts: *mut u64,
    len: usize,
    needed: *mut usize,
) -> ExtopoStatus {
    guard(|| {
        let hs = hole_spectrum(&deref(mask, "mask")?.0)?;
        let n = if hs.is_empty() { 0 } else { hs.jmax() + 1 };
        put(needed, n)?;
        if n > len {
            return Err(Fail(
                ExtopoStatus::BufferTooSmall,
                format!("need {n} slots, got {len}"),
            ));
        }
        if n > 0 && counts.is_null() {
            return Err(null("counts"));
        }
        for j in 0..n {
            *counts.add(j) = hs.m(j);
        }
        Ok(())
    })
}

/// Expected Euler characteristic per unit area of a 2D Gaussian field at
/// threshold `nu` with correlation length `r_c`.
///
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn extopo_analytic_chi(nu: f64, r_c: f64, out: *mut f64) -> ExtopoStatus {
    guard(|| put(out, analytic_chi_gaussian(nu, r_c)?))
}

/// Closed-form state count for `b0 = n0`, `b1 = n1` as a decimal string.
/// `needed` receives the string length including the terminator; when
/// `len` is smaller nothing is copied.
///
/// `buf` must be valid for `len` bytes (or NULL when `len` is 0) and
/// `needed` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn extopo_states_formula(
    n0: u64,
    n1: u64,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> ExtopoStatus {
    guard(|| {
        let to_i64 = |v: u64| i64::try_from(v).map_err(|_| invalid("count exceeds i64"));
        let s = count_states_formula(to_i64(n0)?, to_i64(n1)?)?.to_string();
        put(needed, s.len() + 1)?;
        if s.len() + 1 > len {
            return Err(Fail(
                ExtopoStatus::BufferTooSmall,
                format!("need {} bytes, got {len}", s.len() + 1),
            ));
        }
        if buf.is_null() {
            return Err(null("buffer"));
        }
        ptr::copy_nonoverlapping(s.as_ptr().cast::<c_char>(), buf, s.len());
        *buf.add(s.len()) = 0;
        Ok(())
    })
}
