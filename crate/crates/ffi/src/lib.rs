//! C ABI over `widthlab`. Every entry point returns a `WlStatus`; on failure
//! the message is kept per thread and read with `wl_last_error_message`.
//! Handles are opaque and owned by the caller until passed to their `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use widthlab::cli::QueryRecord;
use widthlab::extremal::{build_witness_with, verify_witness_detailed, Enumeration, WitnessDocument};
use widthlab::suites::{run_suite, Suite, SuiteOptions};
use widthlab::{
    intersection_width_estimate, lambda_pq, phi_all, predict_active_term, Error, Exponent,
    ExponentPair, Shape, WidthQuery, Witness,
};

/// Relative slack used by `wl_witness_verify`.
pub const WL_WITNESS_TOL: f64 = 1e-9;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    OutsideDomain = 3,
    ShapeMismatch = 4,
    NonConvergence = 5,
    NoWitness = 6,
    PropertyFailure = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Query under construction; balls are added one at a time.
pub struct WlQuery {
    shape: Shape,
    n: u64,
    target: ExponentPair,
    balls: Vec<(f64, ExponentPair)>,
}

pub struct WlWitness {
    witness: Witness,
    query: WidthQuery,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: WlStatus, msg: impl Into<String>) -> WlStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> WlStatus {
    let status = match &e {
        Error::ShapeMismatch(_) => WlStatus::ShapeMismatch,
        Error::InvalidParameter(_) => WlStatus::InvalidParameter,
        Error::OutsideDomain(_) => WlStatus::OutsideDomain,
        Error::NonConvergence { .. } => WlStatus::NonConvergence,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> WlStatus) -> WlStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(WlStatus::Panic, format!("panic: {msg}"))
        }
    }
}

macro_rules! need {
    ($p:expr, $name:literal) => {
        if $p.is_null() {
            return fail(WlStatus::NullPointer, concat!($name, " is null"));
        }
    };
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return from_error(e),
        }
    };
}

impl WlQuery {
    fn build(&self) -> Result<WidthQuery, Error> {
        WidthQuery::new(self.shape, self.n, self.target, &self.balls)
    }
}

fn to_c_string(s: String, out: *mut *mut c_char) -> WlStatus {
    match CString::new(s) {
        Ok(c) => {
            // SAFETY: caller checked `out` for null.
            unsafe { *out = c.into_raw() };
            WlStatus::Ok
        }
        Err(_) => fail(WlStatus::InvalidParameter, "string contains a NUL byte"),
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, WlStatus> {
    // SAFETY: caller passes a NUL-terminated string.
    unsafe { CStr::from_ptr(s) }
        .to_str()
        .map_err(|_| fail(WlStatus::InvalidParameter, "string is not UTF-8"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length, 0 when there is
/// no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn wl_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            // SAFETY: `buf` holds `len` bytes and `n < len`.
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// New query without balls. Pass `INFINITY` for an infinite exponent.
///
/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn wl_query_new(
    m: usize,
    k: usize,
    n: u64,
    q: f64,
    sigma: f64,
    out: *mut *mut WlQuery,
) -> WlStatus {
    guard(|| {
        need!(out, "out");
        let shape = tri!(Shape::new(m, k));
        let target = tri!(ExponentPair::new(q, sigma));
        let h = Box::new(WlQuery { shape, n, target, balls: Vec::new() });
        // SAFETY: checked above.
        unsafe { *out = Box::into_raw(h) };
        WlStatus::Ok
    })
}

/// Query from one JSON query record (`{"m":..,"k":..,"n":..,"q":..,
/// "sigma":..,"balls":[{"nu":..,"p":..,"theta":..}]}`).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wl_query_from_json(json: *const c_char, out: *mut *mut WlQuery) -> WlStatus {
    guard(|| {
        need!(json, "json");
        need!(out, "out");
        // SAFETY: checked above.
        let text = match unsafe { read_str(json) } {
            Ok(t) => t,
            Err(s) => return s,
        };
        let rec: QueryRecord = match serde_json::from_str(text) {
            Ok(r) => r,
            Err(e) => return fail(WlStatus::InvalidParameter, e.to_string()),
        };
        let q = tri!(rec.to_query());
        let h = Box::new(WlQuery {
            shape: q.shape,
            n: q.n,
            target: q.target,
            balls: q.balls.iter().map(|b| (b.nu, b.exps)).collect(),
        });
        // SAFETY: checked above.
        unsafe { *out = Box::into_raw(h) };
        WlStatus::Ok
    })
}

/// Appends the ball `nu·B_{p,θ}`; at most two balls.
///
/// # Safety
/// `q` must be a live handle from `wl_query_new`.
#[no_mangle]
pub unsafe extern "C" fn wl_query_add_ball(q: *mut WlQuery, nu: f64, p: f64, theta: f64) -> WlStatus {
    guard(|| {
        need!(q, "query");
        // SAFETY: live handle.
        let q = unsafe { &mut *q };
        if q.balls.len() == 2 {
            return fail(WlStatus::InvalidParameter, "a query holds at most two balls");
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return fail(WlStatus::InvalidParameter, format!("radius {nu} must be positive and finite"));
        }
        q.balls.push((nu, tri!(ExponentPair::new(p, theta))));
        WlStatus::Ok
    })
}

/// # Safety
/// `q` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn wl_query_free(q: *mut WlQuery) {
    if !q.is_null() {
        // SAFETY: handle came from Box::into_raw.
        drop(unsafe { Box::from_raw(q) });
    }
}

/// `λ_{p,q}`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wl_lambda_pq(p: f64, q: f64, out: *mut f64) -> WlStatus {
    guard(|| {
        need!(out, "out");
        let v = tri!(lambda_pq(tri!(Exponent::new(p)), tri!(Exponent::new(q))));
        // SAFETY: checked above.
        unsafe { *out = v };
        WlStatus::Ok
    })
}

/// `Φ_1..Φ_5` into `out[0..5]`; absent terms are `INFINITY`.
///
/// # Safety
/// `q` must be a live handle and `out` point to five doubles.
#[no_mangle]
pub unsafe extern "C" fn wl_phi_all(q: *const WlQuery, out: *mut f64) -> WlStatus {
    guard(|| {
        need!(q, "query");
        need!(out, "out");
        // SAFETY: live handle.
        let query = tri!(unsafe { &*q }.build());
        let v = tri!(phi_all(&query));
        // SAFETY: `out` holds five doubles.
        unsafe { ptr::copy_nonoverlapping(v.as_ptr(), out, 5) };
        WlStatus::Ok
    })
}

/// Order estimate and the index of the active term (1 for one ball).
///
/// # Safety
/// `q` must be a live handle; `value` and `argmin` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn wl_estimate(q: *const WlQuery, value: *mut f64, argmin: *mut u32) -> WlStatus {
    guard(|| {
        need!(q, "query");
        need!(value, "value");
        need!(argmin, "argmin");
        // SAFETY: live handle.
        let query = tri!(unsafe { &*q }.build());
        let est = tri!(intersection_width_estimate(&query));
        // SAFETY: checked above.
        unsafe {
            *value = est.value;
            *argmin = est.branch.active.unwrap_or(1) as u32;
        }
        WlStatus::Ok
    })
}

/// Predicted active term of a two-ball query; `boundary` is set to 1 on a
/// regime or band boundary where ties are expected.
///
/// # Safety
/// `q` must be a live handle; `j` and `boundary` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn wl_predict(q: *const WlQuery, j: *mut u32, boundary: *mut c_int) -> WlStatus {
    guard(|| {
        need!(q, "query");
        need!(j, "j");
        need!(boundary, "boundary");
        // SAFETY: live handle.
        let query = tri!(unsafe { &*q }.build());
        let p = tri!(predict_active_term(&query));
        // SAFETY: checked above.
        unsafe {
            *j = p.j as u32;
            *boundary = c_int::from(p.boundary);
        }
        WlStatus::Ok
    })
}

/// Builds the lower-bound witness (full orbit when it has at most 200000
/// vertices, else `samples` vertices drawn with `seed`). Returns
/// `NO_WITNESS` when the predicted band has no construction.
///
/// # Safety
/// `q` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wl_witness_build(
    q: *const WlQuery,
    samples: usize,
    seed: u64,
    out: *mut *mut WlWitness,
) -> WlStatus {
    guard(|| {
        need!(q, "query");
        need!(out, "out");
        // SAFETY: live handle.
        let query = tri!(unsafe { &*q }.build());
        let en = Enumeration::Auto { cap: widthlab::extremal::ENUMERATION_CAP, samples, seed };
        match tri!(build_witness_with(&query, en)) {
            Some(witness) => {
                // SAFETY: checked above.
                unsafe { *out = Box::into_raw(Box::new(WlWitness { witness, query })) };
                WlStatus::Ok
            }
            None => fail(WlStatus::NoWitness, "the predicted band has no lower-bound construction"),
        }
    })
}

/// Scale `c`, block sizes `r`, `l` and the claimed lower value.
///
/// # Safety
/// `w` must be a live handle; the out pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn wl_witness_info(
    w: *const WlWitness,
    scale: *mut f64,
    r: *mut usize,
    l: *mut usize,
    claimed: *mut f64,
) -> WlStatus {
    guard(|| {
        need!(w, "witness");
        // SAFETY: live handle; out pointers are checked one by one.
        let w = &unsafe { &*w }.witness;
        unsafe {
            if !scale.is_null() {
                *scale = w.scale;
            }
            if !r.is_null() {
                *r = w.r();
            }
            if !l.is_null() {
                *l = w.l();
            }
            if !claimed.is_null() {
                *claimed = w.claimed_value;
            }
        }
        WlStatus::Ok
    })
}

/// Multiplies the witness scale by `factor` (for negative controls).
///
/// # Safety
/// `w` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wl_witness_rescale(w: *mut WlWitness, factor: f64) -> WlStatus {
    guard(|| {
        need!(w, "witness");
        if !(factor > 0.0 && factor.is_finite()) {
            return fail(WlStatus::InvalidParameter, "factor must be positive and finite");
        }
        // SAFETY: live handle.
        let w = unsafe { &mut *w };
        w.witness = w.witness.with_scale(w.witness.scale * factor);
        WlStatus::Ok
    })
}

/// Checks every visited vertex against both balls. Returns
/// `PROPERTY_FAILURE` (with the offending vertex in the error message) when
/// an inclusion fails; `worst_ratio` is written either way.
///
/// # Safety
/// `w` must be a live handle; `worst_ratio` may be null.
#[no_mangle]
pub unsafe extern "C" fn wl_witness_verify(w: *const WlWitness, worst_ratio: *mut f64) -> WlStatus {
    guard(|| {
        need!(w, "witness");
        // SAFETY: live handle.
        let w = unsafe { &*w };
        let v = tri!(verify_witness_detailed(&w.witness, &w.query.balls, WL_WITNESS_TOL));
        if !worst_ratio.is_null() {
            // SAFETY: checked above.
            unsafe { *worst_ratio = v.worst_ratio };
        }
        match &v.offending {
            None => WlStatus::Ok,
            Some(bad) => fail(
                WlStatus::PropertyFailure,
                format!("offending vertex {}", serde_json::to_string(bad).unwrap_or_default()),
            ),
        }
    })
}

/// Witness document (JSON, version 1) after verification; free the string
/// with `wl_string_free`.
///
/// # Safety
/// `w` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wl_witness_to_json(w: *const WlWitness, out: *mut *mut c_char) -> WlStatus {
    guard(|| {
        need!(w, "witness");
        need!(out, "out");
        // SAFETY: live handle.
        let w = unsafe { &*w };
        let v = tri!(verify_witness_detailed(&w.witness, &w.query.balls, WL_WITNESS_TOL));
        let doc = WitnessDocument::new(&w.witness, &w.query, &v);
        match serde_json::to_string(&doc) {
            Ok(s) => to_c_string(s, out),
            Err(e) => fail(WlStatus::InvalidParameter, e.to_string()),
        }
    })
}

/// # Safety
/// `w` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn wl_witness_free(w: *mut WlWitness) {
    if !w.is_null() {
        // SAFETY: handle came from Box::into_raw.
        drop(unsafe { Box::from_raw(w) });
    }
}

/// Runs a property suite by name; `cases == 0` keeps the default count.
/// `report` (may be null) receives the JSON report, freed with
/// `wl_string_free`. Returns `PROPERTY_FAILURE` when the suite fails.
///
/// # Safety
/// `name` must be a NUL-terminated string; `report` null or valid.
#[no_mangle]
pub unsafe extern "C" fn wl_verify_suite(
    name: *const c_char,
    seed: u64,
    cases: usize,
    report: *mut *mut c_char,
) -> WlStatus {
    guard(|| {
        need!(name, "name");
        // SAFETY: checked above.
        let name = match unsafe { read_str(name) } {
            Ok(t) => t,
            Err(s) => return s,
        };
        let suite: Suite = tri!(name.parse());
        let opts = SuiteOptions { seed, budget: None, cases: (cases > 0).then_some(cases) };
        let r = tri!(run_suite(suite, &opts));
        if !report.is_null() {
            let s = to_c_string(serde_json::to_string(&r).unwrap_or_default(), report);
            if s != WlStatus::Ok {
                return s;
            }
        }
        if r.passed {
            WlStatus::Ok
        } else {
            fail(WlStatus::PropertyFailure, format!("{suite}: {} of {} cases failed", r.failures, r.cases))
        }
    })
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wl_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by CString::into_raw.
        drop(unsafe { CString::from_raw(s) });
    }
}
