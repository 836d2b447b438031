//! C interface to `kodual`.
//!
//! Every fallible function returns a [`KdStatus`] and writes its result
//! through an out-pointer. On failure the message is available from
//! [`kd_last_error`] on the same thread. Handles are opaque and must be
//! released with the matching `_free` function; strings returned to the
//! caller are released with [`kd_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kodual::anderson::{anderson_dual_homotopy, detect_shift_free_rank_one, ko_groups, ku_groups};
use kodual::chart::Chart;
use kodual::groupcoh::{c2_tate, units_group_cohomology, C2Module, UnitsModule};
use kodual::intlin::{cokernel, FinAbGroup, GradedAbGroup, GradedTable, IntMatrix};
use kodual::ktheory::{hfpss_ku, ko_homotopy_table, DEFAULT_HFPSS_WINDOW};
use kodual::picard::{alpha_kernel, orbit_model};
use kodual::sseq::run;
use kodual::Error;
use num_bigint::BigInt;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidParameter = 4,
    NotAGenerator = 5,
    NoShift = 6,
    AmbiguousShift = 7,
    OutsideWindow = 8,
    Computation = 9,
    Panic = 10,
}

/// A finitely generated abelian group `Z^r ⊕ ⊕ Z/d_i` with `d_1 | d_2 | ...`.
pub struct KdGroup(FinAbGroup);

/// Groups indexed by the integers of a window `[lo, hi]`.
pub struct KdGraded(GradedAbGroup);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdC2Module {
    Trivial = 0,
    Sign = 1,
    Regular = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdReference {
    Ko = 0,
    Ku = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdChartFormat {
    Ascii = 0,
    Svg = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> KdStatus {
    match e {
        Error::Parse(_) => KdStatus::Parse,
        Error::InvalidParameter(_) => KdStatus::InvalidParameter,
        Error::NotAGenerator { .. } => KdStatus::NotAGenerator,
        Error::NoShift => KdStatus::NoShift,
        Error::AmbiguousShift(_) => KdStatus::AmbiguousShift,
        Error::OutsideWindow(_) => KdStatus::OutsideWindow,
        _ => KdStatus::Computation,
    }
}

enum Failure {
    Status(KdStatus, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn null() -> Failure {
    Failure::Status(KdStatus::NullPointer, "null pointer argument".into())
}

/// Runs `f`, storing the result in `out`, and converts errors and panics to a status.
fn guard<T>(out: *mut T, f: impl FnOnce() -> Result<T, Failure>) -> KdStatus {
    if out.is_null() {
        set_error("null output pointer".into());
        return KdStatus::NullPointer;
    }
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => {
            unsafe { out.write(v) };
            KdStatus::Ok
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            KdStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::Status(KdStatus::InvalidUtf8, e.to_string()))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior NUL").into_raw()
}

fn group(g: FinAbGroup) -> *mut KdGroup {
    Box::into_raw(Box::new(KdGroup(g)))
}

fn graded(g: GradedAbGroup) -> *mut KdGraded {
    Box::into_raw(Box::new(KdGraded(g)))
}

/// Message for the last failed call on this thread, or null. Owned by the library;
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn kd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `g` must be null or a handle returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kd_group_free(g: *mut KdGroup) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be null or a handle returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kd_graded_free(g: *mut KdGraded) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Cokernel of the `rows × cols` integer matrix stored row-major in `entries`.
///
/// # Safety
/// `entries` must point to `rows * cols` integers (it may be null when that is 0).
#[no_mangle]
pub unsafe extern "C" fn kd_cokernel(
    rows: usize,
    cols: usize,
    entries: *const i64,
    out: *mut *mut KdGroup,
) -> KdStatus {
    guard(out, || {
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure::Status(KdStatus::InvalidParameter, "matrix too large".into()))?;
        let values: Vec<BigInt> = if n == 0 {
            Vec::new()
        } else if entries.is_null() {
            return Err(null());
        } else {
            std::slice::from_raw_parts(entries, n).iter().map(|&x| BigInt::from(x)).collect()
        };
        Ok(group(cokernel(&IntMatrix::from_entries(rows, cols, values)?)))
    })
}

/// # Safety
/// `g` must be a live group handle.
#[no_mangle]
pub unsafe extern "C" fn kd_group_free_rank(g: *const KdGroup, out: *mut usize) -> KdStatus {
    guard(out, || Ok(borrow(g)?.0.free_rank()))
}

/// Number of torsion invariants.
///
/// # Safety
/// `g` must be a live group handle.
#[no_mangle]
pub unsafe extern "C" fn kd_group_torsion_len(g: *const KdGroup, out: *mut usize) -> KdStatus {
    guard(out, || Ok(borrow(g)?.0.torsion().len()))
}

/// The `i`-th torsion invariant as a decimal string (invariants can exceed 64 bits).
///
/// # Safety
/// `g` must be a live group handle.
#[no_mangle]
pub unsafe extern "C" fn kd_group_torsion(g: *const KdGroup, i: usize, out: *mut *mut c_char) -> KdStatus {
    guard(out, || {
        let t = borrow(g)?.0.torsion();
        let d = t.get(i).ok_or_else(|| {
            Failure::Status(KdStatus::InvalidParameter, format!("index {i} out of range ({} invariants)", t.len()))
        })?;
        Ok(into_c_string(d.to_string()))
    })
}

/// Display form, e.g. `Z ⊕ Z/2`.
///
/// # Safety
/// `g` must be a live group handle.
#[no_mangle]
pub unsafe extern "C" fn kd_group_to_string(g: *const KdGroup, out: *mut *mut c_char) -> KdStatus {
    guard(out, || Ok(into_c_string(borrow(g)?.0.to_string())))
}

/// Tate cohomology of `C_2` in degree `n` with coefficients in a rank one or regular module.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kd_c2_tate(module: KdC2Module, n: i64, out: *mut *mut KdGroup) -> KdStatus {
    guard(out, || {
        let m = match module {
            KdC2Module::Trivial => C2Module::trivial(),
            KdC2Module::Sign => C2Module::sign(),
            KdC2Module::Regular => C2Module::regular(),
        };
        Ok(group(c2_tate(&m, n)?))
    })
}

/// `H^n` of the 2-adic units with coefficients in `π_{2k} KU_2`, computed at `Z/2^precision`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kd_units_cohomology(k: u32, precision: u32, n: usize, out: *mut *mut KdGroup) -> KdStatus {
    guard(out, || Ok(group(units_group_cohomology(&UnitsModule::ku(k, precision), n)?)))
}

/// Kernel of `α` on functions on the level-`level` orbit of `l`, with values in `Z/2^precision`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kd_picard_kernel(l: i64, level: u32, precision: u32, out: *mut *mut KdGroup) -> KdStatus {
    guard(out, || Ok(group(alpha_kernel(&orbit_model(l, level)?, precision)?.group)))
}

/// `π_k KO` for `lo ≤ k ≤ hi`, read off the homotopy fixed point spectral sequence.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kd_ko_homotopy(lo: i64, hi: i64, out: *mut *mut KdGraded) -> KdStatus {
    guard(out, || Ok(graded(ko_homotopy_table(lo, hi)?)))
}

/// Parses `{"window":[lo,hi],"groups":{"0":"Z","1":"Z/2"}}`; missing degrees are zero.
///
/// # Safety
/// `json` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn kd_graded_from_json(json: *const c_char, out: *mut *mut KdGraded) -> KdStatus {
    guard(out, || {
        let table: GradedTable =
            serde_json::from_str(read_str(json)?).map_err(|e| Failure::Status(KdStatus::Parse, e.to_string()))?;
        Ok(graded(table.to_graded()?))
    })
}

/// # Safety
/// `g` must be a live graded handle.
#[no_mangle]
pub unsafe extern "C" fn kd_graded_to_json(g: *const KdGraded, out: *mut *mut c_char) -> KdStatus {
    guard(out, || {
        let table = GradedTable::from(&borrow(g)?.0);
        Ok(into_c_string(serde_json::to_string(&table).expect("tables serialize")))
    })
}

/// # Safety
/// `g` must be a live graded handle; `lo` and `hi` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kd_graded_window(g: *const KdGraded, lo: *mut i64, hi: *mut i64) -> KdStatus {
    if hi.is_null() {
        set_error("null output pointer".into());
        return KdStatus::NullPointer;
    }
    let mut top = 0;
    let s = guard(lo, || {
        let (a, b) = borrow(g)?.0.window();
        top = b;
        Ok(a)
    });
    if s == KdStatus::Ok {
        hi.write(top);
    }
    s
}

/// The group in degree `k`, as a new handle.
///
/// # Safety
/// `g` must be a live graded handle.
#[no_mangle]
pub unsafe extern "C" fn kd_graded_get(g: *const KdGraded, k: i64, out: *mut *mut KdGroup) -> KdStatus {
    guard(out, || {
        let g = &borrow(g)?.0;
        let x = g.get(k).ok_or_else(|| {
            Failure::Lib(Error::OutsideWindow(format!("degree {k} outside {:?}", g.window())))
        })?;
        Ok(group(x.clone()))
    })
}

/// Homotopy of the Anderson dual: `π_{-k}` built from `Hom(π_k, Z)` and `Ext(π_{k-1}, Z)`.
///
/// # Safety
/// `g` must be a live graded handle.
#[no_mangle]
pub unsafe extern "C" fn kd_anderson_dual(g: *const KdGraded, out: *mut *mut KdGraded) -> KdStatus {
    guard(out, || Ok(graded(anderson_dual_homotopy(&borrow(g)?.0)?)))
}

/// The shift `t` in `[0, period)` with `π_k(g) ≅ π_{k-t}(reference)`.
///
/// # Safety
/// `g` must be a live graded handle.
#[no_mangle]
pub unsafe extern "C" fn kd_detect_shift(
    g: *const KdGraded,
    reference: KdReference,
    period: i64,
    out: *mut i64,
) -> KdStatus {
    guard(out, || {
        let g = &borrow(g)?.0;
        let (lo, hi) = g.window();
        let span = period.max(0);
        let (a, b) = (lo - span, hi + span);
        let r = match reference {
            KdReference::Ko => ko_groups(a, b),
            KdReference::Ku => ku_groups(a, b),
        };
        Ok(detect_shift_free_rank_one(g, &r, period)?)
    })
}

/// The `E_4` chart of the homotopy fixed point spectral sequence for `KO`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kd_hfpss_chart(format: KdChartFormat, out: *mut *mut c_char) -> KdStatus {
    guard(out, || {
        let (page, rule) = hfpss_ku(DEFAULT_HFPSS_WINDOW)?;
        let r = run(&page, &[rule], 4)?;
        let charts = Chart::from_run("hfpss-ku", &r, &[])?;
        let last = charts.last().expect("a run has at least one page");
        Ok(into_c_string(match format {
            KdChartFormat::Ascii => last.to_ascii(),
            KdChartFormat::Svg => last.to_svg(24),
        }))
    })
}
