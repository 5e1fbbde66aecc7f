//! C ABI over `opflab`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`-style
//! functions and released with the matching `*_free`. Every fallible call
//! returns an [`OpflabStatus`]; on failure a message is kept per thread and
//! can be read with [`opflab_last_error`]. Strings handed out by the library
//! must be released with [`opflab_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use opflab::cli::{self, Report};
use opflab::linalg::{CMat, CVec, C64};
use opflab::random::{random_opf, rng_from_seed};
use opflab::theories::star_by_name;
use opflab::{irreps, opf, Error, Ket, Opf};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpflabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    DimensionMismatch = 4,
    /// Input violates a physical constraint (Hermiticity, normalization, positivity, support).
    NotPhysical = 5,
    UnknownName = 6,
    BudgetExceeded = 7,
    /// Rank or stability diagnostics from a numerical routine.
    Numerical = 8,
    Io = 9,
    Panic = 10,
}

/// Unit vector in `C^d`.
pub struct OpflabKet(Ket);

/// Outcome-probability function of some degree on `C^d`.
pub struct OpflabOpf(Opf);

/// Result of a CLI-equivalent run.
pub struct OpflabReport(Report);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> OpflabStatus {
    match e {
        Error::DimensionMismatch { .. } | Error::ShapeMismatch(_) | Error::DegreeMismatch { .. } => {
            OpflabStatus::DimensionMismatch
        }
        Error::NotHermitian { .. }
        | Error::NotUnitary { .. }
        | Error::NotNormalized { .. }
        | Error::NotSymmetricSupported { .. }
        | Error::OutOfInterval { .. }
        | Error::NotNormalizedMeasurement { .. }
        | Error::InvalidDistribution(_)
        | Error::NotCompletelyPositive { .. }
        | Error::NotTracePreserving { .. }
        | Error::ZeroProbability { .. } => OpflabStatus::NotPhysical,
        Error::RankNotStabilized { .. } | Error::RankUnstable(..) | Error::RankDeficient { .. } => {
            OpflabStatus::Numerical
        }
        Error::UnknownName(_) => OpflabStatus::UnknownName,
        Error::BudgetExceeded(_) => OpflabStatus::BudgetExceeded,
        Error::Io(_) | Error::Serialization(_) => OpflabStatus::Io,
        Error::InvalidArgument(_) | Error::WeightMismatch(..) | Error::TooManyParts(..) => {
            OpflabStatus::InvalidArgument
        }
    }
}

/// Runs `body`, translating errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (OpflabStatus, String)>>(body: F) -> OpflabStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            OpflabStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            OpflabStatus::Panic
        }
    }
}

fn lib(e: Error) -> (OpflabStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (OpflabStatus, String) {
    (OpflabStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (OpflabStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (OpflabStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn complex_slice(re: *const f64, im: *const f64, len: usize) -> Result<Vec<C64>, (OpflabStatus, String)> {
    if re.is_null() {
        return Err(null("real part"));
    }
    let re = std::slice::from_raw_parts(re, len);
    let im = if im.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(im, len))
    };
    Ok((0..len).map(|i| C64::new(re[i], im.map_or(0.0, |v| v[i]))).collect())
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), (OpflabStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), (OpflabStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    let c = CString::new(s).map_err(|_| (OpflabStatus::InvalidArgument, "interior NUL".to_string()))?;
    *out = c.into_raw();
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn opflab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn opflab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `dim M_n^d`.
#[no_mangle]
pub extern "C" fn opflab_dim_mn(d: usize, n: usize) -> u64 {
    irreps::dim_mn(d, n)
}

/// `dim N_n^d`; zero when `d < 2`.
#[no_mangle]
pub extern "C" fn opflab_dim_nn(d: usize, n: usize) -> u64 {
    if d < 2 {
        return 0;
    }
    irreps::dim_nn(d, n)
}

/// Ket from `dim` amplitudes; `im` may be null for real amplitudes.
///
/// # Safety
/// `re` (and `im` if non-null) must point to `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opflab_ket_new(
    re: *const f64,
    im: *const f64,
    dim: usize,
    out: *mut *mut OpflabKet,
) -> OpflabStatus {
    guard(|| {
        let amps = CVec::from_vec(complex_slice(re, im, dim)?);
        let ket = Ket::new(amps).map_err(lib)?;
        write_out(out, OpflabKet(ket))
    })
}

/// # Safety
/// `ket` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn opflab_ket_free(ket: *mut OpflabKet) {
    if !ket.is_null() {
        drop(Box::from_raw(ket));
    }
}

/// OPF from a row-major `D × D` matrix with `D = d^n`.
///
/// # Safety
/// `re` (and `im` if non-null) must point to `D²` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opflab_opf_from_matrix(
    d: usize,
    n: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut OpflabOpf,
) -> OpflabStatus {
    guard(|| {
        let dim = d
            .checked_pow(n as u32)
            .filter(|&x| x > 0 && x as u64 <= cli::DIMENSION_BUDGET)
            .ok_or_else(|| {
                (
                    OpflabStatus::BudgetExceeded,
                    format!("d = {d}, n = {n} is out of range"),
                )
            })?;
        let entries = complex_slice(re, im, dim * dim)?;
        let m = CMat::from_row_slice(dim, dim, &entries);
        let f = Opf::from_matrix(d, n, m).map_err(lib)?;
        write_out(out, OpflabOpf(f))
    })
}

/// The unit OPF `P₊` of degree `n` on `C^d`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opflab_opf_unit(d: usize, n: usize, out: *mut *mut OpflabOpf) -> OpflabStatus {
    guard(|| {
        if d == 0 || n == 0 || d.checked_pow(n as u32).is_none_or(|x| x as u64 > cli::DIMENSION_BUDGET) {
            return Err((
                OpflabStatus::InvalidArgument,
                format!("d = {d}, n = {n} is out of range"),
            ));
        }
        write_out(out, OpflabOpf(Opf::unit(d, n)))
    })
}

/// Seeded random OPF of degree `n` on `C^d`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opflab_opf_random(seed: u64, d: usize, n: usize, out: *mut *mut OpflabOpf) -> OpflabStatus {
    guard(|| {
        if d == 0 || n == 0 || d.checked_pow(n as u32).is_none_or(|x| x as u64 > cli::DIMENSION_BUDGET) {
            return Err((
                OpflabStatus::InvalidArgument,
                format!("d = {d}, n = {n} is out of range"),
            ));
        }
        write_out(out, OpflabOpf(random_opf(&mut rng_from_seed(seed), d, n)))
    })
}

/// # Safety
/// `f` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn opflab_opf_free(f: *mut OpflabOpf) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Local dimension `d`, or zero for a null handle.
///
/// # Safety
/// `f` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn opflab_opf_dim(f: *const OpflabOpf) -> usize {
    f.as_ref().map_or(0, |f| f.0.d())
}

/// Degree `n`, or zero for a null handle.
///
/// # Safety
/// `f` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn opflab_opf_degree(f: *const OpflabOpf) -> usize {
    f.as_ref().map_or(0, |f| f.0.n())
}

/// `f(ψ)`.
///
/// # Safety
/// Handles must be live; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opflab_opf_evaluate(
    f: *const OpflabOpf,
    psi: *const OpflabKet,
    value: *mut f64,
) -> OpflabStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(|| null("opf"))?;
        let psi = psi.as_ref().ok_or_else(|| null("ket"))?;
        if value.is_null() {
            return Err(null("output pointer"));
        }
        *value = opf::evaluate(&f.0, &psi.0).map_err(lib)?;
        Ok(())
    })
}

/// `f ⋆ g` under the named star product (`"quantum"` or `"toy"`).
///
/// # Safety
/// Handles must be live, `star` a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn opflab_opf_star(
    star: *const c_char,
    f: *const OpflabOpf,
    g: *const OpflabOpf,
    out: *mut *mut OpflabOpf,
) -> OpflabStatus {
    guard(|| {
        let star = star_by_name(str_arg(star, "star name")?).map_err(lib)?;
        let f = f.as_ref().ok_or_else(|| null("first opf"))?;
        let g = g.as_ref().ok_or_else(|| null("second opf"))?;
        if f.0
            .d()
            .checked_mul(g.0.d())
            .and_then(|x| x.checked_pow(f.0.n() as u32))
            .is_none_or(|x| x as u64 > cli::DIMENSION_BUDGET)
        {
            return Err((OpflabStatus::BudgetExceeded, "joint dimension too large".into()));
        }
        let fg = star.star(&f.0, &g.0).map_err(lib)?;
        write_out(out, OpflabOpf(fg))
    })
}

/// JSON document of the OPF; release with [`opflab_string_free`].
///
/// # Safety
/// `f` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn opflab_opf_to_json(f: *const OpflabOpf, out: *mut *mut c_char) -> OpflabStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(|| null("opf"))?;
        write_string(out, opflab::json::to_pretty(&f.0).map_err(lib)?)
    })
}

/// Runs a subcommand given its argument vector (without the program name),
/// exactly as the `opflab` binary would, but returns the report instead of
/// printing it. A report whose checks fail is still `Ok`; query it with
/// [`opflab_report_passed`].
///
/// # Safety
/// `argv` must point to `argc` NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opflab_report_run(
    argv: *const *const c_char,
    argc: usize,
    out: *mut *mut OpflabReport,
) -> OpflabStatus {
    guard(|| {
        if argv.is_null() && argc > 0 {
            return Err(null("argv"));
        }
        let mut args = vec!["opflab".to_string()];
        for i in 0..argc {
            args.push(str_arg(*argv.add(i), "argument")?.to_string());
        }
        let report = cli::report_for_args(args).map_err(lib)?;
        write_out(out, OpflabReport(report))
    })
}

/// # Safety
/// `report` must be live and `passed` writable.
#[no_mangle]
pub unsafe extern "C" fn opflab_report_passed(report: *const OpflabReport, passed: *mut bool) -> OpflabStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        if passed.is_null() {
            return Err(null("output pointer"));
        }
        *passed = r.0.passed;
        Ok(())
    })
}

/// Number of check records in the report, or zero for a null handle.
///
/// # Safety
/// `report` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn opflab_report_len(report: *const OpflabReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.records.len())
}

/// Report as JSON (`table = false`) or aligned text.
///
/// # Safety
/// `report` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn opflab_report_render(
    report: *const OpflabReport,
    table: bool,
    out: *mut *mut c_char,
) -> OpflabStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        let format = if table { cli::Format::Table } else { cli::Format::Json };
        write_string(out, r.0.render(format).map_err(lib)?)
    })
}

/// # Safety
/// `report` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn opflab_report_free(report: *mut OpflabReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statuses_cover_errors() {
        assert_eq!(status_of(&Error::UnknownName("x".into())), OpflabStatus::UnknownName);
        assert_eq!(
            status_of(&Error::NotHermitian { deviation: 1.0 }),
            OpflabStatus::NotPhysical
        );
        assert_eq!(status_of(&Error::RankUnstable(1, 2)), OpflabStatus::Numerical);
    }

    #[test]
    fn panics_become_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, OpflabStatus::Panic);
    }
}
