//! C ABI for `spatfun-core`.
//!
//! Every fallible function returns a [`SpatfunStatus`]; results go through
//! out-pointers. The message of the last failure on the calling thread is
//! available from [`spatfun_last_error`]. Handles are opaque and must be
//! released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use spatfun_core::designs::{self, DesignFamilySpec, Growth, PointSet, Region};
use spatfun_core::funcspace::TimeGrid;
use spatfun_core::operators::{self, KernelOperator};
use spatfun_core::runner::{self, ExperimentConfig};
use spatfun_core::{bounds, spatcov, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatfunStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Io = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatfunRegion {
    Cube = 0,
    Ball = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatfunGrowthKind {
    /// `alpha_N = value`.
    Bounded = 0,
    /// `alpha_N = N^value`.
    Power = 1,
    /// `alpha_N = N^value ln N`.
    PowerLog = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatfunRateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Opaque set of sampling locations.
pub struct SpatfunPointSet {
    inner: PointSet,
}

/// Opaque symmetric kernel operator on a midpoint grid.
pub struct SpatfunOperator {
    inner: KernelOperator,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(SpatfunStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let mut root = &e;
        while let Error::Context { source, .. } = root {
            root = source;
        }
        let status = match root {
            Error::Io(_) => SpatfunStatus::Io,
            e if e.is_config() => SpatfunStatus::InvalidArgument,
            _ => SpatfunStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SpatfunStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(SpatfunStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SpatfunStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpatfunStatus::Ok,
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
            SpatfunStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(unsafe { std::slice::from_raw_parts(ptr, len) })
}

unsafe fn string(ptr: *const c_char, what: &str) -> Result<String, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map(str::to_owned)
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    unsafe { ptr.as_ref() }.ok_or_else(|| null(what))
}

/// Copies the last error message of this thread, NUL-terminated, into `buf`.
/// Returns the full message length excluding the terminator (0 when none),
/// so a return value `>= len` means the message was truncated.
#[no_mangle]
pub unsafe extern "C" fn spatfun_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                unsafe { *buf = 0 };
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Builds a point set from `n` points of dimension `dim`, row-major.
#[no_mangle]
pub unsafe extern "C" fn spatfun_pointset_new(
    dim: usize,
    coords: *const f64,
    n: usize,
    out: *mut *mut SpatfunPointSet,
) -> SpatfunStatus {
    guard(|| {
        let len = dim.checked_mul(n).ok_or_else(|| invalid("dim * n overflows"))?;
        let coords = unsafe { slice(coords, len, "coords") }?;
        let inner = PointSet::new(dim, coords.to_vec())?;
        unsafe { write(out, Box::into_raw(Box::new(SpatfunPointSet { inner }))) }
    })
}

/// Reads a point set from a CSV file with header `x1,...,xd`.
#[no_mangle]
pub unsafe extern "C" fn spatfun_pointset_load(path: *const c_char, out: *mut *mut SpatfunPointSet) -> SpatfunStatus {
    guard(|| {
        let path = PathBuf::from(unsafe { string(path, "path") }?);
        let inner = PointSet::load(&path)?;
        unsafe { write(out, Box::into_raw(Box::new(SpatfunPointSet { inner }))) }
    })
}

/// Regular grid design of `n` target points on the region scaled by `alpha_N`.
#[no_mangle]
pub unsafe extern "C" fn spatfun_grid_design(
    dim: usize,
    region: SpatfunRegion,
    growth: SpatfunGrowthKind,
    growth_value: f64,
    n: usize,
    out: *mut *mut SpatfunPointSet,
) -> SpatfunStatus {
    guard(|| {
        let region = match region {
            SpatfunRegion::Cube => Region::Cube,
            SpatfunRegion::Ball => Region::Ball,
        };
        let alpha = match growth {
            SpatfunGrowthKind::Bounded => Growth::Bounded { c: growth_value },
            SpatfunGrowthKind::Power => Growth::Power { beta: growth_value },
            SpatfunGrowthKind::PowerLog => Growth::PowerLog { beta: growth_value },
        };
        let inner = designs::grid_design(&DesignFamilySpec::regular(dim, region, alpha), n)?;
        unsafe { write(out, Box::into_raw(Box::new(SpatfunPointSet { inner }))) }
    })
}

#[no_mangle]
pub unsafe extern "C" fn spatfun_pointset_free(set: *mut SpatfunPointSet) {
    if !set.is_null() {
        drop(unsafe { Box::from_raw(set) });
    }
}

/// Number of points; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn spatfun_pointset_len(set: *const SpatfunPointSet) -> usize {
    unsafe { set.as_ref() }.map_or(0, |s| s.inner.len())
}

/// Dimension; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn spatfun_pointset_dim(set: *const SpatfunPointSet) -> usize {
    unsafe { set.as_ref() }.map_or(0, |s| s.inner.dim())
}

/// Largest fraction of points within distance `rho` of any one point.
#[no_mangle]
pub unsafe extern "C" fn spatfun_intensity(set: *const SpatfunPointSet, rho: f64, out: *mut f64) -> SpatfunStatus {
    guard(|| {
        let set = unsafe { handle(set, "point set") }?;
        if !(rho >= 0.0) {
            return Err(invalid(format!("rho must be >= 0, got {rho}")));
        }
        unsafe { write(out, designs::intensity(&set.inner, rho)) }
    })
}

/// Ordered pairs (including the diagonal) at distance at most `m`.
#[no_mangle]
pub unsafe extern "C" fn spatfun_pair_count(set: *const SpatfunPointSet, m: f64, out: *mut u64) -> SpatfunStatus {
    guard(|| {
        let set = unsafe { handle(set, "point set") }?;
        if !(m >= 0.0) {
            return Err(invalid(format!("m must be >= 0, got {m}")));
        }
        unsafe { write(out, designs::pair_count_b(&set.inner, m)) }
    })
}

/// Closed-form mean loss of the tent field on `N` equispaced points.
#[no_mangle]
pub unsafe extern "C" fn spatfun_exact_tent_loss(n: usize, alpha: f64, out: *mut f64) -> SpatfunStatus {
    guard(|| unsafe { write(out, bounds::exact_tent_loss(n, alpha)?) })
}

#[no_mangle]
pub unsafe extern "C" fn spatfun_f_lambda(lambda: f64, out: *mut f64) -> SpatfunStatus {
    guard(|| unsafe { write(out, spatcov::f_lambda(lambda)?) })
}

/// `cov(X^2, Y^2)` for jointly normal mean-zero `X, Y`.
#[no_mangle]
pub unsafe extern "C" fn spatfun_gaussian_sq_cov(sigma: f64, nu: f64, rho: f64, out: *mut f64) -> SpatfunStatus {
    guard(|| unsafe { write(out, spatcov::gaussian_sq_cov(sigma, nu, rho)?) })
}

/// Wraps a `grid_size x grid_size` row-major kernel on the midpoint grid.
#[no_mangle]
pub unsafe extern "C" fn spatfun_operator_new(
    grid_size: usize,
    kernel: *const f64,
    out: *mut *mut SpatfunOperator,
) -> SpatfunStatus {
    guard(|| {
        let grid = TimeGrid::new(grid_size)?;
        let len = grid_size
            .checked_mul(grid_size)
            .ok_or_else(|| invalid("grid_size^2 overflows"))?;
        let values = unsafe { slice(kernel, len, "kernel") }?;
        let inner = KernelOperator::from_row_major(grid, values)?;
        unsafe { write(out, Box::into_raw(Box::new(SpatfunOperator { inner }))) }
    })
}

#[no_mangle]
pub unsafe extern "C" fn spatfun_operator_free(op: *mut SpatfunOperator) {
    if !op.is_null() {
        drop(unsafe { Box::from_raw(op) });
    }
}

#[no_mangle]
pub unsafe extern "C" fn spatfun_operator_hs_norm(op: *const SpatfunOperator, out: *mut f64) -> SpatfunStatus {
    guard(|| {
        let op = unsafe { handle(op, "operator") }?;
        unsafe { write(out, operators::hs_norm(&op.inner)) }
    })
}

/// Writes the `k` largest eigenvalues, descending, into `values`.
#[no_mangle]
pub unsafe extern "C" fn spatfun_operator_eigenvalues(
    op: *const SpatfunOperator,
    k: usize,
    values: *mut f64,
) -> SpatfunStatus {
    guard(|| {
        let op = unsafe { handle(op, "operator") }?;
        if k > op.inner.grid().size() {
            return Err(invalid(format!("requested {k} eigenvalues from a rank-{} operator", op.inner.grid().size())));
        }
        if k == 0 {
            return Ok(());
        }
        if values.is_null() {
            return Err(null("values"));
        }
        let sys = operators::eigenpairs(&op.inner, 0)?;
        let out = unsafe { std::slice::from_raw_parts_mut(values, k) };
        out.copy_from_slice(&sys.values()[..k]);
        Ok(())
    })
}

/// Log-log least squares of `losses` on `xs`.
#[no_mangle]
pub unsafe extern "C" fn spatfun_rate_fit(
    xs: *const f64,
    losses: *const f64,
    n: usize,
    out: *mut SpatfunRateFit,
) -> SpatfunStatus {
    guard(|| {
        let xs = unsafe { slice(xs, n, "xs") }?;
        let losses = unsafe { slice(losses, n, "losses") }?;
        let fit = runner::rate_fit(xs, losses)?;
        unsafe {
            write(
                out,
                SpatfunRateFit {
                    slope: fit.slope,
                    intercept: fit.intercept,
                    r_squared: fit.r_squared,
                },
            )
        }
    })
}

/// Runs the experiment described by the JSON file at `config_path`, writing
/// its CSV outputs (and SVG plots when `svg` is nonzero) into `out_dir`.
#[no_mangle]
pub unsafe extern "C" fn spatfun_run_experiment(
    config_path: *const c_char,
    out_dir: *const c_char,
    svg: i32,
) -> SpatfunStatus {
    guard(|| {
        let config = PathBuf::from(unsafe { string(config_path, "config_path") }?);
        let out_dir = PathBuf::from(unsafe { string(out_dir, "out_dir") }?);
        let cfg = ExperimentConfig::load(&config)?;
        runner::execute(&cfg, &out_dir, svg != 0)?;
        Ok(())
    })
}
