//! C interface to `projective_dpt`.
//!
//! Grids, tensor fields and solved flows are opaque handles. Each handle
//! comes from a constructor and must be released with the matching `_free`.
//! Fallible calls return a [`PdptStatus`]; after a failure,
//! [`pdpt_last_error`] describes it until the next failure on the same thread.
//!
//! Tensors cross the boundary packed: the upper triangle of the
//! `(d+1) x (d+1)` matrix in row order, `(d+1)(d+2)/2` doubles per cell.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::{ptr, slice};

use projective_dpt::cli::config::{Problem, UserCatalog};
use projective_dpt::euler::{functionals, mass_momentum_tensor, Flow};
use projective_dpt::io::FieldDump;
use projective_dpt::linalg::{self, Mat};
use projective_dpt::projective::{push_forward, push_forward_value, ProjectiveMap};
use projective_dpt::tensor_field::{discrete_divergence, positivity_report};
use projective_dpt::{Axis, Error, GridSpec, SymTensorField};

/// Result of a fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// `1 + alpha t` is not positive somewhere it is needed.
    DegenerateMap = 3,
    OutOfDomain = 4,
    Numerical = 5,
    Io = 6,
    Format = 7,
    /// A Rust panic was caught at the boundary.
    Panic = 8,
}

/// A space-time grid `[t_lo, t_hi] x prod [x_lo, x_hi]` of cell centers.
pub struct PdptGrid(GridSpec);

/// A symmetric tensor field sampled on a grid.
pub struct PdptTensorField(SymTensorField);

/// A solved gas flow with its stored time levels.
pub struct PdptFlow(Flow);

/// Global quantities of one stored flow level.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PdptFunctionals {
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
    /// `int rho |x|^2 / 2`
    pub inertia: f64,
    /// `int p`
    pub pressure: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(PdptStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DegenerateMap { .. } | Error::OutsideCone { .. } => PdptStatus::DegenerateMap,
            Error::OutOfDomain { .. }
            | Error::SingularPoint
            | Error::SupportNearBoundary { .. }
            | Error::SupportLeftDomain { .. } => PdptStatus::OutOfDomain,
            Error::SingularMatrix { .. }
            | Error::DivergenceCheck { .. }
            | Error::NotPositive { .. }
            | Error::CflViolation { .. }
            | Error::SingularTrajectory { .. }
            | Error::Integrator(_) => PdptStatus::Numerical,
            Error::Io(_) => PdptStatus::Io,
            Error::Format(_) => PdptStatus::Format,
            _ => PdptStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(PdptStatus::InvalidArgument, msg.into())
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, turning errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PdptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PdptStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            PdptStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(PdptStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(PdptStatus::NullPointer, format!("{what} is NULL")));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure(PdptStatus::NullPointer, format!("{what} is NULL")));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(PdptStatus::NullPointer, "output handle pointer is NULL".into()));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure(PdptStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(s).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Message of the last failure on this thread, or NULL. Release it with
/// [`pdpt_string_free`].
#[no_mangle]
pub extern "C" fn pdpt_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |s| s.clone().into_raw()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pdpt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pdpt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a grid with `n_t` time cells on `[t_lo, t_hi]` and, for each of
/// the `d` space axes, `n_x[k]` cells on `[x_lo[k], x_hi[k]]`.
///
/// # Safety
/// The three arrays must hold `d` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdpt_grid_new(
    t_lo: f64,
    t_hi: f64,
    n_t: usize,
    d: usize,
    x_lo: *const f64,
    x_hi: *const f64,
    n_x: *const usize,
    out: *mut *mut PdptGrid,
) -> PdptStatus {
    guard(|| {
        if d == 0 {
            return Err(invalid("need at least one space axis"));
        }
        let (lo, hi, n) = (input(x_lo, d, "x_lo")?, input(x_hi, d, "x_hi")?, input(n_x, d, "n_x")?);
        let x = (0..d).map(|k| Axis::new(lo[k], hi[k], n[k])).collect::<Result<Vec<_>, _>>()?;
        put(out, PdptGrid(GridSpec::new(Axis::new(t_lo, t_hi, n_t)?, x)?))
    })
}

/// # Safety
/// `grid` must be NULL or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pdpt_grid_free(grid: *mut PdptGrid) {
    free(grid)
}

/// Number of cells, or 0 for NULL.
///
/// # Safety
/// `grid` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdpt_grid_cells(grid: *const PdptGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.len())
}

/// Space dimension `d`, or 0 for NULL.
///
/// # Safety
/// `grid` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdpt_grid_dimension(grid: *const PdptGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.d())
}

/// Writes the `d + 1` coordinates `(t, x)` of cell `cell` to `point`.
///
/// # Safety
/// `point` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pdpt_grid_center(
    grid: *const PdptGrid,
    cell: usize,
    point: *mut f64,
    len: usize,
) -> PdptStatus {
    guard(|| {
        let g = &deref(grid, "grid")?.0;
        if cell >= g.len() || len != g.n() {
            return Err(invalid(format!("need cell < {} and len = {}", g.len(), g.n())));
        }
        output(point, len, "point")?.copy_from_slice(&g.center(cell));
        Ok(())
    })
}

/// Builds a field from packed cell values, `cells * (d+1)(d+2)/2` doubles.
///
/// # Safety
/// `data` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pdpt_field_from_packed(
    grid: *const PdptGrid,
    data: *const f64,
    len: usize,
    out: *mut *mut PdptTensorField,
) -> PdptStatus {
    guard(|| {
        let g = deref(grid, "grid")?.0.clone();
        let data = input(data, len, "data")?.to_vec();
        put(out, PdptTensorField(SymTensorField::from_packed(g, data)?))
    })
}

/// Samples a field by calling `f` at every cell center, in cell order, on
/// the calling thread. `f` receives the `n = d + 1` coordinates of the
/// point, fills `packed` and returns 0; any other value aborts.
///
/// # Safety
/// `f` must write `(d+1)(d+2)/2` doubles to `packed`; `user` is passed through.
#[no_mangle]
pub unsafe extern "C" fn pdpt_field_sample(
    grid: *const PdptGrid,
    f: Option<extern "C" fn(point: *const f64, n: usize, packed: *mut f64, user: *mut c_void) -> i32>,
    user: *mut c_void,
    out: *mut *mut PdptTensorField,
) -> PdptStatus {
    guard(|| {
        let g = &deref(grid, "grid")?.0;
        let f = f.ok_or_else(|| Failure(PdptStatus::NullPointer, "callback is NULL".into()))?;
        let (n, p) = (g.n(), packed_len(g.n()));
        let mut data = vec![0.0; g.len() * p];
        for (c, chunk) in data.chunks_mut(p).enumerate() {
            let point = g.center(c);
            let code = f(point.as_ptr(), n, chunk.as_mut_ptr(), user);
            if code != 0 {
                return Err(invalid(format!("callback returned {code} at cell {c}")));
            }
        }
        put(out, PdptTensorField(SymTensorField::from_packed(g.clone(), data)?))
    })
}

/// # Safety
/// `field` must be NULL or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pdpt_field_free(field: *mut PdptTensorField) {
    free(field)
}

/// Number of cells, or 0 for NULL.
///
/// # Safety
/// `field` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdpt_field_cells(field: *const PdptTensorField) -> usize {
    field.as_ref().map_or(0, |f| f.0.grid().len())
}

/// Packed doubles per cell, `(d+1)(d+2)/2`, or 0 for NULL.
///
/// # Safety
/// `field` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdpt_field_components(field: *const PdptTensorField) -> usize {
    field.as_ref().map_or(0, |f| packed_len(f.0.n()))
}

/// Copies all packed values; `len` must equal cells times components.
///
/// # Safety
/// `data` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pdpt_field_copy_packed(
    field: *const PdptTensorField,
    data: *mut f64,
    len: usize,
) -> PdptStatus {
    guard(|| {
        let src = deref(field, "field")?.0.packed();
        if len != src.len() {
            return Err(invalid(format!("buffer holds {len} doubles, field has {}", src.len())));
        }
        output(data, len, "data")?.copy_from_slice(src);
        Ok(())
    })
}

/// A new handle to a copy of the field's grid.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdpt_field_grid(field: *const PdptTensorField, out: *mut *mut PdptGrid) -> PdptStatus {
    guard(|| put(out, PdptGrid(deref(field, "field")?.0.grid().clone())))
}

/// Push-forward under `(t, x) -> (t, x) / (1 + alpha t)`, sampled on the
/// image grid with the same cell counts.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdpt_field_push_forward(
    field: *const PdptTensorField,
    alpha: f64,
    out: *mut *mut PdptTensorField,
) -> PdptStatus {
    guard(|| {
        let s = &deref(field, "field")?.0;
        put(out, PdptTensorField(push_forward(s, &ProjectiveMap::new(alpha)?)?))
    })
}

/// Measure norm of the discrete row-wise divergence.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdpt_field_divergence_norm(field: *const PdptTensorField, out: *mut f64) -> PdptStatus {
    guard(|| {
        let v = discrete_divergence(&deref(field, "field")?.0)?.measure_norm().value();
        *output(out, 1, "out")?.first_mut().unwrap() = v;
        Ok(())
    })
}

/// Smallest eigenvalue over all cells.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdpt_field_min_eigenvalue(field: *const PdptTensorField, out: *mut f64) -> PdptStatus {
    guard(|| {
        let v = positivity_report(&deref(field, "field")?.0, 0.0).min_eigenvalue;
        *output(out, 1, "out")?.first_mut().unwrap() = v;
        Ok(())
    })
}

/// Writes the field in the binary dump format.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn pdpt_field_save(field: *const PdptTensorField, path: *const c_char) -> PdptStatus {
    guard(|| {
        let s = &deref(field, "field")?.0;
        Ok(FieldDump::from(s).save(PathBuf::from(text(path, "path")?))?)
    })
}

/// Reads a field written by [`pdpt_field_save`] or the command line tool.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdpt_field_load(path: *const c_char, out: *mut *mut PdptTensorField) -> PdptStatus {
    guard(|| {
        let dump = FieldDump::load(PathBuf::from(text(path, "path")?))?;
        put(out, PdptTensorField(SymTensorField::try_from(dump)?))
    })
}

/// Transforms one tensor value at the space-time point `point` (`n`
/// coordinates). Writes the image point and the packed image tensor.
///
/// # Safety
/// `point` and `point_out` hold `n` doubles, `packed` and `packed_out`
/// hold `n(n+1)/2`.
#[no_mangle]
pub unsafe extern "C" fn pdpt_push_forward_value(
    alpha: f64,
    point: *const f64,
    n: usize,
    packed: *const f64,
    point_out: *mut f64,
    packed_out: *mut f64,
) -> PdptStatus {
    guard(|| {
        if n < 2 {
            return Err(invalid("need n = d + 1 >= 2 coordinates"));
        }
        let p = input(point, n, "point")?;
        let s = linalg::unpack(n, input(packed, packed_len(n), "packed")?);
        let (q, sb): (Vec<f64>, Mat) = push_forward_value(&ProjectiveMap::new(alpha)?, p, &s)?;
        output(point_out, n, "point_out")?.copy_from_slice(&q);
        linalg::pack_into(&sb, output(packed_out, packed_len(n), "packed_out")?);
        Ok(())
    })
}

/// Solves the problem described by `json`, using the same schema as the
/// `problem` block of a campaign file.
///
/// # Safety
/// `json` must be a NUL-terminated UTF-8 string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdpt_flow_solve_json(json: *const c_char, out: *mut *mut PdptFlow) -> PdptStatus {
    guard(|| {
        let problem: Problem =
            serde_json::from_str(text(json, "json")?).map_err(|e| invalid(format!("problem: {e}")))?;
        put(out, PdptFlow(problem.solve(&UserCatalog::default())?))
    })
}

/// # Safety
/// `flow` must be NULL or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pdpt_flow_free(flow: *mut PdptFlow) {
    free(flow)
}

/// Number of stored time levels, or 0 for NULL.
///
/// # Safety
/// `flow` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdpt_flow_levels(flow: *const PdptFlow) -> usize {
    flow.as_ref().map_or(0, |f| f.0.n_levels())
}

/// Global quantities at stored level `level`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdpt_flow_functionals(
    flow: *const PdptFlow,
    level: usize,
    out: *mut PdptFunctionals,
) -> PdptStatus {
    guard(|| {
        let f = &deref(flow, "flow")?.0;
        if level >= f.n_levels() {
            return Err(invalid(format!("level {level} out of range 0..{}", f.n_levels())));
        }
        let g = functionals(f);
        let v = PdptFunctionals {
            time: g.t[level],
            mass: g.mass[level],
            energy: g.energy[level],
            inertia: g.inertia[level],
            pressure: g.pressure[level],
        };
        *output(out, 1, "out")?.first_mut().unwrap() = v;
        Ok(())
    })
}

/// The space-time mass-momentum tensor of the flow on its level grid.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pdpt_flow_tensor(flow: *const PdptFlow, out: *mut *mut PdptTensorField) -> PdptStatus {
    guard(|| put(out, PdptTensorField(mass_momentum_tensor(&deref(flow, "flow")?.0)?)))
}
