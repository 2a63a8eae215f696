//! C ABI for the `hmmrd` solver.
//!
//! Objects are opaque heap handles created by `*_new`/`*_structured`/`*_load`
//! functions and released by the matching `*_free`. Every fallible function
//! returns an [`HmmrdStatus`]; on failure a message is available from
//! [`hmmrd_last_error_message`] on the same thread.

use hmmrd::diagnostics::{coercivity_constant, consistency_defect, limit_conformity_defect, scalar_sample, field_sample};
use hmmrd::mesh::load_mesh;
use hmmrd::solver::{initial_state, NewtonConfig, ProblemSpec, State, Stepper, TimeGrid};
use hmmrd::verify::{brusselator_problem, convergence_rate, relative_gradient_error, relative_value_error, ExactSolution};
use hmmrd::{BrusselatorParams, Error, HmmDiscretisation, PolytopalMesh};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HmmrdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    TopologyError = 4,
    NewtonDiverged = 5,
    LinearSolveFailed = 6,
    IoError = 7,
    BufferTooSmall = 8,
    Panic = 9,
    Other = 10,
}

/// Opaque mesh handle.
pub struct HmmrdMesh {
    mesh: Arc<PolytopalMesh>,
}

/// Opaque transient solver handle for the manufactured Brusselator problem.
pub struct HmmrdSolver {
    disc: HmmDiscretisation,
    spec: ProblemSpec,
    exact: ExactSolution,
    state: State,
    time: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HmmrdStatus {
    match e {
        Error::Parse { .. } => HmmrdStatus::ParseError,
        Error::Topology(_) | Error::DegenerateCell { .. } => HmmrdStatus::TopologyError,
        Error::NewtonDiverged { .. } => HmmrdStatus::NewtonDiverged,
        Error::LinearSolve(_) => HmmrdStatus::LinearSolveFailed,
        Error::Step { source, .. } | Error::Level { source, .. } => status_of(source),
        Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::Config { .. } | Error::ZeroDenominator => {
            HmmrdStatus::InvalidArgument
        }
        Error::Io(_) => HmmrdStatus::IoError,
        _ => HmmrdStatus::Other,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (HmmrdStatus, String)>>(f: F) -> HmmrdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HmmrdStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            HmmrdStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (HmmrdStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (HmmrdStatus, String) {
    (HmmrdStatus::NullPointer, format!("null pointer: {what}"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (HmmrdStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (HmmrdStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hmmrd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hmmrd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Structured triangulation of the unit square with `2 n^2` cells.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn hmmrd_mesh_structured(n: usize, out: *mut *mut HmmrdMesh) -> HmmrdStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let mesh = PolytopalMesh::structured_triangular(n).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(HmmrdMesh { mesh: Arc::new(mesh) }));
        Ok(())
    })
}

/// Mesh from the text format (`vertices N` / `cells M` blocks).
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hmmrd_mesh_load(text: *const c_char, out: *mut *mut HmmrdMesh) -> HmmrdStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        if text.is_null() {
            return Err(null("text"));
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| (HmmrdStatus::InvalidArgument, "mesh text is not UTF-8".to_string()))?;
        let mesh = load_mesh(s).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(HmmrdMesh { mesh: Arc::new(mesh) }));
        Ok(())
    })
}

/// # Safety
/// `mesh` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn hmmrd_mesh_free(mesh: *mut HmmrdMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// # Safety
/// `mesh` must be a live handle; the out pointers may be null to skip.
#[no_mangle]
pub unsafe extern "C" fn hmmrd_mesh_counts(
    mesh: *const HmmrdMesh,
    cells: *mut usize,
    faces: *mut usize,
    vertices: *mut usize,
) -> HmmrdStatus {
    guard(|| {
        let m = &deref(mesh, "mesh")?.mesh;
        if let Some(c) = cells.as_mut() {
            *c = m.num_cells();
        }
        if let Some(f) = faces.as_mut() {
            *f = m.num_faces();
        }
        if let Some(v) = vertices.as_mut() {
            *v = m.num_vertices();
        }
        Ok(())
    })
}

/// Largest cell diameter.
///
/// # Safety
/// `mesh` must be a live handle and `h` writable.
#[no_mangle]
pub unsafe extern "C" fn hmmrd_mesh_size(mesh: *const HmmrdMesh, h: *mut f64) -> HmmrdStatus {
    guard(|| {
        let m = &deref(mesh, "mesh")?.mesh;
        *deref_mut(h, "h")? = m.mesh_size();
        Ok(())
    })
}

/// Solver for the manufactured Brusselator problem on `mesh`, at `t = 0`.
/// The mesh handle may be freed afterwards.
///
/// # Safety
/// `mesh` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hmmrd_solver_new(
    mesh: *const HmmrdMesh,
    a: f64,
    b: f64,
    mu1: f64,
    mu2: f64,
    out: *mut *mut HmmrdSolver,
) -> HmmrdStatus {
    guard(|| {
        let m = deref(mesh, "mesh")?.mesh.clone();
        let out = deref_mut(out, "out")?;
        let (mut spec, exact) = brusselator_problem();
        spec.kinetics = hmmrd::brusselator(BrusselatorParams { a, b });
        spec.mu1 = mu1;
        spec.mu2 = mu2;
        spec.validate().map_err(lib_err)?;
        let disc = HmmDiscretisation::new(m);
        let state = initial_state(&disc, &spec);
        *out = Box::into_raw(Box::new(HmmrdSolver {
            disc,
            spec,
            exact,
            state,
            time: 0.0,
        }));
        Ok(())
    })
}

/// # Safety
/// `solver` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn hmmrd_solver_free(solver: *mut HmmrdSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Advances by `steps` implicit Euler steps of length `dt`. On failure the
/// solver keeps the last successful level.
///
/// # Safety
/// `solver` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hmmrd_solver_advance(solver: *mut HmmrdSolver, dt: f64, steps: usize) -> HmmrdStatus {
    guard(|| {
        let s = deref_mut(solver, "solver")?;
        if !(dt > 0.0) {
            return Err((HmmrdStatus::InvalidArgument, format!("dt must be positive, got {dt}")));
        }
        let mut stepper = Stepper::new(&s.disc, &s.spec, NewtonConfig::default()).map_err(lib_err)?;
        for k in 0..steps {
            let t = s.time + dt;
            let (next, _) = stepper.advance(&s.state, t, dt).map_err(|e| {
                lib_err(Error::Step {
                    level: k + 1,
                    time: t,
                    source: Box::new(e),
                })
            })?;
            s.state = next;
            s.time = t;
        }
        Ok(())
    })
}

/// Runs from the current time to `t_final` with steps of about `dt`.
///
/// # Safety
/// `solver` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hmmrd_solver_run(solver: *mut HmmrdSolver, dt: f64, t_final: f64) -> HmmrdStatus {
    let (t0, ok) = match solver.as_ref() {
        Some(s) => (s.time, true),
        None => (0.0, false),
    };
    if !ok {
        set_error("null pointer: solver".into());
        return HmmrdStatus::NullPointer;
    }
    if !(t_final > t0) || !(dt > 0.0) {
        set_error(format!("need dt > 0 and t_final > current time {t0}"));
        return HmmrdStatus::InvalidArgument;
    }
    let steps = match TimeGrid::with_step(dt, t_final - t0) {
        Ok(g) => g.num_steps(),
        Err(e) => {
            set_error(e.to_string());
            return status_of(&e);
        }
    };
    let h = (t_final - t0) / steps as f64;
    let status = hmmrd_solver_advance(solver, h, steps);
    if status == HmmrdStatus::Ok {
        // remove accumulated round-off in the clock
        (*solver).time = t_final;
    }
    status
}

/// # Safety
/// `solver` must be a live handle and `t` writable.
#[no_mangle]
pub unsafe extern "C" fn hmmrd_solver_time(solver: *const HmmrdSolver, t: *mut f64) -> HmmrdStatus {
    guard(|| {
        *deref_mut(t, "t")? = deref(solver, "solver")?.time;
        Ok(())
    })
}

/// Relative errors against the manufactured solution at the current time.
///
/// # Safety
/// `solver` must be a live handle; out pointers may be null to skip.
#[no_mangle]
pub unsafe extern "C" fn hmmrd_solver_errors(
    solver: *const HmmrdSolver,
    err_u: *mut f64,
    err_v: *mut f64,
    err_grad_u: *mut f64,
    err_grad_v: *mut f64,
) -> HmmrdStatus {
    guard(|| {
        let s = deref(solver, "solver")?;
        let (t, mesh, ex) = (s.time, s.disc.mesh(), &s.exact);
        let vals = [
            relative_value_error(mesh, &s.state.u, |p| (ex.u)(p, t)),
            relative_value_error(mesh, &s.state.v, |p| (ex.v)(p, t)),
            relative_gradient_error(&s.disc, &s.state.u, |p| (ex.grad_u)(p, t)),
            relative_gradient_error(&s.disc, &s.state.v, |p| (ex.grad_v)(p, t)),
        ];
        for (ptr, v) in [err_u, err_v, err_grad_u, err_grad_v].into_iter().zip(vals) {
            let v = v.map_err(lib_err)?;
            if let Some(p) = ptr.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Copies the cell values of species `species` (0 = u, 1 = v) into `buf`.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hmmrd_solver_cell_values(
    solver: *const HmmrdSolver,
    species: u32,
    buf: *mut f64,
    len: usize,
) -> HmmrdStatus {
    guard(|| {
        let s = deref(solver, "solver")?;
        let cells = match species {
            0 => &s.state.u.cells,
            1 => &s.state.v.cells,
            _ => return Err((HmmrdStatus::InvalidArgument, format!("species must be 0 or 1, got {species}"))),
        };
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < cells.len() {
            return Err((
                HmmrdStatus::BufferTooSmall,
                format!("buffer holds {len} values, need {}", cells.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, cells.len()).copy_from_slice(cells);
        Ok(())
    })
}

/// Coercivity constant, consistency defect of `sin(pi x) sin(pi y)` and
/// limit-conformity defect of `(x, 0)` on `mesh`.
///
/// # Safety
/// `mesh` must be a live handle; out pointers may be null to skip.
#[no_mangle]
pub unsafe extern "C" fn hmmrd_diagnose(
    mesh: *const HmmrdMesh,
    c_d: *mut f64,
    s_d: *mut f64,
    w_d: *mut f64,
) -> HmmrdStatus {
    guard(|| {
        let m = deref(mesh, "mesh")?.mesh.clone();
        let disc = HmmDiscretisation::new(m);
        if let Some(p) = c_d.as_mut() {
            *p = coercivity_constant(&disc).map_err(lib_err)?.value;
        }
        if let Some(p) = s_d.as_mut() {
            let s = scalar_sample("sinsin").map_err(lib_err)?;
            *p = consistency_defect(&disc, s.value, s.gradient).total();
        }
        if let Some(p) = w_d.as_mut() {
            let f = field_sample("x0").map_err(lib_err)?;
            *p = limit_conformity_defect(&disc, f.field, f.divergence).map_err(lib_err)?;
        }
        Ok(())
    })
}

/// `log(e_coarse / e_fine) / log(h_coarse / h_fine)`
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hmmrd_convergence_rate(
    e_coarse: f64,
    e_fine: f64,
    h_coarse: f64,
    h_fine: f64,
    out: *mut f64,
) -> HmmrdStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = convergence_rate(e_coarse, e_fine, h_coarse, h_fine).map_err(lib_err)?;
        Ok(())
    })
}
