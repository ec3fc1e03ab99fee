//! C interface to the projflow solver.
//!
//! Objects are opaque handles created by `pf_*_new`-style constructors and
//! released with the matching `pf_*_free`. Every fallible call returns a
//! [`PfStatus`]; the message of the last failure on the calling thread is
//! available from [`pf_last_error_message`].
//!
//! Field arrays exchanged with the caller hold interior values only, `x`
//! fastest: element `(i, j)` of an `nx x ny` interior lives at `j * nx + i`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use projflow::cases::{cavity, cavity_first_step, chamber, chamber_first_step, manufactured_neumann, ChamberSpec};
use projflow::field::Field;
use projflow::flow::{derived_fields, StepError, TimeStepParams};
use projflow::sim::Simulation;
use projflow::solvers::{solve, Method, MultigridConfig, Norm, PoissonProblem, SolverConfig, SolverError};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The iteration stopped at its limit; outputs are still written.
    NotConverged = 3,
    SolverFailure = 4,
    StepFailure = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PfMethod {
    Jacobi = 0,
    GaussSeidel = 1,
    Sor = 2,
    SlorA = 3,
    SlorB = 4,
    Adi = 5,
    Multigrid = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PfNorm {
    MaxChange = 0,
    ResidualL2 = 1,
    ResidualMax = 2,
}

/// Flow quantities readable from a simulation.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PfField {
    Pressure = 0,
    U = 1,
    V = 2,
    Stream = 3,
    Vorticity = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PfSolverConfig {
    pub method: PfMethod,
    pub omega: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub norm: PfNorm,
    /// 0 coarsens as far as the grid allows.
    pub mg_levels: usize,
    pub mg_pre_smooth: usize,
    pub mg_post_smooth: usize,
    pub mg_coarse_sweeps: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PfSolveStats {
    pub iterations: usize,
    pub work_units: f64,
    pub wall_clock_s: f64,
    pub final_error: f64,
    pub converged: bool,
}

/// Pressure Poisson problem.
pub struct PfPoisson {
    problem: PoissonProblem,
}

/// Time-marching flow simulation.
pub struct PfSimulation {
    sim: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: PfStatus, msg: impl Into<String>) -> PfStatus {
    set_error(msg);
    status
}

/// Runs `f`, mapping panics to [`PfStatus::Panic`].
fn guard(f: impl FnOnce() -> PfStatus) -> PfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            fail(PfStatus::Panic, msg)
        }
    }
}

fn solver_status(e: SolverError) -> PfStatus {
    match e {
        SolverError::InvalidConfiguration(_) | SolverError::ShapeMismatch { .. } => {
            fail(PfStatus::InvalidArgument, e.to_string())
        }
        other => fail(PfStatus::SolverFailure, other.to_string()),
    }
}

fn step_status(e: StepError) -> PfStatus {
    match e {
        StepError::InvalidConfiguration(_) | StepError::Grid(_) => fail(PfStatus::InvalidArgument, e.to_string()),
        StepError::Solver(s) => solver_status(s),
        StepError::PoissonNotConverged { .. } => fail(PfStatus::NotConverged, e.to_string()),
        other => fail(PfStatus::StepFailure, other.to_string()),
    }
}

impl From<PfMethod> for Method {
    fn from(m: PfMethod) -> Self {
        match m {
            PfMethod::Jacobi => Method::Jacobi,
            PfMethod::GaussSeidel => Method::GaussSeidel,
            PfMethod::Sor => Method::Sor,
            PfMethod::SlorA => Method::SlorA,
            PfMethod::SlorB => Method::SlorB,
            PfMethod::Adi => Method::Adi,
            PfMethod::Multigrid => Method::Multigrid,
        }
    }
}

impl From<PfNorm> for Norm {
    fn from(n: PfNorm) -> Self {
        match n {
            PfNorm::MaxChange => Norm::MaxChange,
            PfNorm::ResidualL2 => Norm::ResidualL2,
            PfNorm::ResidualMax => Norm::ResidualMax,
        }
    }
}

impl From<&PfSolverConfig> for SolverConfig {
    fn from(c: &PfSolverConfig) -> Self {
        SolverConfig {
            method: c.method.into(),
            omega: c.omega,
            tol: c.tol,
            max_iter: c.max_iter,
            norm: c.norm.into(),
            multigrid: MultigridConfig {
                levels: (c.mg_levels > 0).then_some(c.mg_levels),
                pre_smooth: c.mg_pre_smooth,
                post_smooth: c.mg_post_smooth,
                coarse_sweeps: c.mg_coarse_sweeps,
            },
        }
    }
}

/// Default settings for `method`.
#[no_mangle]
pub extern "C" fn pf_solver_config_default(method: PfMethod) -> PfSolverConfig {
    let d = SolverConfig::new(method.into());
    PfSolverConfig {
        method,
        omega: d.omega,
        tol: d.tol,
        max_iter: d.max_iter,
        norm: PfNorm::MaxChange,
        mg_levels: 0,
        mg_pre_smooth: d.multigrid.pre_smooth,
        mg_post_smooth: d.multigrid.post_smooth,
        mg_coarse_sweeps: d.multigrid.coarse_sweeps,
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> PfStatus {
    *out = Box::into_raw(Box::new(value));
    PfStatus::Ok
}

fn poisson_ctor(out: *mut *mut PfPoisson, build: impl FnOnce() -> Result<PoissonProblem, PfStatus>) -> PfStatus {
    guard(|| {
        if out.is_null() {
            return fail(PfStatus::NullPointer, "output handle pointer is null");
        }
        match build() {
            Ok(problem) => unsafe { emit(out, PfPoisson { problem }) },
            Err(s) => s,
        }
    })
}

/// First pressure problem of the unit lid-driven cavity with `n x n` cells.
///
/// # Safety
/// `out` must be valid for writing a handle pointer.
#[no_mangle]
pub unsafe extern "C" fn pf_poisson_cavity_first_step(n: usize, re: f64, out: *mut *mut PfPoisson) -> PfStatus {
    poisson_ctor(out, || cavity_first_step(n, re).map_err(step_status))
}

/// First pressure problem of the default chamber.
///
/// # Safety
/// `out` must be valid for writing a handle pointer.
#[no_mangle]
pub unsafe extern "C" fn pf_poisson_chamber_first_step(re: f64, out: *mut *mut PfPoisson) -> PfStatus {
    poisson_ctor(out, || chamber_first_step(re).map_err(step_status))
}

/// Zero-gradient manufactured problem with `nodes` grid lines per side.
///
/// # Safety
/// `out` must be valid for writing a handle pointer.
#[no_mangle]
pub unsafe extern "C" fn pf_poisson_manufactured(nodes: usize, out: *mut *mut PfPoisson) -> PfStatus {
    poisson_ctor(out, || manufactured_neumann(nodes).map(|p| p.0).map_err(solver_status))
}

/// Zero-gradient problem on an `nx x ny` rectangle from interior source values.
///
/// # Safety
/// `rhs` must point to `nx * ny` readable values and `out` must be valid for
/// writing a handle pointer.
#[no_mangle]
pub unsafe extern "C" fn pf_poisson_neumann(
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    rhs: *const f64,
    out: *mut *mut PfPoisson,
) -> PfStatus {
    poisson_ctor(out, || {
        if rhs.is_null() {
            return Err(fail(PfStatus::NullPointer, "rhs is null"));
        }
        if nx == 0 || ny == 0 {
            return Err(fail(PfStatus::InvalidArgument, "need at least one cell per direction"));
        }
        let values = std::slice::from_raw_parts(rhs, nx * ny);
        let field = Field::from_fn(nx + 2, ny + 2, |i, j| {
            if i >= 1 && j >= 1 && i <= nx && j <= ny {
                values[(j - 1) * nx + (i - 1)]
            } else {
                0.0
            }
        });
        PoissonProblem::neumann_rect(nx, ny, dx, dy, field).map_err(solver_status)
    })
}

/// Interior cell counts of a problem.
///
/// # Safety
/// `problem` must be a live handle; `nx` and `ny` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_poisson_shape(problem: *const PfPoisson, nx: *mut usize, ny: *mut usize) -> PfStatus {
    guard(|| {
        if problem.is_null() || nx.is_null() || ny.is_null() {
            return fail(PfStatus::NullPointer, "null argument");
        }
        let (m, n) = (*problem).problem.shape();
        *nx = m - 2;
        *ny = n - 2;
        PfStatus::Ok
    })
}

fn copy_interior(f: &Field, out: *mut f64, len: usize) -> PfStatus {
    let (nx, ny) = (f.m() - 2, f.n() - 2);
    if len < nx * ny {
        return fail(PfStatus::BufferTooSmall, format!("need {} values, buffer holds {len}", nx * ny));
    }
    let dst = unsafe { std::slice::from_raw_parts_mut(out, nx * ny) };
    for j in 0..ny {
        for i in 0..nx {
            dst[j * nx + i] = f[(i + 1, j + 1)];
        }
    }
    PfStatus::Ok
}

/// Solves from a zero initial guess. `solution` receives the interior
/// pressure when not null; `stats` receives the iteration summary when not
/// null. Returns [`PfStatus::NotConverged`] if the iteration limit was hit.
///
/// # Safety
/// `problem` and `config` must be valid; `solution`, if not null, must be
/// writable for `len` values; `stats`, if not null, must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_poisson_solve(
    problem: *const PfPoisson,
    config: *const PfSolverConfig,
    solution: *mut f64,
    len: usize,
    stats: *mut PfSolveStats,
) -> PfStatus {
    guard(|| {
        if problem.is_null() || config.is_null() {
            return fail(PfStatus::NullPointer, "null problem or config");
        }
        let sol = match solve(&(*problem).problem, &SolverConfig::from(&*config), None) {
            Ok(s) => s,
            Err(e) => return solver_status(e),
        };
        if !solution.is_null() {
            let s = copy_interior(&sol.p, solution, len);
            if s != PfStatus::Ok {
                return s;
            }
        }
        if !stats.is_null() {
            *stats = PfSolveStats {
                iterations: sol.trace.iterations,
                work_units: sol.trace.work_units,
                wall_clock_s: sol.trace.wall_clock_s,
                final_error: sol.trace.final_error().unwrap_or(0.0),
                converged: sol.trace.converged,
            };
        }
        if sol.trace.converged {
            PfStatus::Ok
        } else {
            fail(PfStatus::NotConverged, format!("not converged after {} iterations", sol.trace.iterations))
        }
    })
}

/// Releases a problem handle; null is ignored.
///
/// # Safety
/// `problem` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pf_poisson_free(problem: *mut PfPoisson) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

fn sim_ctor(out: *mut *mut PfSimulation, build: impl FnOnce() -> Result<Simulation, StepError>) -> PfStatus {
    guard(|| {
        if out.is_null() {
            return fail(PfStatus::NullPointer, "output handle pointer is null");
        }
        match build() {
            Ok(sim) => unsafe { emit(out, PfSimulation { sim }) },
            Err(e) => step_status(e),
        }
    })
}

/// Lid-driven cavity of `lx x ly` with `nx x ny` cells, lid speed `vw` and
/// `dt = sigma Re h^2`. Time steps beyond the stability limit are refused.
///
/// # Safety
/// `config` must be valid and `out` writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn pf_simulation_cavity(
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    vw: f64,
    re: f64,
    sigma: f64,
    config: *const PfSolverConfig,
    out: *mut *mut PfSimulation,
) -> PfStatus {
    if config.is_null() {
        return fail(PfStatus::NullPointer, "config is null");
    }
    let solver = SolverConfig::from(&*config);
    sim_ctor(out, || {
        let (grid, bcs) = cavity(nx, ny, lx, ly, vw)?;
        let params = TimeStepParams::from_sigma(re, sigma, &grid, 0);
        Simulation::new(grid, bcs, params, solver)
    })
}

/// Default chamber with inflow speed `inlet_speed`.
///
/// # Safety
/// `config` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pf_simulation_chamber(
    inlet_speed: f64,
    re: f64,
    sigma: f64,
    config: *const PfSolverConfig,
    out: *mut *mut PfSimulation,
) -> PfStatus {
    if config.is_null() {
        return fail(PfStatus::NullPointer, "config is null");
    }
    let solver = SolverConfig::from(&*config);
    sim_ctor(out, || {
        let case = chamber(&ChamberSpec {
            inlet_speed,
            ..ChamberSpec::default()
        })?;
        let params = TimeStepParams::from_sigma(re, sigma, &case.grid, 0);
        Simulation::new(case.grid, case.bcs, params, solver)
    })
}

/// Advances `steps` time steps. Stops at the first failure.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pf_simulation_step(sim: *mut PfSimulation, steps: usize) -> PfStatus {
    guard(|| {
        if sim.is_null() {
            return fail(PfStatus::NullPointer, "simulation is null");
        }
        let sim = &mut (*sim).sim;
        for _ in 0..steps {
            if let Err(e) = sim.step() {
                return step_status(e);
            }
        }
        PfStatus::Ok
    })
}

/// Elapsed simulated time, or NaN for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pf_simulation_time(sim: *const PfSimulation) -> f64 {
    sim.as_ref().map_or(f64::NAN, |s| s.sim.time())
}

/// Cell-centre `u` at the monitor cell, or NaN for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pf_simulation_monitor(sim: *const PfSimulation) -> f64 {
    sim.as_ref().map_or(f64::NAN, |s| s.sim.monitor_value())
}

/// Interior cell counts of the simulation grid.
///
/// # Safety
/// `sim` must be a live handle; `nx` and `ny` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pf_simulation_shape(sim: *const PfSimulation, nx: *mut usize, ny: *mut usize) -> PfStatus {
    guard(|| {
        if sim.is_null() || nx.is_null() || ny.is_null() {
            return fail(PfStatus::NullPointer, "null argument");
        }
        let g = (*sim).sim.grid();
        *nx = g.nx();
        *ny = g.ny();
        PfStatus::Ok
    })
}

/// Copies one interior field into `out`, which must hold `nx * ny` values.
///
/// # Safety
/// `sim` must be a live handle and `out` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn pf_simulation_field(
    sim: *const PfSimulation,
    field: PfField,
    out: *mut f64,
    len: usize,
) -> PfStatus {
    guard(|| {
        if sim.is_null() || out.is_null() {
            return fail(PfStatus::NullPointer, "null argument");
        }
        let sim = &(*sim).sim;
        let s = sim.state();
        match field {
            PfField::Pressure => copy_interior(&s.p, out, len),
            PfField::U => copy_interior(&s.u, out, len),
            PfField::V => copy_interior(&s.v, out, len),
            PfField::Stream | PfField::Vorticity => {
                let (psi, vor) = derived_fields(s, sim.grid());
                copy_interior(if field == PfField::Stream { &psi } else { &vor }, out, len)
            }
        }
    })
}

/// Releases a simulation handle; null is ignored.
///
/// # Safety
/// `sim` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pf_simulation_free(sim: *mut PfSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}
