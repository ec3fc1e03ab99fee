//! Projection-method time stepping on the staggered grid: corner products,
//! explicit momentum predictors `F`/`G`, the pressure Poisson right-hand side,
//! the pressure correction and derived fields.
//!
//! Predictor values on faces that bound the fluid region are pinned to the
//! current boundary face velocity. The correction therefore leaves them
//! untouched and the discrete divergence after a step is exactly `dt` times
//! the Poisson residual of the zero-gradient pressure system.

use thiserror::Error;

use crate::field::Field;
use crate::grid::{apply_boundary_conditions, BoundarySpec, FlowState, GridError, StaggeredGrid};
use crate::solvers::{solve, ConvergenceTrace, PoissonProblem, SolverConfig, SolverError};

/// Largest admissible `dt / (Re h^2)`.
pub const STABILITY_LIMIT: f64 = 0.25;

/// Safety factor of the default time step `dt = sigma Re h^2`.
pub const DEFAULT_SIGMA: f64 = 0.0025;

#[derive(Debug, Error)]
pub enum StepError {
    #[error("inconsistent flow state: {0}")]
    InconsistentState(String),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("pressure solve did not converge in {} iterations", trace.iterations)]
    PoissonNotConverged { trace: ConvergenceTrace },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Velocity products at the four corners of each cell: `ff` is north-east,
/// `fb` south-east, `bf` north-west, `bb` south-west.
#[derive(Clone, Debug, PartialEq)]
pub struct CornerProducts {
    pub uv_ff: Field,
    pub uv_fb: Field,
    pub uv_bf: Field,
    pub uv_bb: Field,
}

/// Momentum predictors on the four faces of each fluid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct IntermediateFields {
    pub f_f: Field,
    pub f_b: Field,
    pub g_f: Field,
    pub g_b: Field,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeStepParams {
    pub re: f64,
    pub dt: f64,
    /// Number of steps to take.
    pub cycles: usize,
    /// Safety factor the time step was derived from, `dt / (Re h^2)`.
    pub sigma: f64,
    /// Scale the x-diffusion of `G` by `1/dy^2` instead of `1/dx^2`, for
    /// comparison with legacy output.
    pub paper_code_compat: bool,
}

impl TimeStepParams {
    /// `dt = sigma Re h^2` with `h = min(dx, dy)`.
    pub fn from_sigma(re: f64, sigma: f64, grid: &StaggeredGrid, cycles: usize) -> Self {
        let h = grid.dx.min(grid.dy);
        Self {
            re,
            dt: sigma * re * h * h,
            cycles,
            sigma,
            paper_code_compat: false,
        }
    }

    pub fn with_dt(re: f64, dt: f64, grid: &StaggeredGrid, cycles: usize) -> Self {
        let h = grid.dx.min(grid.dy);
        Self {
            re,
            dt,
            cycles,
            sigma: dt / (re * h * h),
            paper_code_compat: false,
        }
    }

    pub fn validate(&self) -> Result<(), StepError> {
        if !(self.re > 0.0 && self.re.is_finite()) {
            return Err(StepError::InvalidConfiguration(format!("Reynolds number must be positive, got {}", self.re)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(StepError::InvalidConfiguration(format!("time step must be positive, got {}", self.dt)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityReport {
    /// `dt / (Re h^2)`
    pub ratio: f64,
    pub limit: f64,
    pub passed: bool,
    /// `limit - ratio`; negative on failure.
    pub margin: f64,
}

/// Diffusive time-step restriction `dt / (Re h^2) <= 0.25`, `h = min(dx, dy)`.
pub fn stability_check(params: &TimeStepParams, grid: &StaggeredGrid) -> StabilityReport {
    let h = grid.dx.min(grid.dy);
    let ratio = params.dt / (params.re * h * h);
    StabilityReport {
        ratio,
        limit: STABILITY_LIMIT,
        // Tolerate the rounding of dt = 0.25 Re h^2 itself.
        passed: ratio <= STABILITY_LIMIT * (1.0 + 1e-12),
        margin: STABILITY_LIMIT - ratio,
    }
}

fn check_state(state: &FlowState, grid: &StaggeredGrid) -> Result<(), StepError> {
    state.check_shape(grid)?;
    if !state.faces_synced() {
        return Err(StepError::InconsistentState(
            "backward faces differ from the shared forward faces; call sync_faces".into(),
        ));
    }
    Ok(())
}

pub fn corner_products(state: &FlowState, grid: &StaggeredGrid) -> CornerProducts {
    let (u_f, u_b, v_f, v_b) = (&state.u_f, &state.u_b, &state.v_f, &state.v_b);
    let mut c = CornerProducts {
        uv_ff: grid.zeros(),
        uv_fb: grid.zeros(),
        uv_bf: grid.zeros(),
        uv_bb: grid.zeros(),
    };
    for j in 1..grid.n - 1 {
        for i in 1..grid.m - 1 {
            c.uv_ff[(i, j)] = 0.5 * (u_f[(i, j)] + u_f[(i, j + 1)]) * (0.5 * (v_f[(i, j)] + v_f[(i + 1, j)]));
            c.uv_fb[(i, j)] = 0.5 * (u_f[(i, j)] + u_f[(i, j - 1)]) * (0.5 * (v_b[(i, j)] + v_b[(i + 1, j)]));
            c.uv_bf[(i, j)] = 0.5 * (u_b[(i, j)] + u_b[(i, j + 1)]) * (0.5 * (v_f[(i, j)] + v_f[(i - 1, j)]));
            c.uv_bb[(i, j)] = 0.5 * (u_b[(i, j - 1)] + u_b[(i, j)]) * (0.5 * (v_b[(i, j)] + v_b[(i - 1, j)]));
        }
    }
    c
}

/// Explicit momentum predictors on every face of every fluid cell.
pub fn intermediate_velocities(
    state: &FlowState,
    corners: &CornerProducts,
    params: &TimeStepParams,
    grid: &StaggeredGrid,
) -> Result<IntermediateFields, StepError> {
    check_state(state, grid)?;
    params.validate()?;
    let FlowState { u_f, u_b, v_f, v_b, u, v, .. } = state;
    let CornerProducts { uv_ff, uv_fb, uv_bf, uv_bb } = corners;
    let (dt, re, dx, dy) = (params.dt, params.re, grid.dx, grid.dy);
    let kx = dt / (re * dx * dx);
    let ky = dt / (re * dy * dy);
    let kgx = if params.paper_code_compat { ky } else { kx };

    let mut out = IntermediateFields {
        f_f: grid.zeros(),
        f_b: grid.zeros(),
        g_f: grid.zeros(),
        g_b: grid.zeros(),
    };
    for j in 1..grid.n - 1 {
        for i in 1..grid.m - 1 {
            if !grid.is_fluid(i, j) {
                continue;
            }
            out.f_f[(i, j)] = if grid.is_fluid(i + 1, j) {
                u_f[(i, j)]
                    + kx * (u_f[(i + 1, j)] - 2.0 * u_f[(i, j)] + u_b[(i, j)])
                    + ky * (u_f[(i, j - 1)] - 2.0 * u_f[(i, j)] + u_f[(i, j + 1)])
                    - dt / dx * (u[(i + 1, j)] * u[(i + 1, j)] - u[(i, j)] * u[(i, j)])
                    - dt / dy * (uv_ff[(i, j)] - uv_fb[(i, j)])
            } else {
                u_f[(i, j)]
            };
            out.g_f[(i, j)] = if grid.is_fluid(i, j + 1) {
                v_f[(i, j)]
                    + kgx * (v_f[(i + 1, j)] - 2.0 * v_f[(i, j)] + v_f[(i - 1, j)])
                    + ky * (v_f[(i, j + 1)] - 2.0 * v_f[(i, j)] + v_b[(i, j)])
                    - dt / dx * (uv_ff[(i, j)] - uv_bf[(i, j)])
                    - dt / dy * (v[(i, j + 1)] * v[(i, j + 1)] - v[(i, j)] * v[(i, j)])
            } else {
                v_f[(i, j)]
            };
            out.f_b[(i, j)] = if grid.is_fluid(i - 1, j) {
                u_b[(i, j)]
                    + kx * (u_f[(i, j)] - 2.0 * u_b[(i, j)] + u_b[(i - 1, j)])
                    + ky * (u_b[(i, j - 1)] - 2.0 * u_b[(i, j)] + u_b[(i, j + 1)])
                    - dt / dx * (u[(i, j)] * u[(i, j)] - u[(i - 1, j)] * u[(i - 1, j)])
                    - dt / dy * (uv_bf[(i, j)] - uv_bb[(i, j)])
            } else {
                u_b[(i, j)]
            };
            out.g_b[(i, j)] = if grid.is_fluid(i, j - 1) {
                v_b[(i, j)]
                    + kgx * (v_b[(i + 1, j)] - 2.0 * v_b[(i, j)] + v_b[(i - 1, j)])
                    + ky * (v_f[(i, j)] - 2.0 * v_b[(i, j)] + v_b[(i, j - 1)])
                    - dt / dx * (uv_fb[(i, j)] - uv_bb[(i, j)])
                    - dt / dy * (v[(i, j)] * v[(i, j)] - v[(i, j - 1)] * v[(i, j - 1)])
            } else {
                v_b[(i, j)]
            };
        }
    }
    Ok(out)
}

/// `[(F_f - F_b)/dx + (G_f - G_b)/dy] / dt` on fluid cells, zero elsewhere.
pub fn poisson_rhs(
    inter: &IntermediateFields,
    params: &TimeStepParams,
    grid: &StaggeredGrid,
) -> Result<Field, StepError> {
    params.validate()?;
    let mut rhs = grid.zeros();
    for j in 1..grid.n - 1 {
        for i in 1..grid.m - 1 {
            if grid.is_fluid(i, j) {
                rhs[(i, j)] = ((inter.f_f[(i, j)] - inter.f_b[(i, j)]) / grid.dx
                    + (inter.g_f[(i, j)] - inter.g_b[(i, j)]) / grid.dy)
                    / params.dt;
            }
        }
    }
    Ok(rhs)
}

/// Subtracts the pressure gradient from the predictors on faces between two
/// fluid cells, re-applies boundary conditions and syncs the faces.
pub fn velocity_correction(
    state: &FlowState,
    inter: &IntermediateFields,
    p: &Field,
    params: &TimeStepParams,
    grid: &StaggeredGrid,
    bcs: &BoundarySpec,
) -> Result<FlowState, StepError> {
    grid.check_shape(p)?;
    let mut next = state.clone();
    next.p.as_mut_slice().copy_from_slice(p.as_slice());
    let (dt, dx, dy) = (params.dt, grid.dx, grid.dy);
    for j in 1..grid.n - 1 {
        for i in 1..grid.m - 1 {
            if !grid.is_fluid(i, j) {
                continue;
            }
            next.u_f[(i, j)] = if grid.is_fluid(i + 1, j) {
                inter.f_f[(i, j)] - dt / dx * (p[(i + 1, j)] - p[(i, j)])
            } else {
                inter.f_f[(i, j)]
            };
            next.v_f[(i, j)] = if grid.is_fluid(i, j + 1) {
                inter.g_f[(i, j)] - dt / dy * (p[(i, j + 1)] - p[(i, j)])
            } else {
                inter.g_f[(i, j)]
            };
        }
    }
    apply_boundary_conditions(&mut next, grid, bcs)?;
    next.sync_faces();
    Ok(next)
}

/// One projection step: corners, predictors, Poisson right-hand side,
/// pressure solve warm-started from the current pressure, correction.
pub fn advance_step(
    state: &FlowState,
    params: &TimeStepParams,
    grid: &StaggeredGrid,
    bcs: &BoundarySpec,
    solver: &SolverConfig,
) -> Result<(FlowState, ConvergenceTrace), StepError> {
    check_state(state, grid)?;
    params.validate()?;
    let corners = corner_products(state, grid);
    let inter = intermediate_velocities(state, &corners, params, grid)?;
    let rhs = poisson_rhs(&inter, params, grid)?;
    let problem = PoissonProblem::neumann(grid, rhs)?;
    let sol = solve(&problem, solver, Some(&state.p))?;
    if !sol.trace.converged {
        return Err(StepError::PoissonNotConverged { trace: sol.trace });
    }
    let next = velocity_correction(state, &inter, &sol.p, params, grid, bcs)?;
    Ok((next, sol.trace))
}

/// Stream function and vorticity from the cell-centre velocities.
///
/// `psi` is zero on the bottom-left interior cell, integrates `u dy` up the
/// first interior column and `-v dx` along each row. Vorticity uses forward
/// differences `(v[i+1,j] - v[i,j])/dx - (u[i,j+1] - u[i,j])/dy`.
pub fn derived_fields(state: &FlowState, grid: &StaggeredGrid) -> (Field, Field) {
    let (m, n) = (grid.m, grid.n);
    let (u, v) = (&state.u, &state.v);
    let mut psi = grid.zeros();
    let mut vor = grid.zeros();
    for j in 2..n - 1 {
        psi[(1, j)] = psi[(1, j - 1)] + grid.dy * u[(1, j)];
    }
    for j in 1..n - 1 {
        for i in 2..m - 1 {
            psi[(i, j)] = psi[(i - 1, j)] - grid.dx * v[(i, j)];
        }
    }
    for j in 1..n - 1 {
        for i in 1..m - 1 {
            vor[(i, j)] = (v[(i + 1, j)] - v[(i, j)]) / grid.dx - (u[(i, j + 1)] - u[(i, j)]) / grid.dy;
        }
    }
    (psi, vor)
}
