//! Ready-made flow and Poisson test problems.

use std::f64::consts::PI;

use crate::field::Field;
use crate::flow::{corner_products, intermediate_velocities, poisson_rhs, StepError, TimeStepParams, DEFAULT_SIGMA};
use crate::grid::{
    apply_boundary_conditions, build_grid, BoundarySpec, CellKind, FlowState, GridError, Mask, StaggeredGrid,
    WallCondition,
};
use crate::solvers::{PoissonProblem, SolverError};

/// Lid-driven cavity of `lx x ly` with `nx x ny` interior cells.
pub fn cavity(nx: usize, ny: usize, lx: f64, ly: f64, wall_speed: f64) -> Result<(StaggeredGrid, BoundarySpec), GridError> {
    Ok((build_grid((lx, ly), (nx, ny), None)?, BoundarySpec::cavity(wall_speed)))
}

/// Chamber domain description.
#[derive(Clone, Debug, PartialEq)]
pub struct ChamberSpec {
    pub lx: f64,
    pub ly: f64,
    pub spacing: f64,
    pub inlet_speed: f64,
    /// Replaces the default outline; must match the cell counts implied by
    /// `lx`, `ly` and `spacing`.
    pub mask: Option<Mask>,
}

impl Default for ChamberSpec {
    fn default() -> Self {
        Self {
            lx: 6.0,
            ly: 4.0,
            spacing: 0.25,
            inlet_speed: 1.0,
            mask: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChamberCase {
    pub grid: StaggeredGrid,
    pub bcs: BoundarySpec,
    /// Distinct grid nodes touched by fluid cells.
    pub active_points: usize,
    /// Inlet and outlet openings in cells.
    pub inlet_cells: usize,
    pub outlet_cells: usize,
}

/// Default outline: a rectangle with a one-cell inlet at the top of the left
/// wall and a one-cell outlet at the bottom of the right wall.
pub fn default_chamber_mask(nx: usize, ny: usize) -> Mask {
    let (m, n) = (nx + 2, ny + 2);
    let mut mask = Mask::rectangle(m, n);
    mask.set(0, n - 2, CellKind::Inlet);
    mask.set(m - 1, 1, CellKind::Outlet);
    mask
}

/// Builds the chamber grid and boundary conditions. Without inlet or outlet
/// cells in the mask the case degenerates to a duct fed through the whole
/// left wall and drained through the right wall.
pub fn chamber(spec: &ChamberSpec) -> Result<ChamberCase, GridError> {
    if !(spec.spacing > 0.0) {
        return Err(GridError::InvalidConfiguration(format!("spacing must be positive, got {}", spec.spacing)));
    }
    let count = |len: f64, axis: &str| -> Result<usize, GridError> {
        let c = len / spec.spacing;
        if (c - c.round()).abs() > 1e-9 * c.max(1.0) || c.round() < 1.0 {
            return Err(GridError::InvalidConfiguration(format!(
                "{axis} length {len} is not a whole number of {} cells",
                spec.spacing
            )));
        }
        Ok(c.round() as usize)
    };
    let (nx, ny) = (count(spec.lx, "x")?, count(spec.ly, "y")?);
    let mask = match &spec.mask {
        Some(mask) => {
            if mask.m() != nx + 2 || mask.n() != ny + 2 {
                return Err(GridError::InvalidConfiguration(format!(
                    "mask is {}x{} cells (ghost ring included) but {}x{} at spacing {} needs {}x{}",
                    mask.m(),
                    mask.n(),
                    spec.lx,
                    spec.ly,
                    spec.spacing,
                    nx + 2,
                    ny + 2
                )));
            }
            mask.clone()
        }
        None => default_chamber_mask(nx, ny),
    };
    let inlet_cells = mask.count(CellKind::Inlet);
    let outlet_cells = mask.count(CellKind::Outlet);
    let grid = build_grid((spec.lx, spec.ly), (nx, ny), Some(mask))?;
    let mut bcs = BoundarySpec {
        bottom: WallCondition::NoSlip,
        top: WallCondition::NoSlip,
        left: WallCondition::NoSlip,
        right: WallCondition::NoSlip,
        inlet_speed: spec.inlet_speed,
    };
    if inlet_cells == 0 && outlet_cells == 0 {
        bcs.left = WallCondition::Inflow(spec.inlet_speed);
        bcs.right = WallCondition::Outflow;
    }
    Ok(ChamberCase {
        active_points: grid.active_points(),
        grid,
        bcs,
        inlet_cells,
        outlet_cells,
    })
}

/// Quiescent state with boundary conditions imposed and faces synced.
pub fn initial_state(grid: &StaggeredGrid, bcs: &BoundarySpec) -> Result<FlowState, GridError> {
    let mut s = FlowState::at_rest(grid);
    apply_boundary_conditions(&mut s, grid, bcs)?;
    s.sync_faces();
    Ok(s)
}

/// Pressure Poisson problem of the first time step from rest.
pub fn first_step_problem(
    grid: &StaggeredGrid,
    bcs: &BoundarySpec,
    params: &TimeStepParams,
) -> Result<PoissonProblem, StepError> {
    let state = initial_state(grid, bcs)?;
    let corners = corner_products(&state, grid);
    let inter = intermediate_velocities(&state, &corners, params, grid)?;
    let rhs = poisson_rhs(&inter, params, grid)?;
    Ok(PoissonProblem::neumann(grid, rhs)?)
}

/// First-step problem of the unit lid-driven cavity with `n x n` cells,
/// lid speed 1 and the default time step.
pub fn cavity_first_step(n: usize, re: f64) -> Result<PoissonProblem, StepError> {
    let (grid, bcs) = cavity(n, n, 1.0, 1.0, 1.0)?;
    let params = TimeStepParams::from_sigma(re, DEFAULT_SIGMA, &grid, 1);
    first_step_problem(&grid, &bcs, &params)
}

/// First-step problem of the default chamber.
pub fn chamber_first_step(re: f64) -> Result<PoissonProblem, StepError> {
    let case = chamber(&ChamberSpec::default())?;
    let params = TimeStepParams::from_sigma(re, DEFAULT_SIGMA, &case.grid, 1);
    first_step_problem(&case.grid, &case.bcs, &params)
}

/// Cells per side for a grid with `nodes` grid lines per side.
fn cells_of(nodes: usize) -> Result<usize, SolverError> {
    if nodes < 2 {
        return Err(SolverError::InvalidConfiguration(format!("need at least 2 grid lines, got {nodes}")));
    }
    Ok(nodes - 1)
}

/// Zero-gradient problem on the unit square with exact solution
/// `cos(pi x) cos(pi y)` at the cell centres of a grid with `nodes` lines per
/// side. Returns the problem and the exact solution.
pub fn manufactured_neumann(nodes: usize) -> Result<(PoissonProblem, Field), SolverError> {
    let cells = cells_of(nodes)?;
    let h = 1.0 / cells as f64;
    let m = cells + 2;
    let c = |i: usize| (i as f64 - 0.5) * h;
    let exact = Field::from_fn(m, m, |i, j| (PI * c(i)).cos() * (PI * c(j)).cos());
    let rhs = Field::from_fn(m, m, |i, j| -2.0 * PI * PI * exact[(i, j)]);
    Ok((PoissonProblem::neumann_rect(cells, cells, h, h, rhs)?, exact))
}

/// Dirichlet problem on the unit square with exact solution
/// `sin(pi x) sin(pi y) + x y`, boundary values sampled at ghost centres.
pub fn manufactured_dirichlet(nodes: usize) -> Result<(PoissonProblem, Field), SolverError> {
    let cells = cells_of(nodes)?;
    let h = 1.0 / cells as f64;
    let m = cells + 2;
    let c = |i: usize| (i as f64 - 0.5) * h;
    let exact = Field::from_fn(m, m, |i, j| (PI * c(i)).sin() * (PI * c(j)).sin() + c(i) * c(j));
    let rhs = Field::from_fn(m, m, |i, j| -2.0 * PI * PI * (PI * c(i)).sin() * (PI * c(j)).sin());
    Ok((PoissonProblem::dirichlet(cells, cells, h, h, rhs, exact.clone())?, exact))
}

/// Largest interior difference between two fields of equal shape.
pub fn max_interior_error(p: &Field, exact: &Field) -> f64 {
    let mut out = 0.0f64;
    for j in 1..p.n() - 1 {
        for i in 1..p.m() - 1 {
            out = out.max((p[(i, j)] - exact[(i, j)]).abs());
        }
    }
    out
}
