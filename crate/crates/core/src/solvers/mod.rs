//! Iterative methods for the discrete pressure Poisson equation
//!
//! ```text
//! (p[i-1,j] - 2 p[i,j] + p[i+1,j]) / dx^2 + (p[i,j-1] - 2 p[i,j] + p[i,j+1]) / dy^2 = rhs[i,j]
//! ```
//!
//! on the interior cells of a staggered grid. All methods share one
//! [`PoissonProblem`] and one driver, [`solve`], so convergence traces from
//! different methods are directly comparable.

mod line;
mod multigrid;
mod point;
pub(crate) mod stencil;
mod thomas;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::Field;
use crate::grid::StaggeredGrid;

pub use line::{adi_sweep, slor_sweep, SlorVariant};
pub use multigrid::{prolong, restrict, v_cycle, Hierarchy};
pub use point::{gauss_seidel_sweep, jacobi_sweep, sor_sweep};
pub use thomas::thomas_solve;

use stencil::Operator;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("singular tridiagonal line: zero pivot at row {row} of {len}")]
    SingularLine { row: usize, len: usize },
    #[error("invalid multigrid hierarchy: {0}")]
    InvalidHierarchy(String),
    #[error("field shape {got:?} does not match problem shape {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
}

/// Boundary condition of a Poisson problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PressureBc {
    /// Zero normal gradient everywhere; the solution is defined up to a
    /// constant and returned with zero interior mean.
    Neumann,
    /// Fixed values held in the ghost ring of the boundary field.
    Dirichlet,
}

/// Interior five-point system: right-hand side, boundary condition and
/// spacing.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonProblem {
    pub(crate) op: Operator,
    rhs: Field,
    boundary: Option<Field>,
}

impl PoissonProblem {
    /// Zero-gradient problem on the fluid cells of `grid`.
    pub fn neumann(grid: &StaggeredGrid, rhs: Field) -> Result<Self, SolverError> {
        if rhs.m() != grid.m || rhs.n() != grid.n {
            return Err(SolverError::ShapeMismatch {
                expected: (grid.m, grid.n),
                got: (rhs.m(), rhs.n()),
            });
        }
        Ok(Self {
            op: Operator::neumann(grid),
            rhs,
            boundary: None,
        })
    }

    /// Zero-gradient problem on a full `nx x ny` rectangle.
    pub fn neumann_rect(nx: usize, ny: usize, dx: f64, dy: f64, rhs: Field) -> Result<Self, SolverError> {
        check_dims(nx, ny, dx, dy, &rhs)?;
        Ok(Self {
            op: Operator::rectangle(nx, ny, dx, dy, false),
            rhs,
            boundary: None,
        })
    }

    /// Dirichlet problem: the ghost ring of `boundary` carries the fixed
    /// values read by the boundary stencils.
    pub fn dirichlet(
        nx: usize,
        ny: usize,
        dx: f64,
        dy: f64,
        rhs: Field,
        boundary: Field,
    ) -> Result<Self, SolverError> {
        check_dims(nx, ny, dx, dy, &rhs)?;
        if !rhs.same_shape(&boundary) {
            return Err(SolverError::ShapeMismatch {
                expected: (rhs.m(), rhs.n()),
                got: (boundary.m(), boundary.n()),
            });
        }
        Ok(Self {
            op: Operator::rectangle(nx, ny, dx, dy, true),
            rhs,
            boundary: Some(boundary),
        })
    }

    pub fn bc(&self) -> PressureBc {
        if self.op.neumann {
            PressureBc::Neumann
        } else {
            PressureBc::Dirichlet
        }
    }

    pub fn rhs(&self) -> &Field {
        &self.rhs
    }

    pub fn set_rhs(&mut self, rhs: Field) -> Result<(), SolverError> {
        if !rhs.same_shape(&self.rhs) {
            return Err(SolverError::ShapeMismatch {
                expected: (self.rhs.m(), self.rhs.n()),
                got: (rhs.m(), rhs.n()),
            });
        }
        self.rhs = rhs;
        Ok(())
    }

    /// Shape of every field of this problem, ghost ring included.
    pub fn shape(&self) -> (usize, usize) {
        (self.op.m, self.op.n)
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.op.dx, self.op.dy)
    }

    pub fn active_cells(&self) -> usize {
        self.op.n_active
    }

    pub fn is_active(&self, i: usize, j: usize) -> bool {
        self.op.active[j * self.op.m + i]
    }

    /// Residual `rhs - A p` on active cells (zero elsewhere).
    pub fn residual(&self, p: &Field) -> Field {
        let mut out = Field::zeros(self.op.m, self.op.n);
        self.op.residual_into(p, &self.rhs, &mut out);
        out
    }

    /// A zero field carrying this problem's boundary values.
    pub fn initial_guess(&self) -> Field {
        match &self.boundary {
            Some(b) => {
                let mut p = b.clone();
                for (k, v) in p.as_mut_slice().iter_mut().enumerate() {
                    if self.op.active[k] {
                        *v = 0.0;
                    }
                }
                p
            }
            None => Field::zeros(self.op.m, self.op.n),
        }
    }

    /// Right-hand side used by the iteration: for zero-gradient problems its
    /// active mean is removed so the singular system is consistent.
    fn working_rhs(&self) -> Field {
        let mut rhs = self.rhs.clone();
        if self.op.neumann {
            self.op.remove_mean(&mut rhs);
        }
        rhs
    }

    fn prepare(&self, initial: Option<&Field>) -> Result<Field, SolverError> {
        let mut p = match initial {
            Some(f) => {
                if !f.same_shape(&self.rhs) {
                    return Err(SolverError::ShapeMismatch {
                        expected: self.shape(),
                        got: (f.m(), f.n()),
                    });
                }
                f.clone()
            }
            None => self.initial_guess(),
        };
        if let Some(b) = &self.boundary {
            for (k, v) in p.as_mut_slice().iter_mut().enumerate() {
                if !self.op.active[k] {
                    *v = b.as_slice()[k];
                }
            }
        }
        if self.op.neumann {
            self.op.remove_mean(&mut p);
        }
        Ok(p)
    }
}

fn check_dims(nx: usize, ny: usize, dx: f64, dy: f64, rhs: &Field) -> Result<(), SolverError> {
    if nx < 1 || ny < 1 || !(dx > 0.0) || !(dy > 0.0) {
        return Err(SolverError::InvalidConfiguration(format!(
            "need at least one cell and positive spacing, got {nx}x{ny}, dx={dx}, dy={dy}"
        )));
    }
    if rhs.m() != nx + 2 || rhs.n() != ny + 2 {
        return Err(SolverError::ShapeMismatch {
            expected: (nx + 2, ny + 2),
            got: (rhs.m(), rhs.n()),
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Jacobi,
    #[serde(rename = "gs")]
    GaussSeidel,
    Sor,
    #[serde(rename = "slora")]
    SlorA,
    #[serde(rename = "slorb")]
    SlorB,
    Adi,
    Multigrid,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Jacobi,
        Method::GaussSeidel,
        Method::Sor,
        Method::SlorA,
        Method::SlorB,
        Method::Adi,
        Method::Multigrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Jacobi => "jacobi",
            Method::GaussSeidel => "gs",
            Method::Sor => "sor",
            Method::SlorA => "slora",
            Method::SlorB => "slorb",
            Method::Adi => "adi",
            Method::Multigrid => "multigrid",
        }
    }

    /// Whether the relaxation parameter changes the iteration.
    pub fn uses_omega(self) -> bool {
        matches!(self, Method::Sor | Method::SlorA | Method::SlorB | Method::Adi)
    }

    pub fn valid_names() -> String {
        Method::ALL.map(Method::name).join(", ")
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "jacobi" => Ok(Method::Jacobi),
            "gs" | "gauss-seidel" | "gaussseidel" => Ok(Method::GaussSeidel),
            "sor" => Ok(Method::Sor),
            "slora" => Ok(Method::SlorA),
            "slorb" => Ok(Method::SlorB),
            "adi" => Ok(Method::Adi),
            "multigrid" | "mg" => Ok(Method::Multigrid),
            other => Err(format!(
                "unknown solver {other:?}; valid names: {}",
                Method::valid_names()
            )),
        }
    }
}

/// Stopping norm.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Norm {
    /// Largest change between successive iterates.
    #[default]
    MaxChange,
    /// RMS of the residual over active cells.
    ResidualL2,
    /// Largest absolute residual.
    ResidualMax,
}

impl Norm {
    pub fn name(self) -> &'static str {
        match self {
            Norm::MaxChange => "max-change",
            Norm::ResidualL2 => "residual-l2",
            Norm::ResidualMax => "residual-max",
        }
    }
}

impl FromStr for Norm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "max-change" => Ok(Norm::MaxChange),
            "residual-l2" => Ok(Norm::ResidualL2),
            "residual-max" => Ok(Norm::ResidualMax),
            other => Err(format!(
                "unknown norm {other:?}; valid names: max-change, residual-l2, residual-max"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultigridConfig {
    /// Total number of grid levels including the finest; `None` coarsens as
    /// far as the grid allows.
    pub levels: Option<usize>,
    pub pre_smooth: usize,
    pub post_smooth: usize,
    /// Gauss-Seidel sweeps on the coarsest level.
    pub coarse_sweeps: usize,
}

impl Default for MultigridConfig {
    fn default() -> Self {
        Self {
            levels: None,
            pre_smooth: 2,
            post_smooth: 2,
            coarse_sweeps: 50,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: Method,
    pub omega: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub norm: Norm,
    pub multigrid: MultigridConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::GaussSeidel,
            omega: 1.0,
            tol: 1e-6,
            max_iter: 100_000,
            norm: Norm::MaxChange,
            multigrid: MultigridConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_norm(mut self, norm: Norm) -> Self {
        self.norm = norm;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        check_omega(self.omega)?;
        if !(self.tol > 0.0) {
            return Err(SolverError::InvalidConfiguration(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter < 1 {
            return Err(SolverError::InvalidConfiguration("max_iter must be at least 1".into()));
        }
        if self.method == Method::Multigrid {
            let mg = &self.multigrid;
            if mg.levels == Some(0) {
                return Err(SolverError::InvalidConfiguration("multigrid needs at least one level".into()));
            }
            if mg.coarse_sweeps < 1 {
                return Err(SolverError::InvalidConfiguration(
                    "multigrid needs at least one coarse sweep".into(),
                ));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_omega(omega: f64) -> Result<(), SolverError> {
    if omega > 0.0 && omega < 2.0 {
        Ok(())
    } else {
        Err(SolverError::InvalidConfiguration(format!(
            "relaxation parameter must lie in (0, 2), got {omega}"
        )))
    }
}

/// Per-iteration history of one solve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTrace {
    /// Value of the configured stopping norm after each iteration.
    pub errors: Vec<f64>,
    pub residual_l2: Vec<f64>,
    pub residual_max: Vec<f64>,
    /// Seconds since the start of the sweep loop, per iteration.
    pub elapsed_s: Vec<f64>,
    pub iterations: usize,
    pub wall_clock_s: f64,
    pub converged: bool,
    /// Fine-grid sweep equivalents: one per point or line sweep, two per ADI
    /// cycle, level-weighted smoothing sweeps for multigrid.
    pub work_units: f64,
}

impl ConvergenceTrace {
    pub fn final_error(&self) -> Option<f64> {
        self.errors.last().copied()
    }

    /// Ratios of successive residual RMS values.
    pub fn reduction_factors(&self) -> Vec<f64> {
        self.residual_l2.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoissonSolution {
    pub p: Field,
    pub trace: ConvergenceTrace,
}

/// Residual growth relative to the start at which a solve is abandoned.
const DIVERGENCE_FACTOR: f64 = 1e8;

/// Work units of one iteration of a single-grid method.
fn iteration_work(method: Method) -> f64 {
    match method {
        Method::Adi => 2.0,
        _ => 1.0,
    }
}

/// Iterates until the configured norm drops to `tol` or `max_iter` is
/// reached. Non-convergence is reported through `trace.converged`, not as an
/// error. For zero-gradient problems the returned field has zero interior
/// mean and ghost cells holding copies of their interior neighbours.
pub fn solve(
    problem: &PoissonProblem,
    config: &SolverConfig,
    initial: Option<&Field>,
) -> Result<PoissonSolution, SolverError> {
    config.validate()?;
    let op = &problem.op;
    let rhs = problem.working_rhs();
    let mut p = problem.prepare(initial)?;
    let mut prev = p.clone();
    let mut lines = line::LineScratch::default();
    let mut hierarchy = match config.method {
        Method::Multigrid => Some(Hierarchy::build(op, config.multigrid.levels)?),
        _ => None,
    };

    // Growth far beyond the starting residual means the iteration diverges.
    let blowup = DIVERGENCE_FACTOR * op.residual_norms(&p, &rhs).1;
    let mut trace = ConvergenceTrace::default();
    let start = Instant::now();
    for _ in 0..config.max_iter {
        prev.as_mut_slice().copy_from_slice(p.as_slice());
        let work = match config.method {
            Method::Jacobi => {
                point::jacobi_into(op, &rhs, &prev, &mut p);
                1.0
            }
            Method::GaussSeidel => {
                point::gauss_seidel_in_place(op, &rhs, &mut p);
                1.0
            }
            Method::Sor => {
                point::sor_in_place(op, &rhs, &mut p, config.omega);
                1.0
            }
            Method::SlorA | Method::SlorB => {
                let variant = if config.method == Method::SlorA {
                    SlorVariant::A
                } else {
                    SlorVariant::B
                };
                line::row_sweep(op, &rhs, &mut p, config.omega, variant, &mut lines)?;
                iteration_work(config.method)
            }
            Method::Adi => {
                line::row_sweep(op, &rhs, &mut p, config.omega, SlorVariant::B, &mut lines)?;
                line::column_sweep(op, &rhs, &mut p, config.omega, &mut lines)?;
                iteration_work(config.method)
            }
            Method::Multigrid => {
                let h = hierarchy.as_mut().expect("hierarchy built for multigrid");
                h.cycle(&mut p, &rhs, &config.multigrid)
            }
        };
        if op.neumann {
            op.remove_mean(&mut p);
        }
        let change = op.max_change(&prev, &p);
        let (res_l2, res_max) = op.residual_norms(&p, &rhs);
        let error = match config.norm {
            Norm::MaxChange => change,
            Norm::ResidualL2 => res_l2,
            Norm::ResidualMax => res_max,
        };
        trace.errors.push(error);
        trace.residual_l2.push(res_l2);
        trace.residual_max.push(res_max);
        trace.elapsed_s.push(start.elapsed().as_secs_f64());
        trace.iterations += 1;
        trace.work_units += work;
        if !(error.is_finite() && res_max.is_finite()) || (blowup > 0.0 && res_max > blowup) {
            break;
        }
        if error <= config.tol {
            trace.converged = true;
            break;
        }
    }
    trace.wall_clock_s = start.elapsed().as_secs_f64();
    if op.neumann {
        op.fill_zero_gradient_ghosts(&mut p);
    }
    Ok(PoissonSolution { p, trace })
}
