//! Time-marching driver with a monitor point and an optional steadiness stop.

use crate::cases::initial_state;
use crate::field::Field;
use crate::flow::{advance_step, stability_check, StepError, TimeStepParams};
use crate::grid::{BoundarySpec, FlowState, StaggeredGrid};
use crate::solvers::{ConvergenceTrace, SolverConfig};

/// Stop once `max |u_new - u_old| / dt` over the cell-centre velocities falls
/// below `tol`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Steadiness {
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub time: f64,
    /// Whether the steadiness criterion stopped the run.
    pub steady: bool,
    /// Last measured `max |du/dt|`, zero before any step.
    pub rate: f64,
    pub poisson_iterations: usize,
}

pub struct Simulation {
    grid: StaggeredGrid,
    bcs: BoundarySpec,
    params: TimeStepParams,
    solver: SolverConfig,
    state: FlowState,
    time: f64,
    steps: usize,
    monitor: (usize, usize),
    rate: f64,
    last_trace: Option<ConvergenceTrace>,
}

impl Simulation {
    /// Starts from rest with the boundary conditions imposed. Refuses time
    /// steps beyond the diffusive limit.
    pub fn new(
        grid: StaggeredGrid,
        bcs: BoundarySpec,
        params: TimeStepParams,
        solver: SolverConfig,
    ) -> Result<Self, StepError> {
        params.validate()?;
        solver.validate()?;
        let report = stability_check(&params, &grid);
        if !report.passed {
            return Err(StepError::InvalidConfiguration(format!(
                "dt/(Re h^2) = {} exceeds the stability limit {}",
                report.ratio, report.limit
            )));
        }
        Self::new_unchecked(grid, bcs, params, solver)
    }

    /// Like [`Simulation::new`] without the stability limit.
    pub fn new_unchecked(
        grid: StaggeredGrid,
        bcs: BoundarySpec,
        params: TimeStepParams,
        solver: SolverConfig,
    ) -> Result<Self, StepError> {
        params.validate()?;
        solver.validate()?;
        let state = initial_state(&grid, &bcs)?;
        let monitor = Self::default_monitor(&grid);
        Ok(Self {
            grid,
            bcs,
            params,
            solver,
            state,
            time: 0.0,
            steps: 0,
            monitor,
            rate: 0.0,
            last_trace: None,
        })
    }

    /// Cell at half the array width and a quarter of its height, as in the
    /// original program, clamped to the interior.
    pub fn default_monitor(grid: &StaggeredGrid) -> (usize, usize) {
        let pick = |len: usize, frac: f64| {
            let k = (len as f64 * frac).round() as usize;
            k.saturating_sub(1).clamp(1, len - 2)
        };
        (pick(grid.m, 0.5), pick(grid.n, 0.25))
    }

    pub fn with_monitor(mut self, (i, j): (usize, usize)) -> Result<Self, StepError> {
        if i < 1 || j < 1 || i > self.grid.m - 2 || j > self.grid.n - 2 {
            return Err(StepError::InvalidConfiguration(format!(
                "monitor cell ({i}, {j}) is outside the interior 1..={} x 1..={}",
                self.grid.m - 2,
                self.grid.n - 2
            )));
        }
        self.monitor = (i, j);
        Ok(self)
    }

    pub fn grid(&self) -> &StaggeredGrid {
        &self.grid
    }

    pub fn params(&self) -> &TimeStepParams {
        &self.params
    }

    pub fn state(&self) -> &FlowState {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn monitor(&self) -> (usize, usize) {
        self.monitor
    }

    /// Cell-centre `u` at the monitor cell.
    pub fn monitor_value(&self) -> f64 {
        self.state.u[self.monitor]
    }

    pub fn last_trace(&self) -> Option<&ConvergenceTrace> {
        self.last_trace.as_ref()
    }

    /// Advances one time step. On error the state is left unchanged.
    pub fn step(&mut self) -> Result<&ConvergenceTrace, StepError> {
        let (next, trace) = advance_step(&self.state, &self.params, &self.grid, &self.bcs, &self.solver)?;
        self.rate = max_diff(&next.u, &self.state.u).max(max_diff(&next.v, &self.state.v)) / self.params.dt;
        self.state = next;
        self.time += self.params.dt;
        self.steps += 1;
        Ok(self.last_trace.insert(trace))
    }

    /// Takes up to `cycles` steps, calling `on_step` after each one.
    pub fn run<E: From<StepError>>(
        &mut self,
        cycles: usize,
        steady: Option<Steadiness>,
        mut on_step: impl FnMut(&Simulation) -> Result<(), E>,
    ) -> Result<RunSummary, E> {
        let mut iterations = 0;
        let mut reached = false;
        for _ in 0..cycles {
            iterations += self.step()?.iterations;
            on_step(self)?;
            if let Some(s) = steady {
                if self.rate < s.tol {
                    reached = true;
                    break;
                }
            }
        }
        Ok(RunSummary {
            steps: self.steps,
            time: self.time,
            steady: reached,
            rate: self.rate,
            poisson_iterations: iterations,
        })
    }

    /// `(y, u)` along the vertical line `x`, interpolated between the
    /// adjacent `u` faces, with the wall values at both ends.
    pub fn centerline_u(&self, x: f64) -> Vec<(f64, f64)> {
        let g = &self.grid;
        let s = (x / g.dx).clamp(0.0, (g.m - 2) as f64);
        let i0 = (s.floor() as usize).min(g.m - 3);
        let w = s - i0 as f64;
        let u_at = |j: usize| (1.0 - w) * self.state.u_f[(i0, j)] + w * self.state.u_f[(i0 + 1, j)];
        let ly = (g.n - 2) as f64 * g.dy;
        let mut out = Vec::with_capacity(g.n);
        out.push((0.0, 0.5 * (u_at(0) + u_at(1))));
        for j in 1..g.n - 1 {
            out.push(((j as f64 - 0.5) * g.dy, u_at(j)));
        }
        out.push((ly, 0.5 * (u_at(g.n - 2) + u_at(g.n - 1))));
        out
    }
}

fn max_diff(a: &Field, b: &Field) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .fold(0.0f64, |acc, (x, y)| if (x - y).abs() > acc || x.is_nan() || y.is_nan() { (x - y).abs() } else { acc })
}

/// Linear interpolation in a profile sorted by its first coordinate, clamped
/// at the ends.
pub fn sample_profile(profile: &[(f64, f64)], y: f64) -> f64 {
    match profile.iter().position(|&(py, _)| py >= y) {
        None => profile.last().map_or(f64::NAN, |p| p.1),
        Some(0) => profile[0].1,
        Some(k) => {
            let (y0, u0) = profile[k - 1];
            let (y1, u1) = profile[k];
            u0 + (u1 - u0) * (y - y0) / (y1 - y0)
        }
    }
}
