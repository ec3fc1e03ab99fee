//! Solver races and relaxation-parameter sweeps on a fixed Poisson problem.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cases::{cavity_first_step, chamber_first_step, manufactured_neumann};
use crate::flow::StepError;
use crate::solvers::{solve, ConvergenceTrace, Method, PoissonProblem, SolverConfig, SolverError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Problem(#[from] StepError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

/// Where the race problem comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSource {
    /// First pressure solve of the unit lid-driven cavity with `n x n` cells.
    CavityFirstStep { n: usize, re: f64 },
    /// First pressure solve of the default chamber.
    ChamberFirstStep { re: f64 },
    /// Zero-gradient manufactured problem with `nodes` grid lines per side.
    Manufactured { nodes: usize },
}

impl ProblemSource {
    pub fn build(&self) -> Result<PoissonProblem, BenchError> {
        Ok(match *self {
            ProblemSource::CavityFirstStep { n, re } => cavity_first_step(n, re)?,
            ProblemSource::ChamberFirstStep { re } => chamber_first_step(re)?,
            ProblemSource::Manufactured { nodes } => manufactured_neumann(nodes)?.0,
        })
    }
}

/// `start, start + step, ...` up to and including `stop`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmegaRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl OmegaRange {
    pub fn single(omega: f64) -> Self {
        Self {
            start: omega,
            stop: omega,
            step: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if !(self.step > 0.0) {
            return Err(BenchError::InvalidSpec(format!("sweep step must be positive, got {}", self.step)));
        }
        if !(self.start > 0.0 && self.stop < 2.0 && self.start <= self.stop) {
            return Err(BenchError::InvalidSpec(format!(
                "sweep range {}..{} must satisfy 0 < start <= stop < 2",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    /// Grid values, rounded to 12 decimals so `1.0 + 3 * 0.05` prints as `1.15`.
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| ((self.start + k as f64 * self.step) * 1e12).round() / 1e12)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub source: ProblemSource,
    pub configs: Vec<SolverConfig>,
    /// When set, every method that uses a relaxation parameter is first swept
    /// over this range and raced at its best value.
    pub sweep: Option<OmegaRange>,
    /// Timed solves per method; the median is reported.
    pub repetitions: usize,
}

impl ExperimentSpec {
    pub fn new(source: ProblemSource, configs: Vec<SolverConfig>) -> Self {
        Self {
            source,
            configs,
            sweep: None,
            repetitions: 1,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.repetitions < 1 {
            return Err(BenchError::InvalidSpec("repetitions must be at least 1".into()));
        }
        if let Some(r) = &self.sweep {
            r.validate()?;
        }
        for c in &self.configs {
            c.validate()?;
        }
        Ok(())
    }
}

/// Outcome of one method in a race.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodResult {
    pub method: Method,
    pub omega: f64,
    pub iterations: usize,
    pub work_units: f64,
    /// Median over the repetitions.
    pub wall_clock_s: f64,
    pub converged: bool,
    pub trace: ConvergenceTrace,
}

impl MethodResult {
    pub fn row(&self) -> ReportRow {
        ReportRow {
            method: self.method,
            omega: self.omega,
            iterations: self.iterations,
            work_units: self.work_units,
            wall_clock_s: self.wall_clock_s,
            converged: self.converged,
        }
    }
}

/// Iterations for each relaxation parameter of one method.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub method: Method,
    /// `(omega, iterations)`; non-converged solves count as `max_iter`.
    pub series: Vec<(f64, usize)>,
    pub best_omega: f64,
    pub best_iterations: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ComparisonReport {
    /// Sorted by work units.
    pub results: Vec<MethodResult>,
    pub sweeps: Vec<SweepResult>,
}

impl ComparisonReport {
    pub fn result(&self, method: Method) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.method == method)
    }

    pub fn rows(&self) -> Vec<ReportRow> {
        self.results.iter().map(MethodResult::row).collect()
    }
}

/// One line of the report table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    pub omega: f64,
    pub iterations: usize,
    pub work_units: f64,
    pub wall_clock_s: f64,
    pub converged: bool,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Solves `problem` once per config from the same initial guess, `repetitions`
/// times each, sequentially on the calling thread.
pub fn race_problem(
    problem: &PoissonProblem,
    configs: &[SolverConfig],
    initial: Option<&crate::field::Field>,
    repetitions: usize,
) -> Result<ComparisonReport, BenchError> {
    if repetitions < 1 {
        return Err(BenchError::InvalidSpec("repetitions must be at least 1".into()));
    }
    let mut results = Vec::with_capacity(configs.len());
    for config in configs {
        let mut times = Vec::with_capacity(repetitions);
        let mut trace = None;
        for _ in 0..repetitions {
            let sol = solve(problem, config, initial)?;
            times.push(sol.trace.wall_clock_s);
            trace.get_or_insert(sol.trace);
        }
        let trace = trace.expect("at least one repetition");
        results.push(MethodResult {
            method: config.method,
            omega: config.omega,
            iterations: trace.iterations,
            work_units: trace.work_units,
            wall_clock_s: median(times),
            converged: trace.converged,
            trace,
        });
    }
    results.sort_by(|a, b| a.work_units.total_cmp(&b.work_units));
    Ok(ComparisonReport {
        results,
        sweeps: Vec::new(),
    })
}

/// Runs the experiment: optional sweeps, then the race on the shared problem.
pub fn race(spec: &ExperimentSpec) -> Result<ComparisonReport, BenchError> {
    spec.validate()?;
    let problem = spec.source.build()?;
    let mut configs = spec.configs.clone();
    let mut sweeps = Vec::new();
    if let Some(range) = &spec.sweep {
        for config in configs.iter_mut().filter(|c| c.method.uses_omega()) {
            let s = sweep_problem(&problem, config, range)?;
            config.omega = s.best_omega;
            sweeps.push(s);
        }
    }
    let mut report = race_problem(&problem, &configs, None, spec.repetitions)?;
    report.sweeps = sweeps;
    Ok(report)
}

/// One solve per relaxation parameter, distributed over threads. The best
/// value minimises iterations, ties going to the smaller parameter.
pub fn sweep_problem(problem: &PoissonProblem, base: &SolverConfig, range: &OmegaRange) -> Result<SweepResult, BenchError> {
    range.validate()?;
    let series = range
        .values()
        .into_par_iter()
        .map(|omega| {
            let config = base.with_omega(omega);
            let trace = solve(problem, &config, None)?.trace;
            Ok((omega, if trace.converged { trace.iterations } else { config.max_iter }))
        })
        .collect::<Result<Vec<_>, SolverError>>()?;
    let &(best_omega, best_iterations) = series
        .iter()
        .min_by(|a, b| a.1.cmp(&b.1).then(a.0.total_cmp(&b.0)))
        .expect("range has at least one value");
    Ok(SweepResult {
        method: base.method,
        series,
        best_omega,
        best_iterations,
    })
}

/// Sweeps `method` over the spec's range on the spec's problem, using the
/// first config of that method as the base (defaults otherwise).
pub fn relaxation_sweep(spec: &ExperimentSpec, method: Method) -> Result<SweepResult, BenchError> {
    spec.validate()?;
    let range = spec
        .sweep
        .ok_or_else(|| BenchError::InvalidSpec("relaxation sweep needs an omega range".into()))?;
    let base = spec
        .configs
        .iter()
        .find(|c| c.method == method)
        .copied()
        .unwrap_or_else(|| SolverConfig::new(method));
    sweep_problem(&spec.source.build()?, &base, &range)
}

/// Files written by [`emit_report`].
#[derive(Clone, Debug, PartialEq)]
pub struct EmittedFiles {
    pub report: PathBuf,
    pub traces: Vec<PathBuf>,
    pub sweeps: Vec<PathBuf>,
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> BenchError + '_ {
    move |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Report table as CSV text with a header line.
pub fn format_report(rows: &[ReportRow]) -> Result<String, BenchError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(["method", "omega", "iterations", "work_units", "wall_clock_s", "converged"])
        .map_err(csv_err(Path::new("<report>")))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(Path::new("<report>")))?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Io {
        path: PathBuf::from("<report>"),
        source: e.into_error(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn parse_report(text: &str) -> Result<Vec<ReportRow>, BenchError> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<Vec<ReportRow>, _>>()
        .map_err(csv_err(Path::new("<report>")))
}

pub fn trace_file_name(method: Method, omega: f64) -> String {
    format!("trace_{}_w{omega}.csv", method.name())
}

fn write_trace(trace: &ConvergenceTrace, path: &Path) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["iteration", "error", "residual_l2", "elapsed_s"]).map_err(csv_err(path))?;
    for k in 0..trace.iterations {
        w.serialize((k + 1, trace.errors[k], trace.residual_l2[k], trace.elapsed_s[k]))
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_sweep(sweep: &SweepResult, path: &Path) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["omega", "iterations"]).map_err(csv_err(path))?;
    for &(omega, it) in &sweep.series {
        w.serialize((omega, it)).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes `report.csv`, one trace CSV per result and one `sweep_<method>.csv`
/// per sweep into `dir`.
pub fn emit_report(report: &ComparisonReport, dir: &Path) -> Result<EmittedFiles, BenchError> {
    let path = dir.join("report.csv");
    fs::write(&path, format_report(&report.rows())?).map_err(io_err(&path))?;
    let mut traces = Vec::with_capacity(report.results.len());
    for r in &report.results {
        let mut p = dir.join(trace_file_name(r.method, r.omega));
        let mut k = 2;
        while traces.contains(&p) {
            p = dir.join(format!("trace_{}_w{}_{k}.csv", r.method.name(), r.omega));
            k += 1;
        }
        write_trace(&r.trace, &p)?;
        traces.push(p);
    }
    let mut sweeps = Vec::with_capacity(report.sweeps.len());
    for s in &report.sweeps {
        let p = dir.join(format!("sweep_{}.csv", s.method.name()));
        write_sweep(s, &p)?;
        sweeps.push(p);
    }
    Ok(EmittedFiles {
        report: path,
        traces,
        sweeps,
    })
}
