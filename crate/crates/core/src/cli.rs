//! Command-line driver.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::bench::{emit_report, race_problem, sweep_problem, BenchError, ComparisonReport, OmegaRange};
use crate::cases::{first_step_problem, manufactured_neumann, max_interior_error};
use crate::config::{load_config, CaseConfig, CaseKind, ConfigError, PartialConfig};
use crate::flow::{derived_fields, StepError};
use crate::io::{write_snapshot, FieldKind, FieldSnapshot, MonitorWriter, OutputError};
use crate::sim::{Simulation, Steadiness};
use crate::solvers::{solve, Method, Norm, PoissonProblem, SolverConfig, SolverError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(name = "projflow", version, about = "Projection-method flow solver and pressure-Poisson benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time-march a cavity or chamber case.
    Run(CommonArgs),
    /// Solve the first-step pressure problem with several methods.
    Race(CommonArgs),
    /// Iterations against the relaxation parameter.
    SweepOmega(CommonArgs),
    /// Manufactured-solution check of the pressure solvers.
    Mms(CommonArgs),
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

fn parse_pair(s: &str, sep: char) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(sep)
        .ok_or_else(|| format!("expected two integers separated by '{sep}', got {s:?}"))?;
    let p = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

fn parse_monitor(s: &str) -> Result<(usize, usize), String> {
    parse_pair(s, ',')
}

fn parse_smooth(s: &str) -> Result<(usize, usize), String> {
    parse_pair(s, ':')
}

fn parse_range(s: &str) -> Result<OmegaRange, String> {
    let parts: Vec<_> = s.split(':').collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!("expected start:stop:step, got {s:?}"));
    };
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    let range = OmegaRange {
        start: p(a)?,
        stop: p(b)?,
        step: p(c)?,
    };
    range.validate().map_err(|e| e.to_string())?;
    Ok(range)
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML case file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// cavity, chamber or poisson-mms.
    #[arg(long)]
    pub case: Option<CaseKind>,
    /// Interior cells in x (grid lines per side for mms).
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    #[arg(long)]
    pub lx: Option<f64>,
    #[arg(long)]
    pub ly: Option<f64>,
    /// Reynolds number.
    #[arg(long)]
    pub re: Option<f64>,
    /// Lid speed.
    #[arg(long)]
    pub vw: Option<f64>,
    #[arg(long)]
    pub inlet_speed: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Time-step factor in dt = sigma Re h^2.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub cycles: Option<usize>,
    #[arg(long)]
    pub anim_freq: Option<usize>,
    /// Comma-separated method names.
    #[arg(long = "solvers", visible_alias = "solver", value_delimiter = ',', value_parser = parse_method)]
    pub solvers: Vec<Method>,
    #[arg(long)]
    pub omega: Option<f64>,
    /// start:stop:step
    #[arg(long, value_parser = parse_range)]
    pub omega_sweep: Option<OmegaRange>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// max-change, residual-l2 or residual-max.
    #[arg(long)]
    pub norm: Option<Norm>,
    #[arg(long)]
    pub mg_levels: Option<usize>,
    /// pre:post smoothing sweeps.
    #[arg(long, value_parser = parse_smooth)]
    pub mg_smooth: Option<(usize, usize)>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Chamber mask file.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Monitor cell as i,j.
    #[arg(long, value_parser = parse_monitor)]
    pub monitor: Option<(usize, usize)>,
    #[arg(long, default_value_t = 1)]
    pub repetitions: usize,
    /// Accept a time step beyond the stability limit.
    #[arg(long)]
    pub force: bool,
    /// Scale the x-diffusion of G by 1/dy^2 (legacy behaviour).
    #[arg(long)]
    pub paper_code_compat: bool,
    /// Stop a run once max |du/dt| drops below this value.
    #[arg(long)]
    pub steady_tol: Option<f64>,
}

impl CommonArgs {
    fn partial(&self) -> PartialConfig {
        let mut p = PartialConfig {
            case: self.case,
            lx: self.lx,
            ly: self.ly,
            nx: self.nx,
            ny: self.ny,
            re: self.re,
            vw: self.vw,
            inlet_speed: self.inlet_speed,
            dt: self.dt,
            sigma: self.sigma,
            cycles: self.cycles,
            anim_freq: self.anim_freq,
            out_dir: self.out_dir.clone(),
            monitor: self.monitor,
            mask: self.mask.clone(),
            force: self.force.then_some(true),
            paper_code_compat: self.paper_code_compat.then_some(true),
            steady_tol: self.steady_tol,
            ..PartialConfig::default()
        };
        p.solver.method = self.solvers.first().copied();
        p.solver.omega = self.omega;
        p.solver.tol = self.tol;
        p.solver.max_iter = self.max_iter;
        p.solver.norm = self.norm;
        p.solver.multigrid.levels = self.mg_levels;
        p.solver.multigrid.pre_smooth = self.mg_smooth.map(|s| s.0);
        p.solver.multigrid.post_smooth = self.mg_smooth.map(|s| s.1);
        p
    }

    /// Config file merged with the flags; `case` overrides the case key.
    fn load(&self, case: Option<CaseKind>) -> Result<CaseConfig, CliError> {
        let mut flags = self.partial();
        if case.is_some() {
            flags.case = case;
        }
        Ok(load_config(self.config.as_deref(), flags)?)
    }

    fn methods(&self, config: &CaseConfig, default: &[Method]) -> Vec<SolverConfig> {
        let methods = if self.solvers.is_empty() { default.to_vec() } else { self.solvers.clone() };
        methods
            .into_iter()
            .map(|m| SolverConfig {
                method: m,
                omega: if m.uses_omega() { config.solver.omega } else { 1.0 },
                ..config.solver
            })
            .collect()
    }
}

fn create_dir(config: &CaseConfig) -> Result<(), CliError> {
    fs::create_dir_all(&config.out_dir).map_err(|e| OutputError::io(&config.out_dir, e))?;
    Ok(())
}

fn pressure_problem(config: &CaseConfig) -> Result<PoissonProblem, CliError> {
    match config.case {
        CaseKind::PoissonMms => Ok(manufactured_neumann(config.nx)?.0),
        _ => {
            let (grid, bcs) = config.flow_setup()?;
            Ok(first_step_problem(&grid, &bcs, &config.time_step(&grid))?)
        }
    }
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::Output(OutputError::io("<stdout>", e))
}

/// Runs the selected subcommand, printing to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Run(a) => cmd_run(&a, out),
        Command::Race(a) => cmd_race(&a, out),
        Command::SweepOmega(a) => cmd_sweep(&a, out),
        Command::Mms(a) => cmd_mms(&a, out),
    }
}

fn write_fields(sim: &Simulation, cycle: Option<usize>, dir: &std::path::Path, all: bool) -> Result<(), OutputError> {
    let s = sim.state();
    for (kind, field) in [(FieldKind::Pressure, &s.p), (FieldKind::U, &s.u), (FieldKind::V, &s.v)] {
        write_snapshot(&FieldSnapshot::from_field(kind, cycle, field), dir)?;
    }
    if all {
        let (psi, vor) = derived_fields(s, sim.grid());
        write_snapshot(&FieldSnapshot::from_field(FieldKind::Stream, cycle, &psi), dir)?;
        write_snapshot(&FieldSnapshot::from_field(FieldKind::Vorticity, cycle, &vor), dir)?;
    }
    Ok(())
}

fn cmd_run(a: &CommonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = a.load(None)?;
    if config.case == CaseKind::PoissonMms {
        return Err(CliError::Usage("run needs a cavity or chamber case; use `mms` for poisson-mms".into()));
    }
    let (grid, bcs) = config.flow_setup()?;
    let params = config.time_step(&grid);
    let mut sim = if config.force {
        Simulation::new_unchecked(grid, bcs, params, config.solver)?
    } else {
        Simulation::new(grid, bcs, params, config.solver)?
    };
    if let Some(m) = config.monitor {
        sim = sim.with_monitor(m)?;
    }
    create_dir(&config)?;
    let dir = config.out_dir.clone();
    fs::write(dir.join("case.toml"), config.to_toml()).map_err(|e| OutputError::io(dir.join("case.toml"), e))?;
    writeln!(out, "case {} {}x{} Re={} dt={} solver={} omega={}", config.case, sim.grid().nx(), sim.grid().ny(), params.re, params.dt, config.solver.method, config.solver.omega).map_err(stdout_err)?;
    let mut monitor = MonitorWriter::create(&dir.join("Time_U.csv"))?;
    let steady = config.steady_tol.map(|tol| Steadiness { tol });
    let anim = config.anim_freq;
    let summary = sim.run::<CliError>(config.cycles, steady, |s| {
        monitor.record(s.time(), s.monitor_value())?;
        if anim > 0 && s.steps() % anim == 0 {
            write_fields(s, Some(s.steps()), &dir, false)?;
        }
        Ok(())
    })?;
    monitor.finish()?;
    write_fields(&sim, None, &dir, true)?;
    writeln!(
        out,
        "steps {} time {} steady {} max|du/dt| {:e} pressure iterations {}",
        summary.steps, summary.time, summary.steady, summary.rate, summary.poisson_iterations
    )
    .map_err(stdout_err)?;
    Ok(())
}

fn print_report(report: &ComparisonReport, out: &mut dyn Write) -> std::io::Result<()> {
    for s in &report.sweeps {
        writeln!(out, "{} best omega {} ({} iterations)", s.method, s.best_omega, s.best_iterations)?;
    }
    writeln!(out, "{:<10} {:>6} {:>10} {:>12} {:>12} {:>9}", "method", "omega", "iterations", "work_units", "wall_s", "converged")?;
    for r in &report.results {
        writeln!(
            out,
            "{:<10} {:>6} {:>10} {:>12} {:>12.6} {:>9}",
            r.method.name(),
            r.omega,
            r.iterations,
            r.work_units,
            r.wall_clock_s,
            r.converged
        )?;
    }
    Ok(())
}

fn cmd_race(a: &CommonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = a.load(None)?;
    let problem = pressure_problem(&config)?;
    let mut configs = a.methods(&config, &Method::ALL);
    let mut sweeps = Vec::new();
    if let Some(range) = &a.omega_sweep {
        for c in configs.iter_mut().filter(|c| c.method.uses_omega()) {
            let s = sweep_problem(&problem, c, range)?;
            c.omega = s.best_omega;
            sweeps.push(s);
        }
    }
    let mut report = race_problem(&problem, &configs, None, a.repetitions)?;
    report.sweeps = sweeps;
    create_dir(&config)?;
    let files = emit_report(&report, &config.out_dir)?;
    print_report(&report, out).map_err(stdout_err)?;
    writeln!(out, "wrote {}", files.report.display()).map_err(stdout_err)?;
    Ok(())
}

fn cmd_sweep(a: &CommonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = a.load(None)?;
    let problem = pressure_problem(&config)?;
    let range = a.omega_sweep.unwrap_or(OmegaRange {
        start: 1.0,
        stop: 1.95,
        step: 0.05,
    });
    let configs = a.methods(&config, &[Method::Sor]);
    let mut report = ComparisonReport::default();
    for c in &configs {
        if !c.method.uses_omega() {
            return Err(CliError::Usage(format!("{} has no relaxation parameter to sweep", c.method)));
        }
        report.sweeps.push(sweep_problem(&problem, c, &range)?);
    }
    create_dir(&config)?;
    let files = emit_report(&report, &config.out_dir)?;
    for s in &report.sweeps {
        for (w, it) in &s.series {
            writeln!(out, "{} omega {w} iterations {it}", s.method).map_err(stdout_err)?;
        }
    }
    print_report(&report, out).map_err(stdout_err)?;
    for p in files.sweeps {
        writeln!(out, "wrote {}", p.display()).map_err(stdout_err)?;
    }
    Ok(())
}

fn cmd_mms(a: &CommonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = a.load(Some(CaseKind::PoissonMms))?;
    let (problem, exact) = manufactured_neumann(config.nx)?;
    for c in a.methods(&config, &[Method::Multigrid]) {
        let sol = solve(&problem, &c, None)?;
        // The solution is fixed up to a constant; compare with zero means.
        let mut shifted = exact.clone();
        let mean = active_mean(&problem, &sol.p) - active_mean(&problem, &exact);
        shifted.as_mut_slice().iter_mut().for_each(|v| *v += mean);
        let e = max_interior_error(&sol.p, &shifted);
        writeln!(
            out,
            "{} nodes {} iterations {} converged {} max-error {:e}",
            c.method, config.nx, sol.trace.iterations, sol.trace.converged, e
        )
        .map_err(stdout_err)?;
        let factors: Vec<String> = sol.trace.reduction_factors().iter().map(|f| format!("{f:.4}")).collect();
        writeln!(out, "  reduction factors: {}", factors.join(" ")).map_err(stdout_err)?;
    }
    Ok(())
}

fn active_mean(problem: &PoissonProblem, f: &crate::field::Field) -> f64 {
    let (m, n) = problem.shape();
    let mut sum = 0.0;
    let mut count = 0usize;
    for j in 1..n - 1 {
        for i in 1..m - 1 {
            if problem.is_active(i, j) {
                sum += f[(i, j)];
                count += 1;
            }
        }
    }
    sum / count as f64
}
