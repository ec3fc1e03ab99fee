//! Acceptance checks. Each criterion prints one PASS or FAIL line; the
//! process exits nonzero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use common::{max_diff_mean_free, max_interior_diff, unimodal_up_to_plateau, DirichletCase};
use projflow::bench::{race, ComparisonReport, ExperimentSpec, OmegaRange, ProblemSource};
use projflow::cases::{cavity, cavity_first_step, chamber_first_step, initial_state, manufactured_neumann};
use projflow::cli::{run, Cli};
use projflow::config::{load_config, CaseKind, ConfigError, PartialConfig};
use projflow::flow::{
    corner_products, intermediate_velocities, poisson_rhs, stability_check, velocity_correction, TimeStepParams,
    DEFAULT_SIGMA,
};
use projflow::grid::divergence;
use projflow::sim::{sample_profile, Simulation, Steadiness};
use projflow::solvers::{solve, Method, Norm, PoissonProblem, SolverConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn within_budget(start: Instant, budget_s: f64, msg: String) -> Outcome {
    let t = start.elapsed().as_secs_f64();
    ensure(t < budget_s, format!("{msg}; {t:.2}s of {budget_s}s budget"))
}

fn default_omega(method: Method) -> f64 {
    match method {
        Method::Sor | Method::SlorB => 1.5,
        Method::SlorA => 1.2,
        Method::Adi => 1.3,
        _ => 1.0,
    }
}

fn manufactured_convergence() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for method in Method::ALL {
        let config = SolverConfig::new(method)
            .with_omega(default_omega(method))
            .with_tol(1e-11)
            .with_max_iter(200_000);
        let mut errors = [0.0; 2];
        for (k, nodes) in [17, 33].into_iter().enumerate() {
            let (problem, exact) = manufactured_neumann(nodes).unwrap();
            let sol = solve(&problem, &config, None).unwrap();
            ok &= sol.trace.converged;
            errors[k] = max_diff_mean_free(&sol.p, &exact);
        }
        let ratio = errors[0] / errors[1];
        ok &= (3.4..=4.6).contains(&ratio);
        lines.push(format!("{method} {ratio:.3}"));
    }
    let msg = format!("error ratio 17->33 in [3.4, 4.6]: {}", lines.join(", "));
    if !ok {
        return Err(msg);
    }
    within_budget(start, 10.0, msg)
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let tol = 1e-10;
    let mut worst = 0.0f64;
    for k in 0..10 {
        let (nx, ny) = [(1, 1), (2, 3), (5, 5), (4, 6), (3, 8), (1, 25), (25, 1), (5, 4), (2, 12), (4, 4)][k];
        let case = DirichletCase::random(&mut rng, nx, ny);
        let problem = case.problem();
        let oracle = case.oracle();
        for method in Method::ALL {
            let config = SolverConfig::new(method).with_omega(default_omega(method)).with_tol(tol);
            let sol = solve(&problem, &config, None).unwrap();
            let err = max_interior_diff(&sol.p, &oracle);
            worst = worst.max(err);
            if !(sol.trace.converged && err <= 10.0 * tol) {
                return Err(format!("{method} on {nx}x{ny}: error {err:e} > {:e}", 10.0 * tol));
            }
        }
    }
    within_budget(start, 1.0, format!("10 problems x 7 methods, worst error {worst:.2e} <= {:e}", 10.0 * tol))
}

fn jacobi_gs_ratio() -> Outcome {
    let start = Instant::now();
    let problem = cavity_first_step(60, 100.0).unwrap();
    let it = |m| {
        let t = solve(&problem, &SolverConfig::new(m).with_tol(1e-6), None).unwrap().trace;
        assert!(t.converged);
        t.iterations
    };
    let (j, g) = (it(Method::Jacobi), it(Method::GaussSeidel));
    let ratio = j as f64 / g as f64;
    let msg = format!("Jacobi {j} / GS {g} = {ratio:.3} in [1.7, 2.3]");
    if !(1.7..=2.3).contains(&ratio) {
        return Err(msg);
    }
    within_budget(start, 30.0, msg)
}

static CHAMBER_RACE: OnceLock<(ComparisonReport, f64)> = OnceLock::new();

fn chamber_race() -> &'static (ComparisonReport, f64) {
    CHAMBER_RACE.get_or_init(|| {
        let start = Instant::now();
        let spec = ExperimentSpec {
            sweep: Some(OmegaRange {
                start: 1.0,
                stop: 1.95,
                step: 0.05,
            }),
            ..ExperimentSpec::new(
                ProblemSource::ChamberFirstStep { re: 100.0 },
                Method::ALL.iter().map(|&m| SolverConfig::new(m).with_tol(1e-6)).collect(),
            )
        };
        let report = race(&spec).unwrap();
        (report, start.elapsed().as_secs_f64())
    })
}

fn solver_ordering() -> Outcome {
    let (report, seconds) = chamber_race();
    let w = |m| {
        let r = report.result(m).unwrap();
        if r.converged {
            r.work_units
        } else {
            f64::INFINITY
        }
    };
    let (mg, slorb, adi, sor, gs, jac) = (
        w(Method::Multigrid),
        w(Method::SlorB),
        w(Method::Adi),
        w(Method::Sor),
        w(Method::GaussSeidel),
        w(Method::Jacobi),
    );
    let line = slorb.min(adi);
    let msg = format!(
        "work units multigrid {mg} < min(slorb {slorb}, adi {adi}) < sor {sor} < gs {gs} < jacobi {jac}; {seconds:.1}s of 300s"
    );
    ensure(mg < line && line < sor && sor < gs && gs < jac && *seconds < 300.0, msg)
}

fn omega_optima() -> Outcome {
    let (report, _) = chamber_race();
    let mut parts = Vec::new();
    let mut ok = true;
    for m in [Method::Sor, Method::SlorA, Method::SlorB, Method::Adi] {
        let s = report.sweeps.iter().find(|s| s.method == m).unwrap();
        let iters: Vec<usize> = s.series.iter().map(|x| x.1).collect();
        let interior = s.best_omega > 1.0 && s.best_omega < 1.95;
        let shape = unimodal_up_to_plateau(&iters);
        ok &= interior && shape;
        parts.push(format!("{m} {} ({} it{})", s.best_omega, s.best_iterations, if shape { "" } else { ", not unimodal" }));
    }
    let best = |m| report.sweeps.iter().find(|s| s.method == m).unwrap().best_omega;
    ok &= best(Method::Sor) > best(Method::SlorB);
    ensure(ok, format!("optima {}; sor > slorb", parts.join(", ")))
}

fn omega_one_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut problems: Vec<PoissonProblem> = vec![chamber_first_step(100.0).unwrap(), cavity_first_step(20, 100.0).unwrap()];
    problems.extend((0..3).map(|_| DirichletCase::random(&mut rng, 6, 5).problem()));
    let bits = |p: &projflow::field::Field| p.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    for (k, problem) in problems.iter().enumerate() {
        for (a, b) in [(Method::Sor, Method::GaussSeidel), (Method::SlorA, Method::SlorB)] {
            let sa = solve(problem, &SolverConfig::new(a).with_omega(1.0), None).unwrap();
            let sb = solve(problem, &SolverConfig::new(b).with_omega(1.0), None).unwrap();
            if bits(&sa.p) != bits(&sb.p) || sa.trace.errors != sb.trace.errors {
                return Err(format!("{a} and {b} differ at omega 1 on problem {k}"));
            }
        }
    }
    Ok(format!("sor == gs and slora == slorb bitwise on {} problems", problems.len()))
}

fn multigrid_efficiency() -> Outcome {
    let mean_factor = |nodes| {
        let (problem, _) = manufactured_neumann(nodes).unwrap();
        let t = solve(&problem, &SolverConfig::new(Method::Multigrid).with_tol(1e-6), None).unwrap().trace;
        let f = t.reduction_factors();
        (t.iterations, t.converged, f.iter().product::<f64>().powf(1.0 / f.len() as f64))
    };
    let (cycles, converged, f33) = mean_factor(33);
    let (_, _, f65) = mean_factor(65);
    let spread = f33.max(f65) / f33.min(f65);
    ensure(
        converged && cycles <= 10 && spread <= 2.0,
        format!("{cycles} V(2,2) cycles on 33x33 (<= 10); mean factor 33: {f33:.3}, 65: {f65:.3}, spread {spread:.2} (<= 2)"),
    )
}

/// One projection step with its pressure problem kept for inspection.
fn step_with_problem(n: usize, solver: &SolverConfig) -> (f64, f64, f64) {
    let (grid, bcs) = cavity(n, n, 1.0, 1.0, 1.0).unwrap();
    let params = TimeStepParams::from_sigma(100.0, DEFAULT_SIGMA, &grid, 1);
    let state = initial_state(&grid, &bcs).unwrap();
    let inter = intermediate_velocities(&state, &corner_products(&state, &grid), &params, &grid).unwrap();
    let problem = PoissonProblem::neumann(&grid, poisson_rhs(&inter, &params, &grid).unwrap()).unwrap();
    let sol = solve(&problem, solver, Some(&state.p)).unwrap();
    assert!(sol.trace.converged);
    let next = velocity_correction(&state, &inter, &sol.p, &params, &grid, &bcs).unwrap();
    let div = divergence(&next, &grid);
    let res = problem.residual(&sol.p);
    let mut scaled = res.clone();
    scaled.as_mut_slice().iter_mut().for_each(|v| *v *= params.dt);
    (div.interior_max_abs(), max_interior_diff(&div, &scaled), params.dt)
}

fn projection_consistency() -> Outcome {
    let tol = 1e-6;
    let cfg = SolverConfig::new(Method::Multigrid).with_tol(tol).with_norm(Norm::ResidualMax);
    let (div, identity, dt) = step_with_problem(60, &cfg);
    let exact = SolverConfig::new(Method::GaussSeidel).with_tol(1e-13).with_norm(Norm::ResidualMax);
    let (div_small, identity_small, _) = step_with_problem(6, &exact);
    ensure(
        div <= dt * tol * (1.0 + 1e-6) + 1e-14 && identity <= 1e-12 && identity_small <= 1e-14 && div_small <= 1e-13,
        format!(
            "60x60: max|div| {div:.2e} <= dt*tol {:.2e}, |div - dt*residual| {identity:.1e}; exactly solved 6x6: max|div| {div_small:.1e}",
            dt * tol
        ),
    )
}

fn grid_independence() -> Outcome {
    let start = Instant::now();
    let profile = |n| {
        let (grid, bcs) = cavity(n, n, 1.0, 1.0, 1.0).unwrap();
        let params = TimeStepParams::from_sigma(100.0, 0.2, &grid, 0);
        let solver = SolverConfig::new(Method::Multigrid).with_tol(1e-7);
        let mut sim = Simulation::new(grid, bcs, params, solver).unwrap();
        let s = sim
            .run::<projflow::flow::StepError>(50_000, Some(Steadiness { tol: 1e-4 }), |_| Ok(()))
            .unwrap();
        assert!(s.steady, "{n}x{n} did not reach the steadiness tolerance");
        sim.centerline_u(0.5)
    };
    let (a, b) = (profile(60), profile(80));
    let diff = (0..=200)
        .map(|k| {
            let y = k as f64 / 200.0;
            (sample_profile(&a, y) - sample_profile(&b, y)).abs()
        })
        .fold(0.0f64, f64::max);
    let min_u = b.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let t = start.elapsed().as_secs_f64();
    ensure(
        diff < 0.02,
        format!("max centerline difference 60 vs 80: {diff:.2e} (< 0.02 lid speed); min u {min_u:.4}; {t:.1}s"),
    )
}

fn stability_gate() -> Outcome {
    let (grid, _) = cavity(60, 60, 1.0, 1.0, 1.0).unwrap();
    let report = stability_check(&TimeStepParams::from_sigma(100.0, DEFAULT_SIGMA, &grid, 1), &grid);
    let dx = 1.0 / 60.0;
    let flags = PartialConfig {
        case: Some(CaseKind::Cavity),
        nx: Some(60),
        ny: Some(60),
        re: Some(100.0),
        dt: Some(0.3 * 100.0 * dx * dx),
        ..PartialConfig::default()
    };
    let refused = matches!(load_config(None, flags.clone()), Err(ConfigError::Unstable { .. }));
    let forced = load_config(None, PartialConfig { force: Some(true), ..flags }).is_ok();
    let out = tempfile::tempdir().unwrap();
    let dt = format!("{}", 0.3 * 100.0 * dx * dx);
    let args = |extra: &[&str]| {
        let mut v = vec!["projflow", "run", "--case", "cavity", "--nx", "60", "--ny", "60", "--re", "100", "--dt", &dt];
        v.extend_from_slice(&["--cycles", "1", "--out-dir", out.path().to_str().unwrap()]);
        v.extend_from_slice(extra);
        v.into_iter().map(String::from).collect::<Vec<_>>()
    };
    let mut sink = Vec::new();
    let cli_refused = run(<Cli as clap::Parser>::parse_from(args(&[])), &mut sink).is_err();
    let cli_forced = run(<Cli as clap::Parser>::parse_from(args(&["--force"])), &mut sink).is_ok();
    ensure(
        report.passed && (report.ratio - 0.0025).abs() < 1e-15 && refused && forced && cli_refused && cli_forced,
        format!(
            "default ratio {} passes {}; ratio 0.3 refused {refused} (cli {cli_refused}), accepted with --force {forced} (cli {cli_forced})",
            report.ratio, report.limit
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("manufactured-solution convergence", manufactured_convergence),
        ("oracle equivalence", oracle_equivalence),
        ("jacobi/gs ratio", jacobi_gs_ratio),
        ("solver ordering", solver_ordering),
        ("omega optima", omega_optima),
        ("omega=1 identities", omega_one_identities),
        ("multigrid efficiency", multigrid_efficiency),
        ("projection consistency", projection_consistency),
        ("grid independence", grid_independence),
        ("stability gate", stability_gate),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(msg) => println!("PASS  {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name}: {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
