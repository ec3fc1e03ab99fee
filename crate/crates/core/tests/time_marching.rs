use projflow::cases::{cavity, initial_state};
use projflow::flow::{advance_step, StepError, TimeStepParams};
use projflow::grid::divergence;
use projflow::io::{read_snapshot, write_monitor};
use projflow::sim::{Simulation, Steadiness};
use projflow::solvers::{Method, SolverConfig};

fn cavity_sim(n: usize, vw: f64) -> Simulation {
    let (grid, bcs) = cavity(n, n, 1.0, 1.0, vw).unwrap();
    let params = TimeStepParams::from_sigma(100.0, 0.2, &grid, 0);
    Simulation::new(grid, bcs, params, SolverConfig::new(Method::Multigrid).with_tol(1e-8)).unwrap()
}

#[test]
fn rest_state_monitor_is_zero() {
    let mut sim = cavity_sim(8, 0.0);
    let mut series = Vec::new();
    sim.run::<StepError>(10, None, |s| {
        series.push((s.time(), s.monitor_value()));
        Ok(())
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("Time_U.csv");
    write_monitor(&series, &path).unwrap();
    let rows = read_snapshot(&path).unwrap();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r[1] == 0.0));
}

#[test]
fn cavity_monitor_series_flattens_at_steady_state() {
    let mut sim = cavity_sim(16, 1.0);
    let mut series = Vec::new();
    let summary = sim
        .run::<StepError>(20_000, Some(Steadiness { tol: 1e-5 }), |s| {
            series.push(s.monitor_value());
            Ok(())
        })
        .unwrap();
    assert!(summary.steady, "{summary:?}");
    let tail = &series[series.len() - 20..];
    for w in tail.windows(2) {
        assert!((w[1] - w[0]).abs() < 1e-5, "{w:?}");
    }
    // The primary vortex makes the flow below the centre run against the lid.
    let (i, j) = sim.monitor();
    assert!(j < 16 / 2 && series.last().unwrap() < &0.0, "monitor at ({i}, {j})");
}

#[test]
fn compat_flag_changes_only_the_g_diffusion_term() {
    // On square cells dx = dy and the flag is invisible.
    let (grid, bcs) = cavity(8, 8, 1.0, 1.0, 1.0).unwrap();
    let solver = SolverConfig::new(Method::GaussSeidel).with_tol(1e-12);
    let params = TimeStepParams::from_sigma(100.0, 0.1, &grid, 1);
    let compat = TimeStepParams {
        paper_code_compat: true,
        ..params
    };
    let s0 = initial_state(&grid, &bcs).unwrap();
    let (a, _) = advance_step(&s0, &params, &grid, &bcs, &solver).unwrap();
    let (b, _) = advance_step(&s0, &compat, &grid, &bcs, &solver).unwrap();
    assert_eq!(a, b);

    // On stretched cells the v predictor changes once v varies in x.
    let (grid, bcs) = cavity(8, 4, 1.0, 1.0, 1.0).unwrap();
    let params = TimeStepParams::from_sigma(100.0, 0.1, &grid, 1);
    let compat = TimeStepParams {
        paper_code_compat: true,
        ..params
    };
    let s0 = initial_state(&grid, &bcs).unwrap();
    let (s1, _) = advance_step(&s0, &params, &grid, &bcs, &solver).unwrap();
    let (a, _) = advance_step(&s1, &params, &grid, &bcs, &solver).unwrap();
    let (b, _) = advance_step(&s1, &compat, &grid, &bcs, &solver).unwrap();
    assert_ne!(a.v_f, b.v_f);
    assert!(divergence(&a, &grid).interior_max_abs() < 1e-10);
    assert!(divergence(&b, &grid).interior_max_abs() < 1e-10);
}
