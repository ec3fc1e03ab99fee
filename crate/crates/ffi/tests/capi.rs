use std::ffi::CStr;
use std::ptr;

use projflow_ffi::*;

fn last_error() -> String {
    let p = pf_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn manufactured_problem_solves_with_every_method() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { pf_poisson_manufactured(17, &mut h) }, PfStatus::Ok);
    let (mut nx, mut ny) = (0, 0);
    assert_eq!(unsafe { pf_poisson_shape(h, &mut nx, &mut ny) }, PfStatus::Ok);
    assert_eq!((nx, ny), (16, 16));
    let mut p = vec![0.0; nx * ny];
    for method in [
        PfMethod::Jacobi,
        PfMethod::GaussSeidel,
        PfMethod::Sor,
        PfMethod::SlorA,
        PfMethod::SlorB,
        PfMethod::Adi,
        PfMethod::Multigrid,
    ] {
        let mut cfg = pf_solver_config_default(method);
        cfg.tol = 1e-8;
        cfg.max_iter = 100_000;
        if method == PfMethod::SlorA {
            cfg.omega = 1.2;
        }
        let mut stats = PfSolveStats::default();
        let status = unsafe { pf_poisson_solve(h, &cfg, p.as_mut_ptr(), p.len(), &mut stats) };
        assert_eq!(status, PfStatus::Ok, "{method:?}");
        assert!(stats.converged && stats.iterations > 0 && stats.work_units > 0.0);
        assert!(p.iter().all(|x| x.is_finite()));
    }
    unsafe { pf_poisson_free(h) };
}

#[test]
fn iteration_limit_reports_not_converged_but_fills_outputs() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { pf_poisson_cavity_first_step(16, 100.0, &mut h) }, PfStatus::Ok);
    let mut cfg = pf_solver_config_default(PfMethod::Jacobi);
    cfg.max_iter = 3;
    let mut stats = PfSolveStats::default();
    let mut p = vec![f64::NAN; 256];
    let status = unsafe { pf_poisson_solve(h, &cfg, p.as_mut_ptr(), p.len(), &mut stats) };
    assert_eq!(status, PfStatus::NotConverged);
    assert_eq!(stats.iterations, 3);
    assert!(!stats.converged);
    assert!(p.iter().all(|x| x.is_finite()));
    assert!(last_error().contains("3 iterations"));
    unsafe { pf_poisson_free(h) };
}

#[test]
fn neumann_problem_from_caller_data_matches_core() {
    let (nx, ny) = (8, 6);
    let rhs: Vec<f64> = (0..nx * ny)
        .map(|k| {
            let (i, j) = ((k % nx) as f64, (k / nx) as f64);
            (i - 3.5) * (j - 2.5)
        })
        .collect();
    let mut h = ptr::null_mut();
    let status = unsafe { pf_poisson_neumann(nx, ny, 0.125, 0.125, rhs.as_ptr(), &mut h) };
    assert_eq!(status, PfStatus::Ok);
    let cfg = pf_solver_config_default(PfMethod::Multigrid);
    let mut p = vec![0.0; nx * ny];
    let status = unsafe { pf_poisson_solve(h, &cfg, p.as_mut_ptr(), p.len(), ptr::null_mut()) };
    assert_eq!(status, PfStatus::Ok);
    // The source is antisymmetric about the centre, and so is the solution.
    for j in 0..ny {
        for i in 0..nx {
            let mirror = p[(ny - 1 - j) * nx + (nx - 1 - i)];
            assert!((p[j * nx + i] - mirror).abs() < 1e-6);
        }
    }
    unsafe { pf_poisson_free(h) };
}

#[test]
fn bad_arguments_are_rejected_with_messages() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { pf_poisson_manufactured(17, ptr::null_mut()) }, PfStatus::NullPointer);
    assert_eq!(
        unsafe { pf_poisson_neumann(0, 4, 0.1, 0.1, [0.0].as_ptr(), &mut h) },
        PfStatus::InvalidArgument
    );
    assert!(h.is_null());
    assert!(!last_error().is_empty());

    assert_eq!(unsafe { pf_poisson_manufactured(17, &mut h) }, PfStatus::Ok);
    let mut cfg = pf_solver_config_default(PfMethod::Sor);
    let mut small = [0.0; 4];
    let status = unsafe { pf_poisson_solve(h, &cfg, small.as_mut_ptr(), small.len(), ptr::null_mut()) };
    assert_eq!(status, PfStatus::BufferTooSmall);
    cfg.omega = 2.5;
    let status = unsafe { pf_poisson_solve(h, &cfg, ptr::null_mut(), 0, ptr::null_mut()) };
    assert_eq!(status, PfStatus::InvalidArgument);
    assert!(last_error().contains("relaxation parameter"), "{}", last_error());
    unsafe { pf_poisson_free(h) };
    unsafe { pf_poisson_free(ptr::null_mut()) };
}

#[test]
fn cavity_simulation_steps_and_exposes_fields() {
    let cfg = pf_solver_config_default(PfMethod::Multigrid);
    let mut sim = ptr::null_mut();
    let status = unsafe { pf_simulation_cavity(8, 8, 1.0, 1.0, 1.0, 100.0, 0.2, &cfg, &mut sim) };
    assert_eq!(status, PfStatus::Ok);
    assert_eq!(unsafe { pf_simulation_time(sim) }, 0.0);
    assert_eq!(unsafe { pf_simulation_step(sim, 5) }, PfStatus::Ok);
    assert!(unsafe { pf_simulation_time(sim) } > 0.0);
    assert!(unsafe { pf_simulation_monitor(sim) }.is_finite());
    let (mut nx, mut ny) = (0, 0);
    assert_eq!(unsafe { pf_simulation_shape(sim, &mut nx, &mut ny) }, PfStatus::Ok);
    assert_eq!((nx, ny), (8, 8));
    let mut buf = vec![0.0; nx * ny];
    for f in [PfField::Pressure, PfField::U, PfField::V, PfField::Stream, PfField::Vorticity] {
        assert_eq!(unsafe { pf_simulation_field(sim, f, buf.as_mut_ptr(), buf.len()) }, PfStatus::Ok);
        assert!(buf.iter().all(|x| x.is_finite()));
    }
    // The lid drags the top row to the right.
    unsafe { pf_simulation_field(sim, PfField::U, buf.as_mut_ptr(), buf.len()) };
    assert!(buf[(ny - 1) * nx + nx / 2] > 0.0);
    unsafe { pf_simulation_free(sim) };
    assert!(unsafe { pf_simulation_time(ptr::null()) }.is_nan());
}

#[test]
fn unstable_time_step_is_refused() {
    let cfg = pf_solver_config_default(PfMethod::Sor);
    let mut sim = ptr::null_mut();
    let status = unsafe { pf_simulation_cavity(8, 8, 1.0, 1.0, 1.0, 100.0, 5.0, &cfg, &mut sim) };
    assert_eq!(status, PfStatus::InvalidArgument);
    assert!(sim.is_null());
}

#[test]
fn chamber_simulation_runs() {
    let cfg = pf_solver_config_default(PfMethod::Multigrid);
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { pf_simulation_chamber(1.0, 50.0, 0.2, &cfg, &mut sim) }, PfStatus::Ok);
    assert_eq!(unsafe { pf_simulation_step(sim, 2) }, PfStatus::Ok);
    unsafe { pf_simulation_free(sim) };
}
