use std::path::{Path, PathBuf};
use std::process::Command;

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/projflow.h")
}

#[test]
fn header_declares_every_entry_point() {
    let text = std::fs::read_to_string(header()).unwrap();
    let src = include_str!("../src/lib.rs");
    let exported: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exported.len() >= 15, "{exported:?}");
    for name in exported {
        assert!(text.contains(&format!("{name}(")), "{name} missing from header");
    }
    for ty in ["typedef struct PfPoisson PfPoisson;", "typedef struct PfSimulation PfSimulation;", "PF_STATUS_NOT_CONVERGED"] {
        assert!(text.contains(ty), "{ty}");
    }
}

/// Compiles and runs a small C program against the header and static library.
#[test]
fn c_program_links_and_solves() {
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    let lib = lib_dir.join("libprojflow_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let Some(cc) = which_cc() else {
        eprintln!("no C compiler available, skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let c_file = dir.path().join("smoke.c");
    std::fs::write(&c_file, C_SMOKE).unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new(cc)
        .arg(&c_file)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("converged 1"), "{stdout}");
}

fn which_cc() -> Option<&'static str> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
}

const C_SMOKE: &str = r#"
#include <stdio.h>
#include "projflow.h"

int main(void) {
    PfPoisson *h = NULL;
    if (pf_poisson_manufactured(33, &h) != PF_STATUS_OK) return 1;
    PfSolverConfig cfg = pf_solver_config_default(PF_METHOD_MULTIGRID);
    size_t nx, ny;
    pf_poisson_shape(h, &nx, &ny);
    double p[32 * 32];
    PfSolveStats stats;
    PfStatus s = pf_poisson_solve(h, &cfg, p, nx * ny, &stats);
    printf("status %d converged %d iterations %zu\n", (int)s, (int)stats.converged, stats.iterations);
    pf_poisson_free(h);

    PfPoisson *bad = NULL;
    if (pf_poisson_neumann(0, 0, 1.0, 1.0, p, &bad) != PF_STATUS_INVALID_ARGUMENT) return 2;
    if (pf_last_error_message() == NULL) return 3;
    return s == PF_STATUS_OK ? 0 : 4;
}
"#;
