use crate::field::Field;

use super::stencil::Operator;
use super::{check_omega, PoissonProblem, SolverError};

pub(crate) fn jacobi_into(op: &Operator, rhs: &Field, src: &Field, dst: &mut Field) {
    let (src, rhs) = (src.as_slice(), rhs.as_slice());
    let dst = dst.as_mut_slice();
    for j in 1..op.n - 1 {
        for i in 1..op.m - 1 {
            let k = j * op.m + i;
            if op.active[k] {
                dst[k] = op.point_value(src, rhs, k);
            }
        }
    }
}

/// In-place Gauss-Seidel. Zero-gradient ghosts follow the cell they copy
/// as it is updated, so each cell's equation holds exactly after its update.
pub(crate) fn gauss_seidel_in_place(op: &Operator, rhs: &Field, p: &mut Field) {
    let rhs = rhs.as_slice();
    let p = p.as_mut_slice();
    for j in 1..op.n - 1 {
        for i in 1..op.m - 1 {
            let k = j * op.m + i;
            if op.active[k] {
                p[k] = op.exact_point_value(p, rhs, k);
            }
        }
    }
}

pub(crate) fn sor_in_place(op: &Operator, rhs: &Field, p: &mut Field, omega: f64) {
    let rhs = rhs.as_slice();
    let p = p.as_mut_slice();
    for j in 1..op.n - 1 {
        for i in 1..op.m - 1 {
            let k = j * op.m + i;
            if op.active[k] {
                let gs = op.exact_point_value(p, rhs, k);
                p[k] = (1.0 - omega) * p[k] + omega * gs;
            }
        }
    }
}

fn check_shape(problem: &PoissonProblem, p: &Field) -> Result<(), SolverError> {
    if p.m() != problem.op.m || p.n() != problem.op.n {
        return Err(SolverError::ShapeMismatch {
            expected: problem.shape(),
            got: (p.m(), p.n()),
        });
    }
    Ok(())
}

/// One Jacobi sweep. Every update reads the previous iterate; `p` is left
/// untouched and the new iterate is returned.
pub fn jacobi_sweep(p: &Field, problem: &PoissonProblem) -> Result<Field, SolverError> {
    check_shape(problem, p)?;
    let mut out = p.clone();
    jacobi_into(&problem.op, problem.rhs(), p, &mut out);
    Ok(out)
}

/// One lexicographic Gauss-Seidel sweep in place (x fastest, rows bottom to
/// top).
pub fn gauss_seidel_sweep(p: &mut Field, problem: &PoissonProblem) -> Result<(), SolverError> {
    check_shape(problem, p)?;
    gauss_seidel_in_place(&problem.op, problem.rhs(), p);
    Ok(())
}

/// One over-relaxed Gauss-Seidel sweep: `p <- (1 - omega) p + omega p_gs`.
pub fn sor_sweep(p: &mut Field, problem: &PoissonProblem, omega: f64) -> Result<(), SolverError> {
    check_omega(omega)?;
    check_shape(problem, p)?;
    sor_in_place(&problem.op, problem.rhs(), p, omega);
    Ok(())
}
