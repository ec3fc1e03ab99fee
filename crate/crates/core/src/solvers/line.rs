use crate::field::Field;

use super::stencil::{Operator, EAST, NORTH, SOUTH, WEST};
use super::thomas::thomas_in_place;
use super::{check_omega, PoissonProblem, SolverError};

/// Where line SOR applies the relaxation parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlorVariant {
    /// Relaxation folded into the line system before the Thomas solve: the
    /// diagonal is divided by `omega` and `(1 - omega) / omega` times the old
    /// diagonal term moves to the right-hand side.
    A,
    /// Plain line Gauss-Seidel solve, then `p <- (1 - omega) p_old + omega p_line`.
    B,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Axis {
    X,
    Y,
}

#[derive(Default)]
pub(crate) struct LineScratch {
    ks: Vec<usize>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    cprime: Vec<f64>,
}

impl LineScratch {
    fn reset(&mut self, len: usize) {
        for v in [&mut self.lower, &mut self.diag, &mut self.upper, &mut self.rhs, &mut self.cprime] {
            v.clear();
            v.resize(len, 0.0);
        }
    }
}

/// Implicit solve of one run of consecutive active cells; cross-line
/// neighbours are taken from the current iterate.
fn relax_segment(
    op: &Operator,
    rhs: &[f64],
    p: &mut [f64],
    axis: Axis,
    omega: f64,
    variant: SlorVariant,
    s: &mut LineScratch,
) -> Result<(), SolverError> {
    let len = s.ks.len();
    s.reset(len);
    let (a_along, a_cross) = match axis {
        Axis::X => (op.ax, op.ay),
        Axis::Y => (op.ay, op.ax),
    };
    let m = op.m;
    let (back_bit, fwd_bit, cross_bits, back_step, fwd_step, cross_steps) = match axis {
        Axis::X => (WEST, EAST, [SOUTH, NORTH], 1, 1, [m, m]),
        Axis::Y => (SOUTH, NORTH, [WEST, EAST], m, m, [1, 1]),
    };
    for t in 0..len {
        let k = s.ks[t];
        let l = op.links[k];
        // Neighbours across the line come from the current iterate; the
        // segment ends read fixed ghost values when linked.
        let mut b = -rhs[k];
        if l & cross_bits[0] != 0 {
            b += a_cross * p[k - cross_steps[0]];
        }
        if l & cross_bits[1] != 0 {
            b += a_cross * p[k + cross_steps[1]];
        }
        if t == 0 {
            if l & back_bit != 0 {
                b += a_along * p[k - back_step];
            }
        } else {
            s.lower[t] = -a_along;
        }
        if t + 1 == len {
            if l & fwd_bit != 0 {
                b += a_along * p[k + fwd_step];
            }
        } else {
            s.upper[t] = -a_along;
        }
        let d = op.diag_at(k);
        match variant {
            SlorVariant::A => {
                s.diag[t] = d / omega;
                b += (1.0 - omega) / omega * d * p[k];
            }
            SlorVariant::B => s.diag[t] = d,
        }
        s.rhs[t] = b;
    }
    thomas_in_place(&s.lower, &s.diag, &s.upper, &mut s.rhs, &mut s.cprime)?;
    for t in 0..len {
        let k = s.ks[t];
        p[k] = match variant {
            SlorVariant::A => s.rhs[t],
            SlorVariant::B => (1.0 - omega) * p[k] + omega * s.rhs[t],
        };
    }
    Ok(())
}

/// x-direction lines, rows bottom to top.
pub(crate) fn row_sweep(
    op: &Operator,
    rhs: &Field,
    p: &mut Field,
    omega: f64,
    variant: SlorVariant,
    s: &mut LineScratch,
) -> Result<(), SolverError> {
    let (rhs, p) = (rhs.as_slice(), p.as_mut_slice());
    for j in 1..op.n - 1 {
        let mut i = 1;
        while i < op.m - 1 {
            s.ks.clear();
            while i < op.m - 1 && op.active[j * op.m + i] {
                s.ks.push(j * op.m + i);
                i += 1;
            }
            if !s.ks.is_empty() {
                relax_segment(op, rhs, p, Axis::X, omega, variant, s)?;
            }
            i += 1;
        }
    }
    Ok(())
}

/// y-direction lines, columns left to right.
pub(crate) fn column_sweep(
    op: &Operator,
    rhs: &Field,
    p: &mut Field,
    omega: f64,
    s: &mut LineScratch,
) -> Result<(), SolverError> {
    let (rhs, p) = (rhs.as_slice(), p.as_mut_slice());
    for i in 1..op.m - 1 {
        let mut j = 1;
        while j < op.n - 1 {
            s.ks.clear();
            while j < op.n - 1 && op.active[j * op.m + i] {
                s.ks.push(j * op.m + i);
                j += 1;
            }
            if !s.ks.is_empty() {
                relax_segment(op, rhs, p, Axis::Y, omega, SlorVariant::B, s)?;
            }
            j += 1;
        }
    }
    Ok(())
}

fn check(problem: &PoissonProblem, p: &Field, omega: f64) -> Result<(), SolverError> {
    check_omega(omega)?;
    if p.m() != problem.op.m || p.n() != problem.op.n {
        return Err(SolverError::ShapeMismatch {
            expected: problem.shape(),
            got: (p.m(), p.n()),
        });
    }
    Ok(())
}

/// One line-SOR sweep: every row's tridiagonal system is solved with the
/// neighbouring rows lagged, rows processed bottom to top.
pub fn slor_sweep(
    p: &mut Field,
    problem: &PoissonProblem,
    omega: f64,
    variant: SlorVariant,
) -> Result<(), SolverError> {
    check(problem, p, omega)?;
    row_sweep(&problem.op, problem.rhs(), p, omega, variant, &mut LineScratch::default())
}

/// One ADI cycle: implicit x-lines over all rows, then implicit y-lines over
/// all columns, both relaxed after the line solve.
pub fn adi_sweep(p: &mut Field, problem: &PoissonProblem, omega: f64) -> Result<(), SolverError> {
    check(problem, p, omega)?;
    let mut s = LineScratch::default();
    row_sweep(&problem.op, problem.rhs(), p, omega, SlorVariant::B, &mut s)?;
    column_sweep(&problem.op, problem.rhs(), p, omega, &mut s)
}
