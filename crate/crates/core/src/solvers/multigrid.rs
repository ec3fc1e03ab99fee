//! Cell-centred geometric multigrid: Gauss-Seidel smoothing, full-weighting
//! restriction (adjoint of bilinear interpolation) and bilinear prolongation,
//! with the coarse operator rediscretized at twice the spacing.

use crate::field::Field;

use super::point::gauss_seidel_in_place;
use super::stencil::{Operator, EAST, NORTH, SOUTH, WEST};
use super::{MultigridConfig, PoissonProblem, SolverError};

struct Level {
    op: Operator,
    p: Field,
    rhs: Field,
    res: Field,
    /// Active cells relative to the finest level.
    weight: f64,
}

/// Grid levels from finest (index 0) to coarsest.
pub struct Hierarchy {
    levels: Vec<Level>,
}

fn can_coarsen(op: &Operator) -> bool {
    op.nx() % 2 == 0 && op.ny() % 2 == 0 && op.nx() >= 4 && op.ny() >= 4
}

fn coarsen(fine: &Operator) -> Operator {
    let (nxc, nyc) = (fine.nx() / 2, fine.ny() / 2);
    let (mc, nc) = (nxc + 2, nyc + 2);
    let fa = |i: usize, j: usize| fine.active[j * fine.m + i];
    let mut active = vec![false; mc * nc];
    for jc in 1..=nyc {
        for ic in 1..=nxc {
            let (i0, j0) = (2 * ic - 1, 2 * jc - 1);
            active[jc * mc + ic] = fa(i0, j0) || fa(i0 + 1, j0) || fa(i0, j0 + 1) || fa(i0 + 1, j0 + 1);
        }
    }
    // Dirichlet values live at the finest ghost centres, half a fine cell
    // outside the boundary face. A coarse level with spacing r times the
    // finest one reaches that point by extrapolating through its first cell.
    let ratio = 2.0 * fine.dx / fine.finest_dx;
    let mut links = vec![0u8; mc * nc];
    let mut n_active = 0;
    for jc in 1..=nyc {
        for ic in 1..=nxc {
            let kc = jc * mc + ic;
            if !active[kc] {
                continue;
            }
            n_active += 1;
            let mut l = 0u8;
            for (bit, nb) in [(WEST, kc - 1), (EAST, kc + 1), (SOUTH, kc - mc), (NORTH, kc + mc)] {
                if active[nb] {
                    l |= bit;
                }
            }
            links[kc] = l;
        }
    }
    let mut op = Operator::assemble(mc, nc, 2.0 * fine.dx, 2.0 * fine.dy, active, links, n_active, fine.neumann);
    op.finest_dx = fine.finest_dx;
    if !fine.neumann {
        op.ghost = -(ratio - 1.0) / (ratio + 1.0);
    }
    op
}

fn restrict_into(fine: &Operator, coarse: &Operator, r: &Field, out: &mut Field) {
    const W: [f64; 4] = [1.0, 3.0, 3.0, 1.0];
    let active = |i: usize, j: usize| fine.active[j * fine.m + i];
    out.fill(0.0);
    for jc in 1..coarse.n - 1 {
        for ic in 1..coarse.m - 1 {
            if !coarse.active[jc * coarse.m + ic] {
                continue;
            }
            let xs = [2 * ic - 2, 2 * ic - 1, 2 * ic, 2 * ic + 1];
            let ys = [2 * jc - 2, 2 * jc - 1, 2 * jc, 2 * jc + 1];
            let mut acc = 0.0;
            for (b, &fy) in ys.iter().enumerate() {
                let cy = ys[b.clamp(1, 2)];
                for (a, &fx) in xs.iter().enumerate() {
                    let cx = xs[a.clamp(1, 2)];
                    // Cells outside the active region mirror the nearest child.
                    let mirror = |x: usize, y: usize| if active(x, y) { r[(x, y)] } else { r[(cx, cy)] };
                    let v = if active(fx, fy) {
                        r[(fx, fy)]
                    } else if fx != cx && fy != cy {
                        mirror(fx, cy) + mirror(cx, fy) - r[(cx, cy)]
                    } else {
                        r[(cx, cy)]
                    };
                    acc += W[a] * W[b] * v;
                }
            }
            out[(ic, jc)] = acc / 64.0;
        }
    }
}

fn prolong_add(coarse: &Operator, fine: &Operator, e: &Field, p: &mut Field) {
    let cm = coarse.m;
    let g = coarse.ghost;
    let live = |ic: usize, jc: usize| coarse.active[jc * cm + ic];
    for jf in 1..fine.n - 1 {
        for i_f in 1..fine.m - 1 {
            if !fine.active[jf * fine.m + i_f] {
                continue;
            }
            let (ic, jc) = ((i_f + 1) / 2, (jf + 1) / 2);
            let c = e[(ic, jc)];
            let ix = if i_f % 2 == 1 { ic - 1 } else { ic + 1 };
            let jy = if jf % 2 == 1 { jc - 1 } else { jc + 1 };
            let cx = if live(ix, jc) { e[(ix, jc)] } else { g * c };
            let cy = if live(ic, jy) { e[(ic, jy)] } else { g * c };
            let cd = if live(ix, jy) {
                e[(ix, jy)]
            } else if coarse.neumann {
                cx + cy - c
            } else {
                // Dirichlet levels are full rectangles: extrapolate per axis.
                match (live(ix, jc), live(ic, jy)) {
                    (true, false) => g * cx,
                    (false, true) => g * cy,
                    _ => g * g * c,
                }
            };
            p[(i_f, jf)] += (9.0 * c + 3.0 * cx + 3.0 * cy + cd) / 16.0;
        }
    }
}

impl Hierarchy {
    /// Builds `levels` grid levels (all the grid allows when `None`).
    pub(crate) fn build(op: &Operator, levels: Option<usize>) -> Result<Self, SolverError> {
        let finest = op.n_active.max(1) as f64;
        let make = |op: Operator| Level {
            p: Field::zeros(op.m, op.n),
            rhs: Field::zeros(op.m, op.n),
            res: Field::zeros(op.m, op.n),
            weight: op.n_active as f64 / finest,
            op,
        };
        let mut out = vec![make(op.clone())];
        loop {
            if let Some(want) = levels {
                if out.len() >= want {
                    break;
                }
            }
            let last = &out.last().expect("non-empty").op;
            if !can_coarsen(last) {
                if let Some(want) = levels {
                    return Err(SolverError::InvalidHierarchy(format!(
                        "{want} levels requested but a {}x{} level cannot be coarsened",
                        last.nx(),
                        last.ny()
                    )));
                }
                break;
            }
            let coarse = coarsen(last);
            out.push(make(coarse));
        }
        Ok(Self { levels: out })
    }

    /// Hierarchy for `problem`; see [`MultigridConfig::levels`].
    pub fn for_problem(problem: &PoissonProblem, levels: Option<usize>) -> Result<Self, SolverError> {
        Self::build(&problem.op, levels)
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Interior size of each level, finest first.
    pub fn level_sizes(&self) -> Vec<(usize, usize)> {
        self.levels.iter().map(|l| (l.op.nx(), l.op.ny())).collect()
    }

    /// Applies one V-cycle to `p` and returns the work spent in fine-grid
    /// sweep equivalents.
    pub(crate) fn cycle(&mut self, p: &mut Field, rhs: &Field, cfg: &MultigridConfig) -> f64 {
        v_cycle_at(&mut self.levels, p, rhs, cfg)
    }
}

fn v_cycle_at(levels: &mut [Level], p: &mut Field, rhs: &Field, cfg: &MultigridConfig) -> f64 {
    let (this, rest) = levels.split_first_mut().expect("at least one level");
    if rest.is_empty() {
        for _ in 0..cfg.coarse_sweeps {
            gauss_seidel_in_place(&this.op, rhs, p);
        }
        return cfg.coarse_sweeps as f64 * this.weight;
    }
    for _ in 0..cfg.pre_smooth {
        gauss_seidel_in_place(&this.op, rhs, p);
    }
    let mut work = cfg.pre_smooth as f64 * this.weight;
    this.op.residual_into(p, rhs, &mut this.res);

    let coarse = &mut rest[0];
    restrict_into(&this.op, &coarse.op, &this.res, &mut coarse.rhs);
    if coarse.op.neumann {
        coarse.op.remove_mean(&mut coarse.rhs);
    }
    let mut e = std::mem::take(&mut coarse.p);
    let crhs = std::mem::take(&mut coarse.rhs);
    e.fill(0.0);
    work += v_cycle_at(rest, &mut e, &crhs, cfg);
    prolong_add(&rest[0].op, &this.op, &e, p);
    rest[0].p = e;
    rest[0].rhs = crhs;

    for _ in 0..cfg.post_smooth {
        gauss_seidel_in_place(&this.op, rhs, p);
    }
    work + cfg.post_smooth as f64 * this.weight
}

fn rect_op(f: &Field) -> Operator {
    Operator::rectangle(f.m() - 2, f.n() - 2, 1.0, 1.0, false)
}

/// Full-weighting restriction of a cell-centred field (ghost ring included)
/// to the grid with half as many cells per direction. Cells beyond the
/// boundary mirror their interior neighbour.
pub fn restrict(fine: &Field) -> Result<Field, SolverError> {
    if fine.m() < 4 || fine.n() < 4 || (fine.m() - 2) % 2 != 0 || (fine.n() - 2) % 2 != 0 {
        return Err(SolverError::InvalidHierarchy(format!(
            "restriction needs even interior dimensions, got {}x{}",
            fine.m().saturating_sub(2),
            fine.n().saturating_sub(2)
        )));
    }
    let fop = rect_op(fine);
    let cop = Operator::rectangle(fop.nx() / 2, fop.ny() / 2, 2.0, 2.0, false);
    let mut out = Field::zeros(cop.m, cop.n);
    restrict_into(&fop, &cop, fine, &mut out);
    Ok(out)
}

/// Bilinear interpolation of a cell-centred field to the grid with twice as
/// many cells per direction, mirroring across the boundary.
pub fn prolong(coarse: &Field) -> Field {
    let cop = rect_op(coarse);
    let fop = Operator::rectangle(2 * cop.nx(), 2 * cop.ny(), 0.5, 0.5, false);
    let mut out = Field::zeros(fop.m, fop.n);
    prolong_add(&cop, &fop, coarse, &mut out);
    out
}

/// Applies one V(pre_smooth, post_smooth) cycle over `levels` grid levels,
/// with 50 Gauss-Seidel sweeps on the coarsest level. Returns the work in
/// fine-grid sweep equivalents.
pub fn v_cycle(
    p: &mut Field,
    problem: &PoissonProblem,
    levels: usize,
    pre_smooth: usize,
    post_smooth: usize,
) -> Result<f64, SolverError> {
    if p.m() != problem.op.m || p.n() != problem.op.n {
        return Err(SolverError::ShapeMismatch {
            expected: problem.shape(),
            got: (p.m(), p.n()),
        });
    }
    let cfg = MultigridConfig {
        levels: Some(levels),
        pre_smooth,
        post_smooth,
        ..MultigridConfig::default()
    };
    let mut h = Hierarchy::build(&problem.op, cfg.levels)?;
    Ok(h.cycle(p, &problem.working_rhs(), &cfg))
}
