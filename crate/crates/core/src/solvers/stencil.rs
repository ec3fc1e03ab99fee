//! Five-point operator with per-cell link flags.
//!
//! A set link bit means the neighbour value is read from the iterate (an
//! active cell, or a ghost cell carrying a fixed Dirichlet value). A cleared
//! bit reads back `ghost` times the cell's own current value: with `ghost = 1`
//! this is the zero-gradient ghost copy applied within the sweep, while coarse
//! multigrid levels of a Dirichlet problem use a negative factor that
//! extrapolates linearly to the finest grid's boundary location.

use crate::field::Field;
use crate::grid::StaggeredGrid;

pub(crate) const WEST: u8 = 1;
pub(crate) const EAST: u8 = 2;
pub(crate) const SOUTH: u8 = 4;
pub(crate) const NORTH: u8 = 8;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Operator {
    pub m: usize,
    pub n: usize,
    pub dx: f64,
    pub dy: f64,
    /// `1 / dx^2`
    pub ax: f64,
    /// `1 / dy^2`
    pub ay: f64,
    /// `2 / dx^2 + 2 / dy^2`
    pub diag: f64,
    pub active: Vec<bool>,
    pub links: Vec<u8>,
    pub n_active: usize,
    /// No fixed-value links anywhere: the operator has a constant nullspace.
    pub neumann: bool,
    /// Factor applied to the cell's own value across a cleared link.
    pub ghost: f64,
    /// Spacing of the finest level in a multigrid hierarchy.
    pub finest_dx: f64,
}

impl Operator {
    fn from_active(m: usize, n: usize, dx: f64, dy: f64, active: Vec<bool>, fixed_ring: bool) -> Self {
        let mut links = vec![0u8; m * n];
        let mut n_active = 0;
        for j in 1..n - 1 {
            for i in 1..m - 1 {
                let k = j * m + i;
                if !active[k] {
                    continue;
                }
                n_active += 1;
                let mut l = 0u8;
                for (bit, nb) in [(WEST, k - 1), (EAST, k + 1), (SOUTH, k - m), (NORTH, k + m)] {
                    if active[nb] || fixed_ring {
                        l |= bit;
                    }
                }
                links[k] = l;
            }
        }
        Self::assemble(m, n, dx, dy, active, links, n_active, !fixed_ring)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        m: usize,
        n: usize,
        dx: f64,
        dy: f64,
        active: Vec<bool>,
        links: Vec<u8>,
        n_active: usize,
        neumann: bool,
    ) -> Self {
        let ax = 1.0 / (dx * dx);
        let ay = 1.0 / (dy * dy);
        Self {
            m,
            n,
            dx,
            dy,
            ax,
            ay,
            diag: 2.0 * ax + 2.0 * ay,
            active,
            links,
            n_active,
            neumann,
            ghost: 1.0,
            finest_dx: dx,
        }
    }

    /// Zero-gradient operator on the fluid cells of a (possibly masked) grid.
    pub fn neumann(grid: &StaggeredGrid) -> Self {
        let active = (0..grid.m * grid.n)
            .map(|k| grid.is_fluid(k % grid.m, k / grid.m))
            .collect();
        Self::from_active(grid.m, grid.n, grid.dx, grid.dy, active, false)
    }

    /// Full rectangle of `nx x ny` cells. With `fixed_ring` the ghost ring
    /// holds Dirichlet values; otherwise every boundary is zero-gradient.
    pub fn rectangle(nx: usize, ny: usize, dx: f64, dy: f64, fixed_ring: bool) -> Self {
        let (m, n) = (nx + 2, ny + 2);
        let active = (0..m * n)
            .map(|k| {
                let (i, j) = (k % m, k / m);
                i > 0 && j > 0 && i < m - 1 && j < n - 1
            })
            .collect();
        Self::from_active(m, n, dx, dy, active, fixed_ring)
    }

    pub fn nx(&self) -> usize {
        self.m - 2
    }

    pub fn ny(&self) -> usize {
        self.n - 2
    }

    #[inline(always)]
    pub fn neighbours(&self, p: &[f64], k: usize) -> (f64, f64, f64, f64) {
        let l = self.links[k];
        let c = self.ghost * p[k];
        let m = self.m;
        (
            if l & WEST != 0 { p[k - 1] } else { c },
            if l & EAST != 0 { p[k + 1] } else { c },
            if l & SOUTH != 0 { p[k - m] } else { c },
            if l & NORTH != 0 { p[k + m] } else { c },
        )
    }

    /// Point update solving the cell's equation for its own value.
    #[inline(always)]
    pub fn point_value(&self, p: &[f64], rhs: &[f64], k: usize) -> f64 {
        let (w, e, s, n) = self.neighbours(p, k);
        (self.ax * (w + e) + self.ay * (s + n) - rhs[k]) / self.diag
    }

    /// Diagonal of the cell's equation once the cleared links, which read
    /// `ghost` times the cell itself, are folded in.
    #[inline(always)]
    pub fn diag_at(&self, k: usize) -> f64 {
        let l = self.links[k];
        let open_x = (l & WEST == 0) as u8 + (l & EAST == 0) as u8;
        let open_y = (l & SOUTH == 0) as u8 + (l & NORTH == 0) as u8;
        if open_x + open_y == 0 {
            return self.diag;
        }
        self.diag - self.ghost * (self.ax * open_x as f64 + self.ay * open_y as f64)
    }

    /// Point update that satisfies the cell's equation exactly, with cleared
    /// links tracking the new value instead of lagging behind it.
    #[inline(always)]
    pub fn exact_point_value(&self, p: &[f64], rhs: &[f64], k: usize) -> f64 {
        let l = self.links[k];
        let m = self.m;
        let mut off = 0.0;
        if l & WEST != 0 {
            off += self.ax * p[k - 1];
        }
        if l & EAST != 0 {
            off += self.ax * p[k + 1];
        }
        if l & SOUTH != 0 {
            off += self.ay * p[k - m];
        }
        if l & NORTH != 0 {
            off += self.ay * p[k + m];
        }
        (off - rhs[k]) / self.diag_at(k)
    }

    /// `(A p)_k` for an active cell.
    #[inline(always)]
    pub fn apply_at(&self, p: &[f64], k: usize) -> f64 {
        let (w, e, s, n) = self.neighbours(p, k);
        let c = p[k];
        self.ax * (w - 2.0 * c + e) + self.ay * (s - 2.0 * c + n)
    }

    pub fn residual_into(&self, p: &Field, rhs: &Field, out: &mut Field) {
        let (p, rhs) = (p.as_slice(), rhs.as_slice());
        let out = out.as_mut_slice();
        for k in 0..self.m * self.n {
            out[k] = if self.active[k] {
                rhs[k] - self.apply_at(p, k)
            } else {
                0.0
            };
        }
    }

    /// RMS and max-abs residual over active cells.
    pub fn residual_norms(&self, p: &Field, rhs: &Field) -> (f64, f64) {
        let (p, rhs) = (p.as_slice(), rhs.as_slice());
        let mut sq = 0.0;
        let mut max = 0.0f64;
        for k in 0..self.m * self.n {
            if self.active[k] {
                let r = rhs[k] - self.apply_at(p, k);
                sq += r * r;
                // NaN must survive the max so divergence is detected.
                if !(r.abs() <= max) {
                    max = r.abs();
                    if max.is_nan() {
                        break;
                    }
                }
            }
        }
        ((sq / self.n_active.max(1) as f64).sqrt(), max)
    }

    pub fn active_mean(&self, f: &Field) -> f64 {
        let mut acc = 0.0;
        for (k, &v) in f.as_slice().iter().enumerate() {
            if self.active[k] {
                acc += v;
            }
        }
        acc / self.n_active.max(1) as f64
    }

    pub fn remove_mean(&self, f: &mut Field) {
        let mean = self.active_mean(f);
        for (k, v) in f.as_mut_slice().iter_mut().enumerate() {
            if self.active[k] {
                *v -= mean;
            }
        }
    }

    pub fn max_change(&self, a: &Field, b: &Field) -> f64 {
        let mut out = 0.0f64;
        for (k, (x, y)) in a.as_slice().iter().zip(b.as_slice()).enumerate() {
            if self.active[k] {
                let d = (x - y).abs();
                if !(d <= out) {
                    out = d;
                    if out.is_nan() {
                        break;
                    }
                }
            }
        }
        out
    }

    /// Writes zero-gradient ghost values: each inactive cell takes the mean of
    /// its active edge neighbours, or of its active diagonal neighbours.
    pub fn fill_zero_gradient_ghosts(&self, p: &mut Field) {
        let (m, n) = (self.m as isize, self.n as isize);
        let active = |i: isize, j: isize| i >= 0 && j >= 0 && i < m && j < n && self.active[(j * m + i) as usize];
        for j in 0..n {
            for i in 0..m {
                if active(i, j) {
                    continue;
                }
                let mut acc = 0.0;
                let mut count = 0usize;
                for (a, b) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    if active(i + a, j + b) {
                        acc += p[((i + a) as usize, (j + b) as usize)];
                        count += 1;
                    }
                }
                if count == 0 {
                    for (a, b) in [(1, 1), (-1, 1), (1, -1), (-1, -1)] {
                        if active(i + a, j + b) {
                            acc += p[((i + a) as usize, (j + b) as usize)];
                            count += 1;
                        }
                    }
                }
                if count > 0 {
                    p[(i as usize, j as usize)] = if count == 1 { acc } else { acc / count as f64 };
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, CellKind, Mask};

    #[test]
    fn rectangle_links() {
        let op = Operator::rectangle(3, 2, 1.0, 1.0, false);
        assert_eq!(op.n_active, 6);
        assert!(op.neumann);
        // bottom-left interior cell: only east and north are real neighbours
        assert_eq!(op.links[op.m + 1], EAST | NORTH);
        let op = Operator::rectangle(3, 2, 1.0, 1.0, true);
        assert_eq!(op.links[op.m + 1], WEST | EAST | SOUTH | NORTH);
        assert!(!op.neumann);
    }

    #[test]
    fn masked_links_skip_solid_cells() {
        let mut mask = Mask::rectangle(5, 5);
        mask.set(2, 2, CellKind::Solid);
        let g = build_grid((1.0, 1.0), (3, 3), Some(mask)).unwrap();
        let op = Operator::neumann(&g);
        assert_eq!(op.n_active, 8);
        let k = 2 * op.m + 1;
        assert_eq!(op.links[k], SOUTH | NORTH);
    }

    #[test]
    fn constant_is_in_neumann_nullspace() {
        let op = Operator::rectangle(4, 3, 0.5, 0.25, false);
        let p = Field::filled(6, 5, 3.25);
        let rhs = Field::zeros(6, 5);
        let (l2, max) = op.residual_norms(&p, &rhs);
        assert_eq!((l2, max), (0.0, 0.0));
    }
}
