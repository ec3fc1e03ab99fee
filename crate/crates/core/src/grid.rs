//! Staggered-grid layout, ghost-cell boundary conditions and the face/centre
//! bookkeeping shared by the flow stepper and the pressure solvers.
//!
//! Every field is an `m x n` array that includes one ghost layer on each side;
//! interior cells are `1..=m-2` by `1..=n-2`. Pressure lives at cell centres.
//! `u_f(i, j)` is the x-velocity on the east face of cell `(i, j)` and
//! `v_f(i, j)` the y-velocity on its north face; the backward faces `u_b`, `v_b`
//! are copies of the neighbouring forward faces.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::field::Field;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("field shape {got:?} does not match grid shape {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("mask line {line}: {message}")]
    MaskParse { line: usize, message: String },
}

/// Classification of a single cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellKind {
    Interior,
    Solid,
    Inlet,
    Outlet,
    Wall,
}

impl CellKind {
    #[inline]
    pub fn is_fluid(self) -> bool {
        self == CellKind::Interior
    }

    fn to_char(self) -> char {
        match self {
            CellKind::Interior => '.',
            CellKind::Solid | CellKind::Wall => '#',
            CellKind::Inlet => 'i',
            CellKind::Outlet => 'o',
        }
    }
}

/// Per-cell classification over the full `m x n` array (ghost ring included).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    m: usize,
    n: usize,
    cells: Vec<CellKind>,
}

impl Mask {
    /// Rectangle of interior cells surrounded by a ring of walls.
    pub fn rectangle(m: usize, n: usize) -> Self {
        let cells = (0..m * n)
            .map(|k| {
                let (i, j) = (k % m, k / m);
                if i == 0 || j == 0 || i == m - 1 || j == n - 1 {
                    CellKind::Wall
                } else {
                    CellKind::Interior
                }
            })
            .collect();
        Self { m, n, cells }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> CellKind {
        self.cells[j * self.m + i]
    }

    pub fn set(&mut self, i: usize, j: usize, kind: CellKind) {
        self.cells[j * self.m + i] = kind;
    }

    pub fn count(&self, kind: CellKind) -> usize {
        self.cells.iter().filter(|&&c| c == kind).count()
    }

    /// Parses the plain-text mask format: one character per cell, rows listed
    /// top to bottom, ghost ring included. `.` interior, `#` solid, `i` inlet,
    /// `o` outlet. Blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self, GridError> {
        let rows: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim_end()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(GridError::MaskParse {
                line: 0,
                message: "empty mask".into(),
            });
        }
        let m = rows[0].1.chars().count();
        let n = rows.len();
        let mut cells = vec![CellKind::Solid; m * n];
        for (row, (line_no, line)) in rows.iter().enumerate() {
            if line.chars().count() != m {
                return Err(GridError::MaskParse {
                    line: *line_no,
                    message: format!("expected {m} cells, found {}", line.chars().count()),
                });
            }
            let j = n - 1 - row;
            for (i, ch) in line.chars().enumerate() {
                let kind = match ch {
                    '.' => CellKind::Interior,
                    '#' => CellKind::Solid,
                    'i' => CellKind::Inlet,
                    'o' => CellKind::Outlet,
                    other => {
                        return Err(GridError::MaskParse {
                            line: *line_no,
                            message: format!("unknown cell character {other:?}"),
                        })
                    }
                };
                if kind.is_fluid() && (i == 0 || j == 0 || i == m - 1 || j == n - 1) {
                    return Err(GridError::MaskParse {
                        line: *line_no,
                        message: format!("ghost-ring cell ({i}, {j}) cannot be interior"),
                    });
                }
                cells[j * m + i] = kind;
            }
        }
        if m < 3 || n < 3 {
            return Err(GridError::MaskParse {
                line: 0,
                message: "mask needs at least one interior cell and a ghost ring".into(),
            });
        }
        Ok(Self { m, n, cells })
    }
}

impl fmt::Display for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in (0..self.n).rev() {
            for i in 0..self.m {
                write!(f, "{}", self.get(i, j).to_char())?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for Mask {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mask::parse(s)
    }
}

/// Rectangular mesh descriptor.
#[derive(Clone, Debug, PartialEq)]
pub struct StaggeredGrid {
    /// Cells in x including both ghost layers.
    pub m: usize,
    /// Cells in y including both ghost layers.
    pub n: usize,
    pub dx: f64,
    pub dy: f64,
    /// Aspect ratio `dx / dy`.
    pub beta: f64,
    pub mask: Mask,
}

/// Builds a grid for a domain of `lx x ly` split into `mx x my` interior
/// cells. Spacing follows the ghost-layer convention `dx = Lx / (m - 2)`.
pub fn build_grid(
    physical_lengths: (f64, f64),
    interior_counts: (usize, usize),
    mask: Option<Mask>,
) -> Result<StaggeredGrid, GridError> {
    let (lx, ly) = physical_lengths;
    let (mx, my) = interior_counts;
    if !(lx > 0.0 && lx.is_finite()) || !(ly > 0.0 && ly.is_finite()) {
        return Err(GridError::InvalidConfiguration(format!(
            "domain lengths must be positive, got ({lx}, {ly})"
        )));
    }
    if mx < 1 || my < 1 {
        return Err(GridError::InvalidConfiguration(format!(
            "interior cell counts must be at least 1, got ({mx}, {my})"
        )));
    }
    let (m, n) = (mx + 2, my + 2);
    let dx = lx / mx as f64;
    let dy = ly / my as f64;
    let mask = match mask {
        Some(mask) => {
            if mask.m != m || mask.n != n {
                return Err(GridError::InvalidConfiguration(format!(
                    "mask is {}x{} cells but the grid needs {m}x{n} (including ghost ring)",
                    mask.m, mask.n
                )));
            }
            mask
        }
        None => Mask::rectangle(m, n),
    };
    Ok(StaggeredGrid {
        m,
        n,
        dx,
        dy,
        beta: dx / dy,
        mask,
    })
}

impl StaggeredGrid {
    pub fn nx(&self) -> usize {
        self.m - 2
    }

    pub fn ny(&self) -> usize {
        self.n - 2
    }

    #[inline]
    pub fn is_fluid(&self, i: usize, j: usize) -> bool {
        self.mask.get(i, j).is_fluid()
    }

    pub fn fluid_cells(&self) -> usize {
        self.mask.count(CellKind::Interior)
    }

    /// Number of distinct grid nodes (cell corners) touched by fluid cells.
    pub fn active_points(&self) -> usize {
        let mut node = vec![false; (self.m + 1) * (self.n + 1)];
        for j in 0..self.n {
            for i in 0..self.m {
                if self.is_fluid(i, j) {
                    for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                        node[(j + b) * (self.m + 1) + i + a] = true;
                    }
                }
            }
        }
        node.into_iter().filter(|&x| x).count()
    }

    pub fn zeros(&self) -> Field {
        Field::zeros(self.m, self.n)
    }

    pub fn check_shape(&self, f: &Field) -> Result<(), GridError> {
        if f.m() != self.m || f.n() != self.n {
            return Err(GridError::ShapeMismatch {
                expected: (self.m, self.n),
                got: (f.m(), f.n()),
            });
        }
        Ok(())
    }
}

/// Velocity condition of a boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WallCondition {
    NoSlip,
    /// Wall sliding tangentially at the given speed (+x on horizontal walls,
    /// +y on vertical walls).
    MovingWall(f64),
    /// Normal inflow into the domain at the given speed.
    Inflow(f64),
    /// Zero-gradient outflow, rescaled to balance the inflow.
    Outflow,
}

/// Boundary conditions for the four outer sides plus the speed used for
/// inlet cells of a mask. Pressure is always zero-gradient on every boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySpec {
    pub bottom: WallCondition,
    pub top: WallCondition,
    pub left: WallCondition,
    pub right: WallCondition,
    pub inlet_speed: f64,
}

impl BoundarySpec {
    /// Lid-driven cavity: the top wall slides at `wall_speed`, other walls are
    /// at rest.
    pub fn cavity(wall_speed: f64) -> Self {
        Self {
            bottom: WallCondition::NoSlip,
            top: WallCondition::MovingWall(wall_speed),
            left: WallCondition::NoSlip,
            right: WallCondition::NoSlip,
            inlet_speed: 0.0,
        }
    }

    pub fn wall_speed(&self) -> f64 {
        match self.top {
            WallCondition::MovingWall(s) => s,
            _ => 0.0,
        }
    }

    fn condition_of(&self, grid: &StaggeredGrid, i: usize, j: usize) -> WallCondition {
        match grid.mask.get(i, j) {
            CellKind::Inlet => WallCondition::Inflow(self.inlet_speed),
            CellKind::Outlet => WallCondition::Outflow,
            CellKind::Interior => WallCondition::NoSlip,
            CellKind::Solid | CellKind::Wall => {
                if j == grid.n - 1 {
                    self.top
                } else if j == 0 {
                    self.bottom
                } else if i == 0 {
                    self.left
                } else if i == grid.m - 1 {
                    self.right
                } else {
                    WallCondition::NoSlip
                }
            }
        }
    }
}

/// Pressure and face/centre velocities on the staggered grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub p: Field,
    pub u_f: Field,
    pub u_b: Field,
    pub v_f: Field,
    pub v_b: Field,
    pub u: Field,
    pub v: Field,
}

impl FlowState {
    pub fn at_rest(grid: &StaggeredGrid) -> Self {
        let z = grid.zeros();
        Self {
            p: z.clone(),
            u_f: z.clone(),
            u_b: z.clone(),
            v_f: z.clone(),
            v_b: z.clone(),
            u: z.clone(),
            v: z,
        }
    }

    pub fn check_shape(&self, grid: &StaggeredGrid) -> Result<(), GridError> {
        for f in [&self.p, &self.u_f, &self.u_b, &self.v_f, &self.v_b, &self.u, &self.v] {
            grid.check_shape(f)?;
        }
        Ok(())
    }

    /// Refreshes the backward faces from the shared forward faces and
    /// recomputes cell-centre velocities as face averages.
    pub fn sync_faces(&mut self) {
        let (m, n) = (self.u_f.m(), self.u_f.n());
        for j in 0..n {
            for i in 1..m {
                self.u_b[(i, j)] = self.u_f[(i - 1, j)];
            }
        }
        for j in 1..n {
            for i in 0..m {
                self.v_b[(i, j)] = self.v_f[(i, j - 1)];
            }
        }
        for j in 0..n {
            for i in 0..m {
                self.u[(i, j)] = 0.5 * (self.u_f[(i, j)] + self.u_b[(i, j)]);
                self.v[(i, j)] = 0.5 * (self.v_f[(i, j)] + self.v_b[(i, j)]);
            }
        }
    }

    /// True when every backward face equals its shared forward face.
    pub fn faces_synced(&self) -> bool {
        let (m, n) = (self.u_f.m(), self.u_f.n());
        for j in 0..n {
            for i in 1..m {
                if self.u_b[(i, j)] != self.u_f[(i - 1, j)] {
                    return false;
                }
            }
        }
        for j in 1..n {
            for i in 0..m {
                if self.v_b[(i, j)] != self.v_f[(i, j - 1)] {
                    return false;
                }
            }
        }
        true
    }
}

/// Free-function form of [`FlowState::sync_faces`].
pub fn sync_faces(state: &mut FlowState) {
    state.sync_faces();
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    East,
    West,
    North,
    South,
}

const SIDES: [Side; 4] = [Side::East, Side::West, Side::North, Side::South];

impl Side {
    fn neighbour(self, i: usize, j: usize) -> (usize, usize) {
        match self {
            Side::East => (i + 1, j),
            Side::West => (i - 1, j),
            Side::North => (i, j + 1),
            Side::South => (i, j - 1),
        }
    }

    /// +1 when the outward normal points along the positive axis.
    fn outward_sign(self) -> f64 {
        match self {
            Side::East | Side::North => 1.0,
            Side::West | Side::South => -1.0,
        }
    }
}

/// Normal face velocity between fluid cell `(i, j)` and its neighbour on `side`.
fn normal_face(state: &mut FlowState, side: Side, i: usize, j: usize) -> &mut f64 {
    match side {
        Side::East => &mut state.u_f[(i, j)],
        Side::West => &mut state.u_f[(i - 1, j)],
        Side::North => &mut state.v_f[(i, j)],
        Side::South => &mut state.v_f[(i, j - 1)],
    }
}

fn ghost_value(cond: WallCondition, fluid: f64) -> f64 {
    match cond {
        WallCondition::NoSlip | WallCondition::Inflow(_) => -fluid,
        WallCondition::MovingWall(s) => 2.0 * s - fluid,
        WallCondition::Outflow => fluid,
    }
}

/// Applies ghost-cell velocity and pressure conditions in place. Interior
/// face values between two fluid cells are not touched.
///
/// On the rectangular cavity this reproduces the reflection formulas
/// `v_f = 0` on walls, `u_f(i, n-1) = 2 v_w - u_f(i, n-2)` at the lid,
/// `u_f(i, 0) = -u_f(i, 1)` at the bottom, and zero-gradient pressure copies.
/// Masked domains use the same formulas with the non-fluid neighbour acting
/// as the ghost cell.
pub fn apply_boundary_conditions(
    state: &mut FlowState,
    grid: &StaggeredGrid,
    bcs: &BoundarySpec,
) -> Result<(), GridError> {
    state.check_shape(grid)?;
    let (m, n) = (grid.m, grid.n);
    let fluid = |i: usize, j: usize| i < m && j < n && grid.is_fluid(i, j);

    // Faces away from any fluid cell are frozen at zero (solid interiors).
    for j in 0..n {
        for i in 0..m {
            if !fluid(i, j) && !fluid(i + 1, j) {
                state.u_f[(i, j)] = 0.0;
            }
            if !fluid(i, j) && !fluid(i, j + 1) {
                state.v_f[(i, j)] = 0.0;
            }
        }
    }

    // Normal faces.
    let mut outflow_faces: Vec<(Side, usize, usize)> = Vec::new();
    for j in 1..n - 1 {
        for i in 1..m - 1 {
            if !fluid(i, j) {
                continue;
            }
            for side in SIDES {
                let (gi, gj) = side.neighbour(i, j);
                if fluid(gi, gj) {
                    continue;
                }
                let cond = bcs.condition_of(grid, gi, gj);
                let value = match cond {
                    WallCondition::NoSlip | WallCondition::MovingWall(_) => 0.0,
                    WallCondition::Inflow(s) => -side.outward_sign() * s,
                    WallCondition::Outflow => {
                        outflow_faces.push((side, i, j));
                        match side {
                            Side::East => state.u_f[(i - 1, j)],
                            Side::West => state.u_f[(i, j)],
                            Side::North => state.v_f[(i, j - 1)],
                            Side::South => state.v_f[(i, j)],
                        }
                    }
                };
                *normal_face(state, side, i, j) = value;
            }
        }
    }

    if !outflow_faces.is_empty() {
        // Net volume flux leaving through every boundary face.
        let mut net_out = 0.0;
        for j in 1..n - 1 {
            for i in 1..m - 1 {
                if !fluid(i, j) {
                    continue;
                }
                for side in SIDES {
                    let (gi, gj) = side.neighbour(i, j);
                    if fluid(gi, gj) {
                        continue;
                    }
                    let len = match side {
                        Side::East | Side::West => grid.dy,
                        Side::North | Side::South => grid.dx,
                    };
                    net_out += side.outward_sign() * *normal_face(state, side, i, j) * len;
                }
            }
        }
        let out_area: f64 = outflow_faces
            .iter()
            .map(|(side, _, _)| match side {
                Side::East | Side::West => grid.dy,
                Side::North | Side::South => grid.dx,
            })
            .sum();
        let correction = -net_out / out_area;
        for &(side, i, j) in &outflow_faces {
            *normal_face(state, side, i, j) += side.outward_sign() * correction;
        }
    }

    // Tangential ghost values.
    for j in 1..n - 1 {
        for i in 1..m - 1 {
            if !fluid(i, j) {
                continue;
            }
            for side in SIDES {
                let (gi, gj) = side.neighbour(i, j);
                if fluid(gi, gj) {
                    continue;
                }
                let cond = bcs.condition_of(grid, gi, gj);
                match side {
                    Side::North | Side::South => {
                        state.u_f[(i, gj)] = ghost_value(cond, state.u_f[(i, j)]);
                        state.u_f[(i - 1, gj)] = ghost_value(cond, state.u_f[(i - 1, j)]);
                    }
                    Side::East | Side::West => {
                        state.v_f[(gi, j)] = ghost_value(cond, state.v_f[(i, j)]);
                        state.v_f[(gi, j - 1)] = ghost_value(cond, state.v_f[(i, j - 1)]);
                    }
                }
            }
        }
    }

    fill_pressure_ghosts(&mut state.p, grid);
    Ok(())
}

/// Zero-gradient pressure: each non-fluid cell takes the mean of its fluid
/// edge neighbours, or of its fluid diagonal neighbours at corners.
pub fn fill_pressure_ghosts(p: &mut Field, grid: &StaggeredGrid) {
    let (m, n) = (grid.m, grid.n);
    let fluid = |i: isize, j: isize| {
        i >= 0 && j >= 0 && (i as usize) < m && (j as usize) < n && grid.is_fluid(i as usize, j as usize)
    };
    for j in 0..n as isize {
        for i in 0..m as isize {
            if fluid(i, j) {
                continue;
            }
            let mut acc = 0.0;
            let mut count = 0usize;
            for (a, b) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                if fluid(i + a, j + b) {
                    acc += p[((i + a) as usize, (j + b) as usize)];
                    count += 1;
                }
            }
            if count == 0 {
                for (a, b) in [(1, 1), (-1, 1), (1, -1), (-1, -1)] {
                    if fluid(i + a, j + b) {
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

/// Discrete divergence `(u_f - u_b)/dx + (v_f - v_b)/dy` on fluid cells; zero
/// elsewhere.
pub fn divergence(state: &FlowState, grid: &StaggeredGrid) -> Field {
    let mut out = grid.zeros();
    for j in 1..grid.n - 1 {
        for i in 1..grid.m - 1 {
            if grid.is_fluid(i, j) {
                out[(i, j)] = (state.u_f[(i, j)] - state.u_b[(i, j)]) / grid.dx
                    + (state.v_f[(i, j)] - state.v_b[(i, j)]) / grid.dy;
            }
        }
    }
    out
}
