#![allow(dead_code)]

use projflow::field::Field;
use projflow::solvers::PoissonProblem;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// A random Dirichlet problem with the data needed to solve it independently.
pub struct DirichletCase {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub rhs: Field,
    pub boundary: Field,
}

impl DirichletCase {
    pub fn random(rng: &mut ChaCha8Rng, nx: usize, ny: usize) -> Self {
        let dx = rng.gen_range(0.5..2.0);
        let dy = rng.gen_range(0.5..2.0);
        let rhs = Field::from_fn(nx + 2, ny + 2, |_, _| rng.gen_range(-1.0..1.0));
        let boundary = Field::from_fn(nx + 2, ny + 2, |_, _| rng.gen_range(-1.0..1.0));
        Self { nx, ny, dx, dy, rhs, boundary }
    }

    pub fn problem(&self) -> PoissonProblem {
        PoissonProblem::dirichlet(self.nx, self.ny, self.dx, self.dy, self.rhs.clone(), self.boundary.clone()).unwrap()
    }

    /// Five-point system assembled from scratch and solved densely.
    pub fn oracle(&self) -> Field {
        let (nx, ny, dx, dy) = (self.nx, self.ny, self.dx, self.dy);
        let id = |i: usize, j: usize| (j - 1) * nx + (i - 1);
        let size = nx * ny;
        let mut a = vec![vec![0.0; size]; size];
        let mut b = vec![0.0; size];
        for j in 1..=ny {
            for i in 1..=nx {
                let row = id(i, j);
                a[row][row] = -2.0 / (dx * dx) - 2.0 / (dy * dy);
                b[row] = self.rhs[(i, j)];
                for (ii, jj, c) in [
                    (i - 1, j, 1.0 / (dx * dx)),
                    (i + 1, j, 1.0 / (dx * dx)),
                    (i, j - 1, 1.0 / (dy * dy)),
                    (i, j + 1, 1.0 / (dy * dy)),
                ] {
                    if ii == 0 || jj == 0 || ii == nx + 1 || jj == ny + 1 {
                        b[row] -= c * self.boundary[(ii, jj)];
                    } else {
                        a[row][id(ii, jj)] = c;
                    }
                }
            }
        }
        let x = dense_solve(a, b);
        let mut out = self.boundary.clone();
        for j in 1..=ny {
            for i in 1..=nx {
                out[(i, j)] = x[id(i, j)];
            }
        }
        out
    }
}

/// Largest interior difference.
pub fn max_interior_diff(a: &Field, b: &Field) -> f64 {
    let mut out = 0.0f64;
    for j in 1..a.n() - 1 {
        for i in 1..a.m() - 1 {
            out = out.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    out
}

/// Largest interior difference after removing each field's interior mean.
pub fn max_diff_mean_free(a: &Field, b: &Field) -> f64 {
    let mean = |f: &Field| {
        let mut s = 0.0;
        for j in 1..f.n() - 1 {
            for i in 1..f.m() - 1 {
                s += f[(i, j)];
            }
        }
        s / ((f.m() - 2) * (f.n() - 2)) as f64
    };
    let shift = mean(a) - mean(b);
    let mut out = 0.0f64;
    for j in 1..a.n() - 1 {
        for i in 1..a.m() - 1 {
            out = out.max((a[(i, j)] - b[(i, j)] - shift).abs());
        }
    }
    out
}

/// Non-increasing up to the first minimum, non-decreasing after it.
pub fn unimodal_up_to_plateau(series: &[usize]) -> bool {
    let Some(k) = series.iter().enumerate().min_by_key(|&(_, v)| v).map(|(k, _)| k) else {
        return true;
    };
    series[..=k].windows(2).all(|w| w[1] <= w[0]) && series[k..].windows(2).all(|w| w[1] >= w[0])
}
