//! Discrete balls `{x_j : |x_j - x| < t}` on the (infinite) lattice and fast ball sums.

use super::{Grid, LineFunction, Scalar};
use crate::error::{invalid, Result, TentError};

fn inside(d2: usize, h: f64, t: f64) -> bool {
    (d2 as f64) * h * h < t * t
}

/// Largest `d ≥ 0` with `d h < t`, for `t > 0`.
pub(crate) fn max_offset(h: f64, t: f64) -> usize {
    let mut d = (t / h).floor().max(0.0) as usize;
    while d > 0 && !inside(d * d, h, t) {
        d -= 1;
    }
    while inside((d + 1) * (d + 1), h, t) {
        d += 1;
    }
    d
}

/// The offsets of a lattice-centred ball of radius `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct BallShape {
    t: f64,
    /// Half-width of the row at vertical offset `|dy|`; a single entry in 1D.
    rows: Vec<usize>,
    count: usize,
}

impl BallShape {
    pub fn new(grid: &Grid, t: f64) -> Self {
        let h = grid.h();
        let d = max_offset(h, t);
        if grid.dim() == 1 {
            return BallShape { t, rows: vec![d], count: 2 * d + 1 };
        }
        let mut rows = Vec::with_capacity(d + 1);
        let mut w = d;
        for dy in 0..=d {
            while w > 0 && !inside(w * w + dy * dy, h, t) {
                w -= 1;
            }
            rows.push(w);
        }
        let count = (2 * rows[0] + 1) + 2 * rows[1..].iter().map(|&w| 2 * w + 1).sum::<usize>();
        BallShape { t, rows, count }
    }

    pub fn radius(&self) -> f64 {
        self.t
    }

    /// Largest offset along an axis.
    pub fn reach(&self) -> usize {
        self.rows[0]
    }

    /// Half-widths per vertical offset.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    /// Lattice points in the ball, counting those outside the domain.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn measure(&self, grid: &Grid) -> f64 {
        self.count as f64 * grid.cell_volume()
    }

    /// Visits every in-domain flat index of the ball around `center`.
    pub fn for_each(&self, grid: &Grid, center: usize, mut f: impl FnMut(usize)) {
        let side = grid.side() as isize;
        let [cy, cx] = grid.unravel(center);
        if grid.dim() == 1 {
            let d = self.rows[0] as isize;
            let lo = (cy as isize - d).max(0);
            let hi = (cy as isize + d).min(side - 1);
            for j in lo..=hi {
                f(j as usize);
            }
            return;
        }
        let d = self.rows.len() as isize - 1;
        for dy in -d..=d {
            let row = cy as isize + dy;
            if row < 0 || row >= side {
                continue;
            }
            let w = self.rows[dy.unsigned_abs()] as isize;
            let lo = (cx as isize - w).max(0);
            let hi = (cx as isize + w).min(side - 1);
            for col in lo..=hi {
                f(row as usize * side as usize + col as usize);
            }
        }
    }
}

/// Prefix sums for O(1) (1D) or O(radius) (2D) ball sums of a fixed array.
#[derive(Clone, Debug)]
pub struct BallSums {
    grid: Grid,
    prefix: Vec<f64>,
}

impl BallSums {
    pub fn new(grid: &Grid, values: &[f64]) -> Self {
        let side = grid.side();
        let mut prefix = Vec::with_capacity(values.len() + values.len() / side.max(1));
        for row in values.chunks(side) {
            let mut acc = 0.0;
            prefix.push(0.0);
            for &v in row {
                acc += v;
                prefix.push(acc);
            }
        }
        BallSums { grid: grid.clone(), prefix }
    }

    fn row_sum(&self, row: usize, lo: usize, hi_inclusive: usize) -> f64 {
        let base = row * (self.grid.side() + 1);
        self.prefix[base + hi_inclusive + 1] - self.prefix[base + lo]
    }

    /// Sum of the stored values over the ball `shape` centred at lattice point `center`.
    pub fn sum(&self, center: usize, shape: &BallShape) -> f64 {
        let side = self.grid.side() as isize;
        let [cy, cx] = self.grid.unravel(center);
        if self.grid.dim() == 1 {
            let d = shape.rows[0] as isize;
            let lo = (cy as isize - d).max(0) as usize;
            let hi = (cy as isize + d).min(side - 1) as usize;
            return self.row_sum(0, lo, hi);
        }
        let d = shape.rows.len() as isize - 1;
        let mut acc = 0.0;
        for dy in -d..=d {
            let row = cy as isize + dy;
            if row < 0 || row >= side {
                continue;
            }
            let w = shape.rows[dy.unsigned_abs()] as isize;
            let lo = (cx as isize - w).max(0) as usize;
            let hi = (cx as isize + w).min(side - 1) as usize;
            acc += self.row_sum(row as usize, lo, hi);
        }
        acc
    }

    /// Sums over the ball of radius `t` around every lattice point.
    pub fn sums(&self, t: f64) -> Vec<f64> {
        let shape = BallShape::new(&self.grid, t);
        (0..self.grid.len()).map(|i| self.sum(i, &shape)).collect()
    }

    /// `(⨍_B v)` around every lattice point, `v` being the stored values.
    pub fn averages(&self, t: f64) -> Vec<f64> {
        let shape = BallShape::new(&self.grid, t);
        let c = shape.count() as f64;
        (0..self.grid.len()).map(|i| self.sum(i, &shape) / c).collect()
    }
}

/// Lattice indices along one axis (possibly outside the domain) with
/// `|coord - x| < t` ignoring the other axes.
fn axis_range(grid: &Grid, x: f64, t: f64) -> (i64, i64) {
    let h = grid.h();
    let u = (x + grid.half_width()) / h - 0.5;
    let lo = (u - t / h).floor() as i64 - 1;
    let hi = (u + t / h).ceil() as i64 + 1;
    (lo, hi)
}

fn lattice_coord(grid: &Grid, j: i64) -> f64 {
    (j as f64 + 0.5) * grid.h() - grid.half_width()
}

/// Sum of `|f|^r` and lattice-point count for a ball at an arbitrary centre.
fn general_ball<T: Scalar>(f: &LineFunction<T>, x: [f64; 2], t: f64, r: f64) -> (f64, usize) {
    let grid = f.grid();
    let side = grid.side() as i64;
    let vals = f.values();
    let (lo0, hi0) = axis_range(grid, x[0], t);
    let mut sum = 0.0;
    let mut count = 0usize;
    if grid.dim() == 1 {
        for j in lo0..=hi0 {
            let d = lattice_coord(grid, j) - x[0];
            if d * d < t * t {
                count += 1;
                if (0..side).contains(&j) {
                    sum += vals[j as usize].modulus().powf(r);
                }
            }
        }
        return (sum, count);
    }
    let (lo1, hi1) = axis_range(grid, x[1], t);
    for a in lo0..=hi0 {
        let da = lattice_coord(grid, a) - x[0];
        for b in lo1..=hi1 {
            let db = lattice_coord(grid, b) - x[1];
            if da * da + db * db < t * t {
                count += 1;
                if (0..side).contains(&a) && (0..side).contains(&b) {
                    sum += vals[(a * side + b) as usize].modulus().powf(r);
                }
            }
        }
    }
    (sum, count)
}

fn snap_point(grid: &Grid, x: [f64; 2]) -> Option<usize> {
    let a = grid.snap(x[0])?;
    if grid.dim() == 1 {
        Some(a)
    } else {
        Some(grid.ravel([a, grid.snap(x[1])?]))
    }
}

fn check_args(t: f64, r: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(invalid(format!("ball radius must be positive, got {t}")));
    }
    if !(r.is_finite() && r >= 1.0) {
        return Err(invalid(format!("exponent r must be at least 1, got {r}")));
    }
    Ok(())
}

/// `(⨍_{B(x,t)} |f|^r)^(1/r)` with the grid ball measure; `x` need not be a lattice point.
pub fn ball_average<T: Scalar>(f: &LineFunction<T>, x: [f64; 2], t: f64, r: f64) -> Result<f64> {
    check_args(t, r)?;
    let grid = f.grid();
    let (sum, count) = match snap_point(grid, x) {
        Some(center) => {
            let shape = BallShape::new(grid, t);
            let mut s = 0.0;
            let vals = f.values();
            shape.for_each(grid, center, |i| s += vals[i].modulus().powf(r));
            (s, shape.count())
        }
        None => general_ball(f, x, t, r),
    };
    if count == 0 {
        return Err(TentError::EmptyBall { center: x[..grid.dim()].to_vec(), radius: t });
    }
    Ok((sum / count as f64).powf(1.0 / r))
}

/// `|B(x,t)|_grid`, the lattice-point count times `h^n`.
pub fn ball_measure(grid: &Grid, x: [f64; 2], t: f64) -> f64 {
    let count = match snap_point(grid, x) {
        Some(_) => BallShape::new(grid, t).count(),
        None => general_ball(&LineFunction::<f64>::zeros(grid), x, t, 1.0).1,
    };
    count as f64 * grid.cell_volume()
}
