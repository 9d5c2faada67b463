//! Hardy–Littlewood maximal operators and the fractional maximal operator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, TentError};
use crate::grid::{BallShape, BallSums, Grid, LineFunction, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaximalMode {
    Centered,
    Uncentered,
}

/// Largest 2D side for which the uncentered operator is evaluated.
const UNCENTERED_2D_SIDE: usize = 128;

fn prefix(values: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(values.len() + 1);
    let mut acc = 0.0;
    p.push(0.0);
    for &v in values {
        acc += v;
        p.push(acc);
    }
    p
}

fn support(values: &[f64]) -> Option<(usize, usize)> {
    let a = values.iter().position(|&v| v != 0.0)?;
    let b = values.iter().rposition(|&v| v != 0.0)?;
    Some((a, b))
}

/// `max_k c[k] / den(e - k)` for each distance `e` of an increasing sequence, all `e ≥ c.len()`.
///
/// `den` must be affine and increasing. The maximizer lies on the upper hull of `(k, c[k])` and moves
/// towards `k = 0` as `e` grows, so one sweep suffices.
fn tail_maxima(c: &[f64], dists: &[usize], den: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut hull: Vec<usize> = Vec::with_capacity(c.len());
    for k in 0..c.len() {
        while let [.., a, b] = hull[..] {
            let turn = (b - a) as f64 * (c[k] - c[a]) - (c[b] - c[a]) * (k - a) as f64;
            if turn < 0.0 {
                break;
            }
            hull.pop();
        }
        hull.push(k);
    }
    let mut at = hull.len() - 1;
    dists
        .iter()
        .map(|&e| {
            let val = |j: usize| c[hull[j]] / den(e - hull[j]);
            while at > 0 && val(at - 1) >= val(at) {
                at -= 1;
            }
            val(at)
        })
        .collect()
}

/// Values outside the support `[s0, s1]` of the maximal function whose windows meet the support in a suffix
/// (right of it) or a prefix (left of it); `den(j)` is the cell count of a window reaching `j` cells past the support's near end.
fn outside_support(p: &[f64], s0: usize, s1: usize, n: usize, den: impl Fn(usize) -> f64 + Copy) -> Vec<f64> {
    let mut out = vec![0.0; n];
    let suffix: Vec<f64> = (s0..=s1).map(|a| p[s1 + 1] - p[a]).collect();
    let right: Vec<usize> = (s1 + 1..n).map(|i| i - s0).collect();
    for (i, v) in (s1 + 1..n).zip(tail_maxima(&suffix, &right, den)) {
        out[i] = v;
    }
    let prefix_sums: Vec<f64> = (s0..=s1).rev().map(|b| p[b + 1] - p[s0]).collect();
    let left: Vec<usize> = (0..s0).rev().map(|i| s1 - i).collect();
    for (i, v) in (0..s0).rev().zip(tail_maxima(&prefix_sums, &left, den)) {
        out[i] = v;
    }
    out
}

/// `sup_j ((j+1/2)h)^α ⨍_{|d| ≤ j} g(i + d)` on a line; `alpha = 0` gives the centred operator.
fn centered_1d(g: &[f64], h: f64, alpha: f64) -> Vec<f64> {
    let n = g.len();
    let Some((s0, s1)) = support(g) else {
        return vec![0.0; n];
    };
    let p = prefix(g);
    let jmax = n;
    let tails = if alpha == 0.0 { Some(outside_support(&p, s0, s1, n, |d| (2 * d + 1) as f64)) } else { None };
    (0..n)
        .into_par_iter()
        .map(|i| {
            if let Some(t) = tails.as_ref().filter(|_| i < s0 || i > s1) {
                return t[i];
            }
            let near = if i < s0 {
                s0 - i
            } else if i > s1 {
                i - s1
            } else {
                0
            };
            let far = (i.max(s1) - i).max(i - i.min(s0));
            let mut best = 0.0f64;
            for j in near..=far.min(jmax) {
                let lo = i.saturating_sub(j);
                let hi = (i + j).min(n - 1);
                let avg = (p[hi + 1] - p[lo]) / (2 * j + 1) as f64;
                let val = if alpha == 0.0 { avg } else { ((j as f64 + 0.5) * h).powf(alpha) * avg };
                best = best.max(val);
            }
            best
        })
        .collect()
}

/// `sup` of averages over all cell intervals `[a, b] ∋ i`.
fn uncentered_1d(g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let Some((s0, s1)) = support(g) else {
        return vec![0.0; n];
    };
    let p = prefix(g);
    let avg = |a: usize, b: usize| (p[b + 1] - p[a]) / (b - a + 1) as f64;
    let width = s1 - s0 + 1;
    // Inside the hull: a backward running maximum over right ends gives the best interval `[a, b] ∋ i`.
    let inner = (s0..=s1)
        .into_par_iter()
        .fold(
            || vec![0.0f64; width],
            |mut acc, a| {
                let mut running = 0.0f64;
                for i in (a..=s1).rev() {
                    running = running.max(avg(a, i));
                    let slot = &mut acc[i - s0];
                    *slot = slot.max(running);
                }
                acc
            },
        )
        .reduce(
            || vec![0.0f64; width],
            |mut x, y| {
                for (a, b) in x.iter_mut().zip(y) {
                    *a = a.max(b);
                }
                x
            },
        );
    let mut out = outside_support(&p, s0, s1, n, |d| (d + 1) as f64);
    out[s0..=s1].copy_from_slice(&inner);
    out
}

fn centered_2d(grid: &Grid, g: &[f64], alpha: f64) -> Vec<f64> {
    let sums = BallSums::new(grid, g);
    let h = grid.h();
    let shapes: Vec<BallShape> = (0..=grid.side()).map(|j| BallShape::new(grid, (j as f64 + 0.5) * h)).collect();
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            shapes
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    let avg = sums.sum(i, s) / s.count() as f64;
                    if alpha == 0.0 {
                        avg
                    } else {
                        ((j as f64 + 0.5) * h).powf(alpha) * avg
                    }
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

fn uncentered_2d(grid: &Grid, g: &[f64]) -> Result<Vec<f64>> {
    if grid.side() > UNCENTERED_2D_SIDE {
        return Err(TentError::Unsupported(format!(
            "uncentered maximal operator in 2D is limited to {UNCENTERED_2D_SIDE} cells per side"
        )));
    }
    let sums = BallSums::new(grid, g);
    let h = grid.h();
    let shapes: Vec<BallShape> = (0..=grid.side()).map(|j| BallShape::new(grid, (j as f64 + 0.5) * h)).collect();
    let out = (0..grid.len())
        .into_par_iter()
        .fold(
            || vec![0.0f64; grid.len()],
            |mut local, c| {
                for s in &shapes {
                    let avg = sums.sum(c, s) / s.count() as f64;
                    if avg > 0.0 {
                        s.for_each(grid, c, |i| {
                            if avg > local[i] {
                                local[i] = avg;
                            }
                        });
                    }
                }
                local
            },
        )
        .reduce(
            || vec![0.0f64; grid.len()],
            |mut x, y| {
                for (a, b) in x.iter_mut().zip(y) {
                    *a = a.max(b);
                }
                x
            },
        );
    Ok(out)
}

/// Centred or uncentred Hardy–Littlewood maximal function of `|f|`.
pub fn maximal<T: Scalar>(f: &LineFunction<T>, mode: MaximalMode) -> Result<LineFunction> {
    let grid = f.grid();
    let g: Vec<f64> = f.values().iter().map(|v| v.modulus()).collect();
    let out = match (grid.dim(), mode) {
        (1, MaximalMode::Centered) => centered_1d(&g, grid.h(), 0.0),
        (1, MaximalMode::Uncentered) => uncentered_1d(&g),
        (_, MaximalMode::Centered) => centered_2d(grid, &g, 0.0),
        (_, MaximalMode::Uncentered) => uncentered_2d(grid, &g)?,
    };
    LineFunction::new(grid.clone(), out)
}

/// `M_α f(x) = sup_τ τ^α ⨍_{B(x,τ)} |f|` over the half-integer radius set.
pub fn maximal_fractional<T: Scalar>(f: &LineFunction<T>, alpha: f64) -> Result<LineFunction> {
    let grid = f.grid();
    let n = grid.dim() as f64;
    if !(alpha > 0.0 && alpha < n) {
        return Err(invalid(format!("fractional order must lie in (0, {n}), got {alpha}")));
    }
    let g: Vec<f64> = f.values().iter().map(|v| v.modulus()).collect();
    let out = if grid.dim() == 1 { centered_1d(&g, grid.h(), alpha) } else { centered_2d(grid, &g, alpha) };
    LineFunction::new(grid.clone(), out)
}
