//! Heat semigroup `e^{sΔ}` by convolution with cell-integrated Gaussian weights.

use rayon::prelude::*;

use super::conv::{convolve, Stencil};
use crate::error::{invalid, Result, TentError};
use crate::grid::{Grid, LineFunction};

/// Tail mass allowed outside the truncation window.
pub const HEAT_TAIL: f64 = 1e-12;

/// Half-width (in cells) of the smallest window whose complement carries at most `tail` of the 1D kernel.
pub fn heat_window(h: f64, s: f64, tail: f64) -> usize {
    let scale = (4.0 * s).sqrt();
    let mut r = 0usize;
    while libm::erfc((r as f64 + 0.5) * h / scale) > tail {
        r += 1;
    }
    r
}

/// 1D weights `½[erf((d+½)h/√(4s)) - erf((d-½)h/√(4s))]` for `|d| ≤ reach`.
pub fn heat_weights(h: f64, s: f64, reach: usize) -> Vec<f64> {
    let scale = (4.0 * s).sqrt();
    let r = reach as i64;
    (-r..=r)
        .map(|d| {
            let (a, b) = ((d as f64 - 0.5) * h / scale, (d as f64 + 0.5) * h / scale);
            // Subtract complementary error functions on the side away from zero to avoid cancellation.
            if a >= 0.0 {
                0.5 * (libm::erfc(a) - libm::erfc(b))
            } else if b <= 0.0 {
                0.5 * (libm::erfc(-b) - libm::erfc(-a))
            } else {
                0.5 * (libm::erf(b) - libm::erf(a))
            }
        })
        .collect()
}

fn stencil(grid: &Grid, s: f64) -> Result<Stencil> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(invalid(format!("heat time must be positive, got {s}")));
    }
    let tail = if grid.dim() == 1 { HEAT_TAIL } else { 0.5 * HEAT_TAIL };
    let needed = heat_window(grid.h(), s, tail);
    let available = grid.side() - 1;
    if needed > available {
        return Err(TentError::HeatWindow { s, needed, available });
    }
    let values = heat_weights(grid.h(), s, needed);
    Ok(Stencil { reach: needed, values })
}

/// Applies `e^{sΔ}`, the convolution with `(4πs)^{-n/2} e^{-|x|²/4s}`.
pub fn heat(f: &LineFunction, s: f64) -> Result<LineFunction> {
    let grid = f.grid();
    let k = stencil(grid, s)?;
    let out = if grid.dim() == 1 {
        convolve(f.values(), &k)
    } else {
        let side = grid.side();
        let rows: Vec<f64> = f.values().par_chunks(side).flat_map_iter(|row| convolve(row, &k)).collect();
        let cols: Vec<Vec<f64>> = (0..side)
            .into_par_iter()
            .map(|c| {
                let col: Vec<f64> = (0..side).map(|r| rows[r * side + c]).collect();
                convolve(&col, &k)
            })
            .collect();
        let mut out = vec![0.0; grid.len()];
        for (c, col) in cols.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                out[r * side + c] = *v;
            }
        }
        out
    };
    LineFunction::new(grid.clone(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn grid() -> Grid {
        Grid::new(GridSpec::new(1, 8.0, 1.0 / 64.0, 0.25, 2, 2)).unwrap()
    }

    #[test]
    fn weights_sum_to_one() {
        for s in [1e-4, 0.01, 1.0] {
            let r = heat_window(1.0 / 64.0, s, HEAT_TAIL);
            let total: f64 = heat_weights(1.0 / 64.0, s, r).iter().sum();
            assert!((total - 1.0).abs() <= HEAT_TAIL + 1e-15);
        }
    }

    #[test]
    fn conserves_mass() {
        let g = grid();
        let f = LineFunction::from_fn(&g, |x| if x[0].abs() < 1.0 { 1.0 + x[0] } else { 0.0 });
        for s in [0.001, 0.1, 0.5] {
            let u = heat(&f, s).unwrap();
            assert!((u.integral() - f.integral()).abs() < 1e-10);
        }
    }

    #[test]
    fn window_error() {
        let g = grid();
        let f = LineFunction::constant(&g, 1.0);
        assert!(matches!(heat(&f, 100.0), Err(TentError::HeatWindow { .. })));
        assert!(heat(&f, 0.0).is_err());
    }

    #[test]
    fn semigroup_up_to_cell_smoothing() {
        // Each application averages over a cell, adding variance h²/12; the mismatch is
        // ≈ (h²/12)/2 · |u''|, so the oracle shifts the combined time by h²/24.
        let g = grid();
        let h = g.h();
        let f = LineFunction::from_fn(&g, |x| (-4.0 * x[0] * x[0]).exp());
        let two = heat(&heat(&f, 0.05).unwrap(), 0.07).unwrap();
        let one = heat(&f, 0.12).unwrap();
        let shifted = heat(&f, 0.12 + h * h / 24.0).unwrap();
        let err = |a: &LineFunction| two.values().iter().zip(a.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err(&one) < h * h);
        assert!(err(&shifted) < 1e-3 * err(&one));
    }

    #[test]
    fn two_dimensional_mass() {
        let g = Grid::new(GridSpec::new(2, 2.0, 1.0 / 16.0, 0.25, 2, 2)).unwrap();
        let f = LineFunction::from_fn(&g, |x| if x[0].abs() < 0.5 && x[1].abs() < 0.25 { 1.0 } else { 0.0 });
        let u = heat(&f, 0.01).unwrap();
        assert!((u.integral() - f.integral()).abs() < 1e-10);
    }
}
