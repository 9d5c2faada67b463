//! Growth of `‖𝒜^{(α)}_2 F‖_{L^q}` in the aperture `α`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, TentError};
use crate::grid::HalfSpaceFunction;
use crate::tent::{tent_norm, TentExponents};

/// Exponent `n max(1/2, 1/q)` of the change-of-angle inequality.
pub fn growth_bound(n: usize, q: f64) -> f64 {
    n as f64 * (1.0 / q).max(0.5)
}

/// Slack added to [`growth_bound`] when judging a fitted slope.
pub const SLOPE_SLACK: f64 = 0.1;

/// Fitted slopes of `log ‖𝒜^{(α)}_2 F‖_q` against `log α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub q: f64,
    pub apertures: Vec<f64>,
    /// One slope per item, in input order; `None` for items with a vanishing norm.
    pub slopes: Vec<Option<f64>>,
    pub max_slope: f64,
    pub bound: f64,
    pub ok: bool,
}

fn lsq_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Least-squares slope per item over apertures that are powers of two.
pub fn fit_growth_exponent(items: &[HalfSpaceFunction], q: f64, apertures: &[f64]) -> Result<GrowthFit> {
    let usable: Vec<f64> = apertures
        .iter()
        .copied()
        .filter(|&a| a >= 1.0 && (a.log2() - a.log2().round()).abs() < 1e-12)
        .collect();
    if usable.len() < 3 {
        return Err(TentError::TooFewPoints { needed: 3, available: usable.len() });
    }
    if usable.len() != apertures.len() {
        return Err(invalid(format!("apertures must be powers of two ≥ 1, got {apertures:?}")));
    }
    let n = items.first().map_or(1, |f| f.grid().dim());
    let xs: Vec<f64> = usable.iter().map(|a| a.ln()).collect();
    let slopes: Vec<Option<f64>> = items
        .par_iter()
        .map(|f| {
            let norms = usable
                .iter()
                .map(|&a| tent_norm(f, TentExponents::new(q, 2.0, a)?, None))
                .collect::<Result<Vec<f64>>>()?;
            if norms.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Ok(None);
            }
            let ys: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
            Ok(Some(lsq_slope(&xs, &ys)))
        })
        .collect::<Result<_>>()?;
    let max_slope = slopes.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let bound = growth_bound(n, q);
    Ok(GrowthFit { q, apertures: usable, ok: max_slope <= bound + SLOPE_SLACK, slopes, max_slope, bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, GridSpec};

    fn grid() -> Grid {
        Grid::new(GridSpec::new(1, 16.0, 1.0 / 32.0, 0.25, 8, 24)).unwrap()
    }

    #[test]
    fn thin_slab_square_function() {
        let g = grid();
        let f = HalfSpaceFunction::from_fn(&g, |x, t| if x[0].abs() < 0.125 && (1.0..1.2).contains(&t) { 1.0 } else { 0.0 });
        let fit = fit_growth_exponent(&[f], 2.0, &[1.0, 2.0, 4.0, 8.0]).unwrap();
        assert!(fit.max_slope <= 0.6, "{fit:?}");
        assert!(fit.max_slope > 0.4);
        assert!(fit.ok);
    }

    #[test]
    fn wide_slab_is_saturated() {
        let g = grid();
        let f = HalfSpaceFunction::from_fn(&g, |x, t| if x[0].abs() < 14.0 && t < 0.3 { 1.0 } else { 0.0 });
        let fit = fit_growth_exponent(&[f], 1.0, &[1.0, 2.0, 4.0]).unwrap();
        assert!(fit.max_slope < 0.6, "{fit:?}");
    }

    #[test]
    fn needs_three_apertures() {
        let g = grid();
        let f = HalfSpaceFunction::zeros(&g);
        assert!(matches!(fit_growth_exponent(&[f.clone()], 1.0, &[1.0, 2.0]), Err(TentError::TooFewPoints { .. })));
        assert!(fit_growth_exponent(&[f.clone()], 1.0, &[1.0, 3.0, 4.0]).is_err());
        assert_eq!(fit_growth_exponent(&[f], 1.0, &[1.0, 2.0, 4.0]).unwrap().slopes, vec![None]);
    }

    #[test]
    fn bound_values() {
        assert_eq!(growth_bound(1, 1.0), 1.0);
        assert_eq!(growth_bound(1, 4.0), 0.5);
        assert_eq!(growth_bound(2, 1.2), 2.0 / 1.2);
    }
}
