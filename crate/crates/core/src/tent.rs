//! Conical and vertical functionals, tent norms and the weak-Lebesgue norm.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{BallShape, BallSums, Grid, HalfSpaceFunction, LineFunction, Scalar};
use crate::weights::Weight;

/// Exponents of `T^q_r` with aperture `alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TentExponents {
    pub q: f64,
    pub r: f64,
    pub alpha: f64,
}

impl TentExponents {
    pub fn new(q: f64, r: f64, alpha: f64) -> Result<Self> {
        check_q(q)?;
        check_r(r)?;
        check_alpha(alpha)?;
        Ok(TentExponents { q, r, alpha })
    }

    pub fn standard(q: f64, r: f64) -> Result<Self> {
        TentExponents::new(q, r, 1.0)
    }
}

fn check_q(q: f64) -> Result<()> {
    if q.is_finite() && q > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("outer exponent must be positive and finite, got {q}")))
    }
}

fn check_r(r: f64) -> Result<()> {
    if r.is_finite() && r >= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("inner exponent must lie in [1, ∞), got {r}")))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha >= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("aperture must be at least 1, got {alpha}")))
    }
}

/// Per-level contributions `(1/m) Σ_{|y-x|<αt_k} |F(y,t_k)|^r h^n / t_k^n`, summed in level order.
fn conical_power_sum<T: Scalar>(f: &HalfSpaceFunction<T>, r: f64, alpha: f64) -> Vec<f64> {
    let grid = f.grid();
    let hn = grid.cell_volume();
    let w = grid.level_weight();
    let n = grid.dim() as i32;
    let parts: Vec<Option<Vec<f64>>> = (0..grid.levels())
        .into_par_iter()
        .map(|k| {
            let slice = f.slice(k);
            if slice.iter().all(|v| v.is_zero()) {
                return None;
            }
            let powered: Vec<f64> = slice.iter().map(|v| v.modulus().powf(r)).collect();
            let t = grid.t(k);
            let scale = w * hn / t.powi(n);
            let sums = BallSums::new(grid, &powered);
            let shape = BallShape::new(grid, alpha * t);
            Some((0..grid.len()).map(|i| sums.sum(i, &shape) * scale).collect())
        })
        .collect();
    let mut acc = vec![0.0; grid.len()];
    for part in parts.into_iter().flatten() {
        for (a, p) in acc.iter_mut().zip(part) {
            *a += p;
        }
    }
    acc
}

/// `𝒜_r^(α) F(x) = (∫∫_{|y-x|<αt} |F|^r dy dt / t^{n+1})^{1/r}` on the lattice.
pub fn conical<T: Scalar>(f: &HalfSpaceFunction<T>, r: f64, alpha: f64) -> Result<LineFunction> {
    check_r(r)?;
    check_alpha(alpha)?;
    let acc = conical_power_sum(f, r, alpha);
    LineFunction::new(f.grid().clone(), acc.into_iter().map(|s| s.powf(1.0 / r)).collect())
}

/// `𝒱_r F(x) = (∫ |F(x,t)|^r dt/t)^{1/r}`.
pub fn vertical<T: Scalar>(f: &HalfSpaceFunction<T>, r: f64) -> Result<LineFunction> {
    check_r(r)?;
    let grid = f.grid();
    let w = grid.level_weight();
    let mut acc = vec![0.0; grid.len()];
    for k in 0..grid.levels() {
        for (a, v) in acc.iter_mut().zip(f.slice(k)) {
            *a += w * v.modulus().powf(r);
        }
    }
    LineFunction::new(grid.clone(), acc.into_iter().map(|s| s.powf(1.0 / r)).collect())
}

/// `‖g‖_{L^{p,∞}} = sup_λ λ |{|g| > λ}|^{1/p}`, evaluated over the sorted sample values.
pub fn weak_lorentz_norm<T: Scalar>(g: &LineFunction<T>, p: f64) -> Result<f64> {
    check_q(p)?;
    let hn = g.grid().cell_volume();
    let mut vals: Vec<f64> = g.values().iter().map(|v| v.modulus()).filter(|&v| v > 0.0).collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    Ok(vals
        .iter()
        .enumerate()
        .map(|(i, &v)| v * ((i + 1) as f64 * hn).powf(1.0 / p))
        .fold(0.0, f64::max))
}

/// `(Σ_j |g(x_j)|^q w(x_j) h^n)^{1/q}`, accumulated in index order.
pub fn weighted_lq_norm(g: &LineFunction, q: f64, weight: Option<&Weight>) -> Result<f64> {
    check_q(q)?;
    let hn = g.grid().cell_volume();
    let s: f64 = match weight {
        None => g.values().iter().map(|v| v.abs().powf(q)).sum(),
        Some(w) => {
            g.grid().same_as(w.function().grid())?;
            g.values().iter().zip(w.function().values()).map(|(v, w)| v.abs().powf(q) * w).sum()
        }
    };
    Ok((s * hn).powf(1.0 / q))
}

/// `‖𝒜_r^(α) F‖_{L^q(w)}`.
pub fn tent_norm<T: Scalar>(f: &HalfSpaceFunction<T>, exps: TentExponents, weight: Option<&Weight>) -> Result<f64> {
    let a = conical(f, exps.r, exps.alpha)?;
    weighted_lq_norm(&a, exps.q, weight)
}

/// `‖𝒜_r F‖_{L^{q,∞}}`.
pub fn weak_tent_norm<T: Scalar>(f: &HalfSpaceFunction<T>, q: f64, r: f64) -> Result<f64> {
    weak_lorentz_norm(&conical(f, r, 1.0)?, q)
}

/// Right side of the discrete Fubini identity `‖𝒜_r F‖_r^r = Σ_k (1/m) Σ_y |F|^r h^n · N(y,t_k) h^n / t_k^n`,
/// where `N` counts in-domain lattice points within `t_k` of `y`.
pub fn fubini_mass<T: Scalar>(f: &HalfSpaceFunction<T>, r: f64) -> Result<f64> {
    check_r(r)?;
    let grid = f.grid();
    let hn = grid.cell_volume();
    let ones = vec![1.0; grid.len()];
    let counts = BallSums::new(grid, &ones);
    let mut total = 0.0;
    for k in 0..grid.levels() {
        let slice = f.slice(k);
        if slice.iter().all(|v| v.is_zero()) {
            continue;
        }
        let t = grid.t(k);
        let shape = BallShape::new(grid, t);
        let mut s = 0.0;
        for (i, v) in slice.iter().enumerate() {
            if !v.is_zero() {
                s += v.modulus().powf(r) * counts.sum(i, &shape);
            }
        }
        total += grid.level_weight() * s * hn * hn / t.powi(grid.dim() as i32);
    }
    Ok(total)
}

/// Quasi-triangle constant of `T^q_r`.
pub fn quasi_triangle_constant(q: f64, r: f64) -> f64 {
    (2f64.powf(1.0 / q - 1.0)).max(1.0) * (2f64.powf(1.0 / r - 1.0)).max(1.0)
}

/// Conical functional at one lattice point, by direct summation.
pub fn conical_at<T: Scalar>(f: &HalfSpaceFunction<T>, center: usize, r: f64, alpha: f64) -> Result<f64> {
    check_r(r)?;
    check_alpha(alpha)?;
    let grid: &Grid = f.grid();
    let hn = grid.cell_volume();
    let mut total = 0.0;
    for k in 0..grid.levels() {
        let t = grid.t(k);
        let shape = BallShape::new(grid, alpha * t);
        let slice = f.slice(k);
        let mut s = 0.0;
        shape.for_each(grid, center, |i| s += slice[i].modulus().powf(r));
        total += grid.level_weight() * s * hn / t.powi(grid.dim() as i32);
    }
    Ok(total.powf(1.0 / r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use proptest::prelude::*;

    fn grid(h: f64, m: usize) -> Grid {
        Grid::new(GridSpec::new(1, 8.0, h, 0.25, m, 4 * m)).unwrap()
    }

    fn slab(g: &Grid) -> HalfSpaceFunction {
        HalfSpaceFunction::from_fn(g, |x, t| if x[0].abs() < 1.0 && (1.0..2.0).contains(&t) { 1.0 } else { 0.0 })
    }

    #[test]
    fn zero_input() {
        let g = grid(0.125, 4);
        let z = HalfSpaceFunction::<f64>::zeros(&g);
        assert_eq!(conical(&z, 2.0, 1.0).unwrap().max_abs(), 0.0);
        assert_eq!(vertical(&z, 2.0).unwrap().max_abs(), 0.0);
        assert_eq!(weak_tent_norm(&z, 1.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_exponents() {
        let g = grid(0.125, 4);
        let z = HalfSpaceFunction::<f64>::zeros(&g);
        assert!(conical(&z, 0.5, 1.0).is_err());
        assert!(conical(&z, 2.0, 0.5).is_err());
        assert!(TentExponents::new(0.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn vertical_unit_efold_is_one() {
        let spec = GridSpec::new(1, 4.0, 0.125, 1.0, 8, 24);
        let g = Grid::new(spec).unwrap();
        let e = std::f64::consts::E;
        let f = HalfSpaceFunction::from_fn(&g, |_, t| if t < e * (1.0 - 1e-12) { 1.0 } else { 0.0 });
        let v = vertical(&f, 3.0).unwrap();
        assert!(v.values().iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn vertical_linear_profile() {
        let e = std::f64::consts::E;
        let mut prev = f64::INFINITY;
        for m in [8, 32, 128] {
            let g = Grid::new(GridSpec::new(1, 1.0, 0.5, 1.0, m, 2 * m)).unwrap();
            let f = HalfSpaceFunction::from_fn(&g, |_, t| if t < e * (1.0 - 1e-12) { t } else { 0.0 });
            let err = (vertical(&f, 1.0).unwrap().values()[0] - (e - 1.0)).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn weak_norm_examples() {
        let g = Grid::new(GridSpec::new(1, 2.0, 1.0, 0.25, 1, 1)).unwrap();
        let f = LineFunction::new(g.clone(), vec![0.0, 3.0, 2.0, 1.0]).unwrap();
        assert_eq!(weak_lorentz_norm(&f, 1.0).unwrap(), 4.0);
        let step = LineFunction::new(g, vec![0.0, 2.5, 2.5, 2.5]).unwrap();
        assert_eq!(weak_lorentz_norm(&step, 2.0).unwrap(), 2.5 * 3f64.sqrt());
    }

    #[test]
    fn slab_tent_norm_near_closed_form() {
        let g = grid(1.0 / 64.0, 16);
        let f = slab(&g);
        // ‖𝒜₂F‖₂² = ∫∫ |F|² |B(y,t)| t^{-n} dy dt/t = 2 · 2ln2 in one dimension.
        let want = (4.0 * 2f64.ln()).sqrt();
        let got = tent_norm(&f, TentExponents::standard(2.0, 2.0).unwrap(), None).unwrap();
        assert!((got - want).abs() < 0.01 * want, "{got} vs {want}");
    }

    #[test]
    fn fubini_identity_exact() {
        let g = grid(1.0 / 16.0, 4);
        let f = HalfSpaceFunction::from_fn(&g, |x, t| (x[0] * 1.3).sin() * (-x[0] * x[0]).exp() / (1.0 + t));
        for r in [1.0, 2.0, 3.0] {
            let lhs = tent_norm(&f, TentExponents::standard(r, r).unwrap(), None).unwrap().powf(r);
            let rhs = fubini_mass(&f, r).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10 * rhs, "{lhs} {rhs}");
        }
    }

    #[test]
    fn pointwise_matches_fast_path() {
        let g = grid(1.0 / 16.0, 4);
        let f = slab(&g);
        let a = conical(&f, 2.0, 2.0).unwrap();
        for i in [0, 100, 128, 200] {
            assert!((conical_at(&f, i, 2.0, 2.0).unwrap() - a.values()[i]).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn aperture_monotone(vals in prop::collection::vec(-1.0f64..1.0, 32 * 8), a in 1.0f64..3.0, b in 0.0f64..3.0) {
            let g = Grid::new(GridSpec::new(1, 2.0, 0.125, 0.25, 4, 8)).unwrap();
            let f = HalfSpaceFunction::new(g, vals).unwrap();
            let small = conical(&f, 2.0, a).unwrap();
            let large = conical(&f, 2.0, a + b).unwrap();
            for (s, l) in small.values().iter().zip(large.values()) {
                prop_assert!(s <= &(l * (1.0 + 1e-12)));
            }
        }

        #[test]
        fn weak_below_strong(vals in prop::collection::vec(-1.0f64..1.0, 32 * 8), q in 0.5f64..4.0) {
            let g = Grid::new(GridSpec::new(1, 2.0, 0.125, 0.25, 4, 8)).unwrap();
            let f = HalfSpaceFunction::new(g, vals).unwrap();
            let weak = weak_tent_norm(&f, q, 2.0).unwrap();
            let strong = tent_norm(&f, TentExponents::standard(q, 2.0).unwrap(), None).unwrap();
            prop_assert!(weak <= strong * (1.0 + 1e-12));
        }

        #[test]
        fn homogeneous_and_quasi_triangle(
            a in prop::collection::vec(-1.0f64..1.0, 32 * 8),
            b in prop::collection::vec(-1.0f64..1.0, 32 * 8),
            c in -5.0f64..5.0,
            q in 0.5f64..3.0,
            r in 1.0f64..3.0,
        ) {
            let g = Grid::new(GridSpec::new(1, 2.0, 0.125, 0.25, 4, 8)).unwrap();
            let f = HalfSpaceFunction::new(g.clone(), a).unwrap();
            let h = HalfSpaceFunction::new(g, b).unwrap();
            let ex = TentExponents::standard(q, r).unwrap();
            let nf = tent_norm(&f, ex, None).unwrap();
            let nc = tent_norm(&f.scale(c), ex, None).unwrap();
            prop_assert!((nc - c.abs() * nf).abs() <= 1e-12 * nf.max(1e-300) * 10.0);
            let nh = tent_norm(&h, ex, None).unwrap();
            let sum = tent_norm(&f.add(&h).unwrap(), ex, None).unwrap();
            prop_assert!(sum <= quasi_triangle_constant(q, r) * (nf + nh) * (1.0 + 1e-12));
        }
    }
}
