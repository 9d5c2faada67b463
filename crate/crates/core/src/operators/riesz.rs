//! Riesz potentials `I_α f = γ(α)^{-1} ∫ |x-y|^{α-n} f(y) dy`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conv::{convolve, Stencil};
use super::spectral::{spectral_multiplier_real, MultiplierSymbol};
use crate::error::{invalid, Result, TentError};
use crate::grid::{Grid, LineFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RieszMethod {
    Direct,
    Spectral,
}

fn check_order(alpha: f64, n: usize) -> Result<()> {
    if alpha > 0.0 && alpha < n as f64 {
        Ok(())
    } else {
        Err(invalid(format!("Riesz order must lie in (0, {n}), got {alpha}")))
    }
}

/// `γ(α) = π^{n/2} 2^α Γ(α/2) / Γ((n-α)/2)`.
pub fn gamma_alpha(alpha: f64, n: usize) -> Result<f64> {
    check_order(alpha, n)?;
    let nf = n as f64;
    Ok(std::f64::consts::PI.powf(nf / 2.0) * 2f64.powf(alpha) * libm::tgamma(alpha / 2.0)
        / libm::tgamma((nf - alpha) / 2.0))
}

/// Volume of the unit ball in dimension `n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let nf = n as f64;
    std::f64::consts::PI.powf(nf / 2.0) / libm::tgamma(nf / 2.0 + 1.0)
}

/// `∫` of `|u|^{α-1}` over the cell at integer offset `d` (1D).
fn cell_weight_1d(d: i64, h: f64, alpha: f64) -> f64 {
    let d = d.unsigned_abs() as f64;
    if d == 0.0 {
        2.0 * (0.5 * h).powf(alpha) / alpha
    } else {
        (((d + 0.5) * h).powf(alpha) - ((d - 0.5) * h).powf(alpha)) / alpha
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, x);
                for k in 2..=order {
                    let kf = k as f64;
                    let q2 = ((2.0 * kf - 1.0) * x * q1 - (kf - 1.0) * q0) / kf;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = order as f64 * (x * q1 - q0) / (x * x - 1.0);
                weights[i] = 2.0 / ((1.0 - x * x) * dq * dq);
                break;
            }
        }
        nodes[i] = x;
    }
    (nodes, weights)
}

/// `∫` of `|u|^{α-2}` over the square cell at integer offset `(a, b)` (2D).
fn cell_weight_2d(a: usize, b: usize, h: f64, alpha: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    if a == 0 && b == 0 {
        // Polar form: 8 ∫_0^{π/4} ((h/2)/cos θ)^α / α dθ, composite Simpson.
        let panels = 4096;
        let dt = std::f64::consts::FRAC_PI_4 / panels as f64;
        let g = |th: f64| (0.5 * h / th.cos()).powf(alpha) / alpha;
        let mut s = g(0.0) + g(std::f64::consts::FRAC_PI_4);
        for i in 1..panels {
            s += g(i as f64 * dt) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        return 8.0 * s * dt / 3.0;
    }
    let split = if a.max(b) <= 2 { 8 } else { 1 };
    let (nodes, weights) = rule;
    let sub = h / split as f64;
    let (x0, y0) = ((a as f64 - 0.5) * h, (b as f64 - 0.5) * h);
    let mut total = 0.0;
    for si in 0..split {
        for sj in 0..split {
            let cx = x0 + (si as f64 + 0.5) * sub;
            let cy = y0 + (sj as f64 + 0.5) * sub;
            for (u, wu) in nodes.iter().zip(weights) {
                for (v, wv) in nodes.iter().zip(weights) {
                    let x = cx + 0.5 * sub * u;
                    let y = cy + 0.5 * sub * v;
                    total += wu * wv * (x * x + y * y).powf(0.5 * (alpha - 2.0));
                }
            }
        }
    }
    total * 0.25 * sub * sub
}

fn direct_2d(grid: &Grid, values: &[f64], alpha: f64) -> Vec<f64> {
    let side = grid.side();
    let h = grid.h();
    let rule = gauss_legendre(6);
    let table: Vec<f64> = (0..side * side)
        .into_par_iter()
        .map(|idx| {
            let (a, b) = (idx / side, idx % side);
            if b < a {
                0.0
            } else {
                cell_weight_2d(a, b, h, alpha, &rule)
            }
        })
        .collect();
    let weight = |a: usize, b: usize| if a <= b { table[a * side + b] } else { table[b * side + a] };
    let support: Vec<(usize, f64)> = values.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let [ix, iy] = grid.unravel(i);
            support
                .iter()
                .map(|&(j, v)| {
                    let [jx, jy] = grid.unravel(j);
                    weight(ix.abs_diff(jx), iy.abs_diff(jy)) * v
                })
                .sum()
        })
        .collect()
}

/// Riesz potential of order `alpha`; the direct method integrates the kernel exactly over each cell.
pub fn riesz_potential(f: &LineFunction, alpha: f64, method: RieszMethod) -> Result<LineFunction> {
    let grid = f.grid();
    let n = grid.dim();
    let gamma = gamma_alpha(alpha, n)?;
    match method {
        RieszMethod::Spectral => {
            if n != 1 {
                return Err(TentError::Unsupported("spectral Riesz potential requires n = 1".into()));
            }
            spectral_multiplier_real(f, &MultiplierSymbol::riesz(alpha))
        }
        RieszMethod::Direct => {
            let out = if n == 1 {
                let h = grid.h();
                let stencil = Stencil::from_fn(grid.side() - 1, |d| cell_weight_1d(d, h, alpha));
                convolve(f.values(), &stencil)
            } else {
                direct_2d(grid, f.values(), alpha)
            };
            LineFunction::new(grid.clone(), out.into_iter().map(|v| v / gamma).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn gamma_values() {
        assert!((gamma_alpha(0.5, 1).unwrap() - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!((gamma_alpha(1.0, 2).unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        let near = 1.0 / gamma_alpha(1.0 - 1e-3, 1).unwrap();
        let nearer = 1.0 / gamma_alpha(1.0 - 1e-4, 1).unwrap();
        assert!(near > 100.0 && nearer > 5.0 * near);
        assert!(gamma_alpha(1.0, 1).is_err());
        assert!(gamma_alpha(0.0, 2).is_err());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        let int = |p: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum::<f64>();
        assert!((int(0) - 2.0).abs() < 1e-14);
        assert!((int(10) - 2.0 / 11.0).abs() < 1e-14);
        assert!(int(7).abs() < 1e-14);
    }

    #[test]
    fn point_mass_reproduces_kernel() {
        let g = Grid::new(GridSpec::new(1, 8.0, 1.0 / 64.0, 0.25, 2, 2)).unwrap();
        let i0 = g.snap(1.0 / 128.0).unwrap();
        let mut f = LineFunction::zeros(&g);
        f.values_mut()[i0] = 1.0 / g.h();
        let out = riesz_potential(&f, 0.5, RieszMethod::Direct).unwrap();
        let gamma = gamma_alpha(0.5, 1).unwrap();
        for i in 0..g.side() {
            let d = (g.coord(i) - g.coord(i0)).abs();
            if (1.0..=4.0).contains(&d) {
                let exact = d.powf(-0.5) / gamma;
                assert!((out.values()[i] - exact).abs() < 1e-3 * exact);
            }
        }
    }

    #[test]
    fn self_cell_2d_matches_fine_quadrature() {
        let h = 0.1;
        let alpha = 1.0;
        let polar = cell_weight_2d(0, 0, h, alpha, &gauss_legendre(6));
        // α = 1: 8 (h/2) ∫_0^{π/4} sec θ dθ = 4h ln(1 + √2).
        assert!((polar - 4.0 * h * (1.0 + 2f64.sqrt()).ln()).abs() < 1e-12);
        let near = cell_weight_2d(1, 0, h, alpha, &gauss_legendre(6));
        let mut fine = 0.0;
        let k = 2000;
        let d = h / k as f64;
        for i in 0..k {
            for j in 0..k {
                let x = 0.5 * h + (i as f64 + 0.5) * d;
                let y = -0.5 * h + (j as f64 + 0.5) * d;
                fine += (x * x + y * y).powf(-0.5) * d * d;
            }
        }
        assert!((near - fine).abs() < 1e-6 * fine);
    }

    #[test]
    fn linear_in_input() {
        let g = Grid::new(GridSpec::new(1, 4.0, 1.0 / 32.0, 0.25, 2, 2)).unwrap();
        let a = LineFunction::from_fn(&g, |x| (-(x[0] * x[0])).exp());
        let b = LineFunction::from_fn(&g, |x| if x[0].abs() < 1.0 { x[0] } else { 0.0 });
        let lhs = riesz_potential(&a.scale(2.0).add(&b.scale(-3.0)).unwrap(), 0.5, RieszMethod::Direct).unwrap();
        let ra = riesz_potential(&a, 0.5, RieszMethod::Direct).unwrap();
        let rb = riesz_potential(&b, 0.5, RieszMethod::Direct).unwrap();
        for i in 0..g.len() {
            let rhs = 2.0 * ra.values()[i] - 3.0 * rb.values()[i];
            assert!((lhs.values()[i] - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn spectral_needs_one_dimension() {
        let g = Grid::new(GridSpec::new(2, 1.0, 0.25, 0.25, 2, 2)).unwrap();
        let f = LineFunction::constant(&g, 1.0);
        assert!(matches!(riesz_potential(&f, 0.5, RieszMethod::Spectral), Err(TentError::Unsupported(_))));
        assert!(riesz_potential(&f, 0.5, RieszMethod::Direct).is_ok());
    }
}
