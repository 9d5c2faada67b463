//! Slice spaces `(E^p_r)_t`, the retraction pair `i_t`, `π_t`, and amalgam norms.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, TentError};
use crate::grid::{BallShape, BallSums, Grid, HalfSpaceFunction, LineFunction};
use crate::operators::Operator;
use crate::tent::{tent_norm, weak_lorentz_norm, weighted_lq_norm, TentExponents};

/// Exponents and scale of a slice space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceParams {
    pub p: f64,
    pub r: f64,
    pub t: f64,
}

impl SliceParams {
    pub fn new(p: f64, r: f64, t: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(invalid(format!("slice exponent p must be positive, got {p}")));
        }
        if !(r >= 1.0 && r.is_finite()) {
            return Err(invalid(format!("slice exponent r must lie in [1, ∞), got {r}")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid(format!("slice scale must be positive, got {t}")));
        }
        Ok(SliceParams { p, r, t })
    }

    /// Level `k` with `t_k = t` on `grid`, if any.
    pub fn level(&self, grid: &Grid) -> Option<usize> {
        grid.level_of(self.t)
    }
}

/// `x ↦ (⨍_{B(x,t)} |f|^r)^{1/r}` on every lattice point.
pub fn slice_profile(f: &LineFunction, r: f64, t: f64) -> Result<LineFunction> {
    let grid = f.grid();
    if t < grid.h() {
        return Err(invalid(format!("slice scale {t} is below the lattice spacing {}", grid.h())));
    }
    SliceParams::new(1.0, r, t)?;
    let powered: Vec<f64> = f.values().iter().map(|v| v.abs().powf(r)).collect();
    let sums = BallSums::new(grid, &powered);
    let shape = BallShape::new(grid, t);
    let count = shape.count() as f64;
    let values = (0..grid.len()).map(|i| (sums.sum(i, &shape) / count).powf(1.0 / r)).collect();
    LineFunction::new(grid.clone(), values)
}

/// Strong `(Σ_x ⨍_{B(x,t)}|f|^r)^{p/r} hⁿ)^{1/p}` or its weak `L^{p,∞}` variant.
pub fn slice_norm(f: &LineFunction, p: f64, r: f64, t: f64, weak: bool) -> Result<f64> {
    SliceParams::new(p, r, t)?;
    let inner = slice_profile(f, r, t)?;
    if weak {
        weak_lorentz_norm(&inner, p)
    } else {
        weighted_lq_norm(&inner, p, None)
    }
}

fn efold_range(grid: &Grid, k: usize) -> Result<std::ops::Range<usize>> {
    let m = grid.m();
    if k + m > grid.levels() {
        return Err(invalid(format!("e-fold starting at level {k} needs {} levels, grid has {}", k + m, grid.levels())));
    }
    Ok(k..k + m)
}

/// `i_t f(x, s) = f(x)` for `s ∈ [t_k, e·t_k)`, zero elsewhere.
pub fn inject(f: &LineFunction, k: usize) -> Result<HalfSpaceFunction> {
    let grid = f.grid();
    let range = efold_range(grid, k)?;
    let mut out = HalfSpaceFunction::zeros(grid);
    for j in range {
        out.slice_mut(j).copy_from_slice(f.values());
    }
    Ok(out)
}

/// `π_t F(x) = (1/m) Σ_{j=k}^{k+m-1} F(x, t_j)`.
pub fn project(f: &HalfSpaceFunction, k: usize) -> Result<LineFunction> {
    let grid = f.grid();
    let range = efold_range(grid, k)?;
    let w = grid.level_weight();
    let mut acc = vec![0.0; grid.len()];
    for j in range {
        for (a, &v) in acc.iter_mut().zip(f.slice(j)) {
            *a += v;
        }
    }
    LineFunction::new(grid.clone(), acc.into_iter().map(|a| a * w).collect())
}

/// `π_t ∘ (T ⊗ I) ∘ i_t`.
pub fn transfer(op: &Operator, f: &LineFunction, k: usize) -> Result<LineFunction> {
    project(&op.lift(&inject(f, k)?)?, k)
}

/// Measured retraction ratios for one function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetractionRatios {
    /// `‖i_t f‖_{T^p_r} / ‖f‖_{(E^p_r)_{e t}}`.
    pub inject: f64,
    /// `‖π_t i_t f‖_{(E^p_r)_t} / ‖i_t f‖_{T^p_r}`.
    pub project: f64,
}

pub fn retraction_ratios(f: &LineFunction, p: f64, r: f64, k: usize) -> Result<RetractionRatios> {
    let grid = f.grid();
    let t = grid.t(k);
    let lifted = inject(f, k)?;
    let tent = tent_norm(&lifted, TentExponents::standard(p, r)?, None)?;
    let wide = slice_norm(f, p, r, t * std::f64::consts::E, false)?;
    let back = slice_norm(&project(&lifted, k)?, p, r, t, false)?;
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    Ok(RetractionRatios { inject: ratio(tent, wide), project: ratio(back, tent) })
}

/// Wiener amalgam `(Σ_n (∫_n^{n+1} |f|^p)^{q/p})^{1/q}` over unit windows of the line; `q = ∞` takes the max.
pub fn amalgam_norm(f: &LineFunction, p: f64, q: f64) -> Result<f64> {
    let grid = f.grid();
    if grid.dim() != 1 {
        return Err(TentError::Unsupported("Wiener amalgam windows are one-dimensional".into()));
    }
    if !(p > 0.0 && p.is_finite() && q > 0.0) {
        return Err(invalid(format!("amalgam exponents must be positive, got p={p}, q={q}")));
    }
    let h = grid.h();
    let mut windows: Vec<(i64, f64)> = Vec::new();
    for (j, v) in f.values().iter().enumerate() {
        let w = grid.coord(j).floor() as i64;
        let contrib = v.abs().powf(p) * h;
        match windows.last_mut() {
            Some(last) if last.0 == w => last.1 += contrib,
            _ => windows.push((w, contrib)),
        }
    }
    let locals = windows.into_iter().map(|(_, s)| s.powf(1.0 / p));
    Ok(if q.is_infinite() {
        locals.fold(0.0, f64::max)
    } else {
        locals.map(|l| l.powf(q)).sum::<f64>().powf(1.0 / q)
    })
}

/// Fofana profile `ρ ↦ (Σ_y (|B(y,ρ)|^{1/α-1/p-1/q} ‖f‖_{L^p(B(y,ρ))})^q hⁿ)^{1/q}` over dyadic `ρ = 2^j h ≤ X`.
pub fn fofana_profile(f: &LineFunction, p: f64, q: f64, alpha: f64) -> Result<Vec<(f64, f64)>> {
    if !(p >= 1.0 && p.is_finite() && q >= 1.0 && q.is_finite() && alpha >= 1.0) {
        return Err(invalid(format!("Fofana exponents need p, q ≥ 1 finite and α ≥ 1, got p={p}, q={q}, α={alpha}")));
    }
    let grid = f.grid();
    let hn = grid.cell_volume();
    let exponent = 1.0 / alpha - 1.0 / p - 1.0 / q;
    let powered: Vec<f64> = f.values().iter().map(|v| v.abs().powf(p)).collect();
    let sums = BallSums::new(grid, &powered);
    let mut out = Vec::new();
    let mut rho = grid.h();
    while rho <= grid.half_width() * (1.0 + 1e-12) {
        let shape = BallShape::new(grid, rho);
        let scale = (shape.count() as f64 * hn).powf(exponent);
        let total: f64 = (0..grid.len()).map(|i| (scale * (sums.sum(i, &shape) * hn).powf(1.0 / p)).powf(q)).sum();
        out.push((rho, (total * hn).powf(1.0 / q)));
        rho *= 2.0;
    }
    if out.is_empty() {
        return Err(invalid("Fofana radius set is empty"));
    }
    Ok(out)
}

/// Maximum of [`fofana_profile`].
pub fn fofana_norm(f: &LineFunction, p: f64, q: f64, alpha: f64) -> Result<f64> {
    Ok(fofana_profile(f, p, q, alpha)?.into_iter().map(|(_, v)| v).fold(0.0, f64::max))
}
