//! Weights and their A_p, reverse-Hölder and A_{τ,s} characteristics over finite ball families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{BallShape, BallSums, Grid, LineFunction};

/// `∫_lo^hi |x|^a dx`, possibly `+∞`.
pub fn power_integral_1d(a: f64, lo: f64, hi: f64) -> f64 {
    if hi <= 0.0 {
        return power_integral_1d(a, -hi, -lo);
    }
    if lo < 0.0 {
        return power_integral_1d(a, 0.0, -lo) + power_integral_1d(a, 0.0, hi);
    }
    let e = a + 1.0;
    if lo == 0.0 {
        return if e > 0.0 { hi.powf(e) / e } else { f64::INFINITY };
    }
    if e == 0.0 {
        (hi / lo).ln()
    } else {
        (hi.powf(e) - lo.powf(e)) / e
    }
}

/// `∫_{[0,h]^2} |x|^a dx`, possibly `+∞`.
pub fn power_integral_corner_2d(a: f64, h: f64) -> f64 {
    if a <= -2.0 {
        return f64::INFINITY;
    }
    let e = a + 2.0;
    let panels = 8192;
    let b = std::f64::consts::FRAC_PI_4;
    let step = b / panels as f64;
    let g = |th: f64| th.cos().powf(-e);
    let mut s = g(0.0) + g(b);
    for i in 1..panels {
        s += g(i as f64 * step) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    2.0 * h.powf(e) / e * s * step / 3.0
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct PowerLaw {
    scale: f64,
    a: f64,
}

/// A strictly positive function, optionally carrying exact cell integrals near a power singularity.
#[derive(Clone, Debug, PartialEq)]
pub struct Weight {
    values: LineFunction,
    power: Option<PowerLaw>,
    exact: Vec<(usize, f64)>,
}

fn origin_cells(grid: &Grid) -> Vec<usize> {
    let half = grid.side() / 2;
    if grid.dim() == 1 {
        vec![half - 1, half]
    } else {
        let mut v = Vec::new();
        for a in [half - 1, half] {
            for b in [half - 1, half] {
                v.push(grid.ravel([a, b]));
            }
        }
        v
    }
}

impl Weight {
    /// Wraps sample values; every value must be positive and finite.
    pub fn new(values: LineFunction) -> Result<Self> {
        if let Some(v) = values.values().iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(invalid(format!("weight values must be positive and finite, found {v}")));
        }
        Ok(Weight { values, power: None, exact: Vec::new() })
    }

    fn power_law(grid: &Grid, scale: f64, a: f64) -> Self {
        let values = LineFunction::from_fn(grid, |x| {
            let r = if grid.dim() == 1 { x[0].abs() } else { x[0].hypot(x[1]) };
            scale * r.powf(a)
        });
        let h = grid.h();
        let integral = if grid.dim() == 1 { power_integral_1d(a, 0.0, h) } else { power_integral_corner_2d(a, h) };
        let exact = origin_cells(grid).into_iter().map(|i| (i, scale * integral)).collect();
        Weight { values, power: Some(PowerLaw { scale, a }), exact }
    }

    /// `|x|^a` with exact integrals on the cells meeting the origin.
    pub fn power(a: f64, grid: &Grid) -> Result<Self> {
        if !(a.is_finite() && a > -(grid.dim() as f64)) {
            return Err(invalid(format!("|x|^a is locally integrable only for a > -n, got a = {a}")));
        }
        Ok(Weight::power_law(grid, 1.0, a))
    }

    /// `exp(amplitude · s(x))` with `s` a random trigonometric sum bounded by 1.
    pub fn random_log_bounded(grid: &Grid, seed: u64, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms: Vec<(f64, f64, f64)> = (0..6)
            .map(|_| (rng.gen_range(0.2..3.0), rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.0..1.0)))
            .collect();
        let norm: f64 = terms.iter().map(|t| t.2).sum();
        let values = LineFunction::from_fn(grid, |x| {
            let s: f64 = terms.iter().map(|&(k, ph, c)| c * (k * (x[0] + x[1]) + ph).sin()).sum();
            (amplitude * s / norm).exp()
        });
        Weight { values, power: None, exact: Vec::new() }
    }

    pub fn function(&self) -> &LineFunction {
        &self.values
    }

    pub fn grid(&self) -> &Grid {
        self.values.grid()
    }

    /// Cells whose mass is an exact integral rather than a midpoint sample.
    pub fn exact_cells(&self) -> &[(usize, f64)] {
        &self.exact
    }

    /// `w^s`; power weights stay exact.
    pub fn powered(&self, s: f64) -> Weight {
        match self.power {
            Some(p) => Weight::power_law(self.grid(), p.scale.powf(s), p.a * s),
            None => Weight { values: self.values.map(|v| v.powf(s)), power: None, exact: Vec::new() },
        }
    }

    /// `c w` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Weight {
        Weight {
            values: self.values.scale(c),
            power: self.power.map(|p| PowerLaw { scale: p.scale * c, a: p.a }),
            exact: self.exact.iter().map(|&(i, v)| (i, v * c)).collect(),
        }
    }

    /// `∫_cell w` for every cell.
    pub fn cell_masses(&self) -> Vec<f64> {
        let hn = self.grid().cell_volume();
        let mut m: Vec<f64> = self.values.values().iter().map(|v| v * hn).collect();
        for &(i, v) in &self.exact {
            m[i] = v;
        }
        m
    }
}

/// Balls `(lattice centre, radius)` lying inside the domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallFamily {
    pub radii: Vec<f64>,
    /// `(centre index, index into radii)`.
    pub members: Vec<(usize, usize)>,
}

impl BallFamily {
    /// Every lattice centre with every radius `2^j h ≤ max_radius` whose ball stays in the domain.
    pub fn dyadic(grid: &Grid, max_radius: Option<f64>) -> Result<Self> {
        let limit = max_radius.unwrap_or(f64::INFINITY);
        let side = grid.side();
        let mut radii = Vec::new();
        let mut members = Vec::new();
        let mut rad = grid.h();
        while rad <= limit * (1.0 + 1e-12) {
            let reach = BallShape::new(grid, rad).reach();
            if 2 * reach + 1 > side {
                break;
            }
            let ri = radii.len();
            radii.push(rad);
            for c in 0..grid.len() {
                let ix = grid.unravel(c);
                let fits = ix[..grid.dim()].iter().all(|&a| a >= reach && a + reach < side);
                if fits {
                    members.push((c, ri));
                }
            }
            rad *= 2.0;
        }
        if members.is_empty() {
            return Err(invalid("ball family is empty"));
        }
        Ok(BallFamily { radii, members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.iter().cloned().fold(0.0, f64::max)
    }
}

/// Per-ball averages of a weight under a family.
struct Averager<'a> {
    grid: &'a Grid,
    shapes: Vec<BallShape>,
    family: &'a BallFamily,
}

impl<'a> Averager<'a> {
    fn new(grid: &'a Grid, family: &'a BallFamily) -> Self {
        let shapes = family.radii.iter().map(|&r| BallShape::new(grid, r)).collect();
        Averager { grid, shapes, family }
    }

    /// `⨍_B w` for every member ball.
    fn averages(&self, w: &Weight) -> Vec<f64> {
        let masses = w.cell_masses();
        let sums = BallSums::new(self.grid, &masses);
        let hn = self.grid.cell_volume();
        self.family
            .members
            .par_iter()
            .map(|&(c, ri)| {
                let shape = &self.shapes[ri];
                sums.sum(c, shape) / (shape.count() as f64 * hn)
            })
            .collect()
    }

    /// Minimum or maximum of the samples over each member ball.
    fn extrema(&self, values: &[f64], take_max: bool) -> Vec<f64> {
        let pick = |a: f64, b: f64| if take_max { a.max(b) } else { a.min(b) };
        if self.grid.dim() == 1 {
            let table = SparseTable::new(values, pick);
            return self
                .family
                .members
                .iter()
                .map(|&(c, ri)| {
                    let d = self.shapes[ri].reach();
                    table.query(c - d, c + d, pick)
                })
                .collect();
        }
        self.family
            .members
            .par_iter()
            .map(|&(c, ri)| {
                let mut acc = values[c];
                self.shapes[ri].for_each(self.grid, c, |i| acc = pick(acc, values[i]));
                acc
            })
            .collect()
    }
}

struct SparseTable {
    levels: Vec<Vec<f64>>,
}

impl SparseTable {
    fn new(values: &[f64], pick: impl Fn(f64, f64) -> f64) -> Self {
        let mut levels = vec![values.to_vec()];
        let mut width = 1;
        while 2 * width <= values.len() {
            let prev = levels.last().expect("nonempty");
            let next: Vec<f64> = (0..=values.len() - 2 * width).map(|i| pick(prev[i], prev[i + width])).collect();
            levels.push(next);
            width *= 2;
        }
        SparseTable { levels }
    }

    fn query(&self, lo: usize, hi: usize, pick: impl Fn(f64, f64) -> f64) -> f64 {
        let len = hi - lo + 1;
        let k = usize::BITS as usize - 1 - len.leading_zeros() as usize;
        pick(self.levels[k][lo], self.levels[k][hi + 1 - (1 << k)])
    }
}

fn max_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::NEG_INFINITY, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x) })
}

fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `[w]_{A_p}` over the family.
pub fn ap_characteristic(w: &Weight, p: f64, family: &BallFamily) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(invalid(format!("A_p needs p ≥ 1, got {p}")));
    }
    let grid = w.grid();
    let avg = Averager::new(grid, family);
    let mean = avg.averages(w);
    if p == 1.0 {
        let mins = avg.extrema(w.function().values(), false);
        return Ok(max_of(mean.iter().zip(&mins).map(|(a, m)| a / m)));
    }
    let pp = conjugate(p);
    let dual = avg.averages(&w.powered(1.0 - pp));
    Ok(max_of(mean.iter().zip(&dual).map(|(a, d)| a * d.powf(p - 1.0))))
}

/// `[w]_{RH_s}`; `s = ∞` uses the supremum form.
pub fn rh_characteristic(w: &Weight, s: f64, family: &BallFamily) -> Result<f64> {
    if !(s > 1.0) {
        return Err(invalid(format!("RH_s needs s > 1, got {s}")));
    }
    let grid = w.grid();
    let avg = Averager::new(grid, family);
    let mean = avg.averages(w);
    if s.is_infinite() {
        let maxs = avg.extrema(w.function().values(), true);
        return Ok(max_of(maxs.iter().zip(&mean).map(|(m, a)| m / a)));
    }
    let high = avg.averages(&w.powered(s));
    Ok(max_of(high.iter().zip(&mean).map(|(h, a)| h.powf(1.0 / s) / a)))
}

/// `[w]_{A_{τ,s}} = sup_B (⨍ w^s)^{1/s} (⨍ w^{-τ'})^{1/τ'}`.
pub fn apq_characteristic(w: &Weight, tau: f64, s: f64, family: &BallFamily) -> Result<f64> {
    if !(1.0 < tau && tau <= s && s.is_finite()) {
        return Err(invalid(format!("A_(τ,s) needs 1 < τ ≤ s < ∞, got τ = {tau}, s = {s}")));
    }
    let grid = w.grid();
    let avg = Averager::new(grid, family);
    let tp = conjugate(tau);
    let high = avg.averages(&w.powered(s));
    let low = avg.averages(&w.powered(-tp));
    Ok(max_of(high.iter().zip(&low).map(|(h, l)| h.powf(1.0 / s) * l.powf(1.0 / tp))))
}

/// A characteristic evaluated on families of growing maximal radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilitySeries {
    pub max_radius: Vec<f64>,
    pub family_size: Vec<usize>,
    pub characteristic: Vec<f64>,
}

impl StabilitySeries {
    /// Relative change between the last two entries.
    pub fn last_drift(&self) -> f64 {
        let n = self.characteristic.len();
        if n < 2 {
            return 0.0;
        }
        let (a, b) = (self.characteristic[n - 2], self.characteristic[n - 1]);
        if a == b {
            0.0
        } else {
            (b - a).abs() / a.abs()
        }
    }
}

/// Evaluates `eval` on dyadic families capped at each of `max_radii`.
pub fn stability_series(
    grid: &Grid,
    max_radii: &[f64],
    eval: impl Fn(&BallFamily) -> Result<f64>,
) -> Result<StabilitySeries> {
    let mut series = StabilitySeries { max_radius: Vec::new(), family_size: Vec::new(), characteristic: Vec::new() };
    for &r in max_radii {
        let fam = BallFamily::dyadic(grid, Some(r))?;
        series.characteristic.push(eval(&fam)?);
        series.max_radius.push(fam.max_radius());
        series.family_size.push(fam.len());
    }
    Ok(series)
}
