//! Calderón–Zygmund singular integrals, maximal truncations and kernel constants.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conv::{convolve, Stencil};
use super::spectral::{spectral_multiplier_real, MultiplierSymbol};
use crate::error::{invalid, Result, TentError};
use crate::grid::{Grid, LineFunction};

type KernelFn = dyn Fn([f64; 2], [f64; 2]) -> f64 + Send + Sync;

/// Kernel `K(x, y)` evaluated off the diagonal.
#[derive(Clone)]
pub struct CzKernel {
    name: String,
    delta: f64,
    eval: Arc<KernelFn>,
    translation_invariant: bool,
    symbol: Option<MultiplierSymbol>,
}

impl fmt::Debug for CzKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CzKernel")
            .field("name", &self.name)
            .field("delta", &self.delta)
            .field("translation_invariant", &self.translation_invariant)
            .finish()
    }
}

impl CzKernel {
    pub fn new(name: impl Into<String>, delta: f64, eval: impl Fn([f64; 2], [f64; 2]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(invalid(format!("kernel regularity must lie in (0, 1], got {delta}")));
        }
        Ok(CzKernel { name: name.into(), delta, eval: Arc::new(eval), translation_invariant: false, symbol: None })
    }

    /// Marks the kernel as depending on `x - y` only, enabling FFT convolution in 1D.
    pub fn translation_invariant(mut self) -> Self {
        self.translation_invariant = true;
        self
    }

    pub fn with_symbol(mut self, symbol: MultiplierSymbol) -> Self {
        self.symbol = Some(symbol);
        self
    }

    /// `1 / (π (x - y))` with symbol `-i sgn ω`.
    pub fn hilbert() -> Self {
        CzKernel {
            name: "hilbert".into(),
            delta: 1.0,
            eval: Arc::new(|x, y| 1.0 / (std::f64::consts::PI * (x[0] - y[0]))),
            translation_invariant: true,
            symbol: Some(MultiplierSymbol::hilbert()),
        }
    }

    /// `1 / (x - y)²`, which fails the size condition in one dimension.
    pub fn inverse_square() -> Self {
        CzKernel {
            name: "inverse-square".into(),
            delta: 1.0,
            eval: Arc::new(|x, y| {
                let d = x[0] - y[0];
                1.0 / (d * d)
            }),
            translation_invariant: true,
            symbol: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn symbol(&self) -> Option<&MultiplierSymbol> {
        self.symbol.as_ref()
    }

    pub fn eval(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        (self.eval)(x, y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularMethod {
    PvDirect,
    Spectral,
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn nonzero(values: &[f64]) -> Vec<(usize, f64)> {
    values.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect()
}

/// Midpoint rule with the self-cell omitted.
fn pv_direct(f: &LineFunction, kernel: &CzKernel) -> Vec<f64> {
    let grid = f.grid();
    let vol = grid.cell_volume();
    if grid.dim() == 1 && kernel.translation_invariant {
        let h = grid.h();
        let stencil = Stencil::from_fn(grid.side() - 1, |d| {
            if d == 0 {
                0.0
            } else {
                kernel.eval([d as f64 * h, 0.0], [0.0, 0.0]) * vol
            }
        });
        return convolve(f.values(), &stencil);
    }
    let support = nonzero(f.values());
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            support
                .iter()
                .filter(|(j, _)| *j != i)
                .map(|&(j, v)| kernel.eval(x, grid.point(j)) * v * vol)
                .sum()
        })
        .collect()
}

/// Principal-value singular integral.
pub fn singular_integral(f: &LineFunction, kernel: &CzKernel, method: SingularMethod) -> Result<LineFunction> {
    match method {
        SingularMethod::PvDirect => LineFunction::new(f.grid().clone(), pv_direct(f, kernel)),
        SingularMethod::Spectral => {
            let symbol = kernel
                .symbol()
                .ok_or_else(|| TentError::Unsupported(format!("kernel `{}` has no registered symbol", kernel.name())))?;
            spectral_multiplier_real(f, symbol)
        }
    }
}

/// Shell `d` of a 1D lattice point is the pair of cells at distance `d h`.
fn truncation_1d(values: &[f64], grid: &Grid, kernel: &CzKernel) -> Vec<f64> {
    let n = values.len();
    let Some(first) = values.iter().position(|v| *v != 0.0) else {
        return vec![0.0; n];
    };
    let last = values.iter().rposition(|v| *v != 0.0).expect("nonzero exists");
    let h = grid.h();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let far = (last.max(i) - i).max(i - first.min(i));
            let near = if i < first { first - i } else if i > last { i - last } else { 1 }.max(1);
            let mut acc = 0.0;
            let mut best = 0.0f64;
            for d in (near..=far).rev() {
                let mut shell = 0.0;
                if i + d <= last {
                    shell += kernel.eval(x, grid.point(i + d)) * values[i + d];
                }
                if d <= i && i - d >= first {
                    shell += kernel.eval(x, grid.point(i - d)) * values[i - d];
                }
                acc += shell * h;
                best = best.max(acc.abs());
            }
            best
        })
        .collect()
}

/// `T_* f(x) = sup_ε |Σ_{|x-z| > ε} K(x, z) f(z) hⁿ|` over `ε ∈ {(j+1/2)h}`.
pub fn maximal_truncation(f: &LineFunction, kernel: &CzKernel) -> Result<LineFunction> {
    let grid = f.grid();
    let h = grid.h();
    let vol = grid.cell_volume();
    if grid.dim() == 1 {
        return LineFunction::new(grid.clone(), truncation_1d(f.values(), grid, kernel));
    }
    let support = nonzero(f.values());
    let out: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            // (shell index j with |x-z| ∈ ((j-1/2)h, (j+1/2)h], contribution)
            let mut terms: Vec<(u64, f64)> = support
                .iter()
                .filter(|(j, _)| *j != i)
                .map(|&(j, v)| {
                    let z = grid.point(j);
                    let d = dist2(x, z).sqrt() / h;
                    ((d - 0.5).ceil().max(0.0) as u64, kernel.eval(x, z) * v * vol)
                })
                .collect();
            terms.sort_by(|a, b| b.0.cmp(&a.0));
            // Truncation at ε = (j+1/2)h keeps shells with index > j.
            let mut best = 0.0f64;
            let mut acc = 0.0;
            let mut k = 0;
            while k < terms.len() {
                let shell = terms[k].0;
                while k < terms.len() && terms[k].0 == shell {
                    acc += terms[k].1;
                    k += 1;
                }
                if shell >= 1 {
                    best = best.max(acc.abs());
                }
            }
            best
        })
        .collect();
    LineFunction::new(grid.clone(), out)
}

/// Size and regularity constants of a kernel measured on a decimated lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub stride: usize,
    pub evaluations: u64,
}

const TRIPLE_BUDGET: u64 = 10_000_000;

/// Smallest stride with at most `10⁷` sampled triples.
pub fn default_stride(grid: &Grid) -> usize {
    let mut stride = 1;
    loop {
        let p = grid.len().div_ceil(stride) as u64;
        if p.saturating_mul(p).saturating_mul(p) <= TRIPLE_BUDGET {
            return stride;
        }
        stride += 1;
    }
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// Measures the size constant `C₁` and the two Hölder constants of order `delta` on lattice samples.
pub fn kernel_standard_constants(kernel: &CzKernel, delta: f64, grid: &Grid, stride: Option<usize>) -> Result<KernelConstants> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid(format!("regularity order must lie in (0, 1], got {delta}")));
    }
    let stride = stride.unwrap_or_else(|| default_stride(grid)).max(1);
    let points: Vec<[f64; 2]> = (0..grid.len()).step_by(stride).map(|i| grid.point(i)).collect();
    let n = grid.dim() as f64;
    let p = points.len();
    let (c1, c2, c3) = (0..p)
        .into_par_iter()
        .map(|a| {
            let x = points[a];
            let (mut c1, mut c2, mut c3) = (0.0f64, 0.0f64, 0.0f64);
            for &y in &points {
                let dxy = dist2(x, y).sqrt();
                if dxy == 0.0 {
                    continue;
                }
                let kxy = kernel.eval(x, y);
                c1 = c1.max(finite_or_inf(kxy.abs() * dxy.powf(n)));
                let scale = dxy.powf(n + delta);
                for &z in &points {
                    let d = dist2(y, z).sqrt();
                    if d == 0.0 {
                        continue;
                    }
                    if dxy > 2.0 * d {
                        let q = (kxy - kernel.eval(x, z)).abs() * scale / d.powf(delta);
                        c2 = c2.max(finite_or_inf(q));
                    }
                    let dw = dist2(x, z).sqrt();
                    if dw > 0.0 && dxy > 2.0 * dw {
                        let q = (kxy - kernel.eval(z, y)).abs() * scale / dw.powf(delta);
                        c3 = c3.max(finite_or_inf(q));
                    }
                }
            }
            (c1, c2, c3)
        })
        .reduce(|| (0.0, 0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1), a.2.max(b.2)));
    let pp = p as u64;
    Ok(KernelConstants { c1, c2, c3, stride, evaluations: pp * pp * pp })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use std::f64::consts::PI;

    fn grid(x: f64, h: f64) -> Grid {
        Grid::new(GridSpec::new(1, x, h, 0.25, 2, 2)).unwrap()
    }

    fn indicator(g: &Grid) -> LineFunction {
        LineFunction::from_fn(g, |x| if x[0].abs() < 1.0 { 1.0 } else { 0.0 })
    }

    #[test]
    fn hilbert_of_indicator() {
        let g = grid(16.0, 1.0 / 256.0);
        let f = indicator(&g);
        let hf = singular_integral(&f, &CzKernel::hilbert(), SingularMethod::PvDirect).unwrap();
        let t = maximal_truncation(&f, &CzKernel::hilbert()).unwrap();
        let i2 = g.snap(2.0 + 1.0 / 512.0).unwrap();
        let exact = 3f64.ln() / PI;
        assert!((hf.values()[i2] - exact).abs() < 5e-3);
        assert!((t.values()[i2] - exact).abs() < 5e-3);
        let i0 = g.snap(1.0 / 512.0).unwrap();
        let mirror = g.snap(-1.0 / 512.0).unwrap();
        assert!((t.values()[i0] - t.values()[mirror]).abs() < 1e-12);
    }

    #[test]
    fn truncation_dominates_pv() {
        let g = grid(4.0, 1.0 / 16.0);
        let f = LineFunction::from_fn(&g, |x| (3.0 * x[0]).sin() * (-x[0] * x[0]).exp());
        let k = CzKernel::hilbert();
        let pv = singular_integral(&f, &k, SingularMethod::PvDirect).unwrap();
        let t = maximal_truncation(&f, &k).unwrap();
        for (a, b) in pv.values().iter().zip(t.values()) {
            assert!(a.abs() <= b + 1e-12);
        }
    }

    #[test]
    fn generic_path_matches_convolution() {
        let g = grid(2.0, 1.0 / 16.0);
        let f = LineFunction::from_fn(&g, |x| x[0] * (-x[0] * x[0]).exp());
        let fast = singular_integral(&f, &CzKernel::hilbert(), SingularMethod::PvDirect).unwrap();
        let slow_kernel = CzKernel::new("hilbert-generic", 1.0, |x, y| 1.0 / (PI * (x[0] - y[0]))).unwrap();
        let slow = singular_integral(&f, &slow_kernel, SingularMethod::PvDirect).unwrap();
        for (a, b) in fast.values().iter().zip(slow.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(singular_integral(&f, &slow_kernel, SingularMethod::Spectral).is_err());
    }

    #[test]
    fn hilbert_constants() {
        let g = grid(2.0, 1.0 / 16.0);
        let c = kernel_standard_constants(&CzKernel::hilbert(), 1.0, &g, None).unwrap();
        assert!((c.c1 - 1.0 / PI).abs() < 1e-9);
        assert!(c.c2 <= 2.0 / PI + 1e-6);
        assert!(c.c2 > 0.9 * 2.0 / PI);
        assert!(c.c3 <= 2.0 / PI + 1e-6);
        assert!(c.evaluations <= TRIPLE_BUDGET);
    }

    #[test]
    fn inverse_square_size_grows_with_resolution() {
        let g = grid(2.0, 1.0 / 32.0);
        let k = CzKernel::inverse_square();
        let c: Vec<f64> = [4, 2, 1]
            .iter()
            .map(|&s| kernel_standard_constants(&k, 1.0, &g, Some(s)).unwrap().c1)
            .collect();
        assert!(c[0] < c[1] && c[1] < c[2]);
    }
}
