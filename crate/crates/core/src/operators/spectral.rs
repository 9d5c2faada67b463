//! Fourier multipliers on the periodic extension of a 1D grid function.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::conv::plan;
use crate::error::{Result, TentError};
use crate::grid::{LineFunction, Scalar};

type SymbolFn = dyn Fn(f64) -> Complex64 + Send + Sync;

/// A symbol `σ(ω)` in angular frequency, so that `σ(ω) = iω` is differentiation.
#[derive(Clone)]
pub struct MultiplierSymbol {
    name: String,
    eval: Arc<SymbolFn>,
}

impl fmt::Debug for MultiplierSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiplierSymbol").field("name", &self.name).finish()
    }
}

fn sgn(w: f64) -> f64 {
    if w > 0.0 {
        1.0
    } else if w < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl MultiplierSymbol {
    pub fn new(name: impl Into<String>, eval: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        MultiplierSymbol { name: name.into(), eval: Arc::new(eval) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, omega: f64) -> Complex64 {
        (self.eval)(omega)
    }

    pub fn identity() -> Self {
        MultiplierSymbol::new("identity", |_| Complex64::new(1.0, 0.0))
    }

    /// `-i sgn ω`.
    pub fn hilbert() -> Self {
        MultiplierSymbol::new("hilbert", |w| Complex64::new(0.0, -sgn(w)))
    }

    /// `i sgn ω = iω / |ω|`, the symbol of `∇(-Δ)^{-1/2}` on the line.
    pub fn grad_sqrt_lap() -> Self {
        MultiplierSymbol::new("gradsqrtlap", |w| Complex64::new(0.0, sgn(w)))
    }

    /// `e^{-sω²}`, the heat semigroup at time `s`.
    pub fn heat(s: f64) -> Self {
        MultiplierSymbol::new(format!("heat:{s}"), move |w| Complex64::new((-s * w * w).exp(), 0.0))
    }

    /// `e^{-sω²}` times the transform of the cell indicator, `sinc(ωh/2)`.
    pub fn heat_cell_averaged(s: f64, h: f64) -> Self {
        MultiplierSymbol::new(format!("heat-cell:{s}"), move |w| {
            let u = 0.5 * w * h;
            let sinc = if u == 0.0 { 1.0 } else { u.sin() / u };
            Complex64::new((-s * w * w).exp() * sinc, 0.0)
        })
    }

    /// `(1 - e^{-sω²})^M`.
    pub fn heat_complement_power(s: f64, power: u32) -> Self {
        MultiplierSymbol::new(format!("heat-complement:{s}^{power}"), move |w| {
            Complex64::new((1.0 - (-s * w * w).exp()).powi(power as i32), 0.0)
        })
    }

    /// `|ω|^{-α}` with the zero frequency set to 0.
    pub fn riesz(alpha: f64) -> Self {
        MultiplierSymbol::new(format!("riesz:{alpha}"), move |w| {
            if w == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(w.abs().powf(-alpha), 0.0)
            }
        })
    }

    pub fn scaled(c: f64) -> Self {
        MultiplierSymbol::new(format!("scale:{c}"), move |_| Complex64::new(c, 0.0))
    }

    pub fn product(&self, other: &MultiplierSymbol) -> Self {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        MultiplierSymbol::new(format!("{}*{}", self.name, other.name), move |w| a(w) * b(w))
    }
}

/// Angular frequency of FFT bin `k` for `len` samples spanning `length`.
pub fn angular_frequency(k: usize, len: usize, length: f64) -> f64 {
    let kk = if k <= len / 2 { k as f64 } else { k as f64 - len as f64 };
    2.0 * std::f64::consts::PI * kk / length
}

/// `F^{-1}[σ F f]` on the periodic extension of `[-X, X]`; the Nyquist bin uses `(σ(ω)+σ(-ω))/2`.
pub fn spectral_multiplier<T: Scalar>(f: &LineFunction<T>, symbol: &MultiplierSymbol) -> Result<LineFunction<Complex64>> {
    let grid = f.grid();
    if grid.dim() != 1 {
        return Err(TentError::Unsupported("spectral multipliers are implemented in one dimension".into()));
    }
    let len = grid.len();
    let length = 2.0 * grid.half_width();
    let mut buf: Vec<Complex64> = f
        .values()
        .iter()
        .map(|v| {
            let (re, im) = v.to_parts();
            Complex64::new(re, im)
        })
        .collect();
    plan(len, false).process(&mut buf);
    for (k, b) in buf.iter_mut().enumerate() {
        let w = angular_frequency(k, len, length);
        let s = if len % 2 == 0 && k == len / 2 {
            (symbol.eval(w) + symbol.eval(-w)) * 0.5
        } else {
            symbol.eval(w)
        };
        if !(s.re.is_finite() && s.im.is_finite()) {
            return Err(TentError::SymbolNotFinite { name: symbol.name().to_string(), omega: w });
        }
        *b *= s;
    }
    plan(len, true).process(&mut buf);
    let scale = 1.0 / len as f64;
    LineFunction::new(grid.clone(), buf.into_iter().map(|c| c * scale).collect())
}

/// Real part of [`spectral_multiplier`], exact for real input and Hermitian symbols.
pub fn spectral_multiplier_real<T: Scalar>(f: &LineFunction<T>, symbol: &MultiplierSymbol) -> Result<LineFunction> {
    Ok(spectral_multiplier(f, symbol)?.re())
}
