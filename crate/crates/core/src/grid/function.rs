use num_complex::Complex64;

use super::{Grid, Scalar};
use crate::error::{Result, TentError};

/// A function on the x-lattice, extended by zero outside the domain.
#[derive(Clone, Debug, PartialEq)]
pub struct LineFunction<T = f64> {
    grid: Grid,
    values: Vec<T>,
}

impl<T: Scalar> LineFunction<T> {
    pub fn new(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(TentError::LengthMismatch { expected: grid.len(), actual: values.len() });
        }
        Ok(LineFunction { grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        LineFunction { grid: grid.clone(), values: vec![T::default(); grid.len()] }
    }

    pub fn constant(grid: &Grid, c: T) -> Self {
        LineFunction { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    /// Samples `f` at cell centres.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut([f64; 2]) -> T) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        LineFunction { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> LineFunction<U> {
        LineFunction { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn abs(&self) -> LineFunction<f64> {
        self.map(|v| v.modulus())
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn zip(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(LineFunction { grid: self.grid.clone(), values })
    }

    /// `∫ f` as a cell sum.
    pub fn integral(&self) -> T {
        let mut acc = T::default();
        for &v in &self.values {
            acc += v;
        }
        acc * self.grid.cell_volume()
    }

    /// `(∫ |f|^p)^(1/p)`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.modulus().powf(p)).sum();
        (s * self.grid.cell_volume()).powf(1.0 / p)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.modulus()))
    }

    /// First and last nonzero index of a 1D function.
    pub fn support_bounds(&self) -> Option<(usize, usize)> {
        let first = self.values.iter().position(|v| !v.is_zero())?;
        let last = self.values.iter().rposition(|v| !v.is_zero())?;
        Some((first, last))
    }

    /// Indices of nonzero samples.
    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| !self.values[i].is_zero()).collect()
    }

    /// The same samples on a grid that differs only in its t-levels.
    pub fn with_grid(&self, grid: &Grid) -> Result<Self> {
        if grid.len() != self.grid.len() || grid.h() != self.grid.h() || grid.dim() != self.grid.dim() {
            return Err(TentError::GridMismatch);
        }
        Ok(LineFunction { grid: grid.clone(), values: self.values.clone() })
    }
}

impl LineFunction<f64> {
    pub fn to_complex(&self) -> LineFunction<Complex64> {
        self.map(|v| Complex64::new(v, 0.0))
    }
}

impl LineFunction<Complex64> {
    pub fn re(&self) -> LineFunction<f64> {
        self.map(|v| v.re)
    }

    pub fn im(&self) -> LineFunction<f64> {
        self.map(|v| v.im)
    }
}

/// A function on lattice × t-levels, stored level-major.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpaceFunction<T = f64> {
    grid: Grid,
    values: Vec<T>,
}

impl<T: Scalar> HalfSpaceFunction<T> {
    pub fn new(grid: Grid, values: Vec<T>) -> Result<Self> {
        let expected = grid.len() * grid.levels();
        if values.len() != expected {
            return Err(TentError::LengthMismatch { expected, actual: values.len() });
        }
        Ok(HalfSpaceFunction { grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        HalfSpaceFunction { grid: grid.clone(), values: vec![T::default(); grid.len() * grid.levels()] }
    }

    /// Samples `f(x, t_k)` at every cell centre and level.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut([f64; 2], f64) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.len() * grid.levels());
        for k in 0..grid.levels() {
            let t = grid.t(k);
            for i in 0..grid.len() {
                values.push(f(grid.point(i), t));
            }
        }
        HalfSpaceFunction { grid: grid.clone(), values }
    }

    /// Stacks one line function per level.
    pub fn from_slices(grid: &Grid, slices: Vec<LineFunction<T>>) -> Result<Self> {
        if slices.len() != grid.levels() {
            return Err(TentError::LengthMismatch { expected: grid.levels(), actual: slices.len() });
        }
        let mut values = Vec::with_capacity(grid.len() * grid.levels());
        for s in slices {
            if s.len() != grid.len() {
                return Err(TentError::GridMismatch);
            }
            values.extend(s.into_values());
        }
        Ok(HalfSpaceFunction { grid: grid.clone(), values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn slice(&self, k: usize) -> &[T] {
        let n = self.grid.len();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [T] {
        let n = self.grid.len();
        &mut self.values[k * n..(k + 1) * n]
    }

    pub fn at(&self, k: usize, i: usize) -> T {
        self.values[k * self.grid.len() + i]
    }

    /// Level `k` as a line function.
    pub fn level(&self, k: usize) -> LineFunction<T> {
        LineFunction { grid: self.grid.clone(), values: self.slice(k).to_vec() }
    }

    pub fn set_level(&mut self, k: usize, f: &LineFunction<T>) -> Result<()> {
        if f.len() != self.grid.len() {
            return Err(TentError::GridMismatch);
        }
        self.slice_mut(k).copy_from_slice(f.values());
        Ok(())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> HalfSpaceFunction<U> {
        HalfSpaceFunction { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn abs(&self) -> HalfSpaceFunction<f64> {
        self.map(|v| v.modulus())
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn zip(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(HalfSpaceFunction { grid: self.grid.clone(), values })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.modulus()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }

    /// `(∫∫ |F|^r dy dt/t)^(1/r)` with the level quadrature.
    pub fn lr_dtdt(&self, r: f64) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.modulus().powf(r)).sum();
        (s * self.grid.cell_volume() * self.grid.level_weight()).powf(1.0 / r)
    }

    /// `∫ F(y, t_k) dy` for every level.
    pub fn slice_integrals(&self) -> Vec<T> {
        let hn = self.grid.cell_volume();
        (0..self.grid.levels())
            .map(|k| {
                let mut acc = T::default();
                for &v in self.slice(k) {
                    acc += v;
                }
                acc * hn
            })
            .collect()
    }

    /// `∫ |F(y, t_k)| dy` for every level.
    pub fn slice_masses(&self) -> Vec<f64> {
        let hn = self.grid.cell_volume();
        (0..self.grid.levels())
            .map(|k| self.slice(k).iter().map(|v| v.modulus()).sum::<f64>() * hn)
            .collect()
    }

    /// Levels carrying at least one nonzero sample.
    pub fn active_levels(&self) -> Vec<usize> {
        (0..self.grid.levels()).filter(|&k| self.slice(k).iter().any(|v| !v.is_zero())).collect()
    }
}

impl HalfSpaceFunction<f64> {
    pub fn to_complex(&self) -> HalfSpaceFunction<Complex64> {
        self.map(|v| Complex64::new(v, 0.0))
    }
}
