//! Discretization of the upper half-space: a cell-centred x-lattice on `[-X, X]^n`
//! and geometric t-levels `t_k = t_min * e^(k/m)`.

mod ball;
mod codec;
mod function;
mod scalar;
mod synth;

pub use ball::{ball_average, ball_measure, BallShape, BallSums};
pub use codec::{decode, encode, read_file, write_file, Decoded, FileKind};
pub use function::{HalfSpaceFunction, LineFunction};
pub use scalar::Scalar;
pub use synth::{smooth_bump, synthesize, tent_profile, Family, Synthesized};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TentError};

/// User-facing description of a grid. Field names follow the usual notation
/// (`X`, `K`) in serialized form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    #[serde(rename = "X")]
    pub half_width: f64,
    pub h: f64,
    pub t_min: f64,
    pub m: usize,
    #[serde(rename = "K")]
    pub levels: usize,
}

impl GridSpec {
    pub fn new(n: usize, half_width: f64, h: f64, t_min: f64, m: usize, levels: usize) -> Self {
        GridSpec { n, half_width, h, t_min, m, levels }
    }

    /// The desk-scale default: n=1, X=16, h=1/256, t_min=1/4, m=8, K=48.
    pub fn default_1d() -> Self {
        GridSpec::new(1, 16.0, 1.0 / 256.0, 0.25, 8, 48)
    }

    /// Same domain and t-levels with `h / factor`.
    pub fn refined(&self, factor: usize) -> Self {
        GridSpec { h: self.h / factor as f64, ..*self }
    }

    /// Same everything, `m * factor` levels per e-fold covering the same t-range.
    pub fn refined_levels(&self, factor: usize) -> Self {
        GridSpec { m: self.m * factor, levels: (self.levels - 1) * factor + 1, ..*self }
    }

    pub fn with_half_width(&self, half_width: f64) -> Self {
        GridSpec { half_width, ..*self }
    }

    /// Number of cells along one axis, or an error describing the violated invariant.
    pub fn validate(&self) -> Result<usize> {
        let bad = |msg: String| Err(TentError::InvalidGrid(msg));
        if self.n != 1 && self.n != 2 {
            return bad(format!("dimension must be 1 or 2, got {}", self.n));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return bad(format!("h must be positive, got {}", self.h));
        }
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return bad(format!("X must be positive, got {}", self.half_width));
        }
        if !(self.t_min.is_finite() && self.t_min > 0.0) {
            return bad(format!("t_min must be positive, got {}", self.t_min));
        }
        if self.m == 0 {
            return bad("m must be a positive integer".into());
        }
        if self.levels < self.m {
            return bad(format!("K = {} is smaller than m = {}", self.levels, self.m));
        }
        let ratio = self.half_width / self.h;
        let rounded = ratio.round();
        if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * rounded.max(1.0) {
            return bad(format!("X/h = {ratio} is not a positive integer"));
        }
        let side = 2 * rounded as usize;
        let total = side.checked_pow(self.n as u32).and_then(|c| c.checked_mul(self.levels));
        if total.is_none() {
            return bad("grid is too large".into());
        }
        Ok(side)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::default_1d()
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{},{},{}", self.n, self.half_width, self.h, self.t_min, self.m, self.levels)
    }
}

fn parse_number(token: &str) -> Result<f64> {
    let token = token.trim();
    let err = || TentError::InvalidGrid(format!("cannot parse `{token}` as a number"));
    match token.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| err())?;
            let b: f64 = b.trim().parse().map_err(|_| err())?;
            Ok(a / b)
        }
        None => token.parse().map_err(|_| err()),
    }
}

fn parse_count(token: &str) -> Result<usize> {
    token
        .trim()
        .parse()
        .map_err(|_| TentError::InvalidGrid(format!("cannot parse `{}` as a count", token.trim())))
}

/// Parses `n,X,h,tmin,m,K`; real fields accept fractions such as `1/256`.
impl FromStr for GridSpec {
    type Err = TentError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 6 {
            return Err(TentError::InvalidGrid(format!(
                "expected 6 comma-separated fields n,X,h,tmin,m,K, got {}",
                parts.len()
            )));
        }
        Ok(GridSpec {
            n: parse_count(parts[0])?,
            half_width: parse_number(parts[1])?,
            h: parse_number(parts[2])?,
            t_min: parse_number(parts[3])?,
            m: parse_count(parts[4])?,
            levels: parse_count(parts[5])?,
        })
    }
}

/// A validated grid with precomputed coordinates and t-levels. Cloning is cheap.
#[derive(Clone)]
pub struct Grid {
    spec: GridSpec,
    side: usize,
    coords: Arc<[f64]>,
    ts: Arc<[f64]>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("spec", &self.spec).field("side", &self.side).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        let side = spec.validate()?;
        let x0 = spec.half_width;
        let coords: Arc<[f64]> = (0..side).map(|j| (j as f64 + 0.5) * spec.h - x0).collect();
        let ts: Arc<[f64]> = (0..spec.levels)
            .map(|k| spec.t_min * (k as f64 / spec.m as f64).exp())
            .collect();
        Ok(Grid { spec, side, coords, ts })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.n
    }

    pub fn h(&self) -> f64 {
        self.spec.h
    }

    pub fn half_width(&self) -> f64 {
        self.spec.half_width
    }

    /// Cells per axis, `2X/h`.
    pub fn side(&self) -> usize {
        self.side
    }

    /// Total number of x-lattice points, `side^n`.
    pub fn len(&self) -> usize {
        self.side.pow(self.spec.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spec.h.powi(self.spec.n as i32)
    }

    /// Coordinate of lattice index `j` along one axis.
    pub fn coord(&self, j: usize) -> f64 {
        self.coords[j]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Axis indices of a flat index (row-major, last axis fastest).
    pub fn unravel(&self, idx: usize) -> [usize; 2] {
        if self.spec.n == 1 {
            [idx, 0]
        } else {
            [idx / self.side, idx % self.side]
        }
    }

    pub fn ravel(&self, ix: [usize; 2]) -> usize {
        if self.spec.n == 1 {
            ix[0]
        } else {
            ix[0] * self.side + ix[1]
        }
    }

    /// Cell centre of a flat index; unused trailing components are zero.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let [a, b] = self.unravel(idx);
        if self.spec.n == 1 {
            [self.coords[a], 0.0]
        } else {
            [self.coords[a], self.coords[b]]
        }
    }

    /// Lattice index of the cell containing `x`, if inside the domain.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let u = ((x + self.spec.half_width) / self.spec.h).floor();
        if u < 0.0 || u >= self.side as f64 {
            None
        } else {
            Some(u as usize)
        }
    }

    /// Index of the lattice point at `x` when `x` lies within `1e-9 h` of one.
    pub fn snap(&self, x: f64) -> Option<usize> {
        let u = (x + self.spec.half_width) / self.spec.h - 0.5;
        let j = u.round();
        if (u - j).abs() <= 1e-9 && j >= 0.0 && j < self.side as f64 {
            Some(j as usize)
        } else {
            None
        }
    }

    pub fn levels(&self) -> usize {
        self.spec.levels
    }

    pub fn t(&self, k: usize) -> f64 {
        self.ts[k]
    }

    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    pub fn t_max(&self) -> f64 {
        self.ts[self.ts.len() - 1]
    }

    pub fn m(&self) -> usize {
        self.spec.m
    }

    /// The `dt/t` quadrature weight, identical on every level.
    pub fn level_weight(&self) -> f64 {
        1.0 / self.spec.m as f64
    }

    /// Level whose t-value matches `t` to `1e-12` relative.
    pub fn level_of(&self, t: f64) -> Option<usize> {
        self.ts.iter().position(|&tk| (tk - t).abs() <= 1e-12 * tk)
    }

    pub fn same_as(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(TentError::GridMismatch)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_reference_grid() {
        let g = Grid::new(GridSpec::new(1, 4.0, 0.25, 0.25, 4, 12)).unwrap();
        assert_eq!(g.len(), 32);
        assert_eq!(g.levels(), 12);
        assert_eq!(g.level_weight(), 0.25);
        assert_eq!(g.coord(0), -3.875);
        assert_eq!(g.coord(31), 3.875);
    }

    #[test]
    fn rejects_non_integer_ratio() {
        let err = Grid::new(GridSpec::new(1, 1.0, 1.0 / 3.0 + 1e-3, 0.25, 4, 12)).unwrap_err();
        assert!(matches!(err, TentError::InvalidGrid(_)));
        assert!(Grid::new(GridSpec::new(1, 1.0, 0.3, 0.25, 4, 12)).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(GridSpec::new(1, 4.0, 0.25, 0.25, 4, 3)).is_err());
        assert!(Grid::new(GridSpec::new(1, 4.0, -0.25, 0.25, 4, 12)).is_err());
        assert!(Grid::new(GridSpec::new(1, 4.0, 0.25, 0.0, 4, 12)).is_err());
        assert!(Grid::new(GridSpec::new(1, 4.0, 0.25, 0.25, 0, 12)).is_err());
        assert!(Grid::new(GridSpec::new(3, 4.0, 0.25, 0.25, 4, 12)).is_err());
    }

    #[test]
    fn efold_weights_sum_to_one() {
        let g = Grid::new(GridSpec::new(1, 4.0, 0.25, 0.25, 8, 30)).unwrap();
        for k in 0..=g.levels() - g.m() {
            let s: f64 = (k..k + g.m()).map(|_| g.level_weight()).sum();
            assert_eq!(s, 1.0);
        }
    }

    #[test]
    fn parses_with_fractions() {
        let s: GridSpec = "1,16,1/256,1/4,8,48".parse().unwrap();
        assert_eq!(s, GridSpec::default_1d());
        assert!("1,16,1/256".parse::<GridSpec>().is_err());
        assert!("1,16,x,1/4,8,48".parse::<GridSpec>().is_err());
    }

    #[test]
    fn spec_serde_uses_conventional_names() {
        let json = serde_json::to_string(&GridSpec::default_1d()).unwrap();
        assert!(json.contains("\"X\":16"));
        assert!(json.contains("\"K\":48"));
        let back: GridSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, GridSpec::default_1d());
    }

    #[test]
    fn snap_and_locate() {
        let g = Grid::new(GridSpec::new(1, 2.0, 0.5, 0.25, 2, 4)).unwrap();
        assert_eq!(g.snap(0.25), Some(4));
        assert_eq!(g.snap(0.3), None);
        assert_eq!(g.locate(0.3), Some(4));
        assert_eq!(g.locate(2.0), None);
    }

    #[test]
    fn level_refinement_keeps_range() {
        let s = GridSpec::new(1, 4.0, 0.25, 0.25, 4, 13);
        let r = s.refined_levels(2);
        let (a, b) = (Grid::new(s).unwrap(), Grid::new(r).unwrap());
        assert!((a.t_max() - b.t_max()).abs() < 1e-12);
    }
}
