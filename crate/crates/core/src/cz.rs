//! Whitney decompositions of lattice open sets and Calderón–Zygmund splits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, TentError};
use crate::grid::{Grid, HalfSpaceFunction, LineFunction};
use crate::operators::{maximal, MaximalMode};
use crate::tent::vertical;

/// A lattice-aligned dyadic cube of `2^level` cells per side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: u32,
    /// Lattice index of the lower corner cell on each axis.
    pub corner: [usize; 2],
    /// Squared distance to the complement, in units of `h²`, between cell centres.
    pub dist2: u64,
}

impl DyadicCube {
    pub fn cells_per_side(&self) -> usize {
        1 << self.level
    }

    /// Side length `ℓ`.
    pub fn side(&self, grid: &Grid) -> f64 {
        self.cells_per_side() as f64 * grid.h()
    }

    pub fn distance(&self, grid: &Grid) -> f64 {
        (self.dist2 as f64).sqrt() * grid.h()
    }

    /// Number of lattice cells in the cube.
    pub fn cell_count(&self, grid: &Grid) -> usize {
        self.cells_per_side().pow(grid.dim() as u32)
    }

    pub fn measure(&self, grid: &Grid) -> f64 {
        self.cell_count(grid) as f64 * grid.cell_volume()
    }

    /// Flat indices of the cube's cells, row-major.
    pub fn cells(&self, grid: &Grid) -> Vec<usize> {
        let l = self.cells_per_side();
        if grid.dim() == 1 {
            (self.corner[0]..self.corner[0] + l).collect()
        } else {
            let mut out = Vec::with_capacity(l * l);
            for a in self.corner[0]..self.corner[0] + l {
                for b in self.corner[1]..self.corner[1] + l {
                    out.push(grid.ravel([a, b]));
                }
            }
            out
        }
    }

    /// Geometric centre of the cube.
    pub fn center(&self, grid: &Grid) -> [f64; 2] {
        let half = 0.5 * self.side(grid);
        let lo = |a: usize| a as f64 * grid.h() - grid.half_width();
        if grid.dim() == 1 {
            [lo(self.corner[0]) + half, 0.0]
        } else {
            [lo(self.corner[0]) + half, lo(self.corner[1]) + half]
        }
    }

    /// `√n ℓ ≤ dist < 4√n ℓ`, compared exactly in integers.
    pub fn in_window(&self, grid: &Grid) -> bool {
        let n = grid.dim() as u64;
        let l2 = (self.cells_per_side() as u64).pow(2);
        n * l2 <= self.dist2 && self.dist2 < 16 * n * l2
    }
}

fn touches_boundary(grid: &Grid, mask: &[bool]) -> bool {
    let side = grid.side();
    mask.iter().enumerate().any(|(i, &m)| {
        m && {
            let [a, b] = grid.unravel(i);
            a == 0 || a == side - 1 || (grid.dim() == 2 && (b == 0 || b == side - 1))
        }
    })
}

/// Complement cells with an axis neighbour in `mask`; the nearest complement cell to any subset of `mask` is among them.
fn complement_frontier(grid: &Grid, mask: &[bool]) -> Vec<[i64; 2]> {
    let side = grid.side() as i64;
    let inside = |a: i64, b: i64| a >= 0 && b >= 0 && a < side && b < side;
    let steps: &[(i64, i64)] = if grid.dim() == 1 { &[(-1, 0), (1, 0)] } else { &[(-1, 0), (1, 0), (0, -1), (0, 1)] };
    (0..grid.len())
        .filter(|&i| !mask[i])
        .filter_map(|i| {
            let [a, b] = grid.unravel(i);
            let (a, b) = (a as i64, b as i64);
            let hit = steps.iter().any(|&(da, db)| {
                let (x, y) = (a + da, b + db);
                (grid.dim() == 2 || y == 0) && inside(x, if grid.dim() == 1 { 0 } else { y }) && mask[grid.ravel([x as usize, y as usize])]
            });
            hit.then_some([a, b])
        })
        .collect()
}

/// `dist(y, ∁Ω)` between cell centres for every cell, zero outside `mask`; `mask` must avoid the boundary.
pub(crate) fn complement_distance(grid: &Grid, mask: &[bool]) -> Vec<f64> {
    let h = grid.h();
    if grid.dim() == 1 {
        let n = mask.len();
        let mut left = vec![0i64; n];
        let mut last = -1i64;
        for i in 0..n {
            if !mask[i] {
                last = i as i64;
            }
            left[i] = last;
        }
        let mut out = vec![0.0; n];
        let mut next = n as i64;
        for i in (0..n).rev() {
            if !mask[i] {
                next = i as i64;
                continue;
            }
            out[i] = ((i as i64 - left[i]).min(next - i as i64)) as f64 * h;
        }
        return out;
    }
    let frontier = complement_frontier(grid, mask);
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if !mask[i] {
                return 0.0;
            }
            let [a, b] = grid.unravel(i);
            let d2 = frontier
                .iter()
                .map(|c| ((c[0] - a as i64).pow(2) + (c[1] - b as i64).pow(2)) as u64)
                .min()
                .unwrap_or(u64::MAX);
            (d2 as f64).sqrt() * h
        })
        .collect()
}

fn gap(c: i64, lo: i64, len: i64) -> i64 {
    if c < lo {
        lo - c
    } else if c >= lo + len {
        c - (lo + len - 1)
    } else {
        0
    }
}

/// Summed-area table of the mask for O(1) "cube inside Ω" queries.
struct Counts {
    side: usize,
    dim: usize,
    table: Vec<u32>,
}

impl Counts {
    fn new(grid: &Grid, mask: &[bool]) -> Self {
        let side = grid.side();
        if grid.dim() == 1 {
            let mut table = vec![0u32; side + 1];
            for i in 0..side {
                table[i + 1] = table[i] + mask[i] as u32;
            }
            Counts { side, dim: 1, table }
        } else {
            let w = side + 1;
            let mut table = vec![0u32; w * w];
            for a in 0..side {
                for b in 0..side {
                    table[(a + 1) * w + b + 1] =
                        mask[a * side + b] as u32 + table[a * w + b + 1] + table[(a + 1) * w + b] - table[a * w + b];
                }
            }
            Counts { side, dim: 2, table }
        }
    }

    fn full(&self, corner: [usize; 2], l: usize) -> bool {
        if corner[0] + l > self.side || (self.dim == 2 && corner[1] + l > self.side) {
            return false;
        }
        if self.dim == 1 {
            (self.table[corner[0] + l] - self.table[corner[0]]) as usize == l
        } else {
            let w = self.side + 1;
            let (a0, b0, a1, b1) = (corner[0], corner[1], corner[0] + l, corner[1] + l);
            let s = self.table[a1 * w + b1] + self.table[a0 * w + b0] - self.table[a0 * w + b1] - self.table[a1 * w + b0];
            s as usize == l * l
        }
    }
}

/// Greedy dyadic Whitney decomposition of the cell set `mask`, largest cubes first, lexicographic ties.
///
/// Distances are measured between cell centres. Cells of side `h` are always emitted when nothing
/// larger fits, so the lower window bound can fail next to `∁Ω` in two dimensions.
pub fn whitney_decompose(grid: &Grid, mask: &[bool]) -> Result<Vec<DyadicCube>> {
    if mask.len() != grid.len() {
        return Err(TentError::LengthMismatch { expected: grid.len(), actual: mask.len() });
    }
    if !mask.iter().any(|&m| m) {
        return Ok(Vec::new());
    }
    if touches_boundary(grid, mask) {
        return Err(TentError::TouchesBoundary);
    }
    let frontier = complement_frontier(grid, mask);
    let counts = Counts::new(grid, mask);
    let side = grid.side();
    let dim = grid.dim();
    let n = dim as u64;
    let top = side.next_power_of_two().trailing_zeros();
    let mut covered = vec![false; grid.len()];
    let mut cubes = Vec::new();
    for level in (0..=top).rev() {
        let l = 1usize << level;
        let per_axis = side.div_ceil(l);
        let corners: Vec<[usize; 2]> = if dim == 1 {
            (0..per_axis).map(|a| [a * l, 0]).collect()
        } else {
            (0..per_axis).flat_map(|a| (0..per_axis).map(move |b| [a * l, b * l])).collect()
        };
        let found: Vec<DyadicCube> = corners
            .par_iter()
            .filter(|c| counts.full(**c, l) && !covered[grid.ravel(**c)])
            .filter_map(|&corner| {
                let li = l as i64;
                let dist2 = frontier
                    .iter()
                    .map(|c| {
                        let ga = gap(c[0], corner[0] as i64, li);
                        let gb = if dim == 2 { gap(c[1], corner[1] as i64, li) } else { 0 };
                        (ga * ga + gb * gb) as u64
                    })
                    .min()
                    .expect("bounded open set has a complement");
                (level == 0 || dist2 >= n * (l as u64).pow(2)).then_some(DyadicCube { level, corner, dist2 })
            })
            .collect();
        for cube in found {
            for i in cube.cells(grid) {
                covered[i] = true;
            }
            cubes.push(cube);
        }
    }
    Ok(cubes)
}

/// Scalar Calderón–Zygmund decomposition `g = 𝒢 + ℬ` at height `λ`.
#[derive(Clone, Debug)]
pub struct CzScalar {
    pub lambda: f64,
    pub source: LineFunction,
    pub good: LineFunction,
    pub bad: LineFunction,
    pub cubes: Vec<DyadicCube>,
    pub omega: Vec<bool>,
    /// `⨍_{Q_i} g` per cube.
    pub means: Vec<f64>,
}

/// Measured quantities behind the decomposition's hard bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CzChecks {
    pub lambda: f64,
    pub max_good: f64,
    pub good_bound: f64,
    pub max_cube_mean: f64,
    pub mean_bound: f64,
    /// `max_i |∫_{Q_i} ℬ| / ∫_{Q_i} |g|`.
    pub cube_mean_defect: f64,
    pub bad_l1: f64,
    pub source_l1: f64,
    pub omega_measure: f64,
    pub omega_integral: f64,
    pub cubes: usize,
    pub whitney_violations: usize,
    /// `max |𝒢 + ℬ - g| / max |g|`.
    pub reconstruction_error: f64,
}

impl CzChecks {
    pub fn good_ok(&self) -> bool {
        self.max_good <= self.good_bound
    }

    pub fn mean_ok(&self) -> bool {
        self.max_cube_mean <= self.mean_bound
    }

    pub fn cancellation_ok(&self) -> bool {
        self.cube_mean_defect <= 1e-12
    }

    pub fn bad_l1_ok(&self) -> bool {
        self.bad_l1 <= 2.0 * self.source_l1
    }

    pub fn level_set_ok(&self) -> bool {
        self.lambda * self.omega_measure <= self.omega_integral
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("height must be positive, got {lambda}")))
    }
}

/// Whitney cubes of `Ω_λ = {M_u g > λ}`.
fn level_set_cubes(g: &LineFunction, lambda: f64) -> Result<(Vec<bool>, Vec<DyadicCube>)> {
    let mu = maximal(g, MaximalMode::Uncentered)?;
    let omega: Vec<bool> = mu.values().iter().map(|&v| v > lambda).collect();
    let cubes = whitney_decompose(g.grid(), &omega)?;
    Ok((omega, cubes))
}

/// Decomposes a nonnegative `g` at height `λ` over the Whitney cubes of `{M_u g > λ}`.
pub fn cz_scalar(g: &LineFunction, lambda: f64) -> Result<CzScalar> {
    check_lambda(lambda)?;
    if g.values().iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(invalid("scalar decomposition needs a finite nonnegative function"));
    }
    let grid = g.grid();
    let (omega, cubes) = level_set_cubes(g, lambda)?;
    let mut good = g.values().to_vec();
    let mut bad = vec![0.0; grid.len()];
    let mut means = Vec::with_capacity(cubes.len());
    for cube in &cubes {
        let cells = cube.cells(grid);
        let mean = cells.iter().map(|&i| g.values()[i]).sum::<f64>() / cells.len() as f64;
        for &i in &cells {
            good[i] = mean;
            bad[i] = g.values()[i] - mean;
        }
        means.push(mean);
    }
    Ok(CzScalar {
        lambda,
        source: g.clone(),
        good: LineFunction::new(grid.clone(), good)?,
        bad: LineFunction::new(grid.clone(), bad)?,
        cubes,
        omega,
        means,
    })
}

impl CzScalar {
    pub fn checks(&self) -> CzChecks {
        let grid = self.source.grid();
        let n = grid.dim() as i32;
        let vol = grid.cell_volume();
        let g = self.source.values();
        let cube_mean_defect = self
            .cubes
            .iter()
            .map(|c| {
                let cells = c.cells(grid);
                let mass: f64 = cells.iter().map(|&i| g[i].abs()).sum();
                let integral: f64 = cells.iter().map(|&i| self.bad.values()[i]).sum();
                if mass > 0.0 {
                    integral.abs() / mass
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        let scale = self.source.max_abs().max(f64::MIN_POSITIVE);
        let reconstruction_error = self
            .good
            .values()
            .iter()
            .zip(self.bad.values())
            .zip(g)
            .map(|((a, b), s)| (a + b - s).abs())
            .fold(0.0, f64::max)
            / scale;
        CzChecks {
            lambda: self.lambda,
            max_good: self.good.max_abs(),
            good_bound: 10f64.powi(n) * self.lambda,
            max_cube_mean: self.means.iter().copied().fold(0.0, f64::max),
            mean_bound: 8f64.powi(n) * self.lambda,
            cube_mean_defect,
            bad_l1: self.bad.lp_norm(1.0),
            source_l1: self.source.lp_norm(1.0),
            omega_measure: self.omega.iter().filter(|&&m| m).count() as f64 * vol,
            omega_integral: self.omega.iter().zip(g).filter(|(m, _)| **m).map(|(_, v)| v.abs()).sum::<f64>() * vol,
            cubes: self.cubes.len(),
            whitney_violations: self.cubes.iter().filter(|c| !c.in_window(grid)).count(),
            reconstruction_error,
        }
    }
}

/// A bad part `H_i`, stored on its cube only.
#[derive(Clone, Debug)]
pub struct BadPiece {
    pub cube: DyadicCube,
    pub cells: Vec<usize>,
    /// Level-major values on `cells`.
    pub values: Vec<f64>,
}

impl BadPiece {
    pub fn to_halfspace(&self, grid: &Grid) -> HalfSpaceFunction {
        let mut out = HalfSpaceFunction::zeros(grid);
        let c = self.cells.len();
        for k in 0..grid.levels() {
            let slice = out.slice_mut(k);
            for (j, &i) in self.cells.iter().enumerate() {
                slice[i] = self.values[k * c + j];
            }
        }
        out
    }

    /// `max_k |Σ_x H(x, t_k)| / Σ_x |H(x, t_k)|`.
    pub fn slice_mean_defect(&self, levels: usize) -> f64 {
        let c = self.cells.len();
        (0..levels)
            .map(|k| {
                let row = &self.values[k * c..(k + 1) * c];
                let mass: f64 = row.iter().map(|v| v.abs()).sum();
                if mass > 0.0 {
                    row.iter().sum::<f64>().abs() / mass
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Half-space split `F = G + Σ H_i` over the Whitney cubes of `{M_u 𝒱_r F > λ}`.
#[derive(Clone, Debug)]
pub struct CzSplit {
    pub lambda: f64,
    pub r: f64,
    pub scalar: CzScalar,
    pub good: HalfSpaceFunction,
    pub bad: Vec<BadPiece>,
}

/// Diagnostics for a half-space split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CzSplitChecks {
    pub scalar: CzChecks,
    /// `max_{i,k}` normalized slice integral of `H_i`.
    pub slice_mean_defect: f64,
    /// `‖𝒱_r G‖_∞ / λ`.
    pub good_vertical_ratio: f64,
    /// `max |G + Σ H_i - F| / max |F|`.
    pub reconstruction_error: f64,
}

pub fn cz_halfspace(f: &HalfSpaceFunction, lambda: f64, r: f64) -> Result<CzSplit> {
    check_lambda(lambda)?;
    let grid = f.grid();
    let g = vertical(f, r)?;
    let scalar = cz_scalar(&g, lambda)?;
    let mut good = f.clone();
    let levels = grid.levels();
    let bad: Vec<BadPiece> = scalar
        .cubes
        .par_iter()
        .map(|cube| {
            let cells = cube.cells(grid);
            let c = cells.len();
            let mut values = vec![0.0; levels * c];
            for k in 0..levels {
                let slice = f.slice(k);
                let mean = cells.iter().map(|&i| slice[i]).sum::<f64>() / c as f64;
                for (j, &i) in cells.iter().enumerate() {
                    values[k * c + j] = slice[i] - mean;
                }
            }
            BadPiece { cube: *cube, cells, values }
        })
        .collect();
    for piece in &bad {
        let c = piece.cells.len();
        for k in 0..levels {
            let slice = good.slice_mut(k);
            let mean = piece.cells.iter().map(|&i| f.slice(k)[i]).sum::<f64>() / c as f64;
            for &i in &piece.cells {
                slice[i] = mean;
            }
        }
    }
    Ok(CzSplit { lambda, r, scalar, good, bad })
}

impl CzSplit {
    pub fn reconstruct(&self) -> HalfSpaceFunction {
        let grid = self.good.grid();
        let mut out = self.good.clone();
        for piece in &self.bad {
            let c = piece.cells.len();
            for k in 0..grid.levels() {
                let slice = out.slice_mut(k);
                for (j, &i) in piece.cells.iter().enumerate() {
                    slice[i] += piece.values[k * c + j];
                }
            }
        }
        out
    }

    pub fn checks(&self, source: &HalfSpaceFunction) -> Result<CzSplitChecks> {
        let grid = self.good.grid();
        let rec = self.reconstruct();
        let scale = source.max_abs().max(f64::MIN_POSITIVE);
        let reconstruction_error =
            rec.values().iter().zip(source.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
        let slice_mean_defect = self.bad.iter().map(|p| p.slice_mean_defect(grid.levels())).fold(0.0, f64::max);
        let good_vertical_ratio = vertical(&self.good, self.r)?.max_abs() / self.lambda;
        Ok(CzSplitChecks { scalar: self.scalar.checks(), slice_mean_defect, good_vertical_ratio, reconstruction_error })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use proptest::prelude::*;

    fn grid(x: f64, h: f64) -> Grid {
        Grid::new(GridSpec::new(1, x, h, 0.25, 4, 8)).unwrap()
    }

    fn brute_dist2(grid: &Grid, mask: &[bool], cube: &DyadicCube) -> u64 {
        let cells = cube.cells(grid);
        let mut best = u64::MAX;
        for (j, &m) in mask.iter().enumerate() {
            if m {
                continue;
            }
            let [ja, jb] = grid.unravel(j);
            for &i in &cells {
                let [ia, ib] = grid.unravel(i);
                let d = (ia.abs_diff(ja).pow(2) + ib.abs_diff(jb).pow(2)) as u64;
                best = best.min(d);
            }
        }
        best
    }

    #[test]
    fn single_cell() {
        let g = grid(1.0, 0.125);
        let mut mask = vec![false; g.len()];
        mask[7] = true;
        let cubes = whitney_decompose(&g, &mask).unwrap();
        assert_eq!(cubes.len(), 1);
        assert_eq!(cubes[0].dist2, 1);
        assert!(cubes[0].in_window(&g));
    }

    #[test]
    fn interval_cover_and_window() {
        let g = grid(4.0, 1.0 / 64.0);
        let mask: Vec<bool> = g.coords().iter().map(|x| x.abs() < 1.0).collect();
        let cubes = whitney_decompose(&g, &mask).unwrap();
        let mut hit = vec![0u8; g.len()];
        for c in &cubes {
            assert!(c.in_window(&g));
            assert_eq!(c.dist2, brute_dist2(&g, &mask, c));
            for i in c.cells(&g) {
                hit[i] += 1;
            }
        }
        for (h, m) in hit.iter().zip(&mask) {
            assert_eq!(*h, *m as u8);
        }
        let largest = cubes.iter().map(|c| c.level).max().unwrap();
        let near_edge = cubes.iter().find(|c| c.corner[0] == g.snap(1.0 - 1.0 / 128.0).unwrap()).unwrap();
        assert!(near_edge.level < largest);
    }

    #[test]
    fn boundary_rejected_and_empty() {
        let g = grid(1.0, 0.125);
        let mut mask = vec![false; g.len()];
        assert!(whitney_decompose(&g, &mask).unwrap().is_empty());
        mask[0] = true;
        assert!(matches!(whitney_decompose(&g, &mask), Err(TentError::TouchesBoundary)));
    }

    #[test]
    fn scalar_indicator() {
        let h = 1.0 / 32.0;
        let g = grid(16.0, h);
        let f = LineFunction::from_fn(&g, |x| if x[0].abs() < 1.0 { 1.0 } else { 0.0 });
        let cz = cz_scalar(&f, 0.25).unwrap();
        let omega: Vec<f64> = g.coords().iter().zip(&cz.omega).filter(|(_, m)| **m).map(|(x, _)| *x).collect();
        assert!((omega.first().unwrap() + 7.0).abs() < 2.0 * h);
        assert!((omega.last().unwrap() - 7.0).abs() < 2.0 * h);
        let c = cz.checks();
        assert!(c.good_ok() && c.mean_ok() && c.cancellation_ok() && c.bad_l1_ok());
        assert_eq!(c.whitney_violations, 0);
        assert!(c.reconstruction_error <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn scalar_above_threshold() {
        let g = grid(4.0, 1.0 / 16.0);
        let f = LineFunction::from_fn(&g, |x| (-x[0] * x[0] * 4.0).exp());
        let cz = cz_scalar(&f, 2.0).unwrap();
        assert!(cz.cubes.is_empty());
        assert_eq!(cz.good.values(), f.values());
        assert!(cz.bad.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn halfspace_slab() {
        let g = Grid::new(GridSpec::new(1, 8.0, 1.0 / 32.0, 0.25, 4, 12)).unwrap();
        let f = HalfSpaceFunction::from_fn(&g, |x, t| if x[0].abs() < 1.0 && (1.0..std::f64::consts::E).contains(&t) { 1.0 + 0.3 * x[0] } else { 0.0 });
        let split = cz_halfspace(&f, 0.5, 2.0).unwrap();
        assert!(!split.bad.is_empty());
        let c = split.checks(&f).unwrap();
        assert!(c.slice_mean_defect <= 1e-12);
        assert!(c.reconstruction_error <= 2.0 * f64::EPSILON);
        // Brute-force slice means over one cube.
        let piece = &split.bad[0];
        for k in 0..g.levels() {
            let mean: f64 = piece.cells.iter().map(|&i| f.slice(k)[i]).sum::<f64>() / piece.cells.len() as f64;
            for &i in &piece.cells {
                assert!((split.good.slice(k)[i] - mean).abs() < 1e-15);
            }
        }
        let none = cz_halfspace(&f, 100.0, 2.0).unwrap();
        assert!(none.bad.is_empty());
        assert_eq!(none.good.values(), f.values());
    }

    #[test]
    fn two_dimensional_cover() {
        let g = Grid::new(GridSpec::new(2, 2.0, 0.125, 0.25, 2, 2)).unwrap();
        let mask: Vec<bool> = (0..g.len()).map(|i| {
            let p = g.point(i);
            p[0] * p[0] + p[1] * p[1] < 1.0
        }).collect();
        let cubes = whitney_decompose(&g, &mask).unwrap();
        let total: usize = cubes.iter().map(|c| c.cell_count(&g)).sum();
        assert_eq!(total, mask.iter().filter(|&&m| m).count());
        for c in &cubes {
            assert_eq!(c.dist2, brute_dist2(&g, &mask, c));
            assert!(c.dist2 < 32 * (c.cells_per_side() as u64).pow(2));
            if c.level > 0 {
                assert!(c.in_window(&g));
            }
        }
    }

    proptest! {
        #[test]
        fn random_sets_partition(bits in prop::collection::vec(any::<bool>(), 60)) {
            let g = grid(2.0, 1.0 / 16.0);
            let mut mask = vec![false; g.len()];
            mask[2..62].copy_from_slice(&bits);
            let cubes = whitney_decompose(&g, &mask).unwrap();
            let mut hit = vec![0u8; g.len()];
            for c in &cubes {
                prop_assert!(c.in_window(&g));
                for i in c.cells(&g) {
                    hit[i] += 1;
                }
            }
            for (h, m) in hit.iter().zip(&mask) {
                prop_assert_eq!(*h, *m as u8);
            }
        }
    }
}
