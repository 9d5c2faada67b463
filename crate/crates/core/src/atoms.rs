//! Tent-space atoms and molecules, the level-set atomic decomposition and the molecule-to-atom series.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cz::{complement_distance, whitney_decompose, DyadicCube};
use crate::error::{invalid, Result, TentError};
use crate::grid::{Grid, HalfSpaceFunction, LineFunction};
use crate::operators::{maximal, unit_ball_volume, MaximalMode};
use crate::tent::{conical, tent_norm, TentExponents};

/// Relative slack for tent membership so that lattice points exactly on the cone boundary count as inside.
const HAT_SLACK: f64 = 1e-12;

/// Enlargement threshold for `O* = {M_u χ_O > 1/2}`.
pub const ENLARGEMENT_THRESHOLD: f64 = 0.5;

/// Atom ball radius in units of `√n ℓ(Q)`.
pub const ATOM_BALL_FACTOR: f64 = 6.0;

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// `(y, t) ∈ B̂(c, ρ)`, i.e. `|y - c| + t ≤ ρ`.
pub fn in_tent(grid: &Grid, index: usize, t: f64, center: [f64; 2], radius: f64) -> bool {
    distance(grid.point(index), center) + t <= radius * (1.0 + HAT_SLACK)
}

/// Lebesgue measure of a Euclidean ball.
pub fn ball_volume(n: usize, radius: f64) -> f64 {
    unit_ball_volume(n) * radius.powi(n as i32)
}

fn check_exponents(q: f64, r: f64) -> Result<()> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(invalid(format!("outer exponent must be positive, got {q}")));
    }
    if !(r >= 1.0 && r.is_finite()) {
        return Err(invalid(format!("inner exponent must lie in [1, ∞), got {r}")));
    }
    Ok(())
}

/// Nonzero samples `(level, index, value)` of a half-space function, sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseHalfSpace {
    grid: Grid,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseHalfSpace {
    pub fn new(grid: &Grid, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(k, i, _) in &entries {
            if k >= grid.levels() || i >= grid.len() {
                return Err(invalid(format!("entry ({k}, {i}) lies outside the grid")));
            }
        }
        entries.retain(|e| e.2 != 0.0);
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        Ok(SparseHalfSpace { grid: grid.clone(), entries })
    }

    pub fn from_dense(f: &HalfSpaceFunction) -> Self {
        let grid = f.grid();
        let mut entries = Vec::new();
        for k in 0..grid.levels() {
            for (i, &v) in f.slice(k).iter().enumerate() {
                if v != 0.0 {
                    entries.push((k, i, v));
                }
            }
        }
        SparseHalfSpace { grid: grid.clone(), entries }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_dense(&self) -> HalfSpaceFunction {
        let mut out = HalfSpaceFunction::zeros(&self.grid);
        self.add_to(&mut out, 1.0);
        out
    }

    /// `out += c · self`.
    pub fn add_to(&self, out: &mut HalfSpaceFunction, c: f64) {
        for &(k, i, v) in &self.entries {
            out.slice_mut(k)[i] += c * v;
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        SparseHalfSpace { grid: self.grid.clone(), entries: self.entries.iter().map(|&(k, i, v)| (k, i, v * c)).collect() }
    }

    /// `(Σ |v|^r hⁿ / m)^{1/r}`, summed with compensation so that rescaling commutes with the norm to a few ulp.
    pub fn lr_norm(&self, r: f64) -> f64 {
        let s = neumaier_sum(self.entries.iter().map(|e| e.2.abs().powf(r)));
        (s * self.grid.cell_volume() * self.grid.level_weight()).powf(1.0 / r)
    }

    /// `(∫ F(·, t_k), ∫ |F(·, t_k)|)` for every level.
    pub fn slice_stats(&self) -> Vec<(f64, f64)> {
        let hn = self.grid.cell_volume();
        let mut out = vec![(0.0, 0.0); self.grid.levels()];
        for &(k, _, v) in &self.entries {
            out[k].0 += v;
            out[k].1 += v.abs();
        }
        out.into_iter().map(|(a, b)| (a * hn, b * hn)).collect()
    }
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        carry += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + carry
}

/// `max_k |∫ F(·, t_k)| / ∫ |F(·, t_k)|`.
fn cancellation_defect(stats: &[(f64, f64)]) -> (usize, f64) {
    stats
        .iter()
        .enumerate()
        .map(|(k, &(s, m))| (k, if m > 0.0 { s.abs() / m } else { 0.0 }))
        .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a })
}

/// A `T^q_r` atom supported in the tent over `B(center, radius)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TentAtom {
    pub data: SparseHalfSpace,
    pub center: [f64; 2],
    pub radius: f64,
    pub q: f64,
    pub r: f64,
    pub cancelling: bool,
}

impl TentAtom {
    pub fn new(data: SparseHalfSpace, center: [f64; 2], radius: f64, q: f64, r: f64, cancelling: bool) -> Result<Self> {
        check_exponents(q, r)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("atom radius must be positive, got {radius}")));
        }
        Ok(TentAtom { data, center, radius, q, r, cancelling })
    }

    /// Splits `data = λ A` with `A` saturating the size condition; fails on zero data.
    pub fn normalized(data: SparseHalfSpace, center: [f64; 2], radius: f64, q: f64, r: f64, cancelling: bool) -> Result<(f64, Self)> {
        check_exponents(q, r)?;
        let n = data.grid().dim();
        let norm = data.lr_norm(r);
        if norm == 0.0 {
            return Err(invalid("cannot normalize a zero atom"));
        }
        let lambda = ball_volume(n, radius).powf(1.0 / q - 1.0 / r) * norm;
        let atom = TentAtom::new(data.scale(1.0 / lambda), center, radius, q, r, cancelling)?;
        Ok((lambda, atom))
    }

    fn tent_indicator(grid: &Grid, center: [f64; 2], radius: f64, odd: bool) -> SparseHalfSpace {
        let mut entries = Vec::new();
        for k in 0..grid.levels() {
            let t = grid.t(k);
            for i in 0..grid.len() {
                if in_tent(grid, i, t, center, radius) {
                    let s = if odd { (grid.point(i)[0] - center[0]).signum() } else { 1.0 };
                    entries.push((k, i, s));
                }
            }
        }
        SparseHalfSpace { grid: grid.clone(), entries }
    }

    /// `χ_{B̂}` scaled to equality in the size condition.
    pub fn indicator(grid: &Grid, center: [f64; 2], radius: f64, q: f64, r: f64) -> Result<Self> {
        let data = TentAtom::tent_indicator(grid, center, radius, false);
        Ok(TentAtom::normalized(data, center, radius, q, r, false)?.1)
    }

    /// `sgn(y₁ - c₁) χ_{B̂}` scaled to equality; cancelling when the lattice is symmetric about `c₁`.
    pub fn cancelling_indicator(grid: &Grid, center: [f64; 2], radius: f64, q: f64, r: f64) -> Result<Self> {
        let data = TentAtom::tent_indicator(grid, center, radius, true);
        Ok(TentAtom::normalized(data, center, radius, q, r, true)?.1)
    }

    pub fn grid(&self) -> &Grid {
        self.data.grid()
    }

    pub fn ball_measure(&self) -> f64 {
        ball_volume(self.grid().dim(), self.radius)
    }

    pub fn to_halfspace(&self) -> HalfSpaceFunction {
        self.data.to_dense()
    }
}

/// Validation of the support, size and cancellation conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomReport {
    pub support_ok: bool,
    /// Measured `L^r(dx dt/t)` norm over `|B|^{1/r - 1/q}`.
    pub size_ratio: f64,
    pub cancellation_defect: f64,
    /// `(Σ_k (1/m) ‖A(·,t_k)‖₁^r)^{1/r}` over `|B|^{1 - 1/q}`.
    pub slice_l1_ratio: f64,
}

impl AtomReport {
    /// Support inside the tent, size within rounding of equality, and cancellation when claimed.
    pub fn admissible(&self, cancelling: bool) -> bool {
        self.support_ok && self.size_ratio <= 1.0 + 1e-12 && (!cancelling || self.cancellation_defect <= 1e-10)
    }
}

pub fn atom_validate(a: &TentAtom) -> AtomReport {
    let grid = a.grid();
    let support_ok = a.data.entries().iter().all(|&(k, i, _)| in_tent(grid, i, grid.t(k), a.center, a.radius));
    let measure = a.ball_measure();
    let size_ratio = a.data.lr_norm(a.r) / measure.powf(1.0 / a.r - 1.0 / a.q);
    let stats = a.data.slice_stats();
    let (_, defect) = cancellation_defect(&stats);
    let l1: f64 = stats.iter().map(|s| s.1.powf(a.r)).sum::<f64>() * grid.level_weight();
    let slice_l1_ratio = l1.powf(1.0 / a.r) / measure.powf(1.0 - 1.0 / a.q);
    AtomReport { support_ok, size_ratio, cancellation_defect: defect, slice_l1_ratio }
}

/// One term `λ A` of a decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomTerm {
    pub lambda: f64,
    pub atom: TentAtom,
    pub tag: String,
}

/// A finite sum `Σ λ_i A_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicDecomposition {
    pub grid: Grid,
    pub q: f64,
    pub r: f64,
    pub terms: Vec<AtomTerm>,
    /// `‖F‖_{T^q_r}` of the decomposed function.
    pub source_norm: f64,
}

impl AtomicDecomposition {
    /// `(Σ |λ_i|^q)^{1/q}`.
    pub fn coefficient_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.lambda.abs().powf(self.q)).sum::<f64>().powf(1.0 / self.q)
    }

    /// Coefficient norm over source norm; zero for an empty decomposition.
    pub fn coefficient_ratio(&self) -> f64 {
        if self.source_norm > 0.0 {
            self.coefficient_norm() / self.source_norm
        } else {
            0.0
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.lambda *= c;
        }
        out.source_norm *= c.abs();
        out
    }
}

/// `Σ λ_i A_i` on the grid.
pub fn reconstruct(dec: &AtomicDecomposition) -> Result<HalfSpaceFunction> {
    let mut out = HalfSpaceFunction::zeros(&dec.grid);
    for term in &dec.terms {
        dec.grid.same_as(term.atom.grid())?;
        term.atom.data.add_to(&mut out, term.lambda);
    }
    Ok(out)
}

/// `‖a - b‖_{T^r_r} / ‖b‖_{T^r_r}` on the grid.
pub fn relative_residual(a: &HalfSpaceFunction, b: &HalfSpaceFunction, r: f64) -> Result<f64> {
    let diff = a.sub(b)?;
    let base = b.lr_dtdt(r);
    Ok(if base > 0.0 { diff.lr_dtdt(r) / base } else { diff.lr_dtdt(r) })
}

struct Layer {
    k: i32,
    dist: Vec<f64>,
    owner: Vec<usize>,
    cubes: Vec<DyadicCube>,
}

fn build_layer(grid: &Grid, a: &LineFunction, k: i32) -> Result<Layer> {
    let threshold = 2f64.powi(k);
    let chi = a.map(|v| if v > threshold { 1.0 } else { 0.0 });
    let mu = maximal(&chi, MaximalMode::Uncentered)?;
    let enlarged: Vec<bool> = mu.values().iter().map(|&v| v > ENLARGEMENT_THRESHOLD).collect();
    let cubes = whitney_decompose(grid, &enlarged)?;
    let dist = complement_distance(grid, &enlarged);
    let mut owner = vec![usize::MAX; grid.len()];
    for (c, cube) in cubes.iter().enumerate() {
        for i in cube.cells(grid) {
            owner[i] = c;
        }
    }
    Ok(Layer { k, dist, owner, cubes })
}

/// Level-set atomic decomposition: layers `T(O_k*) ∖ T(O_{k+1}*)` cut by the Whitney cubes of `O_k*`.
pub fn atomic_decompose(f: &HalfSpaceFunction, q: f64, r: f64) -> Result<AtomicDecomposition> {
    check_exponents(q, r)?;
    if q > 1.0 {
        return Err(invalid(format!("atomic decomposition needs q ≤ 1, got {q}")));
    }
    let grid = f.grid();
    let empty = AtomicDecomposition { grid: grid.clone(), q, r, terms: Vec::new(), source_norm: 0.0 };
    if f.is_zero() {
        return Ok(empty);
    }
    let a = conical(f, r, 1.0)?;
    let positive = a.values().iter().copied().filter(|&v| v > 0.0);
    let min_pos = positive.clone().fold(f64::INFINITY, f64::min);
    let max_a = positive.fold(0.0, f64::max);
    let k_lo = min_pos.log2().ceil() as i32 - 1;
    let k_hi = max_a.log2().ceil() as i32 - 1;
    let layers: Vec<Layer> = (k_lo..=k_hi).into_par_iter().map(|k| build_layer(grid, &a, k)).collect::<Result<_>>()?;
    let mut pieces: BTreeMap<(usize, usize), Vec<(usize, usize, f64)>> = BTreeMap::new();
    let mut uncovered = Vec::new();
    for lev in 0..grid.levels() {
        let t = grid.t(lev);
        for (i, &v) in f.slice(lev).iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            match layers.iter().rposition(|l| l.dist[i] >= t) {
                Some(l) => pieces.entry((l, layers[l].owner[i])).or_default().push((lev, i, v)),
                None => uncovered.push((lev, i)),
            }
        }
    }
    if !uncovered.is_empty() {
        return Err(TentError::UncoveredSupport { cells: uncovered });
    }
    let n = grid.dim();
    let terms: Vec<AtomTerm> = pieces
        .into_par_iter()
        .map(|((l, c), entries)| {
            let layer = &layers[l];
            let cube = &layer.cubes[c];
            let radius = ATOM_BALL_FACTOR * (n as f64).sqrt() * cube.side(grid);
            let data = SparseHalfSpace::new(grid, entries)?;
            let (lambda, atom) = TentAtom::normalized(data, cube.center(grid), radius, q, r, false)?;
            Ok(AtomTerm { lambda, atom, tag: format!("k={},cube={}", layer.k, c) })
        })
        .collect::<Result<_>>()?;
    let source_norm = tent_norm(f, TentExponents::standard(q, r)?, None)?;
    Ok(AtomicDecomposition { terms, source_norm, ..empty })
}

/// A `T^q_r` molecule around `B(center, radius)` with decay rate `epsilon`.
#[derive(Clone, Debug, PartialEq)]
pub struct Molecule {
    pub data: HalfSpaceFunction,
    pub center: [f64; 2],
    pub radius: f64,
    pub q: f64,
    pub r: f64,
    pub epsilon: f64,
    pub cancelling: bool,
}

impl Molecule {
    pub fn new(data: HalfSpaceFunction, center: [f64; 2], radius: f64, q: f64, r: f64, epsilon: f64, cancelling: bool) -> Result<Self> {
        check_exponents(q, r)?;
        if !(radius > 0.0 && epsilon > 0.0) {
            return Err(invalid("molecule radius and decay must be positive"));
        }
        Ok(Molecule { data, center, radius, q, r, epsilon, cancelling })
    }

    /// Radius of `B_j = 2^j B`.
    pub fn shell_radius(&self, j: usize) -> f64 {
        self.radius * 2f64.powi(j as i32)
    }

    /// Shell `j ≥ 1` containing `(y, t)`: `Ĉ_1 = B̂_2`, `Ĉ_j = B̂_{j+1} ∖ B̂_j`.
    pub fn shell_of(&self, index: usize, t: f64) -> usize {
        let grid = self.data.grid();
        let mut j = 1;
        while !in_tent(grid, index, t, self.center, self.shell_radius(j + 1)) {
            j += 1;
        }
        j
    }

    /// Largest shell index carrying data.
    pub fn shell_count(&self) -> usize {
        let grid = self.data.grid();
        let mut top = 1;
        for k in 0..grid.levels() {
            for (i, &v) in self.data.slice(k).iter().enumerate() {
                if v != 0.0 {
                    top = top.max(self.shell_of(i, grid.t(k)));
                }
            }
        }
        top
    }

    /// Allowed shell norm: `|B_2|^{1/r-1/q}` for `j = 1`, `2^{-(j+1)ε}|B_{j+1}|^{1/r-1/q}` beyond.
    pub fn shell_bound(&self, j: usize) -> f64 {
        let n = self.data.grid().dim();
        let size = ball_volume(n, self.shell_radius(j + 1)).powf(1.0 / self.r - 1.0 / self.q);
        if j == 1 {
            size
        } else {
            2f64.powf(-((j + 1) as f64) * self.epsilon) * size
        }
    }

    /// Whether `B_{j+1}` lies inside the computational domain.
    pub fn shell_inside(&self, j: usize) -> bool {
        let grid = self.data.grid();
        let reach = self.shell_radius(j + 1);
        (0..grid.dim()).all(|a| self.center[a].abs() + reach <= grid.half_width())
    }

    /// `χ_{Ĉ_j} M` for `j = 1..=J`, as sparse pieces.
    fn shells(&self) -> Vec<Vec<(usize, usize, f64)>> {
        let grid = self.data.grid();
        let mut out = vec![Vec::new(); self.shell_count() + 1];
        for k in 0..grid.levels() {
            let t = grid.t(k);
            for (i, &v) in self.data.slice(k).iter().enumerate() {
                if v != 0.0 {
                    out[self.shell_of(i, t)].push((k, i, v));
                }
            }
        }
        out
    }

    /// Molecule whose every shell norm equals its bound: `Σ_j c_j χ_{Ĉ_j}`, odd in `y₁ - c₁` when `cancelling`.
    pub fn saturating(grid: &Grid, center: [f64; 2], radius: f64, q: f64, r: f64, epsilon: f64, shells: usize, cancelling: bool) -> Result<Self> {
        let mut m = Molecule::new(HalfSpaceFunction::zeros(grid), center, radius, q, r, epsilon, cancelling)?;
        let outer = m.shell_radius(shells + 1);
        let mut by_shell: Vec<Vec<(usize, usize)>> = vec![Vec::new(); shells + 1];
        for k in 0..grid.levels() {
            let t = grid.t(k);
            for i in 0..grid.len() {
                if in_tent(grid, i, t, center, outer) {
                    by_shell[m.shell_of(i, t)].push((k, i));
                }
            }
        }
        let w = grid.cell_volume() * grid.level_weight();
        for (j, cells) in by_shell.iter().enumerate().skip(1) {
            if cells.is_empty() {
                continue;
            }
            let c = m.shell_bound(j) / (cells.len() as f64 * w).powf(1.0 / r);
            for &(k, i) in cells {
                let s = if cancelling { (grid.point(i)[0] - center[0]).signum() } else { 1.0 };
                m.data.slice_mut(k)[i] = s * c;
            }
        }
        Ok(m)
    }
}

/// Shell-by-shell measurements of a molecule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoleculeReport {
    /// Indexed by shell `j - 1`.
    pub shell_norms: Vec<f64>,
    pub shell_ratios: Vec<f64>,
    /// Shells whose ball `B_{j+1}` fits in the domain.
    pub shells_inside: usize,
    pub cancellation_defect: f64,
    /// Least-squares slope of `log₂(‖χ_{Ĉ_j}M‖ |B_{j+1}|^{1/q-1/r})` against `-j` over inside shells `j ≥ 2`.
    pub fitted_decay: Option<f64>,
    pub reliable: bool,
}

impl MoleculeReport {
    pub fn max_ratio(&self) -> f64 {
        self.shell_ratios.iter().copied().fold(0.0, f64::max)
    }
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn molecule_validate(m: &Molecule) -> Result<MoleculeReport> {
    let grid = m.data.grid();
    let shells = m.shells();
    let count = shells.len() - 1;
    let n = grid.dim();
    let norms: Vec<f64> = (1..=count)
        .map(|j| SparseHalfSpace { grid: grid.clone(), entries: shells[j].clone() }.lr_norm(m.r))
        .collect();
    let ratios: Vec<f64> = norms.iter().enumerate().map(|(i, &v)| v / m.shell_bound(i + 1)).collect();
    let mut shells_inside = 0;
    while m.shell_inside(shells_inside + 1) {
        shells_inside += 1;
    }
    let points: Vec<(f64, f64)> = (2..=shells_inside.min(count))
        .filter(|&j| norms[j - 1] > 0.0)
        .map(|j| {
            let normalized = norms[j - 1] * ball_volume(n, m.shell_radius(j + 1)).powf(1.0 / m.q - 1.0 / m.r);
            (-(j as f64), normalized.log2())
        })
        .collect();
    let reliable = points.len() >= 3;
    let fitted_decay = if points.len() >= 2 { Some(slope(&points)) } else { None };
    let (_, defect) = cancellation_defect(&SparseHalfSpace::from_dense(&m.data).slice_stats());
    Ok(MoleculeReport {
        shell_norms: norms,
        shell_ratios: ratios,
        shells_inside,
        cancellation_defect: defect,
        fitted_decay,
        reliable,
    })
}

/// Output of [`molecule_to_atoms`].
#[derive(Clone, Debug, PartialEq)]
pub struct MoleculeDecomposition {
    pub decomposition: AtomicDecomposition,
    /// Shell index `j` of each term.
    pub shell_index: Vec<usize>,
    /// `max_j |λ_j| 2^{jε}`.
    pub envelope: f64,
    pub shells: usize,
}

/// Lattice ball `{x : |x - c| < ρ}` inside the domain.
fn lattice_ball(grid: &Grid, center: [f64; 2], radius: f64) -> Vec<usize> {
    (0..grid.len()).filter(|&i| distance(grid.point(i), center) < radius).collect()
}

/// Rewrites a cancelling molecule as `Σ_j α_j + Σ_j β_j` with cancelling atoms.
pub fn molecule_to_atoms(m: &Molecule) -> Result<MoleculeDecomposition> {
    let grid = m.data.grid();
    let stats = SparseHalfSpace::from_dense(&m.data).slice_stats();
    let (level, defect) = cancellation_defect(&stats);
    if !m.cancelling || defect > 1e-10 {
        return Err(TentError::NotCancelling { level, defect });
    }
    let shells = m.shells();
    let count = shells.len() - 1;
    let levels = grid.levels();
    let hn = grid.cell_volume();
    // c[j][k] = ∫ χ_{Ĉ_j} M(·, t_k), j = 1..=count.
    let mut c = vec![vec![0.0; levels]; count + 1];
    for (j, entries) in shells.iter().enumerate().skip(1) {
        for &(k, _, v) in entries {
            c[j][k] += v * hn;
        }
    }
    // s[j][k] = ∫ χ_{B̂_j} M(·, t_k) = Σ_{i < j} c[i][k], j = 2..=count+1.
    let mut s = vec![vec![0.0; levels]; count + 2];
    for j in 2..=count + 1 {
        for k in 0..levels {
            s[j][k] = s[j - 1][k] + c[j - 1][k];
        }
    }
    let balls: Vec<Vec<usize>> = (0..=count + 2).map(|j| if j < 2 { Vec::new() } else { lattice_ball(grid, m.center, m.shell_radius(j)) }).collect();
    let averaged = |j: usize, coeff: &[f64], sign: f64, entries: &mut BTreeMap<(usize, usize), f64>| {
        let measure = balls[j].len() as f64 * hn;
        for (k, &a) in coeff.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for &i in &balls[j] {
                *entries.entry((k, i)).or_insert(0.0) += sign * a / measure;
            }
        }
    };
    let mut raw: Vec<(String, usize, usize, BTreeMap<(usize, usize), f64>)> = Vec::new();
    for j in 1..=count {
        let mut e: BTreeMap<(usize, usize), f64> = shells[j].iter().map(|&(k, i, v)| ((k, i), v)).collect();
        averaged(j + 1, &c[j], -1.0, &mut e);
        raw.push((format!("alpha_{j}"), j, j + 2, e));
    }
    for j in 1..count {
        let mut e = BTreeMap::new();
        averaged(j + 1, &s[j + 1], 1.0, &mut e);
        averaged(j + 2, &s[j + 1], -1.0, &mut e);
        raw.push((format!("beta_{j}"), j, j + 3, e));
    }
    let mut terms = Vec::new();
    let mut shell_index = Vec::new();
    let mut envelope = 0.0f64;
    for (tag, j, ball, e) in raw {
        let data = SparseHalfSpace::new(grid, e.into_iter().map(|((k, i), v)| (k, i, v)).collect())?;
        if data.is_empty() {
            continue;
        }
        let (lambda, atom) = TentAtom::normalized(data, m.center, m.shell_radius(ball), m.q, m.r, true)?;
        envelope = envelope.max(lambda * 2f64.powf(j as f64 * m.epsilon));
        terms.push(AtomTerm { lambda, atom, tag });
        shell_index.push(j);
    }
    let source_norm = tent_norm(&m.data, TentExponents::standard(m.q, m.r)?, None)?;
    Ok(MoleculeDecomposition {
        decomposition: AtomicDecomposition { grid: grid.clone(), q: m.q, r: m.r, terms, source_norm },
        shell_index,
        envelope,
        shells: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use proptest::prelude::*;

    fn grid() -> Grid {
        Grid::new(GridSpec::new(1, 8.0, 1.0 / 32.0, 0.25, 4, 16)).unwrap()
    }

    #[test]
    fn indicator_atom_saturates() {
        let g = grid();
        let a = TentAtom::indicator(&g, [0.0, 0.0], 1.0, 1.0, 2.0).unwrap();
        let rep = atom_validate(&a);
        assert!(rep.support_ok);
        assert!((rep.size_ratio - 1.0).abs() < 1e-12);
        assert!(rep.slice_l1_ratio <= 1.0 + 1e-9);
        assert!(rep.admissible(false));
    }

    #[test]
    fn shifted_atom_leaves_tent() {
        let g = grid();
        let a = TentAtom::indicator(&g, [0.0, 0.0], 1.0, 1.0, 2.0).unwrap();
        let shifted: Vec<(usize, usize, f64)> = a.data.entries().iter().map(|&(k, i, v)| (k + 1, i, v)).collect();
        let b = TentAtom { data: SparseHalfSpace::new(&g, shifted).unwrap(), ..a };
        assert!(!atom_validate(&b).support_ok);
    }

    #[test]
    fn odd_atom_cancels() {
        let g = grid();
        let a = TentAtom::cancelling_indicator(&g, [0.0, 0.0], 1.0, 1.0, 2.0).unwrap();
        let rep = atom_validate(&a);
        assert!(rep.cancellation_defect <= 1e-12);
        assert!(rep.admissible(true));
    }

    #[test]
    fn zero_and_single_atom_decompositions() {
        let g = grid();
        let zero = atomic_decompose(&HalfSpaceFunction::zeros(&g), 1.0, 2.0).unwrap();
        assert!(zero.terms.is_empty());
        assert!(reconstruct(&zero).unwrap().is_zero());
        let a = TentAtom::indicator(&g, [0.0, 0.0], 1.0, 1.0, 2.0).unwrap().to_halfspace();
        let dec = atomic_decompose(&a, 1.0, 2.0).unwrap();
        let rec = reconstruct(&dec).unwrap();
        assert!(relative_residual(&rec, &a, 2.0).unwrap() <= 1e-12);
        for t in &dec.terms {
            let rep = atom_validate(&t.atom);
            assert!(rep.support_ok, "{}", t.tag);
            assert!((rep.size_ratio - 1.0).abs() < 1e-12);
        }
        assert!(dec.source_norm <= unit_ball_volume(1).sqrt() * (1.0 + 1e-9), "{}", dec.source_norm);
        assert!(dec.coefficient_ratio().is_finite());
    }

    #[test]
    fn slab_decomposition() {
        let g = Grid::new(GridSpec::new(1, 16.0, 1.0 / 32.0, 0.25, 8, 40)).unwrap();
        let f = HalfSpaceFunction::from_fn(&g, |x, t| if x[0].abs() < 1.0 && (1.0..2.0).contains(&t) { 1.0 } else { 0.0 });
        let dec = atomic_decompose(&f, 1.0, 2.0).unwrap();
        let rec = reconstruct(&dec).unwrap();
        assert!(relative_residual(&rec, &f, 2.0).unwrap() <= 1e-10);
        assert!(dec.terms.iter().all(|t| atom_validate(&t.atom).admissible(false)));
        assert!(dec.coefficient_ratio() <= 10.0, "ratio {}", dec.coefficient_ratio());
        let doubled = reconstruct(&dec.scaled(2.0)).unwrap();
        assert!(relative_residual(&doubled, &rec.scale(2.0), 2.0).unwrap() < 1e-15);
    }

    #[test]
    fn margin_violation_is_reported() {
        let g = Grid::new(GridSpec::new(1, 2.0, 1.0 / 16.0, 0.25, 4, 12)).unwrap();
        let f = HalfSpaceFunction::from_fn(&g, |x, t| if x[0].abs() < 1.0 && t < 1.0 { 1.0 } else { 0.0 });
        assert!(atomic_decompose(&f, 1.0, 2.0).is_err());
    }

    #[test]
    fn saturating_molecule() {
        let g = Grid::new(GridSpec::new(1, 16.0, 1.0 / 32.0, 0.25, 8, 40)).unwrap();
        let m = Molecule::saturating(&g, [0.0, 0.0], 0.5, 1.0, 2.0, 1.0, 4, true).unwrap();
        let rep = molecule_validate(&m).unwrap();
        assert_eq!(rep.shell_ratios.len(), 4);
        for r in &rep.shell_ratios {
            assert!((r - 1.0).abs() < 1e-10);
        }
        assert!(rep.cancellation_defect < 1e-12);
        let dec = molecule_to_atoms(&m).unwrap();
        let rec = reconstruct(&dec.decomposition).unwrap();
        assert!(relative_residual(&rec, &m.data, 2.0).unwrap() <= 1e-10);
        for t in &dec.decomposition.terms {
            assert!(atom_validate(&t.atom).admissible(true), "{}", t.tag);
        }
        assert!(dec.envelope.is_finite());
    }

    #[test]
    fn atom_as_molecule() {
        let g = grid();
        let a = TentAtom::cancelling_indicator(&g, [0.0, 0.0], 1.0, 1.0, 2.0).unwrap();
        let m = Molecule::new(a.to_halfspace(), [0.0, 0.0], 1.0, 1.0, 2.0, 1.0, true).unwrap();
        let rep = molecule_validate(&m).unwrap();
        assert!(rep.shell_ratios.iter().skip(1).all(|&r| r == 0.0));
        let dec = molecule_to_atoms(&m).unwrap();
        assert_eq!(dec.decomposition.terms.len(), 1);
        let rec = reconstruct(&dec.decomposition).unwrap();
        assert!(relative_residual(&rec, &m.data, 2.0).unwrap() <= 1e-12);
        let non = Molecule { cancelling: false, ..m };
        assert!(matches!(molecule_to_atoms(&non), Err(TentError::NotCancelling { .. })));
    }

    proptest! {
        #[test]
        fn random_collections_reconstruct(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let g = grid();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut dec = AtomicDecomposition { grid: g.clone(), q: 1.0, r: 2.0, terms: Vec::new(), source_norm: 0.0 };
            for i in 0..3 {
                let c = [rng.gen_range(-3.0..3.0), 0.0];
                let rad = rng.gen_range(0.75..2.0);
                let atom = TentAtom::indicator(&g, c, rad, 1.0, 2.0).unwrap();
                dec.terms.push(AtomTerm { lambda: rng.gen_range(-1.0..1.0), atom, tag: format!("{i}") });
            }
            let f = reconstruct(&dec).unwrap();
            let norm = tent_norm(&f, TentExponents::standard(1.0, 2.0).unwrap(), None).unwrap();
            let bound: f64 = dec.terms.iter().map(|t| t.lambda.abs() * tent_norm(&t.atom.to_halfspace(), TentExponents::standard(1.0, 2.0).unwrap(), None).unwrap()).sum();
            prop_assert!(norm <= bound * (1.0 + 1e-12));
        }
    }
}
