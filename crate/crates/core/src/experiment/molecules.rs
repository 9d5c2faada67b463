//! Atomic decompositions of a corpus, and singular-integral images of atoms checked as molecules.

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{generate_corpus, CorpusFamily, CorpusSpec};
use crate::atoms::{
    atom_validate, atomic_decompose, molecule_validate, reconstruct, relative_residual, Molecule, MoleculeReport,
    SparseHalfSpace, TentAtom,
};
use crate::error::{invalid, Result};
use crate::grid::{Grid, GridSpec, HalfSpaceFunction};
use crate::operators::Operator;

/// Outcome of decomposing one corpus item.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRow {
    pub item_id: usize,
    pub family: CorpusFamily,
    pub q: f64,
    pub atoms: usize,
    pub residual: f64,
    pub all_admissible: bool,
    /// `(Σ|λ|^q)^{1/q} / ‖F‖_{T^q_r}`.
    pub coefficient_ratio: f64,
}

/// Factor by which [`decomposition_study`] widens the domain; enlarged level sets can reach three times their width.
pub const DECOMPOSITION_PADDING: f64 = 3.0;

/// Decomposes every item for every `q` and records residual, admissibility and coefficient ratio.
///
/// Items are drawn for `grid` and rendered on the same lattice widened by [`DECOMPOSITION_PADDING`].
pub fn decomposition_study(grid: &GridSpec, corpus: &CorpusSpec, qs: &[f64], r: f64) -> Result<Vec<DecompositionRow>> {
    let g = Grid::new(grid.with_half_width(grid.half_width * DECOMPOSITION_PADDING))?;
    let items = generate_corpus(corpus, grid)?;
    let jobs: Vec<(usize, f64)> = (0..items.len()).flat_map(|i| qs.iter().map(move |&q| (i, q))).collect();
    jobs.par_iter()
        .map(|&(i, q)| {
            let item = &items[i];
            let f = item.render(&g);
            let dec = atomic_decompose(&f, q, r)?;
            let rec = reconstruct(&dec)?;
            Ok(DecompositionRow {
                item_id: item.id,
                family: item.family,
                q,
                atoms: dec.terms.len(),
                residual: relative_residual(&rec, &f, r)?,
                all_admissible: dec.terms.iter().all(|t| atom_validate(&t.atom).admissible(false)),
                coefficient_ratio: dec.coefficient_ratio(),
            })
        })
        .collect()
}

/// Profile of a test atom inside its tent, as a function of `(y₁ - c₁, t)`; odd profiles cancel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AtomShape {
    Indicator,
    Quadratic,
    Sine,
    Linear,
}

impl AtomShape {
    pub const ALL: [AtomShape; 4] = [AtomShape::Indicator, AtomShape::Quadratic, AtomShape::Sine, AtomShape::Linear];

    fn odd(&self, d: f64, t: f64, radius: f64) -> f64 {
        let s = d.signum() * f64::from(d != 0.0);
        match self {
            AtomShape::Indicator => s,
            AtomShape::Quadratic => s * ((radius - d.abs() - t) / radius).powi(2),
            AtomShape::Sine => (std::f64::consts::PI * d / (radius - t)).sin(),
            AtomShape::Linear => d / radius,
        }
    }
}

/// Atom over `B(center, radius)` with the given shape, odd in `y₁ - c₁` when `cancelling` and `|odd|` otherwise.
pub fn shaped_atom(grid: &Grid, shape: AtomShape, center: [f64; 2], radius: f64, q: f64, r: f64, cancelling: bool) -> Result<TentAtom> {
    let mut entries = Vec::new();
    for k in 0..grid.levels() {
        let t = grid.t(k);
        for i in 0..grid.len() {
            let x = grid.point(i);
            let d = x[0] - center[0];
            let dist = if grid.dim() == 1 { d.abs() } else { (d * d + (x[1] - center[1]).powi(2)).sqrt() };
            if dist + t <= radius * (1.0 + 1e-12) {
                let v = shape.odd(d, t, radius);
                entries.push((k, i, if cancelling { v } else { v.abs() }));
            }
        }
    }
    let data = SparseHalfSpace::new(grid, entries)?;
    Ok(TentAtom::normalized(data, center, radius, q, r, cancelling)?.1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoleculeStudyConfig {
    pub grid: GridSpec,
    pub operator: Operator,
    pub atoms: usize,
    pub radius: f64,
    /// Atom centres cycle through these values on the first axis.
    pub centers: Vec<f64>,
    pub q: f64,
    pub r: f64,
    pub epsilon: f64,
    pub cancelling: bool,
}

impl MoleculeStudyConfig {
    /// Hilbert images of 16 atoms of radius `0.4` at `q = 1`, `r = 2`, `ε = 1`.
    pub fn hilbert(grid: GridSpec, cancelling: bool) -> Self {
        MoleculeStudyConfig {
            grid,
            operator: Operator::Hilbert,
            atoms: 16,
            radius: 0.4,
            centers: vec![-2.0, -1.0, 1.0, 2.0],
            q: 1.0,
            r: 2.0,
            epsilon: 1.0,
            cancelling,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoleculeStudy {
    pub config: MoleculeStudyConfig,
    pub reports: Vec<MoleculeReport>,
    /// Largest shell ratio over shells inside the domain, over all images.
    pub shared_constant: f64,
    /// Smallest fitted decay among reliable reports.
    pub min_decay: f64,
    pub all_reliable: bool,
}

/// Largest shell ratio over the shells whose dilated ball fits the domain.
pub fn max_inside_ratio(report: &MoleculeReport) -> f64 {
    report.shell_ratios.iter().take(report.shells_inside).copied().fold(0.0, f64::max)
}

/// Applies the operator to each atom and validates the image as a molecule around the atom's ball.
pub fn molecule_study(config: &MoleculeStudyConfig) -> Result<MoleculeStudy> {
    if config.centers.is_empty() || config.atoms == 0 {
        return Err(invalid("molecule study needs atoms and centres"));
    }
    let grid = Grid::new(config.grid)?;
    info!("molecule study: {} images of {} on X = {}", config.atoms, config.operator, config.grid.half_width);
    let reports: Vec<MoleculeReport> = (0..config.atoms)
        .into_par_iter()
        .map(|i| {
            let center = [config.centers[i % config.centers.len()], 0.0];
            let shape = AtomShape::ALL[(i / config.centers.len()) % AtomShape::ALL.len()];
            let atom = shaped_atom(&grid, shape, center, config.radius, config.q, config.r, config.cancelling)?;
            let image: HalfSpaceFunction = config.operator.lift(&atom.to_halfspace())?;
            let m = Molecule::new(image, center, config.radius, config.q, config.r, config.epsilon, false)?;
            molecule_validate(&m)
        })
        .collect::<Result<_>>()?;
    let shared_constant = reports.iter().map(max_inside_ratio).fold(0.0, f64::max);
    let min_decay = reports
        .iter()
        .filter(|r| r.reliable)
        .filter_map(|r| r.fitted_decay)
        .fold(f64::INFINITY, f64::min);
    let all_reliable = reports.iter().all(|r| r.reliable);
    Ok(MoleculeStudy { config: config.clone(), reports, shared_constant, min_decay, all_reliable })
}

/// Shared constant of [`molecule_study`] on each domain half-width, same `h`.
pub fn domain_growth(config: &MoleculeStudyConfig, half_widths: &[f64]) -> Result<Vec<f64>> {
    half_widths
        .iter()
        .map(|&x| {
            let c = MoleculeStudyConfig { grid: config.grid.with_half_width(x), ..config.clone() };
            Ok(molecule_study(&c)?.shared_constant)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shaped_atoms_are_admissible() {
        let g = Grid::new(GridSpec::new(1, 4.0, 1.0 / 32.0, 0.25, 4, 8)).unwrap();
        for shape in AtomShape::ALL {
            for cancelling in [true, false] {
                let a = shaped_atom(&g, shape, [1.0, 0.0], 0.75, 1.0, 2.0, cancelling).unwrap();
                let rep = atom_validate(&a);
                assert!(rep.admissible(cancelling), "{shape:?} {cancelling} {rep:?}");
            }
        }
    }

    #[test]
    fn small_decomposition_study() {
        let rows = decomposition_study(&GridSpec::new(1, 8.0, 1.0 / 16.0, 0.25, 4, 12), &CorpusSpec::all(3, 7), &[1.0], 2.0).unwrap();
        assert_eq!(rows.len(), 7);
        for r in rows {
            assert!(r.residual <= 1e-10 && r.all_admissible, "{r:?}");
        }
    }

    #[test]
    fn identity_images_are_molecules() {
        let mut c = MoleculeStudyConfig::hilbert(GridSpec::new(1, 8.0, 1.0 / 32.0, 0.25, 4, 8), true);
        c.operator = Operator::Identity;
        c.atoms = 4;
        c.centers = vec![0.0];
        let s = molecule_study(&c).unwrap();
        // The first shell is measured against the ball of radius 4R.
        assert!(s.shared_constant <= 2.0 * (1.0 + 1e-12), "{}", s.shared_constant);
    }
}
