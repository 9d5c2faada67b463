//! Deterministic test corpora described by continuous parameters, so that every item can be resampled on refined grids.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TentError};
use crate::grid::{smooth_bump, Grid, GridSpec, HalfSpaceFunction, LineFunction};

/// Corpus families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFamily {
    TentSlab,
    Atom,
    CancellingAtom,
    Molecule,
    Oscillatory,
    GaussianPower,
    RandomAtoms,
}

impl CorpusFamily {
    pub const ALL: [CorpusFamily; 7] = [
        CorpusFamily::TentSlab,
        CorpusFamily::Atom,
        CorpusFamily::CancellingAtom,
        CorpusFamily::Molecule,
        CorpusFamily::Oscillatory,
        CorpusFamily::GaussianPower,
        CorpusFamily::RandomAtoms,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CorpusFamily::TentSlab => "tent-slab",
            CorpusFamily::Atom => "atom",
            CorpusFamily::CancellingAtom => "cancelling-atom",
            CorpusFamily::Molecule => "molecule",
            CorpusFamily::Oscillatory => "oscillatory",
            CorpusFamily::GaussianPower => "gaussian-power",
            CorpusFamily::RandomAtoms => "random-atoms",
        }
    }

    /// Whether every item has vanishing slice integrals.
    pub fn is_cancelling(&self) -> bool {
        matches!(self, CorpusFamily::CancellingAtom | CorpusFamily::Molecule)
    }
}

impl fmt::Display for CorpusFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorpusFamily {
    type Err = TentError;

    fn from_str(s: &str) -> Result<Self> {
        CorpusFamily::ALL
            .into_iter()
            .find(|f| f.name() == s.trim())
            .ok_or_else(|| TentError::UnknownFamily(s.to_string()))
    }
}

/// Which families, how many items and which seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub families: Vec<CorpusFamily>,
    pub seed: u64,
    pub count: usize,
}

impl CorpusSpec {
    pub fn new(families: Vec<CorpusFamily>, seed: u64, count: usize) -> Self {
        CorpusSpec { families, seed, count }
    }

    /// Every family, round robin.
    pub fn all(seed: u64, count: usize) -> Self {
        CorpusSpec::new(CorpusFamily::ALL.to_vec(), seed, count)
    }
}

/// A building block of a corpus item; centres are multiples of `1/4` so that lattices with `h | 1/4` are symmetric about them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Piece {
    /// `χ_{|x-c|<a}(x) χ_{[t_lo,t_hi)}(t)`.
    Slab { center: [f64; 2], half_width: f64, t_lo: f64, t_hi: f64 },
    /// `χ_{|y-c|+t ≤ R}`, multiplied by `sgn(y₁ - c₁)` when `odd`.
    Tent { center: [f64; 2], radius: f64, odd: bool },
    /// `sgn(y₁ - c₁) (R / (R + |y - c| + t))^β` on `|y - c| + t ≤ reach`, `t < t_max`.
    Molecule { center: [f64; 2], radius: f64, beta: f64, reach: f64, t_max: f64 },
    /// `cos(k y₁) φ(|y - c|/a) χ_{[t_lo,t_hi)}(t)` with the smooth bump `φ`.
    Oscillatory { center: [f64; 2], radius: f64, k: f64, t_lo: f64, t_hi: f64 },
    /// `e^{-|y-c|²/2σ²} t^β χ_{[t_lo,t_hi)}(t)`, cut at `8σ`.
    GaussianPower { center: [f64; 2], sigma: f64, beta: f64, t_lo: f64, t_hi: f64 },
}

fn dist(x: [f64; 2], c: [f64; 2], n: usize) -> f64 {
    if n == 1 {
        (x[0] - c[0]).abs()
    } else {
        ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt()
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Piece {
    pub fn eval(&self, x: [f64; 2], t: f64, n: usize) -> f64 {
        match *self {
            Piece::Slab { center, half_width, t_lo, t_hi } => {
                if dist(x, center, n) < half_width && t_lo <= t && t < t_hi {
                    1.0
                } else {
                    0.0
                }
            }
            Piece::Tent { center, radius, odd } => {
                if dist(x, center, n) + t <= radius * (1.0 + 1e-12) {
                    if odd {
                        sign(x[0] - center[0])
                    } else {
                        1.0
                    }
                } else {
                    0.0
                }
            }
            Piece::Molecule { center, radius, beta, reach, t_max } => {
                let d = dist(x, center, n);
                if d + t > reach || t >= t_max {
                    0.0
                } else {
                    sign(x[0] - center[0]) * (radius / (radius + d + t)).powf(beta)
                }
            }
            Piece::Oscillatory { center, radius, k, t_lo, t_hi } => {
                if t < t_lo || t >= t_hi {
                    0.0
                } else {
                    (k * x[0]).cos() * smooth_bump(dist(x, center, n) / radius)
                }
            }
            Piece::GaussianPower { center, sigma, beta, t_lo, t_hi } => {
                let d = dist(x, center, n);
                if t < t_lo || t >= t_hi || d > 8.0 * sigma {
                    0.0
                } else {
                    (-d * d / (2.0 * sigma * sigma)).exp() * t.powf(beta)
                }
            }
        }
    }

    /// The `x`-profile: the piece with its `t`-dependence removed.
    pub fn eval_line(&self, x: [f64; 2], n: usize) -> f64 {
        match *self {
            Piece::Slab { center, half_width, .. } => {
                if dist(x, center, n) < half_width {
                    1.0
                } else {
                    0.0
                }
            }
            Piece::Tent { center, radius, odd } => Piece::Tent { center, radius, odd }.eval(x, 0.0, n),
            Piece::Molecule { center, radius, beta, reach, .. } => {
                Piece::Molecule { center, radius, beta, reach, t_max: f64::INFINITY }.eval(x, 0.0, n)
            }
            Piece::Oscillatory { center, radius, k, .. } => (k * x[0]).cos() * smooth_bump(dist(x, center, n) / radius),
            Piece::GaussianPower { center, sigma, .. } => {
                let d = dist(x, center, n);
                if d > 8.0 * sigma {
                    0.0
                } else {
                    (-d * d / (2.0 * sigma * sigma)).exp()
                }
            }
        }
    }
}

/// One corpus item: `Σ c_i P_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusItem {
    pub id: usize,
    pub family: CorpusFamily,
    pub pieces: Vec<(f64, Piece)>,
}

impl CorpusItem {
    pub fn render(&self, grid: &Grid) -> HalfSpaceFunction {
        let n = grid.dim();
        HalfSpaceFunction::from_fn(grid, |x, t| self.pieces.iter().map(|(c, p)| c * p.eval(x, t, n)).sum())
    }

    pub fn render_line(&self, grid: &Grid) -> LineFunction {
        let n = grid.dim();
        LineFunction::from_fn(grid, |x| self.pieces.iter().map(|(c, p)| c * p.eval_line(x, n)).sum())
    }
}

fn quarter(v: f64) -> f64 {
    (v * 4.0).round() / 4.0
}

fn draw_center(rng: &mut ChaCha8Rng, spec: &GridSpec, span: f64) -> [f64; 2] {
    let mut c = [0.0; 2];
    for v in c.iter_mut().take(spec.n) {
        *v = quarter(rng.gen_range(-span..=span));
    }
    c
}

/// Range of `t` used by the corpus: `[t_min, X/8]`, never less than one e-fold.
pub fn corpus_t_range(spec: &GridSpec) -> (f64, f64) {
    let lo = spec.t_min;
    (lo, (spec.half_width / 8.0).max(lo * std::f64::consts::E))
}

fn draw_piece(family: CorpusFamily, rng: &mut ChaCha8Rng, spec: &GridSpec) -> Vec<(f64, Piece)> {
    let x = spec.half_width;
    let (t0, t1) = corpus_t_range(spec);
    let span = x / 4.0;
    let log_t = |rng: &mut ChaCha8Rng| t0 * rng.gen_range(0.0..(t1 / t0).ln()).exp();
    match family {
        CorpusFamily::TentSlab => {
            let t_lo = log_t(rng);
            let t_hi = (t_lo * rng.gen_range(1.5..3.0)).min(t1);
            let t_hi = if t_hi > t_lo { t_hi } else { t1 };
            vec![(1.0, Piece::Slab { center: draw_center(rng, spec, span), half_width: rng.gen_range(0.25..t1.max(0.5)), t_lo, t_hi })]
        }
        CorpusFamily::Atom | CorpusFamily::CancellingAtom => {
            let radius = rng.gen_range((2.0 * t0)..=t1.max(2.0 * t0));
            let odd = family == CorpusFamily::CancellingAtom;
            vec![(1.0, Piece::Tent { center: draw_center(rng, spec, span), radius, odd })]
        }
        CorpusFamily::Molecule => {
            let radius = rng.gen_range(t0..=(t1 / 2.0).max(t0));
            vec![(1.0, Piece::Molecule { center: draw_center(rng, spec, span), radius, beta: 3.0, reach: x / 2.0, t_max: t1 })]
        }
        CorpusFamily::Oscillatory => {
            let t_lo = log_t(rng);
            let t_hi = t1.min(t_lo * std::f64::consts::E).max(t_lo * 1.5);
            vec![(
                1.0,
                Piece::Oscillatory {
                    center: draw_center(rng, spec, span),
                    radius: rng.gen_range(0.5..t1.max(1.0)),
                    k: rng.gen_range(2.0..16.0),
                    t_lo,
                    t_hi,
                },
            )]
        }
        CorpusFamily::GaussianPower => vec![(
            1.0,
            Piece::GaussianPower {
                center: draw_center(rng, spec, span),
                sigma: rng.gen_range(0.1..(t1 / 4.0).max(0.2)),
                beta: rng.gen_range(-1.0..1.0),
                t_lo: t0,
                t_hi: t1,
            },
        )],
        CorpusFamily::RandomAtoms => (0..3)
            .map(|_| {
                let radius = rng.gen_range((2.0 * t0)..=t1.max(2.0 * t0));
                let c: f64 = rng.gen_range(-1.0..1.0);
                (c, Piece::Tent { center: draw_center(rng, spec, span), radius, odd: false })
            })
            .collect(),
    }
}

/// Items `0..count`, families assigned round robin, each drawn from its own seeded stream.
pub fn generate_corpus(spec: &CorpusSpec, grid: &GridSpec) -> Result<Vec<CorpusItem>> {
    if spec.count > 0 && spec.families.is_empty() {
        return Err(crate::error::invalid("corpus has items but no families"));
    }
    Ok((0..spec.count)
        .map(|id| {
            let family = spec.families[id % spec.families.len()];
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(id as u64);
            CorpusItem { id, family, pieces: draw_piece(family, &mut rng, grid) }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> GridSpec {
        GridSpec::new(1, 8.0, 1.0 / 32.0, 0.25, 4, 16)
    }

    #[test]
    fn empty_and_deterministic() {
        assert!(generate_corpus(&CorpusSpec::all(1, 0), &spec()).unwrap().is_empty());
        let a = generate_corpus(&CorpusSpec::all(7, 21), &spec()).unwrap();
        let b = generate_corpus(&CorpusSpec::all(7, 21), &spec()).unwrap();
        assert_eq!(a, b);
        let g = Grid::new(spec()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.render(&g).values(), y.render(&g).values());
        }
        assert_ne!(a, generate_corpus(&CorpusSpec::all(8, 21), &spec()).unwrap());
    }

    #[test]
    fn cancelling_families_cancel() {
        for h in [1.0 / 32.0, 1.0 / 64.0] {
            let g = Grid::new(GridSpec { h, ..spec() }).unwrap();
            let spec = CorpusSpec::new(vec![CorpusFamily::CancellingAtom, CorpusFamily::Molecule], 3, 12);
            for item in generate_corpus(&spec, g.spec()).unwrap() {
                let f = item.render(&g);
                for (s, m) in f.slice_integrals().iter().zip(f.slice_masses()) {
                    assert!(s.abs() <= 1e-12 * m.max(f64::MIN_POSITIVE), "{item:?}");
                }
            }
        }
    }

    #[test]
    fn items_fit_the_domain() {
        let g = Grid::new(spec()).unwrap();
        for item in generate_corpus(&CorpusSpec::all(11, 28), g.spec()).unwrap() {
            let f = item.render(&g);
            assert!(!f.is_zero(), "{item:?}");
            let edge = g.len() - 1;
            for k in 0..g.levels() {
                assert_eq!(f.at(k, 0), 0.0);
                assert_eq!(f.at(k, edge), 0.0);
            }
        }
    }

    #[test]
    fn family_names_round_trip() {
        for f in CorpusFamily::ALL {
            assert_eq!(f.name().parse::<CorpusFamily>().unwrap(), f);
            assert_eq!(serde_json::to_string(&f).unwrap(), format!("\"{}\"", f.name()));
        }
        assert!("nope".parse::<CorpusFamily>().is_err());
    }
}
