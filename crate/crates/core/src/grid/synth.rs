//! Named test-function families sampled at cell centres.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Grid, HalfSpaceFunction, LineFunction};
use crate::error::{Result, TentError};

/// Smooth bump `exp(1 - 1/(1 - s^2))` on `|s| < 1`, equal to 1 at the origin.
pub fn smooth_bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

fn dist(x: [f64; 2], c: [f64; 2], n: usize) -> f64 {
    let d0 = x[0] - c[0];
    if n == 1 {
        d0.abs()
    } else {
        let d1 = x[1] - c[1];
        (d0 * d0 + d1 * d1).sqrt()
    }
}

/// Gaussian tails beyond this many standard deviations are set to zero.
const GAUSS_CUTOFF: f64 = 8.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    /// `χ_{B(c,R)}` on the line.
    IndicatorBall { center: [f64; 2], radius: f64 },
    /// `χ_{B(c,R)}(x) χ_{[t_lo,t_hi)}(t)`.
    IndicatorTentSlab { center: [f64; 2], radius: f64, t_lo: f64, t_hi: f64 },
    /// `exp(-|x-c|^2 / 2σ^2)`, truncated at 8σ.
    GaussianBump { center: [f64; 2], sigma: f64 },
    /// `cos(k x_1)` times a smooth bump of radius `R` at `c`.
    Oscillatory { center: [f64; 2], radius: f64, k: f64 },
    /// Random signed sum of `count` tent profiles, reproducible from `seed`.
    RandomAtomCombination { seed: u64, count: usize },
    /// `t^β` times a Gaussian in x, on `t ∈ [t_lo, t_hi)`.
    PowerProfile { center: [f64; 2], sigma: f64, beta: f64, t_lo: f64, t_hi: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Synthesized {
    Line(LineFunction),
    HalfSpace(HalfSpaceFunction),
}

impl Synthesized {
    pub fn into_line(self) -> Option<LineFunction> {
        match self {
            Synthesized::Line(f) => Some(f),
            Synthesized::HalfSpace(_) => None,
        }
    }

    pub fn into_halfspace(self) -> Option<HalfSpaceFunction> {
        match self {
            Synthesized::HalfSpace(f) => Some(f),
            Synthesized::Line(_) => None,
        }
    }
}

/// `((R - |y - c| - t)/R)_+^2`: continuous, supported in the tent over `B(c, R)`.
pub fn tent_profile(grid: &Grid, center: [f64; 2], radius: f64) -> HalfSpaceFunction {
    let n = grid.dim();
    HalfSpaceFunction::from_fn(grid, |x, t| {
        let s = (radius - dist(x, center, n) - t) / radius;
        if s > 0.0 {
            s * s
        } else {
            0.0
        }
    })
}

fn random_atom_combination(grid: &Grid, seed: u64, count: usize) -> HalfSpaceFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = grid.half_width();
    let lo = 4.0 * grid.t(0);
    let hi = (x / 4.0).min(grid.t_max()).max(lo);
    let mut acc = HalfSpaceFunction::zeros(grid);
    for _ in 0..count {
        let radius = if hi > lo { rng.gen_range(lo..hi) } else { lo };
        let span = (x / 2.0 - radius).max(0.0);
        let mut center = [0.0; 2];
        for c in center.iter_mut().take(grid.dim()) {
            *c = if span > 0.0 { rng.gen_range(-span..span) } else { 0.0 };
        }
        let coef: f64 = rng.gen_range(-1.0..1.0);
        let profile = tent_profile(grid, center, radius);
        for (a, p) in acc.values_mut().iter_mut().zip(profile.values()) {
            *a += coef * p;
        }
    }
    acc
}

/// Samples `family` on `grid`.
pub fn synthesize(family: &Family, grid: &Grid) -> Synthesized {
    let n = grid.dim();
    match *family {
        Family::IndicatorBall { center, radius } => Synthesized::Line(LineFunction::from_fn(grid, |x| {
            if dist(x, center, n) < radius {
                1.0
            } else {
                0.0
            }
        })),
        Family::IndicatorTentSlab { center, radius, t_lo, t_hi } => {
            Synthesized::HalfSpace(HalfSpaceFunction::from_fn(grid, |x, t| {
                if dist(x, center, n) < radius && t_lo <= t && t < t_hi {
                    1.0
                } else {
                    0.0
                }
            }))
        }
        Family::GaussianBump { center, sigma } => Synthesized::Line(LineFunction::from_fn(grid, |x| {
            let d = dist(x, center, n);
            if d > GAUSS_CUTOFF * sigma {
                0.0
            } else {
                (-d * d / (2.0 * sigma * sigma)).exp()
            }
        })),
        Family::Oscillatory { center, radius, k } => Synthesized::Line(LineFunction::from_fn(grid, |x| {
            (k * x[0]).cos() * smooth_bump(dist(x, center, n) / radius)
        })),
        Family::RandomAtomCombination { seed, count } => {
            Synthesized::HalfSpace(random_atom_combination(grid, seed, count))
        }
        Family::PowerProfile { center, sigma, beta, t_lo, t_hi } => {
            Synthesized::HalfSpace(HalfSpaceFunction::from_fn(grid, |x, t| {
                let d = dist(x, center, n);
                if t < t_lo || t >= t_hi || d > GAUSS_CUTOFF * sigma {
                    0.0
                } else {
                    t.powf(beta) * (-d * d / (2.0 * sigma * sigma)).exp()
                }
            }))
        }
    }
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::IndicatorBall { .. } => "indicator-ball",
            Family::IndicatorTentSlab { .. } => "indicator-tent-slab",
            Family::GaussianBump { .. } => "gaussian-bump",
            Family::Oscillatory { .. } => "oscillatory",
            Family::RandomAtomCombination { .. } => "random-atom-combination",
            Family::PowerProfile { .. } => "power-profile",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = |c: &[f64; 2]| format!("cx={},cy={}", c[0], c[1]);
        match self {
            Family::IndicatorBall { center, radius } => write!(f, "indicator-ball:{},r={radius}", c(center)),
            Family::IndicatorTentSlab { center, radius, t_lo, t_hi } => {
                write!(f, "indicator-tent-slab:{},r={radius},tlo={t_lo},thi={t_hi}", c(center))
            }
            Family::GaussianBump { center, sigma } => write!(f, "gaussian-bump:{},sigma={sigma}", c(center)),
            Family::Oscillatory { center, radius, k } => write!(f, "oscillatory:{},r={radius},k={k}", c(center)),
            Family::RandomAtomCombination { seed, count } => {
                write!(f, "random-atom-combination:seed={seed},count={count}")
            }
            Family::PowerProfile { center, sigma, beta, t_lo, t_hi } => write!(
                f,
                "power-profile:{},sigma={sigma},beta={beta},tlo={t_lo},thi={t_hi}",
                c(center)
            ),
        }
    }
}

struct Params<'a> {
    family: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Params<'a> {
    fn get(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.pairs.iter().find(|(k, _)| *k == key) {
            Some((_, v)) => v.parse().map_err(|_| {
                TentError::InvalidParameter(format!("{}: cannot parse {key}={v}", self.family))
            }),
            None => default.ok_or_else(|| {
                TentError::InvalidParameter(format!("{}: missing parameter `{key}`", self.family))
            }),
        }
    }

    fn center(&self) -> Result<[f64; 2]> {
        Ok([self.get("cx", Some(0.0))?, self.get("cy", Some(0.0))?])
    }
}

/// Parses `name` or `name:key=value,...`; unspecified parameters take defaults.
impl FromStr for Family {
    type Err = TentError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut pairs = Vec::new();
        for item in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| TentError::InvalidParameter(format!("expected key=value, got `{item}`")))?;
            pairs.push((k.trim(), v.trim()));
        }
        let p = Params { family: name, pairs };
        Ok(match name.trim() {
            "indicator-ball" => Family::IndicatorBall { center: p.center()?, radius: p.get("r", Some(1.0))? },
            "indicator-tent-slab" => Family::IndicatorTentSlab {
                center: p.center()?,
                radius: p.get("r", Some(1.0))?,
                t_lo: p.get("tlo", Some(1.0))?,
                t_hi: p.get("thi", Some(2.0))?,
            },
            "gaussian-bump" => Family::GaussianBump { center: p.center()?, sigma: p.get("sigma", Some(1.0))? },
            "oscillatory" => Family::Oscillatory {
                center: p.center()?,
                radius: p.get("r", Some(2.0))?,
                k: p.get("k", Some(4.0))?,
            },
            "random-atom-combination" => Family::RandomAtomCombination {
                seed: p.get("seed", Some(0.0))? as u64,
                count: p.get("count", Some(4.0))? as usize,
            },
            "power-profile" => Family::PowerProfile {
                center: p.center()?,
                sigma: p.get("sigma", Some(1.0))?,
                beta: p.get("beta", Some(1.0))?,
                t_lo: p.get("tlo", Some(1.0))?,
                t_hi: p.get("thi", Some(std::f64::consts::E))?,
            },
            other => return Err(TentError::UnknownFamily(other.to_string())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn grid() -> Grid {
        Grid::new(GridSpec::new(1, 4.0, 1.0 / 16.0, 0.25, 4, 12)).unwrap()
    }

    #[test]
    fn tent_slab_definition() {
        let g = grid();
        let fam: Family = "indicator-tent-slab:r=1,tlo=1,thi=2".parse().unwrap();
        let f = synthesize(&fam, &g).into_halfspace().unwrap();
        for k in 0..g.levels() {
            for i in 0..g.len() {
                let want = g.coord(i).abs() < 1.0 && (1.0..2.0).contains(&g.t(k));
                assert_eq!(f.at(k, i), if want { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn gaussian_peak() {
        let g = grid();
        let at_lattice = Family::GaussianBump { center: [g.coord(64), 0.0], sigma: 1.0 };
        let f = synthesize(&at_lattice, &g).into_line().unwrap();
        assert_eq!(f.values()[64], 1.0);
        let origin = synthesize(&"gaussian-bump:sigma=1".parse().unwrap(), &g).into_line().unwrap();
        assert!((origin.max_abs() - 1.0).abs() < g.h() * g.h());
    }

    #[test]
    fn random_family_is_reproducible() {
        let g = grid();
        let fam: Family = "random-atom-combination:seed=7".parse().unwrap();
        let a = synthesize(&fam, &g);
        let b = synthesize(&fam, &g);
        assert_eq!(a, b);
        let c = synthesize(&"random-atom-combination:seed=8".parse().unwrap(), &g);
        assert_ne!(a, c);
    }

    #[test]
    fn unknown_family_rejected() {
        assert!(matches!("wavelet:k=1".parse::<Family>(), Err(TentError::UnknownFamily(_))));
        assert!("gaussian-bump:sigma".parse::<Family>().is_err());
    }

    #[test]
    fn display_roundtrips() {
        for s in [
            "indicator-ball:cx=0.5,cy=0,r=2",
            "oscillatory:cx=0,cy=0,r=2,k=3",
            "power-profile:cx=0,cy=0,sigma=1,beta=0.5,tlo=1,thi=2",
            "random-atom-combination:seed=3,count=5",
        ] {
            let f: Family = s.parse().unwrap();
            assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
        }
    }

    #[test]
    fn tent_profile_stays_in_tent() {
        let g = grid();
        let f = tent_profile(&g, [0.5, 0.0], 1.5);
        for k in 0..g.levels() {
            for i in 0..g.len() {
                if f.at(k, i) != 0.0 {
                    assert!(1.5 - (g.coord(i) - 0.5).abs() >= g.t(k));
                }
            }
        }
    }
}
