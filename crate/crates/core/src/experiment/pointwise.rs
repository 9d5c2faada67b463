//! Constants of the pointwise local estimates, measured over a corpus on every lattice point and selected levels.

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{generate_corpus, CorpusItem, CorpusSpec};
use super::inequality::{series_drift, RefinementPoint};
use crate::error::{invalid, Result};
use crate::grid::{BallShape, BallSums, Grid, GridSpec, LineFunction};
use crate::operators::{
    heat, maximal, maximal_truncation, riesz_potential, singular_integral, spectral_multiplier_real, CzKernel, MaximalMode,
    MultiplierSymbol, RieszMethod, SingularMethod,
};
use crate::slice::slice_profile;

/// The estimate whose constant is measured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "lemma", rename_all = "kebab-case")]
pub enum Lemma {
    /// `(⨍_{B(x,t)}|Mf|^r)^{1/r} ≲ (⨍_{B(x,2t)}|f|^r)^{1/r} + M_u(⨍_{B(·,t)}|f|)(x)`.
    Maximal { r: f64 },
    /// `(⨍_{B(x,t)}|Hf|^r)^{1/r} ≲ (⨍_{B(x,2t)}|f|^r)^{1/r} + H_*f(x) + Mf(x)`.
    Singular { r: f64 },
    /// `(⨍_{B(x,t)}|I_αf|^r)^{1/r} ≲ t^{n(1/ϑ-1/r)}(⨍_{B(x,5t)}|f|^ϑ)^{1/ϑ} + I_α(⨍_{B(·,t)}|f|)(x)` with `α/n = 1/ϑ - 1/r`.
    Riesz { alpha: f64, r: f64 },
    /// Riesz transform estimate at `L = -Δ` with `M` heat factors and the maximal function `M_{p₀}`.
    RieszTransform { m: u32, p0: f64, r: f64 },
    /// `(⨍_{B(x,t)}|e^{t²Δ}f|^s)^{1/s} ≲ (⨍_{B(x,αt)} M(|f|^ρ))^{1/ρ}`.
    ReverseHolder { s: f64, rho: f64, dilation: f64 },
}

impl Lemma {
    pub fn name(&self) -> String {
        match self {
            Lemma::Maximal { r } => format!("maximal(r={r})"),
            Lemma::Singular { r } => format!("singular(r={r})"),
            Lemma::Riesz { alpha, r } => format!("riesz(alpha={alpha},r={r})"),
            Lemma::RieszTransform { m, p0, r } => format!("riesz-transform(M={m},p0={p0},r={r})"),
            Lemma::ReverseHolder { s, rho, dilation } => format!("reverse-holder(s={s},rho={rho},alpha={dilation})"),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let ok = match *self {
            Lemma::Maximal { r } | Lemma::Singular { r } => r >= 1.0,
            Lemma::Riesz { alpha, r } => {
                let theta = 1.0 / (alpha / n as f64 + 1.0 / r);
                alpha > 0.0 && alpha < n as f64 && r >= 1.0 && theta >= 1.0
            }
            Lemma::RieszTransform { m, p0, r } => n == 1 && m >= 1 && 1.0 <= p0 && p0 < r,
            Lemma::ReverseHolder { s, rho, dilation } => rho >= 1.0 && rho < s && dilation > 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("parameters out of range for {}", self.name())))
        }
    }

    /// Largest level used: the heat factor must fit the domain.
    fn max_t(&self, half_width: f64) -> f64 {
        match self {
            Lemma::ReverseHolder { .. } | Lemma::RieszTransform { .. } => half_width / 8.0,
            _ => half_width / 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseConfig {
    pub lemma: Lemma,
    pub grid: GridSpec,
    pub corpus: CorpusSpec,
    /// Use every `level_stride`-th level.
    pub level_stride: usize,
    pub refinements: usize,
    pub drift_tolerance: f64,
}

impl PointwiseConfig {
    pub fn new(lemma: Lemma, grid: GridSpec, corpus: CorpusSpec) -> Self {
        PointwiseConfig { lemma, grid, corpus, level_stride: 1, refinements: 2, drift_tolerance: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseReport {
    pub config: PointwiseConfig,
    /// Levels evaluated.
    pub levels: Vec<f64>,
    /// Largest left/right ratio per grid.
    pub constants: Vec<RefinementPoint>,
    /// Per item, per grid (grid-major).
    pub item_constants: Vec<f64>,
    pub drift: f64,
    pub finite: bool,
    pub passed: bool,
}

fn ratio_max(lhs: &[f64], rhs: &[f64]) -> f64 {
    lhs.iter()
        .zip(rhs)
        .filter(|(l, _)| **l > 0.0)
        .map(|(l, r)| if *r > 0.0 { l / r } else { f64::INFINITY })
        .fold(0.0, f64::max)
}

fn add(a: &LineFunction, b: &LineFunction) -> Result<LineFunction> {
    a.add(b)
}

fn powered(f: &LineFunction, p: f64) -> LineFunction {
    f.map(|v| v.abs().powf(p))
}

fn binomial(m: u32, k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * (m - k + i) as f64 / i as f64)
}

/// `Σ_{j≥1} 4^{-jM} (t^{-n} ∫_{B(x,2^{j+1}t)} |f|^r)^{1/r}`, the tail past the domain summed in closed form.
fn off_diagonal_sum(f: &LineFunction, t: f64, m: u32, r: f64) -> Vec<f64> {
    let grid = f.grid();
    let hn = grid.cell_volume();
    let tn = t.powi(grid.dim() as i32);
    let pw = powered(f, r);
    let sums = BallSums::new(grid, pw.values());
    let total: f64 = pw.values().iter().sum();
    let decay = 4f64.powi(-(m as i32));
    let cover = 2.0 * grid.half_width() * (grid.dim() as f64).sqrt() + grid.h();
    let mut out = vec![0.0; grid.len()];
    let mut j = 1;
    loop {
        let radius = 2f64.powi(j + 1) * t;
        let w = decay.powi(j);
        if radius > cover {
            let tail = w / (1.0 - decay) * (total * hn / tn).powf(1.0 / r);
            out.iter_mut().for_each(|v| *v += tail);
            return out;
        }
        let shape = BallShape::new(grid, radius);
        for (i, v) in out.iter_mut().enumerate() {
            *v += w * (sums.sum(i, &shape) * hn / tn).powf(1.0 / r);
        }
        j += 1;
    }
}

fn item_constant(lemma: &Lemma, f: &LineFunction, levels: &[f64]) -> Result<f64> {
    let n = f.grid().dim() as f64;
    let mut worst = 0.0f64;
    match *lemma {
        Lemma::Maximal { r } => {
            let mf = maximal(f, MaximalMode::Centered)?;
            for &t in levels {
                let lhs = slice_profile(&mf, r, t)?;
                let rhs = add(&slice_profile(f, r, 2.0 * t)?, &maximal(&slice_profile(f, 1.0, t)?, MaximalMode::Uncentered)?)?;
                worst = worst.max(ratio_max(lhs.values(), rhs.values()));
            }
        }
        Lemma::Singular { r } => {
            let kernel = CzKernel::hilbert();
            let hf = singular_integral(f, &kernel, SingularMethod::PvDirect)?;
            let base = add(&maximal_truncation(f, &kernel)?, &maximal(f, MaximalMode::Centered)?)?;
            for &t in levels {
                let lhs = slice_profile(&hf, r, t)?;
                let rhs = add(&slice_profile(f, r, 2.0 * t)?, &base)?;
                worst = worst.max(ratio_max(lhs.values(), rhs.values()));
            }
        }
        Lemma::Riesz { alpha, r } => {
            let theta = 1.0 / (alpha / n + 1.0 / r);
            let iaf = riesz_potential(f, alpha, RieszMethod::Direct)?;
            for &t in levels {
                let lhs = slice_profile(&iaf, r, t)?;
                let local = slice_profile(f, theta, 5.0 * t)?.scale(t.powf(n * (1.0 / theta - 1.0 / r)));
                let far = riesz_potential(&slice_profile(f, 1.0, t)?, alpha, RieszMethod::Direct)?;
                worst = worst.max(ratio_max(lhs.values(), add(&local, &far)?.values()));
            }
        }
        Lemma::RieszTransform { m, p0, r } => {
            let riesz = MultiplierSymbol::grad_sqrt_lap();
            let g = spectral_multiplier_real(f, &riesz)?;
            for &t in levels {
                let lhs = slice_profile(&g, r, t)?;
                let mut rhs = off_diagonal_sum(f, t, m, r);
                for k in 1..=m {
                    let sym = riesz.product(&MultiplierSymbol::heat(k as f64 * t * t / 2.0));
                    let gk = spectral_multiplier_real(f, &sym)?;
                    let mp = maximal(&powered(&gk, p0), MaximalMode::Centered)?;
                    let c = binomial(m, k);
                    for (v, w) in rhs.iter_mut().zip(mp.values()) {
                        *v += c * w.powf(1.0 / p0);
                    }
                }
                worst = worst.max(ratio_max(lhs.values(), &rhs));
            }
        }
        Lemma::ReverseHolder { s, rho, dilation } => {
            let mf = maximal(&powered(f, rho), MaximalMode::Centered)?;
            for &t in levels {
                let lhs = slice_profile(&heat(f, t * t)?, s, t)?;
                let rhs = slice_profile(&mf, 1.0, dilation * t)?.map(|v| v.powf(1.0 / rho));
                worst = worst.max(ratio_max(lhs.values(), rhs.values()));
            }
        }
    }
    Ok(worst)
}

/// Levels `t_k ≤ max_t` with `k` a multiple of `stride`.
fn chosen_levels(grid: &Grid, stride: usize, max_t: f64) -> Vec<f64> {
    (0..grid.levels()).step_by(stride.max(1)).map(|k| grid.t(k)).filter(|&t| t <= max_t && t >= grid.h()).collect()
}

/// Largest ratio of the two sides over items, lattice points and levels, on `h, h/2, …`.
pub fn run_pointwise(config: &PointwiseConfig) -> Result<PointwiseReport> {
    config.grid.validate()?;
    config.lemma.validate(config.grid.n)?;
    if config.refinements == 0 {
        return Err(invalid("at least one grid is required"));
    }
    let items: Vec<CorpusItem> = generate_corpus(&config.corpus, &config.grid)?;
    if items.is_empty() {
        return Err(invalid("corpus is empty"));
    }
    let base = Grid::new(config.grid)?;
    let levels = chosen_levels(&base, config.level_stride, config.lemma.max_t(config.grid.half_width));
    if levels.is_empty() {
        return Err(invalid("no level satisfies the lemma's range"));
    }
    let mut constants = Vec::new();
    let mut item_constants = Vec::new();
    for i in 0..config.refinements {
        let grid = Grid::new(config.grid.refined(1 << i))?;
        info!("{}: {} items, {} levels at h = {}", config.lemma.name(), items.len(), levels.len(), grid.h());
        let per_item: Vec<f64> = items
            .par_iter()
            .map(|it| item_constant(&config.lemma, &it.render_line(&grid), &levels))
            .collect::<Result<_>>()?;
        constants.push(RefinementPoint { h: grid.h(), max_ratio: per_item.iter().copied().fold(0.0, f64::max), items: per_item.len() });
        item_constants.extend(per_item);
    }
    let drift = series_drift(&constants.iter().map(|c| c.max_ratio).collect::<Vec<_>>());
    let finite = item_constants.iter().all(|c| c.is_finite());
    Ok(PointwiseReport {
        config: config.clone(),
        levels,
        constants,
        item_constants,
        drift,
        finite,
        passed: finite && drift <= config.drift_tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::CorpusFamily;

    fn cfg(lemma: Lemma) -> PointwiseConfig {
        let mut c = PointwiseConfig::new(lemma, GridSpec::new(1, 8.0, 1.0 / 16.0, 0.25, 2, 6), CorpusSpec::all(4, 4));
        c.refinements = 1;
        c
    }

    #[test]
    fn every_lemma_gives_finite_constants() {
        for lemma in [
            Lemma::Maximal { r: 2.0 },
            Lemma::Singular { r: 2.0 },
            Lemma::Riesz { alpha: 0.5, r: 2.0 },
            Lemma::RieszTransform { m: 1, p0: 1.5, r: 2.0 },
            Lemma::ReverseHolder { s: 8.0, rho: 1.0, dilation: 2.0 },
        ] {
            let rep = run_pointwise(&cfg(lemma)).unwrap();
            assert!(rep.finite, "{lemma:?}");
            assert!(rep.constants[0].max_ratio > 0.0, "{lemma:?}");
        }
    }

    #[test]
    fn maximal_lemma_interior_ratio() {
        // Deep inside the support both right-hand terms equal the left-hand side.
        let g = Grid::new(GridSpec::new(1, 8.0, 1.0 / 16.0, 0.25, 2, 6)).unwrap();
        let f = LineFunction::from_fn(&g, |x| if x[0].abs() < 6.0 { 1.0 } else { 0.0 });
        let c = item_constant(&Lemma::Maximal { r: 2.0 }, &f, &[0.5]).unwrap();
        assert!(c >= 0.5 && c.is_finite(), "{c}");
    }

    #[test]
    fn off_diagonal_tail_is_geometric() {
        let g = Grid::new(GridSpec::new(1, 4.0, 1.0 / 8.0, 0.25, 2, 6)).unwrap();
        let f = LineFunction::from_fn(&g, |_| 1.0);
        let v = off_diagonal_sum(&f, 100.0, 1, 1.0);
        let want = (8.0 / 100.0) * (0.25 / 0.75);
        assert!((v[0] - want).abs() < 1e-12 * want);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(run_pointwise(&cfg(Lemma::RieszTransform { m: 1, p0: 2.0, r: 2.0 })).is_err());
        assert!(run_pointwise(&cfg(Lemma::Riesz { alpha: 0.5, r: 1.0 })).is_err());
        let mut c = cfg(Lemma::Maximal { r: 2.0 });
        c.corpus = CorpusSpec::new(vec![CorpusFamily::Atom], 1, 0);
        assert!(run_pointwise(&c).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(2, 1), 2.0);
        assert_eq!(binomial(5, 2), 10.0);
    }
}
