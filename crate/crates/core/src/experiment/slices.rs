//! Corpus-wide constants of the slice-space retraction, the change of scale, the amalgam comparison and operator transfer.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{generate_corpus, CorpusSpec};
use crate::error::{invalid, Result};
use crate::grid::{Grid, GridSpec, LineFunction};
use crate::operators::Operator;
use crate::slice::{amalgam_norm, inject, project, slice_norm};
use crate::tent::{tent_norm, TentExponents};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceStudyConfig {
    pub grid: GridSpec,
    pub corpus: CorpusSpec,
    pub p: f64,
    pub r: f64,
    /// Level `k` of the scale `t = t_k`.
    pub level: usize,
    pub operators: Vec<Operator>,
}

/// Two-sided constant `C` with `1/C ≤ a/b ≤ C` over a set of ratios.
fn two_sided(ratios: &[f64]) -> f64 {
    ratios.iter().map(|&x| x.max(1.0 / x)).fold(1.0, f64::max)
}

/// Measured constants on one grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceConstants {
    pub h: f64,
    /// Largest relative error of `π_t i_t f` against `f`.
    pub retraction_error: f64,
    /// `max ‖i_t f‖_{T^p_r} / ‖f‖_{(E^p_r)_{et}}`.
    pub inject: f64,
    /// `max ‖π_t G‖_{(E^p_r)_t} / ‖G‖_{T^p_r}` over `G = i_t f` and `G = 𝒯 i_t f`.
    pub project: f64,
    /// Two-sided constant between scales `t` and `s` with `s/t ∈ {1/2, 2}`.
    pub scale: f64,
    /// `max ‖f‖_{(E^p_r)_{et}} / ‖f‖_{(E^p_r)_t}`.
    pub widen: f64,
    /// Two-sided constant between the Wiener amalgam `W(L^r, L^p)` and the slice norm at scale `1/2`.
    pub amalgam: f64,
    pub transfer: Vec<TransferCheck>,
}

/// `‖Tf‖_{(E^p_r)_t} ≤ C_π C_𝒯 C_i C_w ‖f‖_{(E^p_r)_t}` as an inequality between measured constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferCheck {
    pub operator: Operator,
    /// `max ‖π_t 𝒯 i_t f‖ / ‖f‖` on the slice space.
    pub transfer: f64,
    /// `max ‖𝒯 i_t f‖_{T^p_r} / ‖i_t f‖_{T^p_r}`.
    pub lift: f64,
    pub bound: f64,
    pub ok: bool,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        0.0
    }
}

struct ItemNumbers {
    retraction_error: f64,
    inject: f64,
    project: Vec<f64>,
    scale: Vec<f64>,
    widen: f64,
    amalgam: Option<f64>,
    transfer: Vec<(f64, f64)>,
}

fn measure(config: &SliceStudyConfig, f: &LineFunction) -> Result<ItemNumbers> {
    let grid = f.grid();
    let (p, r, k) = (config.p, config.r, config.level);
    let t = grid.t(k);
    let exps = TentExponents::standard(p, r)?;
    let lifted = inject(f, k)?;
    let back = project(&lifted, k)?;
    let scale_f = f.max_abs();
    let retraction_error =
        back.values().iter().zip(f.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale_f.max(f64::MIN_POSITIVE);
    let here = slice_norm(f, p, r, t, false)?;
    let wide = slice_norm(f, p, r, t * std::f64::consts::E, false)?;
    let tent = tent_norm(&lifted, exps, None)?;
    let mut project_ratios = vec![ratio(slice_norm(&back, p, r, t, false)?, tent)];
    let scale = vec![ratio(slice_norm(f, p, r, 2.0 * t, false)?, here), ratio(slice_norm(f, p, r, t / 2.0, false)?, here)];
    let amalgam = if grid.dim() == 1 {
        Some(ratio(amalgam_norm(f, r, p)?, slice_norm(f, p, r, 0.5, false)?))
    } else {
        None
    };
    let mut transfer = Vec::new();
    for op in &config.operators {
        let image = op.lift(&lifted)?;
        let image_tent = tent_norm(&image, exps, None)?;
        let moved = slice_norm(&project(&image, k)?, p, r, t, false)?;
        project_ratios.push(ratio(moved, image_tent));
        transfer.push((ratio(moved, here), ratio(image_tent, tent)));
    }
    Ok(ItemNumbers { retraction_error, inject: ratio(tent, wide), project: project_ratios, scale, widen: ratio(wide, here), amalgam, transfer })
}

/// Measures every constant over the corpus on `grid`.
pub fn slice_study(config: &SliceStudyConfig) -> Result<SliceConstants> {
    let grid = Grid::new(config.grid)?;
    if config.level + grid.m() > grid.levels() {
        return Err(invalid("slice level leaves no room for an e-fold"));
    }
    let items = generate_corpus(&config.corpus, &config.grid)?;
    let nums: Vec<ItemNumbers> = items.par_iter().map(|it| measure(config, &it.render_line(&grid))).collect::<Result<_>>()?;
    let max = |f: &dyn Fn(&ItemNumbers) -> f64| nums.iter().map(f).fold(0.0, f64::max);
    let inject_c = max(&|n| n.inject);
    let project_c = max(&|n| n.project.iter().copied().fold(0.0, f64::max));
    let widen = max(&|n| n.widen);
    let scale = two_sided(&nums.iter().flat_map(|n| n.scale.clone()).collect::<Vec<_>>());
    let amalgam = two_sided(&nums.iter().filter_map(|n| n.amalgam).collect::<Vec<_>>());
    let transfer = config
        .operators
        .iter()
        .enumerate()
        .map(|(i, op)| {
            let transfer = max(&|n| n.transfer[i].0);
            let lift = max(&|n| n.transfer[i].1);
            let bound = project_c * lift * inject_c * widen;
            TransferCheck { operator: op.clone(), transfer, lift, bound, ok: transfer <= bound * (1.0 + 1e-12) }
        })
        .collect();
    Ok(SliceConstants {
        h: grid.h(),
        retraction_error: max(&|n| n.retraction_error),
        inject: inject_c,
        project: project_c,
        scale,
        widen,
        amalgam,
        transfer,
    })
}
