//! Boundedness ratios of lifted operators over a corpus, with a refinement series.

use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{generate_corpus, CorpusFamily, CorpusItem, CorpusSpec};
use crate::error::{invalid, Result};
use crate::grid::{Grid, GridSpec, HalfSpaceFunction};
use crate::operators::Operator;
use crate::tent::{tent_norm, weak_tent_norm, TentExponents};

/// Exponents of a tent space `T^q_r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TentPair {
    pub q: f64,
    pub r: f64,
}

impl TentPair {
    pub fn new(q: f64, r: f64) -> Self {
        TentPair { q, r }
    }
}

/// What is divided by what.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Measurement {
    /// `‖𝒯F‖_{T^{q'}_{r'}} / ‖F‖_{T^q_r}`.
    Strong { input: TentPair, output: TentPair },
    /// `‖𝒯F‖_{wT^1_r} / ‖F‖_{T^1_r}`.
    Weak { r: f64 },
}

impl Measurement {
    pub fn strong(q: f64, r: f64) -> Self {
        Measurement::Strong { input: TentPair::new(q, r), output: TentPair::new(q, r) }
    }

    pub fn label(&self) -> String {
        match self {
            Measurement::Strong { input, output } if input == output => format!("T^{}_{}", input.q, input.r),
            Measurement::Strong { input, output } => {
                format!("T^{}_{}->T^{}_{}", input.q, input.r, output.q, output.r)
            }
            Measurement::Weak { r } => format!("T^1_{r}->wT^1_{r}"),
        }
    }

    fn input_norm(&self, f: &HalfSpaceFunction) -> Result<f64> {
        match *self {
            Measurement::Strong { input, .. } => tent_norm(f, TentExponents::standard(input.q, input.r)?, None),
            Measurement::Weak { r } => tent_norm(f, TentExponents::standard(1.0, r)?, None),
        }
    }

    fn output_norm(&self, f: &HalfSpaceFunction) -> Result<f64> {
        match *self {
            Measurement::Strong { output, .. } => tent_norm(f, TentExponents::standard(output.q, output.r)?, None),
            Measurement::Weak { r } => weak_tent_norm(f, 1.0, r),
        }
    }
}

/// Hypothesis parameters carried along for the record.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    /// `ρ` in `sup_t |T_t f| ≤ (M|f|^ρ)^{1/ρ}` or in the reverse Hölder condition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Reverse Hölder exponent `s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Reverse Hölder dilation `α > 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dilation: Option<f64>,
}

/// A complete experiment description; serializes to the JSON config file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub grid: GridSpec,
    pub operator: Operator,
    pub measurements: Vec<Measurement>,
    pub corpus: CorpusSpec,
    /// Number of grids `h, h/2, …` to run.
    #[serde(default = "one")]
    pub refinements: usize,
    #[serde(default = "default_drift")]
    pub drift_tolerance: f64,
    /// Declared upper bound for every ratio, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<f64>,
    #[serde(default)]
    pub hypothesis: Hypothesis,
}

fn one() -> usize {
    1
}

fn default_drift() -> f64 {
    0.1
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

impl ExperimentConfig {
    pub fn new(name: impl Into<String>, grid: GridSpec, operator: Operator, measurements: Vec<Measurement>, corpus: CorpusSpec) -> Self {
        ExperimentConfig {
            name: name.into(),
            grid,
            operator,
            measurements,
            corpus,
            refinements: 1,
            drift_tolerance: default_drift(),
            envelope: None,
            hypothesis: Hypothesis::default(),
        }
    }

    /// Checks every measurement against the admissible parameter range of its operator.
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.refinements == 0 {
            return Err(invalid("at least one grid is required"));
        }
        if self.measurements.is_empty() {
            return Err(invalid("no measurements configured"));
        }
        let n = self.grid.n as f64;
        for m in &self.measurements {
            match (*m, &self.operator) {
                (Measurement::Strong { input, output }, Operator::Riesz(a) | Operator::RieszSpectral(a) | Operator::FractionalMaximal(a)) => {
                    if !close(1.0 / input.q - 1.0 / output.q, a / n) {
                        return Err(invalid(format!(
                            "1/p - 1/q = {} must equal α/n = {} to 1e-12",
                            1.0 / input.q - 1.0 / output.q,
                            a / n
                        )));
                    }
                    if input.r != output.r || input.r <= n / (n - a) || input.q <= 1.0 {
                        return Err(invalid(format!("fractional experiments need r > n/(n-α) = {} shared by both sides and p > 1", n / (n - a))));
                    }
                }
                (Measurement::Strong { input, output }, op) => {
                    if input != output {
                        return Err(invalid(format!("operator {op} is measured on a single tent space")));
                    }
                    let floor = match op {
                        Operator::HeatFamily => self.hypothesis.rho.unwrap_or(1.0),
                        Operator::Identity | Operator::Scale(_) | Operator::Heat(_) => 0.0,
                        _ => 1.0,
                    };
                    if floor > 0.0 && (input.q <= floor || input.r <= floor) {
                        return Err(invalid(format!("operator {op} needs q, r > {floor}")));
                    }
                    if let (Operator::HeatFamily, Some(s)) = (op, self.hypothesis.s) {
                        if input.r > s {
                            return Err(invalid(format!("reverse Hölder range needs r ≤ s = {s}")));
                        }
                    }
                }
                (Measurement::Weak { r }, op) => {
                    if r <= 1.0 {
                        return Err(invalid(format!("weak-type experiment for {op} needs r > 1")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Grid specs `h, h/2, …`.
    pub fn grids(&self) -> Vec<GridSpec> {
        (0..self.refinements).map(|i| self.grid.refined(1 << i)).collect()
    }
}

/// One ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemResult {
    pub item_id: usize,
    pub family: CorpusFamily,
    pub ratio: f64,
    pub input_norm: f64,
    pub output_norm: f64,
    pub grid_h: f64,
}

/// Maximum ratio on one grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementPoint {
    pub h: f64,
    pub max_ratio: f64,
    pub items: usize,
}

/// Ratios and summary for one measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementReport {
    pub measurement: Measurement,
    pub label: String,
    /// Ratios on every grid, grid-major, canonical item order.
    pub items: Vec<ItemResult>,
    /// Maximum over the base grid.
    pub max_ratio: f64,
    /// Median, 90th percentile and maximum on the base grid.
    pub quantiles: [f64; 3],
    pub refinement: Vec<RefinementPoint>,
    /// Largest relative change of the maximum between consecutive grids.
    pub drift: f64,
    pub finite: bool,
    pub drift_ok: bool,
    pub envelope_ok: bool,
}

impl MeasurementReport {
    pub fn passed(&self) -> bool {
        self.finite && self.drift_ok && self.envelope_ok
    }
}

/// Everything produced by [`run_inequality_experiment`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub config: ExperimentConfig,
    pub measurements: Vec<MeasurementReport>,
    /// Items whose input norm vanished, per grid.
    pub skipped: Vec<usize>,
    pub passed: bool,
    /// Not serialized, so that reports are byte-stable.
    #[serde(skip)]
    pub runtime: Elapsed,
}

/// Wall-clock seconds, ignored by equality.
#[derive(Clone, Copy, Debug, Default)]
pub struct Elapsed(pub f64);

impl PartialEq for Elapsed {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

/// Relative change between consecutive entries, maximized.
pub fn series_drift(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| if w[0] == w[1] { 0.0 } else { (w[1] - w[0]).abs() / w[0].abs() })
        .fold(0.0, f64::max)
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = p * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

struct Evaluated {
    item: usize,
    family: CorpusFamily,
    norms: Vec<(f64, f64)>,
}

fn evaluate(config: &ExperimentConfig, grid: &Grid, item: &CorpusItem) -> Result<Evaluated> {
    let f = item.render(grid);
    let out = config.operator.lift(&f)?;
    let norms = config
        .measurements
        .iter()
        .map(|m| Ok((m.input_norm(&f)?, m.output_norm(&out)?)))
        .collect::<Result<_>>()?;
    Ok(Evaluated { item: item.id, family: item.family, norms })
}

/// Runs the configured operator over the corpus on every grid.
pub fn run_inequality_experiment(config: &ExperimentConfig) -> Result<InequalityReport> {
    config.validate()?;
    let start = Instant::now();
    let items = generate_corpus(&config.corpus, &config.grid)?;
    if items.is_empty() {
        return Err(invalid("corpus is empty"));
    }
    let mut per_grid = Vec::new();
    for spec in config.grids() {
        let grid = Grid::new(spec)?;
        info!("{}: {} items at h = {}", config.name, items.len(), spec.h);
        let evaluated: Vec<Evaluated> = items.par_iter().map(|it| evaluate(config, &grid, it)).collect::<Result<_>>()?;
        per_grid.push((spec.h, evaluated));
    }
    let mut skipped = Vec::new();
    let mut measurements = Vec::new();
    for (mi, m) in config.measurements.iter().enumerate() {
        let mut results = Vec::new();
        let mut refinement = Vec::new();
        for (h, evaluated) in &per_grid {
            let mut max_ratio = 0.0f64;
            let mut count = 0;
            for e in evaluated {
                let (input, output) = e.norms[mi];
                if input == 0.0 {
                    if mi == 0 && !skipped.contains(&e.item) {
                        warn!("item {} has zero input norm at h = {h}; skipped", e.item);
                        skipped.push(e.item);
                    }
                    continue;
                }
                let ratio = output / input;
                max_ratio = max_ratio.max(ratio);
                count += 1;
                results.push(ItemResult { item_id: e.item, family: e.family, ratio, input_norm: input, output_norm: output, grid_h: *h });
            }
            refinement.push(RefinementPoint { h: *h, max_ratio, items: count });
        }
        let base_h = per_grid[0].0;
        let mut base: Vec<f64> = results.iter().filter(|r| r.grid_h == base_h).map(|r| r.ratio).collect();
        base.sort_by(f64::total_cmp);
        let finite = results.iter().all(|r| r.ratio.is_finite());
        let drift = series_drift(&refinement.iter().map(|p| p.max_ratio).collect::<Vec<_>>());
        let max_ratio = refinement[0].max_ratio;
        let envelope_ok = config.envelope.map_or(true, |e| refinement.iter().all(|p| p.max_ratio <= e));
        measurements.push(MeasurementReport {
            measurement: *m,
            label: m.label(),
            items: results,
            max_ratio,
            quantiles: [quantile(&base, 0.5), quantile(&base, 0.9), quantile(&base, 1.0)],
            refinement,
            drift,
            finite,
            drift_ok: drift <= config.drift_tolerance,
            envelope_ok,
        });
    }
    let passed = measurements.iter().all(MeasurementReport::passed);
    Ok(InequalityReport {
        config: config.clone(),
        measurements,
        skipped,
        passed,
        runtime: Elapsed(start.elapsed().as_secs_f64()),
    })
}
