//! One function per subcommand. Each returns whether its declared checks held.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use log::info;
use serde::Serialize;
use tentlab::atoms::{atom_validate, atomic_decompose, reconstruct, relative_residual, AtomReport};
use tentlab::cz::{cz_halfspace, cz_scalar, CzChecks, CzSplitChecks, DyadicCube};
use tentlab::experiment::{run_inequality_experiment, write_report, ExperimentConfig};
use tentlab::grid::{read_file, synthesize, write_file, Decoded, Family, Scalar, Synthesized};
use tentlab::operators::Operator;
use tentlab::slice::{inject, project, slice_norm};
use tentlab::tent::{tent_norm, weak_lorentz_norm, weak_tent_norm, weighted_lq_norm, TentExponents};
use tentlab::weights::{ap_characteristic, rh_characteristic, stability_series, BallFamily, StabilitySeries, Weight};
use tentlab::{Grid, GridSpec, HalfSpaceFunction, LineFunction};

use crate::output::emit;
use crate::{Cli, Command, Global, SliceAction, WeightsAction};

/// Residual allowed between a decomposition and its source.
const RECONSTRUCTION_TOLERANCE: f64 = 1e-10;

/// Largest normalized slice integral a bad piece may keep.
const CANCELLATION_TOLERANCE: f64 = 1e-12;

pub fn run(cli: &Cli) -> Result<bool> {
    let g = &cli.global;
    match &cli.command {
        Command::Synth { family } => synth(g, family),
        Command::Norm { input, q, r, alpha, weak } => norm(g, input, *q, *r, *alpha, *weak),
        Command::Apply { input, operator, t } => apply(g, input, operator, *t),
        Command::Decompose { input, q, r } => decompose(g, input, *q, *r),
        Command::Czd { input, lambda, r } => czd(g, input, *lambda, *r),
        Command::Weights { action: WeightsAction::Char { weight, p, rh, family } } => weights(g, weight, *p, *rh, family),
        Command::Slice { action } => slice(g, action),
        Command::Experiment { config } => experiment(g, config),
    }
}

fn grid_spec(g: &Global) -> GridSpec {
    g.grid.unwrap_or_else(GridSpec::default_1d)
}

fn required_out(g: &Global) -> Result<&Path> {
    g.out.as_deref().ok_or_else(|| anyhow!("this subcommand needs --out"))
}

fn load(path: &Path) -> Result<Decoded> {
    read_file(path).with_context(|| format!("cannot read {}", path.display()))
}

fn save(path: &Path, obj: Decoded) -> Result<()> {
    write_file(path, &obj).with_context(|| format!("cannot write {}", path.display()))
}

fn real_halfspace(d: Decoded) -> Result<HalfSpaceFunction> {
    match d {
        Decoded::HalfSpace(f) => Ok(f),
        Decoded::ComplexHalfSpace(_) => bail!("expected a real half-space file, found a complex one"),
        _ => bail!("expected a half-space file, found a line file"),
    }
}

fn real_line(d: Decoded) -> Result<LineFunction> {
    match d {
        Decoded::Line(f) => Ok(f),
        Decoded::ComplexLine(_) => bail!("expected a real line file, found a complex one"),
        _ => bail!("expected a line file, found a half-space file"),
    }
}

fn synth(g: &Global, family: &Family) -> Result<bool> {
    let out = required_out(g)?;
    let grid = Grid::new(grid_spec(g))?;
    let mut family = family.clone();
    if let (Family::RandomAtomCombination { seed, .. }, Some(s)) = (&mut family, g.seed) {
        *seed = s;
    }
    let obj = match synthesize(&family, &grid) {
        Synthesized::Line(f) => Decoded::Line(f),
        Synthesized::HalfSpace(f) => Decoded::HalfSpace(f),
    };
    save(out, obj)?;
    Ok(true)
}

#[derive(Serialize)]
struct NormRecord {
    input: PathBuf,
    kind: &'static str,
    q: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    weak: bool,
    norm: f64,
}

fn modulus<T: Scalar>(f: &LineFunction<T>) -> Result<LineFunction> {
    Ok(LineFunction::new(f.grid().clone(), f.values().iter().map(|v| v.modulus()).collect())?)
}

fn halfspace_norm<T: Scalar>(f: &HalfSpaceFunction<T>, q: f64, r: f64, alpha: f64, weak: bool) -> Result<f64> {
    if weak {
        if alpha != 1.0 {
            bail!("the weak tent norm is only available at aperture 1");
        }
        return Ok(weak_tent_norm(f, q, r)?);
    }
    Ok(tent_norm(f, TentExponents::new(q, r, alpha)?, None)?)
}

fn line_norm<T: Scalar>(f: &LineFunction<T>, q: f64, weak: bool) -> Result<f64> {
    if weak {
        Ok(weak_lorentz_norm(f, q)?)
    } else {
        Ok(weighted_lq_norm(&modulus(f)?, q, None)?)
    }
}

fn norm(g: &Global, input: &Path, q: f64, r: f64, alpha: f64, weak: bool) -> Result<bool> {
    let (kind, value, tent) = match load(input)? {
        Decoded::HalfSpace(f) => ("halfspace", halfspace_norm(&f, q, r, alpha, weak)?, true),
        Decoded::ComplexHalfSpace(f) => ("halfspace", halfspace_norm(&f, q, r, alpha, weak)?, true),
        Decoded::Line(f) => ("line", line_norm(&f, q, weak)?, false),
        Decoded::ComplexLine(f) => ("line", line_norm(&f, q, weak)?, false),
    };
    let record = NormRecord {
        input: input.to_path_buf(),
        kind,
        q,
        r: tent.then_some(r),
        alpha: tent.then_some(alpha),
        weak,
        norm: value,
    };
    emit(&record, g.format, g.out.as_deref())?;
    Ok(true)
}

fn apply(g: &Global, input: &Path, op: &Operator, t: f64) -> Result<bool> {
    let out = required_out(g)?;
    let result = match load(input)? {
        Decoded::HalfSpace(f) => Decoded::HalfSpace(op.lift(&f)?),
        Decoded::Line(f) => Decoded::Line(op.apply(&f, t)?),
        _ => bail!("operators act on real inputs only"),
    };
    save(out, result)?;
    Ok(true)
}

#[derive(Serialize)]
struct AtomEntry {
    index: usize,
    lambda: f64,
    tag: String,
    center: [f64; 2],
    radius: f64,
    cancelling: bool,
    support: usize,
    file: PathBuf,
    validation: AtomReport,
}

#[derive(Serialize)]
struct DecompositionManifest {
    input: PathBuf,
    q: f64,
    r: f64,
    source_norm: f64,
    coefficient_norm: f64,
    coefficient_ratio: f64,
    residual: f64,
    all_admissible: bool,
    atoms_dir: PathBuf,
    atoms: Vec<AtomEntry>,
}

/// `dir/name.json` keeps its atoms in `dir/name_atoms/`.
fn sibling_dir(manifest: &Path) -> PathBuf {
    let stem = manifest.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "decomposition".into());
    manifest.with_file_name(format!("{stem}_atoms"))
}

fn decompose(g: &Global, input: &Path, q: f64, r: f64) -> Result<bool> {
    let out = required_out(g)?;
    let f = real_halfspace(load(input)?)?;
    let dec = atomic_decompose(&f, q, r)?;
    let residual = relative_residual(&reconstruct(&dec)?, &f, r)?;
    let dir = sibling_dir(out);
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut atoms = Vec::with_capacity(dec.terms.len());
    for (index, term) in dec.terms.iter().enumerate() {
        let file = dir.join(format!("atom_{index:04}.hsf"));
        save(&file, Decoded::HalfSpace(term.atom.to_halfspace()))?;
        let a = &term.atom;
        atoms.push(AtomEntry {
            index,
            lambda: term.lambda,
            tag: term.tag.clone(),
            center: a.center,
            radius: a.radius,
            cancelling: a.cancelling,
            support: a.data.entries().len(),
            file,
            validation: atom_validate(a),
        });
    }
    let all_admissible = atoms.iter().all(|e| e.validation.admissible(e.cancelling));
    let manifest = DecompositionManifest {
        input: input.to_path_buf(),
        q,
        r,
        source_norm: dec.source_norm,
        coefficient_norm: dec.coefficient_norm(),
        coefficient_ratio: dec.coefficient_ratio(),
        residual,
        all_admissible,
        atoms_dir: dir,
        atoms,
    };
    emit(&manifest, g.format, Some(out))?;
    info!("{} atoms, residual {residual:e}", manifest.atoms.len());
    Ok(all_admissible && residual <= RECONSTRUCTION_TOLERANCE)
}

#[derive(Serialize)]
struct CubeEntry {
    cube: DyadicCube,
    side: f64,
    center: [f64; 2],
    mean: f64,
    /// `L¹(dx dt/t)` mass of the bad piece on this cube; absent for line inputs.
    #[serde(skip_serializing_if = "Option::is_none")]
    mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    file: Option<PathBuf>,
}

#[derive(Serialize)]
struct CzManifest {
    input: PathBuf,
    kind: &'static str,
    lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    good: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    bad: Option<PathBuf>,
    cubes: Vec<CubeEntry>,
    scalar: CzChecks,
    #[serde(skip_serializing_if = "Option::is_none")]
    split: Option<CzSplitChecks>,
    verified: Verified,
}

#[derive(Serialize)]
struct Verified {
    good_bound: bool,
    cube_means: bool,
    cancellation: bool,
    bad_l1: bool,
    level_set: bool,
    whitney: bool,
    all: bool,
}

impl Verified {
    fn new(c: &CzChecks, extra: bool) -> Self {
        let mut v = Verified {
            good_bound: c.good_ok(),
            cube_means: c.mean_ok(),
            cancellation: c.cancellation_ok() && extra,
            bad_l1: c.bad_l1_ok(),
            level_set: c.level_set_ok(),
            whitney: c.whitney_violations == 0,
            all: false,
        };
        v.all = v.good_bound && v.cube_means && v.cancellation && v.bad_l1 && v.level_set && v.whitney;
        v
    }
}

fn czd(g: &Global, input: &Path, lambda: f64, r: f64) -> Result<bool> {
    let dir = required_out(g)?;
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let good = dir.join("good.hsf");
    let manifest = match load(input)? {
        Decoded::HalfSpace(f) => {
            let split = cz_halfspace(&f, lambda, r)?;
            let checks = split.checks(&f)?;
            let grid = f.grid();
            let unit = grid.cell_volume() * grid.level_weight();
            save(&good, Decoded::HalfSpace(split.good.clone()))?;
            let mut cubes = Vec::with_capacity(split.bad.len());
            for (i, piece) in split.bad.iter().enumerate() {
                let file = dir.join(format!("bad_{i:04}.hsf"));
                save(&file, Decoded::HalfSpace(piece.to_halfspace(grid)))?;
                cubes.push(CubeEntry {
                    cube: piece.cube,
                    side: piece.cube.side(grid),
                    center: piece.cube.center(grid),
                    mean: split.scalar.means[i],
                    mass: Some(piece.values.iter().map(|v| v.abs()).sum::<f64>() * unit),
                    file: Some(file),
                });
            }
            let verified = Verified::new(&checks.scalar, checks.slice_mean_defect <= CANCELLATION_TOLERANCE);
            CzManifest {
                input: input.to_path_buf(),
                kind: "halfspace",
                lambda,
                r: Some(r),
                good,
                bad: None,
                cubes,
                scalar: checks.scalar.clone(),
                split: Some(checks),
                verified,
            }
        }
        Decoded::Line(f) => {
            let split = cz_scalar(&f, lambda)?;
            let grid = f.grid();
            let bad = dir.join("bad.hsf");
            save(&good, Decoded::Line(split.good.clone()))?;
            save(&bad, Decoded::Line(split.bad.clone()))?;
            let cubes = split
                .cubes
                .iter()
                .zip(&split.means)
                .map(|(c, &mean)| CubeEntry { cube: *c, side: c.side(grid), center: c.center(grid), mean, mass: None, file: None })
                .collect();
            let checks = split.checks();
            CzManifest {
                input: input.to_path_buf(),
                kind: "line",
                lambda,
                r: None,
                good,
                bad: Some(bad),
                cubes,
                verified: Verified::new(&checks, true),
                scalar: checks,
                split: None,
            }
        }
        _ => bail!("the decomposition needs a real input"),
    };
    emit(&manifest, g.format, Some(&dir.join("manifest.json")))?;
    Ok(manifest.verified.all)
}

#[derive(Serialize)]
struct WeightRecord {
    weight: String,
    characteristic_kind: String,
    characteristic: f64,
    family: String,
    family_size: usize,
    stability: StabilitySeries,
}

fn parse_weight(spec: &str, grid: &Grid, seed: u64) -> Result<Weight> {
    let (kind, arg) = spec.split_once(':').ok_or_else(|| anyhow!("weight must look like `power:a`, `random:amplitude` or `file:path`"))?;
    let number = || arg.trim().parse::<f64>().with_context(|| format!("bad number in weight `{spec}`"));
    Ok(match kind {
        "power" => Weight::power(number()?, grid)?,
        "random" => Weight::random_log_bounded(grid, seed, number()?),
        "file" => {
            let f = real_line(load(Path::new(arg))?)?;
            grid.same_as(f.grid()).context("weight file lives on a different grid than --grid")?;
            Weight::new(f)?
        }
        other => bail!("unknown weight kind `{other}`"),
    })
}

fn weights(g: &Global, spec: &str, p: f64, rh: Option<f64>, family: &str) -> Result<bool> {
    if family != "dyadic" {
        bail!("unknown ball family `{family}`; only `dyadic` is available");
    }
    let grid = Grid::new(grid_spec(g))?;
    let w = parse_weight(spec, &grid, g.seed.unwrap_or(0))?;
    let eval = |fam: &BallFamily| -> tentlab::Result<f64> {
        match rh {
            Some(s) => rh_characteristic(&w, s, fam),
            None => ap_characteristic(&w, p, fam),
        }
    };
    let full = BallFamily::dyadic(&grid, None)?;
    let characteristic = eval(&full)?;
    let x = grid.half_width();
    let radii: Vec<f64> = [x / 8.0, x / 4.0, x / 2.0].into_iter().filter(|&r| r >= grid.h()).collect();
    let stability = stability_series(&grid, &radii, eval)?;
    let record = WeightRecord {
        weight: spec.to_string(),
        characteristic_kind: match rh {
            Some(s) => format!("RH_{s}"),
            None => format!("A_{p}"),
        },
        characteristic,
        family: family.to_string(),
        family_size: full.len(),
        stability,
    };
    emit(&record, g.format, g.out.as_deref())?;
    Ok(characteristic.is_finite())
}

#[derive(Serialize)]
struct SliceRecord {
    input: PathBuf,
    p: f64,
    r: f64,
    t: f64,
    weak: bool,
    norm: f64,
}

fn slice(g: &Global, action: &SliceAction) -> Result<bool> {
    match action {
        SliceAction::Norm { input, p, r, t, weak } => {
            let f = real_line(load(input)?)?;
            let norm = slice_norm(&f, *p, *r, *t, *weak)?;
            let record = SliceRecord { input: input.clone(), p: *p, r: *r, t: *t, weak: *weak, norm };
            emit(&record, g.format, g.out.as_deref())?;
        }
        SliceAction::Inject { input, level } => {
            let f = real_line(load(input)?)?;
            save(required_out(g)?, Decoded::HalfSpace(inject(&f, *level)?))?;
        }
        SliceAction::Project { input, level } => {
            let f = real_halfspace(load(input)?)?;
            save(required_out(g)?, Decoded::Line(project(&f, *level)?))?;
        }
    }
    Ok(true)
}

fn experiment(g: &Global, path: &Path) -> Result<bool> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut config: ExperimentConfig =
        serde_json::from_reader(BufReader::new(file)).with_context(|| format!("invalid experiment config {}", path.display()))?;
    if let Some(spec) = g.grid {
        config.grid = spec;
    }
    if let Some(seed) = g.seed {
        config.corpus.seed = seed;
    }
    config.validate()?;
    let report = run_inequality_experiment(&config)?;
    for m in &report.measurements {
        info!(
            "{}: max ratio {:.6}, drift {:.4}, {}",
            m.label,
            m.max_ratio,
            m.drift,
            if m.passed() { "ok" } else { "violated" }
        );
    }
    match g.out.as_deref() {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?);
            write_report(&report, g.format, &mut w)?;
            w.flush()?;
        }
        None => write_report(&report, g.format, io::stdout().lock())?,
    }
    Ok(report.passed)
}
