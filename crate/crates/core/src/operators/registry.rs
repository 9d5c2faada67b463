//! Named operators, parsed from strings such as `riesz:0.5` or `heat-family`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    heat, lift, maximal, maximal_fractional, maximal_truncation, riesz_potential, singular_integral,
    spectral_multiplier_real, CzKernel, MaximalMode, MultiplierSymbol, RieszMethod, SingularMethod,
};
use crate::error::{Result, TentError};
use crate::grid::{HalfSpaceFunction, LineFunction};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Operator {
    Identity,
    Scale(f64),
    Maximal(MaximalMode),
    FractionalMaximal(f64),
    Hilbert,
    HilbertSpectral,
    HilbertTruncation,
    Riesz(f64),
    RieszSpectral(f64),
    /// Heat semigroup at a fixed time.
    Heat(f64),
    /// `e^{t²Δ}` at level `t`.
    HeatFamily,
    /// `∇(-Δ)^{-1/2}` on the line.
    GradSqrtLap,
}

impl Operator {
    /// Applies the operator to one slice; `t` is the level of that slice.
    pub fn apply(&self, f: &LineFunction, t: f64) -> Result<LineFunction> {
        match *self {
            Operator::Identity => Ok(f.clone()),
            Operator::Scale(c) => Ok(f.scale(c)),
            Operator::Maximal(mode) => maximal(f, mode),
            Operator::FractionalMaximal(a) => maximal_fractional(f, a),
            Operator::Hilbert => singular_integral(f, &CzKernel::hilbert(), SingularMethod::PvDirect),
            Operator::HilbertSpectral => singular_integral(f, &CzKernel::hilbert(), SingularMethod::Spectral),
            Operator::HilbertTruncation => maximal_truncation(f, &CzKernel::hilbert()),
            Operator::Riesz(a) => riesz_potential(f, a, RieszMethod::Direct),
            Operator::RieszSpectral(a) => riesz_potential(f, a, RieszMethod::Spectral),
            Operator::Heat(s) => heat(f, s),
            Operator::HeatFamily => heat(f, t * t),
            Operator::GradSqrtLap => spectral_multiplier_real(f, &MultiplierSymbol::grad_sqrt_lap()),
        }
    }

    /// Slice-by-slice application to a half-space function.
    pub fn lift(&self, f: &HalfSpaceFunction) -> Result<HalfSpaceFunction> {
        lift(|_, t, g| self.apply(g, t), f)
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self, Operator::Maximal(_) | Operator::FractionalMaximal(_) | Operator::HilbertTruncation)
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operator::Identity => write!(f, "identity"),
            Operator::Scale(c) => write!(f, "scale:{c}"),
            Operator::Maximal(MaximalMode::Centered) => write!(f, "maximal"),
            Operator::Maximal(MaximalMode::Uncentered) => write!(f, "maximal-uncentered"),
            Operator::FractionalMaximal(a) => write!(f, "fractional-maximal:{a}"),
            Operator::Hilbert => write!(f, "hilbert"),
            Operator::HilbertSpectral => write!(f, "hilbert-spectral"),
            Operator::HilbertTruncation => write!(f, "hilbert-truncation"),
            Operator::Riesz(a) => write!(f, "riesz:{a}"),
            Operator::RieszSpectral(a) => write!(f, "riesz-spectral:{a}"),
            Operator::Heat(s) => write!(f, "heat:{s}"),
            Operator::HeatFamily => write!(f, "heat-family"),
            Operator::GradSqrtLap => write!(f, "gradsqrtlap"),
        }
    }
}

impl FromStr for Operator {
    type Err = TentError;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || TentError::UnknownOperator(s.to_string());
        let (name, arg) = match s.trim().split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s.trim(), None),
        };
        let num = || -> Result<f64> { arg.ok_or_else(unknown)?.trim().parse::<f64>().map_err(|_| unknown()) };
        let bare = |op: Operator| if arg.is_none() { Ok(op) } else { Err(unknown()) };
        match name {
            "identity" => bare(Operator::Identity),
            "scale" => Ok(Operator::Scale(num()?)),
            "maximal" => bare(Operator::Maximal(MaximalMode::Centered)),
            "maximal-uncentered" => bare(Operator::Maximal(MaximalMode::Uncentered)),
            "fractional-maximal" => Ok(Operator::FractionalMaximal(num()?)),
            "hilbert" => bare(Operator::Hilbert),
            "hilbert-spectral" => bare(Operator::HilbertSpectral),
            "hilbert-truncation" => bare(Operator::HilbertTruncation),
            "riesz" => Ok(Operator::Riesz(num()?)),
            "riesz-spectral" => Ok(Operator::RieszSpectral(num()?)),
            "heat" => Ok(Operator::Heat(num()?)),
            "heat-family" => bare(Operator::HeatFamily),
            "gradsqrtlap" => bare(Operator::GradSqrtLap),
            _ => Err(unknown()),
        }
    }
}

impl TryFrom<String> for Operator {
    type Error = TentError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Operator> for String {
    fn from(op: Operator) -> String {
        op.to_string()
    }
}
