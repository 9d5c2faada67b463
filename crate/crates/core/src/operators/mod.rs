//! Operators on `ℝⁿ` and their lift to the upper half-space.

mod conv;
mod heat;
mod lift;
mod maximal;
mod registry;
mod riesz;
mod singular;
mod spectral;

pub use heat::{heat, heat_weights, heat_window, HEAT_TAIL};
pub use lift::{lift, lift_fixed};
pub use maximal::{maximal, maximal_fractional, MaximalMode};
pub use registry::Operator;
pub use riesz::{gamma_alpha, riesz_potential, unit_ball_volume, RieszMethod};
pub use singular::{
    default_stride, kernel_standard_constants, maximal_truncation, singular_integral, CzKernel, KernelConstants,
    SingularMethod,
};
pub use spectral::{angular_frequency, spectral_multiplier, spectral_multiplier_real, MultiplierSymbol};
