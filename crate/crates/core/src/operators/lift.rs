//! The lift `(T ⊗ I) F (x, t) = T_t(F(·, t))(x)`.

use rayon::prelude::*;

use crate::error::{Result, TentError};
use crate::grid::{HalfSpaceFunction, LineFunction, Scalar};

/// Applies `op(k, t_k, F(·, t_k))` to every level. Zero slices map to zero without calling `op`.
pub fn lift<T, U, Op>(op: Op, f: &HalfSpaceFunction<T>) -> Result<HalfSpaceFunction<U>>
where
    T: Scalar,
    U: Scalar,
    Op: Fn(usize, f64, &LineFunction<T>) -> Result<LineFunction<U>> + Sync,
{
    let grid = f.grid();
    let slices: Vec<LineFunction<U>> = (0..grid.levels())
        .into_par_iter()
        .map(|k| {
            if f.slice(k).iter().all(|v| v.is_zero()) {
                return Ok(LineFunction::zeros(grid));
            }
            let out = op(k, grid.t(k), &f.level(k)).map_err(|e| TentError::AtLevel { level: k, source: Box::new(e) })?;
            grid.same_as(out.grid())?;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    HalfSpaceFunction::from_slices(grid, slices)
}

/// Lift of a single operator that ignores the level.
pub fn lift_fixed<T, U, Op>(op: Op, f: &HalfSpaceFunction<T>) -> Result<HalfSpaceFunction<U>>
where
    T: Scalar,
    U: Scalar,
    Op: Fn(&LineFunction<T>) -> Result<LineFunction<U>> + Sync,
{
    lift(|_, _, g| op(g), f)
}
