use super::{Reduced, SolverOutcome};
use crate::error::{CmwError, Result};
use crate::game::BoxConstraint;

/// Closed-form minimax for two options.
///
/// With `a = upper_1 - lower_2` and `b = lower_1 - upper_2` the worst case is
/// `u_1 u_2 max(a^2 - a d, b^2 - b d)` in `d = q_1 - q_2`, minimized at the
/// midpoint difference `q_1 = ((upper_1 + lower_1) - (upper_2 + lower_2)) / 2`
/// clipped to `[-1 / (eps u_1), 1 / (eps u_2)]`.
pub fn solve_m2(u: &[f64], eps: f64, bx: &BoxConstraint) -> Result<SolverOutcome> {
    if bx.dim() != 2 {
        return Err(CmwError::ClosedFormRequiresTwo(bx.dim()));
    }
    let red = Reduced::new(u, eps, bx)?;
    if red.active.len() == 1 {
        return Ok(SolverOutcome {
            q: vec![0.0; 2],
            value: 0.0,
            duals: None,
            weights: red.full_weights(),
            active: red.active,
        });
    }
    let (lo, hi) = (bx.lower(), bx.upper());
    let (u1, u2) = (red.u[0], red.u[1]);
    let a = hi[0] - lo[1];
    let b = lo[0] - hi[1];
    let mu = 0.5 * ((hi[0] + lo[0]) - (hi[1] + lo[1]));
    let q1 = mu.clamp(-1.0 / (eps * u1), 1.0 / (eps * u2));
    let d = 2.0 * q1;
    let value = u1 * u2 * (a * a - a * d).max(b * b - b * d);
    Ok(SolverOutcome {
        q: vec![q1, -q1],
        value,
        duals: None,
        weights: red.full_weights(),
        active: red.active,
    })
}
