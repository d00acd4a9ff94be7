use super::qp::qp_project;
use super::{Reduced, SolverOutcome};
use crate::error::Result;
use crate::game::BoxConstraint;

/// Pairwise upper bound `sum_{i != j} (u_i u_j / 2)(upper_i - lower_j)(upper_j - lower_i)`
/// on the worst case at the projected midpoint direction.
pub fn approx_bound(u: &[f64], bx: &BoxConstraint) -> f64 {
    let (lo, hi) = (bx.lower(), bx.upper());
    let mut acc = 0.0;
    for i in 0..u.len() {
        for j in 0..u.len() {
            if i != j {
                acc += 0.5 * u[i] * u[j] * (hi[i] - lo[j]) * (hi[j] - lo[i]);
            }
        }
    }
    acc
}

/// Projects the midpoint offsets
/// `mu_i = upper_i + lower_i - mean_j(upper_j + lower_j)` onto the direction set.
pub fn solve_approx(u: &[f64], eps: f64, bx: &BoxConstraint) -> Result<SolverOutcome> {
    let red = Reduced::new(u, eps, bx)?;
    let (lo, hi) = (red.bx.lower(), red.bx.upper());
    let k = red.u.len();
    let mean = (0..k).map(|i| hi[i] + lo[i]).sum::<f64>() / k as f64;
    let mu: Vec<f64> = (0..k).map(|i| hi[i] + lo[i] - mean).collect();
    let proj = qp_project(&mu, &red.feasible_set())?;
    Ok(SolverOutcome {
        value: approx_bound(&red.u, &red.bx),
        q: red.expand(proj.q),
        duals: None,
        weights: red.full_weights(),
        active: red.active,
    })
}
