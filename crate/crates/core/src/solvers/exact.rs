use log::debug;

use super::lp::{lp_solve, LinearProgram, Sense};
use super::{Reduced, SolverOutcome};
use crate::curvature::Curvature;
use crate::error::{CmwError, Result};
use crate::game::{dot, BoxConstraint};

/// Largest option count handled by the corner LP (`2^16` corner columns).
pub const MAX_EXACT_DIM: usize = 16;

/// Per-corner data of the second-order term `l^T Q (l - q) = b - g^T q`.
#[derive(Debug, Clone)]
pub struct CornerTable {
    /// `l^T Q l` per corner.
    pub value: Vec<f64>,
    /// `Q l` per corner.
    pub slope: Vec<Vec<f64>>,
}

pub fn corner_table(u: &[f64], bx: &BoxConstraint) -> Result<CornerTable> {
    let k = bx.dim();
    if k > MAX_EXACT_DIM {
        return Err(CmwError::UseApproximateSolver { m: k, max: MAX_EXACT_DIM });
    }
    let q = Curvature::new(u.to_vec())?;
    let n = 1usize << k;
    let mut value = Vec::with_capacity(n);
    let mut slope = Vec::with_capacity(n);
    for c in 0..n {
        let l = bx.corner(c);
        let g = q.apply(&l);
        value.push(l.iter().zip(&g).map(|(a, b)| a * b).sum());
        slope.push(g);
    }
    Ok(CornerTable { value, slope })
}

/// Exact minimax over the box corners.
///
/// With `y = u - p` the admissible directions are exactly the distributions
/// `p`, and `l^T Q q = (2/eps) l^T (u - p)`. The environment's side is then
///
/// `max_{pi, s}  sum_c pi_c (b_c - (2/eps) u^T l_c) + (2/eps) s`
/// `s.t.  s <= sum_c pi_c l_c[i]  for all i,  sum_c pi_c = 1,  pi >= 0`,
///
/// whose row duals are `(2/eps) p`. Its constraint entries are raw losses,
/// so it stays well scaled however skewed `u` is.
pub fn solve_exact(u: &[f64], eps: f64, bx: &BoxConstraint) -> Result<SolverOutcome> {
    let m = bx.dim();
    if m > MAX_EXACT_DIM {
        return Err(CmwError::UseApproximateSolver { m, max: MAX_EXACT_DIM });
    }
    let red = Reduced::new(u, eps, bx)?;
    let k = red.u.len();
    let table = corner_table(&red.u, &red.bx)?;
    let corners = table.value.len();
    let h = 2.0 / eps;

    // columns: pi_0..pi_{2^k - 1}, s' = s - s_lo >= 0; with sum(pi) = 1 the
    // rows read s' <= sum_c pi_c (l_c[i] - s_lo), and the optimal s is at
    // least the smallest lower bound
    let s_lo = red.bx.lower().iter().copied().fold(f64::INFINITY, f64::min);
    let mut objective = Vec::with_capacity(corners + 1);
    for (c, b) in table.value.iter().enumerate() {
        let l = red.bx.corner(c);
        objective.push(-(b - h * dot(&red.u, &l)));
    }
    objective.push(-h);
    let mut lp = LinearProgram::minimize(objective);
    let mut mass = vec![1.0; corners + 1];
    mass[corners] = 0.0;
    lp.add_constraint(mass, Sense::Eq, 1.0)?;
    for i in 0..k {
        let (lo, hi) = (red.bx.lower()[i] - s_lo, red.bx.upper()[i] - s_lo);
        let mut coeffs: Vec<f64> = (0..corners)
            .map(|c| if c >> i & 1 == 1 { -hi } else { -lo })
            .collect();
        coeffs.push(1.0);
        lp.add_constraint(coeffs, Sense::Le, 0.0)?;
    }

    let sol = lp_solve(&lp)?;
    let value = -sol.objective + h * s_lo;
    // p_i = -(eps/2) dual_i; q_i - u^T q = (2/eps)(1 - p_i / u_i)
    let q: Vec<f64> = (0..k)
        .map(|i| {
            let p = (-0.5 * eps * sol.duals[1 + i]).max(0.0);
            h * (1.0 - p / red.u[i])
        })
        .collect();

    let total: f64 = sol.primal[..corners].iter().map(|p| p.max(0.0)).sum();
    if (total - 1.0).abs() > 1e-12 {
        debug!("renormalizing corner strategy by factor {total}");
    }
    let duals: Vec<(usize, f64)> = sol.primal[..corners]
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(c, &p)| (red.full_corner_index(c), p / total))
        .collect();

    Ok(SolverOutcome {
        q: red.expand(q),
        value,
        duals: Some(duals),
        weights: red.full_weights(),
        active: red.active,
    })
}
