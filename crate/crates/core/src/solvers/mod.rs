//! Per-round computation of the correction direction `q`.
//!
//! Every solver first removes dominated options (an interval lying entirely
//! above another) and options whose weight is zero, solves on the remaining
//! coordinates, and reports `q = 0` on the removed ones.

mod approx;
mod closed_form;
mod exact;
pub mod lp;
pub mod qp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curvature::FeasibleSet;
use crate::error::{CmwError, Result};
use crate::game::BoxConstraint;

pub use approx::{approx_bound, solve_approx};
pub use closed_form::solve_m2;
pub use exact::{corner_table, solve_exact, CornerTable, MAX_EXACT_DIM};
pub use lp::{lp_solve, Constraint, LinearProgram, LpSolution, Sense, VarBound};
pub use qp::{qp_project, Projection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Linear program over all box corners.
    ExactLp,
    /// Two options only: clipped midpoint difference.
    ClosedFormM2,
    /// Projection of the midpoint offsets onto the direction set.
    Approximate,
    /// Always `q = 0`: plain multiplicative weights with the adaptive step.
    Zero,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::ExactLp => "exact",
            SolverKind::ClosedFormM2 => "m2",
            SolverKind::Approximate => "approx",
            SolverKind::Zero => "zero",
        })
    }
}

impl FromStr for SolverKind {
    type Err = CmwError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "exact_lp" => Ok(SolverKind::ExactLp),
            "m2" | "closed_form_m2" => Ok(SolverKind::ClosedFormM2),
            "approx" | "approximate" => Ok(SolverKind::Approximate),
            "zero" => Ok(SolverKind::Zero),
            other => Err(CmwError::InvalidArgument(format!("unknown solver '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOutcome {
    /// Direction over all options; zero on removed options.
    pub q: Vec<f64>,
    /// Worst-case value `r*` for the exact solvers, the pairwise upper bound
    /// for the approximate one.
    pub value: f64,
    /// Corner index (full box, binary counting) to probability; exact LP only.
    pub duals: Option<Vec<(usize, f64)>>,
    /// Effective normalized weights: zero on removed options.
    pub weights: Vec<f64>,
    pub active: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pruning {
    pub active: Vec<usize>,
    pub fixed_zero: Vec<usize>,
}

/// Option `i` is dominated when `lower[i] >= upper[j]` for some `j != i`. The
/// option with the smallest upper bound (lowest index on ties) always stays.
pub fn prune_dominated(bx: &BoxConstraint) -> Pruning {
    let (lo, hi) = (bx.lower(), bx.upper());
    let m = bx.dim();
    let keep = (0..m)
        .min_by(|&a, &b| hi[a].total_cmp(&hi[b]))
        .expect("nonempty box");
    let mut active = Vec::with_capacity(m);
    let mut fixed_zero = Vec::new();
    for i in 0..m {
        let dominated = i != keep && (0..m).any(|j| j != i && lo[i] >= hi[j]);
        if dominated {
            fixed_zero.push(i);
        } else {
            active.push(i);
        }
    }
    debug_assert!(active.contains(&keep));
    Pruning { active, fixed_zero }
}

/// Problem restricted to undominated options with positive weight.
#[derive(Debug, Clone)]
pub(crate) struct Reduced {
    pub dim: usize,
    pub active: Vec<usize>,
    pub u: Vec<f64>,
    pub bx: BoxConstraint,
    pub eps: f64,
}

impl Reduced {
    pub fn new(u: &[f64], eps: f64, bx: &BoxConstraint) -> Result<Self> {
        let m = bx.dim();
        if u.len() != m {
            return Err(CmwError::InvalidArgument(format!(
                "weights have {} entries, box has {m}",
                u.len()
            )));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(CmwError::InvalidArgument(format!(
                "step size must be positive, got {eps}"
            )));
        }
        if u.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(CmwError::InvalidArgument("weights must be nonnegative".into()));
        }
        let active: Vec<usize> = prune_dominated(bx)
            .active
            .into_iter()
            .filter(|&i| u[i] > 0.0)
            .collect();
        let mass: f64 = active.iter().map(|&i| u[i]).sum();
        if active.is_empty() || !(mass > 0.0) {
            return Err(CmwError::InvalidArgument(
                "no undominated option carries positive weight".into(),
            ));
        }
        Ok(Self {
            dim: m,
            u: active.iter().map(|&i| u[i] / mass).collect(),
            bx: bx.restrict(&active),
            active,
            eps,
        })
    }

    pub fn feasible_set(&self) -> FeasibleSet {
        FeasibleSet::new(self.u.clone(), self.eps).expect("eps validated")
    }

    /// Centers `q` on the active coordinates, pulls it into the direction set
    /// and scatters it to full dimension.
    pub fn expand(&self, mut q: Vec<f64>) -> Vec<f64> {
        let mean = q.iter().sum::<f64>() / q.len() as f64;
        for x in q.iter_mut() {
            *x -= mean;
        }
        self.feasible_set().pull_inside(&mut q);
        let mut full = vec![0.0; self.dim];
        for (&i, x) in self.active.iter().zip(q) {
            full[i] = x;
        }
        full
    }

    /// Active coordinates of a full-box corner.
    pub fn bx_full_corner(&self, full: usize) -> Vec<f64> {
        self.active
            .iter()
            .enumerate()
            .map(|(k, &i)| if full >> i & 1 == 1 { self.bx.upper()[k] } else { self.bx.lower()[k] })
            .collect()
    }

    pub fn full_weights(&self) -> Vec<f64> {
        let mut full = vec![0.0; self.dim];
        for (&i, &x) in self.active.iter().zip(&self.u) {
            full[i] = x;
        }
        full
    }

    /// Full-box corner index for a corner of the reduced box. Removed options
    /// sit at their upper bound.
    pub fn full_corner_index(&self, reduced: usize) -> usize {
        let mut idx = 0usize;
        let mut is_active = vec![false; self.dim];
        for (k, &i) in self.active.iter().enumerate() {
            is_active[i] = true;
            if reduced >> k & 1 == 1 {
                idx |= 1 << i;
            }
        }
        for (i, a) in is_active.iter().enumerate() {
            if !a {
                idx |= 1 << i;
            }
        }
        idx
    }
}

/// Dispatches to the solver selected by `kind`.
pub fn solve(kind: SolverKind, u: &[f64], eps: f64, bx: &BoxConstraint) -> Result<SolverOutcome> {
    match kind {
        SolverKind::ExactLp => solve_exact(u, eps, bx),
        SolverKind::ClosedFormM2 => solve_m2(u, eps, bx),
        SolverKind::Approximate => solve_approx(u, eps, bx),
        SolverKind::Zero => Ok(SolverOutcome {
            q: vec![0.0; u.len()],
            value: 0.0,
            duals: None,
            weights: u.to_vec(),
            active: (0..u.len()).collect(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::objective_value;
    use crate::game::corners;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bx(lo: &[f64], hi: &[f64]) -> BoxConstraint {
        BoxConstraint::new(lo.to_vec(), hi.to_vec()).unwrap()
    }

    #[test]
    fn prune_examples() {
        let p = prune_dominated(&bx(&[0.6, 0.1], &[0.9, 0.4]));
        assert_eq!(p.fixed_zero, vec![0]);
        assert_eq!(p.active, vec![1]);

        let p = prune_dominated(&bx(&[0., 0.], &[1., 1.]));
        assert!(p.fixed_zero.is_empty());

        let p = prune_dominated(&bx(&[0.3, 0.0, 0.6], &[0.5, 0.31, 2.0]));
        assert_eq!(p.fixed_zero, vec![2]);
        assert_eq!(p.active, vec![0, 1]);
    }

    #[test]
    fn prune_keeps_one_of_identical_points() {
        let p = prune_dominated(&bx(&[0.5, 0.5, 0.5], &[0.5, 0.5, 0.5]));
        assert_eq!(p.active, vec![0]);
        assert_eq!(p.fixed_zero, vec![1, 2]);
    }

    #[test]
    fn prune_matches_pairwise_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let m = rng.gen_range(2..8);
            let mut lo = Vec::new();
            let mut hi = Vec::new();
            for _ in 0..m {
                let a: f64 = rng.gen();
                let b: f64 = rng.gen();
                lo.push(a.min(b));
                hi.push(a.max(b));
            }
            let b = bx(&lo, &hi);
            let p = prune_dominated(&b);
            assert!(!p.active.is_empty());
            for i in 0..m {
                let dom = (0..m).any(|j| j != i && lo[i] >= hi[j]);
                assert_eq!(p.fixed_zero.contains(&i), dom);
            }
        }
    }

    #[test]
    fn solver_kind_parses() {
        assert_eq!("exact".parse::<SolverKind>().unwrap(), SolverKind::ExactLp);
        assert_eq!("m2".parse::<SolverKind>().unwrap(), SolverKind::ClosedFormM2);
        assert_eq!("approx".parse::<SolverKind>().unwrap(), SolverKind::Approximate);
        assert!("simplex".parse::<SolverKind>().is_err());
    }

    fn random_instance(rng: &mut ChaCha8Rng, m: usize) -> (Vec<f64>, BoxConstraint) {
        let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = w.iter().sum();
        let u = w.into_iter().map(|x| x / s).collect();
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for _ in 0..m {
            let a: f64 = rng.gen();
            let b: f64 = rng.gen();
            lo.push(a.min(b));
            hi.push(a.max(b));
        }
        (u, BoxConstraint::new(lo, hi).unwrap())
    }

    fn max_corner(u: &[f64], bx: &BoxConstraint, q: &[f64]) -> f64 {
        corners(bx)
            .unwrap()
            .iter()
            .map(|c| objective_value(u, c.values(), q))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn exact_value_attained_at_maximizing_corner() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let m = rng.gen_range(2..=6);
            let (u, b) = random_instance(&mut rng, m);
            let eps = rng.gen_range(0.05..3.0);
            let out = solve_exact(&u, eps, &b).unwrap();
            let fs = FeasibleSet::new(out.weights.clone(), eps).unwrap();
            assert!(fs.contains(&out.q));
            let v = max_corner(&out.weights, &b, &out.q);
            assert!((v - out.value).abs() < 1e-7, "{v} vs {}", out.value);
            let duals = out.duals.unwrap();
            let mass: f64 = duals.iter().map(|d| d.1).sum();
            assert!((mass - 1.0).abs() < 1e-7);
            assert!(duals.iter().all(|d| d.1 >= -1e-9));
        }
    }

    #[test]
    fn approx_bound_dominates_realized_corner_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..300 {
            let m = rng.gen_range(2..=7);
            let (u, b) = random_instance(&mut rng, m);
            // small step: eps L <= 0.1
            let eps = 0.1 / b.range().max(1e-3);
            let out = solve_approx(&u, eps, &b).unwrap();
            let v = max_corner(&out.weights, &b, &out.q);
            assert!(v <= out.value + 1e-12, "{v} > {}", out.value);
            let exact = solve_exact(&u, eps, &b).unwrap();
            assert!(exact.value <= v + 1e-7);
        }
    }

    #[test]
    fn interior_points_never_beat_best_corner() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..20 {
            let m = rng.gen_range(2..=5);
            let (u, b) = random_instance(&mut rng, m);
            let q: Vec<f64> = {
                let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let mean = raw.iter().sum::<f64>() / m as f64;
                raw.into_iter().map(|x| x - mean).collect()
            };
            let best = max_corner(&u, &b, &q);
            for _ in 0..10_000 {
                let l: Vec<f64> = (0..m)
                    .map(|i| rng.gen_range(b.lower()[i]..=b.upper()[i]))
                    .collect();
                assert!(objective_value(&u, &l, &q) <= best + 1e-12);
            }
        }
    }

    #[test]
    fn uniform_weights_on_unit_cube() {
        // largest variance of a 0/1 vector under uniform weights
        for m in 2..=8 {
            let u = vec![1.0 / m as f64; m];
            let b = BoxConstraint::uniform(m, 0.0, 1.0).unwrap();
            let out = solve_exact(&u, 0.01, &b).unwrap();
            let want = ((m / 2) * (m - m / 2)) as f64 / (m * m) as f64;
            assert!((out.value - want).abs() < 1e-9, "m={m}: {}", out.value);
            assert!(out.value <= 0.25 + 1e-12);
        }
    }

    #[test]
    fn two_option_solvers_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..300 {
            let (u, b) = random_instance(&mut rng, 2);
            let eps = 0.1 / b.range().max(1e-3);
            let e = solve_exact(&u, eps, &b).unwrap();
            let c = solve_m2(&u, eps, &b).unwrap();
            let a = solve_approx(&u, eps, &b).unwrap();
            assert!((e.value - c.value).abs() < 1e-9);
            for i in 0..2 {
                assert!((e.q[i] - c.q[i]).abs() < 1e-6);
                assert!((a.q[i] - c.q[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn exact_rejects_large_m() {
        let m = MAX_EXACT_DIM + 1;
        let b = BoxConstraint::uniform(m, 0.0, 1.0).unwrap();
        let u = vec![1.0 / m as f64; m];
        assert!(matches!(
            solve_exact(&u, 0.1, &b),
            Err(CmwError::UseApproximateSolver { .. })
        ));
    }
}
