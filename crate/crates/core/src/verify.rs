//! Self-check suites run by `cmw verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{verify_equilibrium, worst_case_strategy};
use crate::curvature::Curvature;
use crate::error::Result;
use crate::experiments::bound_battery;
use crate::game::BoxConstraint;
use crate::solvers::{approx_bound, solve_approx, solve_exact, solve_m2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl SuiteReport {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

pub fn random_weights<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.02..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

pub fn random_unit_box<R: Rng + ?Sized>(rng: &mut R, m: usize) -> BoxConstraint {
    let (lo, hi): (Vec<f64>, Vec<f64>) = (0..m)
        .map(|_| {
            let a: f64 = rng.gen();
            let b: f64 = rng.gen();
            (a.min(b), a.max(b))
        })
        .unzip();
    BoxConstraint::new(lo, hi).expect("ordered draws")
}

/// Smallest eigenvalue of `diag(u) - u u^T` over `samples` random weight
/// vectors, some of them nearly degenerate.
pub fn psd_suite(samples: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let m = rng.gen_range(2..=12);
        let w: Vec<f64> = (0..m).map(|_| rng.gen::<f64>().powi(4)).collect();
        worst = worst.min(Curvature::from_weights(&w)?.min_eigenvalue());
    }
    Ok(SuiteReport::new(
        "psd",
        worst >= -1e-10,
        format!("{samples} weight vectors, smallest eigenvalue {worst:e}"),
    ))
}

/// Cross-checks the inner solvers against each other.
pub fn solver_suite(instances: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut closed_gap, mut approx_q_gap, mut bound_excess) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for n in 0..instances {
        let m = 2 + n % 4;
        let u = random_weights(&mut rng, m);
        let b = random_unit_box(&mut rng, m);
        let eps = rng.gen_range(0.05..2.0);
        let exact = solve_exact(&u, eps, &b)?;
        if m == 2 {
            let c = solve_m2(&u, eps, &b)?;
            let a = solve_approx(&u, eps, &b)?;
            closed_gap = closed_gap.max((exact.value - c.value).abs());
            for i in 0..2 {
                approx_q_gap = approx_q_gap.max((a.q[i] - c.q[i]).abs());
            }
        } else {
            // the pairwise bound dominates the exact value
            bound_excess = bound_excess.max(exact.value - approx_bound(&exact.weights, &b));
        }
    }
    let passed = closed_gap <= 1e-9 && approx_q_gap <= 1e-6 && bound_excess <= 1e-9;
    Ok(SuiteReport::new(
        "solvers",
        passed,
        format!(
            "{instances} instances; exact vs closed form {closed_gap:e}, approx vs closed form q {approx_q_gap:e}, \
             exact minus pairwise bound at most {bound_excess:e}"
        ),
    ))
}

/// Largest equilibrium gap of the worst-case strategy on random instances.
pub fn equilibrium_suite(instances: usize, m: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let u = random_weights(&mut rng, m);
        let b = random_unit_box(&mut rng, m);
        let eps = rng.gen_range(0.05..2.0);
        let (s, _) = worst_case_strategy(&u, eps, &b)?;
        worst = worst.max(verify_equilibrium(&s, &u, eps, &b)?.abs());
    }
    Ok(SuiteReport::new(
        "equilibrium",
        worst <= 1e-6,
        format!("{instances} instances with m = {m}, max gap {worst:e}"),
    ))
}

/// Both regret bounds and the step-size inequalities over a game battery.
pub fn bounds_suite(games: usize, seed: u64, jobs: usize) -> Result<SuiteReport> {
    let r = bound_battery(games, seed, jobs)?;
    Ok(SuiteReport::new(
        "bounds",
        r.passed(),
        format!(
            "{games} games; violations hedge {} constrained {} step-size {} range {}; \
             max regret/bound hedge {:.4} constrained {:.4}",
            r.hedge_violations,
            r.cmw_violations,
            r.claim_violations,
            r.range_violations,
            r.max_hedge_ratio,
            r.max_cmw_ratio
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass() {
        assert!(psd_suite(200, 1).unwrap().passed);
        assert!(solver_suite(80, 3).unwrap().passed);
        assert!(equilibrium_suite(30, 4, 2).unwrap().passed);
        assert!(bounds_suite(12, 5, 2).unwrap().passed);
    }
}
