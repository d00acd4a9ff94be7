//! The environment's worst-case randomized play over box corners.
//!
//! By minimax duality the corner distribution that solves the environment's
//! side of the exact LP guarantees an expected second-order term of at least
//! `r*` against every admissible direction `q`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curvature::Curvature;
use crate::error::{CmwError, Result};
use crate::game::{BoxConstraint, LossVector};
use crate::solvers::{solve_exact, Reduced};

const PROB_TOL: f64 = 1e-7;

/// Probability mass on corners, indexed as in [`BoxConstraint::corner`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerStrategy {
    corner_probs: Vec<(usize, f64)>,
}

impl CornerStrategy {
    pub fn new(mut corner_probs: Vec<(usize, f64)>) -> Result<Self> {
        if corner_probs.is_empty() {
            return Err(CmwError::InvalidArgument("empty corner strategy".into()));
        }
        if let Some(&(index, value)) = corner_probs.iter().find(|(_, p)| *p < 0.0) {
            return Err(CmwError::NegativeProbability { index, value });
        }
        let sum: f64 = corner_probs.iter().map(|(_, p)| p).sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(CmwError::NotNormalized { sum });
        }
        corner_probs.sort_by_key(|c| c.0);
        Ok(Self { corner_probs })
    }

    pub fn point_mass(corner: usize) -> Self {
        Self {
            corner_probs: vec![(corner, 1.0)],
        }
    }

    pub fn corner_probs(&self) -> &[(usize, f64)] {
        &self.corner_probs
    }

    pub fn prob(&self, corner: usize) -> f64 {
        self.corner_probs
            .iter()
            .find(|c| c.0 == corner)
            .map_or(0.0, |c| c.1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let x: f64 = rng.gen();
        let mut acc = 0.0;
        for &(c, p) in &self.corner_probs {
            acc += p;
            if x < acc {
                return c;
            }
        }
        self.corner_probs.last().unwrap().0
    }
}

/// Worst-case corner distribution against weights `u` and step `eps`, with
/// the value `r*` of the round.
pub fn worst_case_strategy(u: &[f64], eps: f64, bx: &BoxConstraint) -> Result<(CornerStrategy, f64)> {
    let out = solve_exact(u, eps, bx)?;
    let duals = out
        .duals
        .ok_or_else(|| CmwError::InvariantViolated("exact solver returned no duals".into()))?;
    Ok((CornerStrategy::new(duals)?, out.value))
}

/// `r* - min_q E[l^T Q (l - q)]` under `strategy`; at most round-off when
/// the strategy is an equilibrium, positive when `q` can exploit it.
pub fn verify_equilibrium(strategy: &CornerStrategy, u: &[f64], eps: f64, bx: &BoxConstraint) -> Result<f64> {
    let r_star = solve_exact(u, eps, bx)?.value;
    Ok(r_star - best_response_value(strategy, &Reduced::new(u, eps, bx)?)?)
}

/// Expected corner losses and `E[l^T Q l]` on the reduced game.
fn strategy_moments(strategy: &CornerStrategy, red: &Reduced) -> Result<(Vec<f64>, f64)> {
    let curv = Curvature::new(red.u.clone())?;
    let mut mean = vec![0.0; red.u.len()];
    let mut second = 0.0;
    for &(c, p) in strategy.corner_probs() {
        let full = red.bx_full_corner(c);
        second += p * curv.quad(&full, &full);
        for (m, l) in mean.iter_mut().zip(&full) {
            *m += p * l;
        }
    }
    Ok((mean, second))
}

/// `min_q E[l^T Q (l - q)]`. Since `l^T Q q = (2/eps) l^T (u - p)` with `p`
/// ranging over all distributions, the minimum puts all of `p` on the
/// option with the smallest expected loss.
fn best_response_value(strategy: &CornerStrategy, red: &Reduced) -> Result<f64> {
    let (mean, second) = strategy_moments(strategy, red)?;
    let min = mean.iter().copied().fold(f64::INFINITY, f64::min);
    let ul: f64 = red.u.iter().zip(&mean).map(|(a, b)| a * b).sum();
    Ok(second - 2.0 / red.eps * (ul - min))
}

/// Samples a corner from the worst-case strategy against the agent's
/// current weights. Recomputed every call since the weights move.
pub fn adversarial_environment<R: Rng + ?Sized>(
    u: &[f64],
    eps: f64,
    bx: &BoxConstraint,
    rng: &mut R,
) -> Result<LossVector> {
    let (strategy, _) = worst_case_strategy(u, eps, bx)?;
    LossVector::new(bx.corner(strategy.sample(rng)))
}
