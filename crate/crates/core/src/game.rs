//! Shared game primitives: loss vectors, per-round box constraints, mixed
//! strategies over the options and regret bookkeeping.
//!
//! Options are indexed from 0 throughout the crate.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CmwError, Result};

/// Entries in `[-CLAMP_THRESHOLD, 0)` are treated as round-off and clamped.
pub const CLAMP_THRESHOLD: f64 = 1e-12;
/// Allowed deviation of a distribution's total mass from one.
pub const SUM_TOLERANCE: f64 = 1e-9;
/// Largest option count for which all box corners are enumerated.
pub const MAX_CORNER_DIM: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossVector(Vec<f64>);

impl LossVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(CmwError::InvalidArgument("empty loss vector".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CmwError::InvalidArgument(format!(
                "loss entry {i} is not finite"
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for LossVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Per-round constraint `[lower_0, upper_0] x ... x [lower_{m-1}, upper_{m-1}]`
/// on the loss vector, known to both players before the agent commits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxConstraint {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxConstraint {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(CmwError::InvalidArgument(format!(
                "box bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.is_empty() {
            return Err(CmwError::InvalidArgument("empty box".into()));
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(CmwError::InvalidArgument(format!(
                    "box interval {i} is not finite"
                )));
            }
            if lo > hi {
                return Err(CmwError::InvalidArgument(format!(
                    "box interval {i} has lower {lo} > upper {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The box `[lo, hi]^m`.
    pub fn uniform(m: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; m], vec![hi; m])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// `max_i upper[i] - min_j lower[j]`.
    pub fn range(&self) -> f64 {
        let hi = self.upper.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.lower.iter().copied().fold(f64::INFINITY, f64::min);
        (hi - lo).max(0.0)
    }

    /// Checks `loss` against the box, allowing `tol` slack on each side.
    pub fn check_contains(&self, loss: &[f64], tol: f64) -> Result<()> {
        if loss.len() != self.dim() {
            return Err(CmwError::InvalidArgument(format!(
                "loss has {} entries, box has {}",
                loss.len(),
                self.dim()
            )));
        }
        for (i, &l) in loss.iter().enumerate() {
            if !(l >= self.lower[i] - tol && l <= self.upper[i] + tol) {
                return Err(CmwError::ConstraintViolated {
                    index: i,
                    loss: l,
                    lower: self.lower[i],
                    upper: self.upper[i],
                });
            }
        }
        Ok(())
    }

    /// The corner with bit `i` of `index` selecting `upper[i]`.
    pub fn corner(&self, index: usize) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                if (index >> i) & 1 == 1 {
                    self.upper[i]
                } else {
                    self.lower[i]
                }
            })
            .collect()
    }

    /// Restriction of the box to the given coordinates, in that order.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        Self {
            lower: indices.iter().map(|&i| self.lower[i]).collect(),
            upper: indices.iter().map(|&i| self.upper[i]).collect(),
        }
    }
}

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    /// Clamps round-off negatives to zero and renormalizes. Entries below
    /// `-CLAMP_THRESHOLD` or a total mass off by more than `SUM_TOLERANCE`
    /// are rejected.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(CmwError::InvalidArgument("empty distribution".into()));
        }
        for (i, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() {
                return Err(CmwError::InvalidArgument(format!(
                    "probability {i} is not finite"
                )));
            }
            if *p < -CLAMP_THRESHOLD {
                return Err(CmwError::NegativeProbability { index: i, value: *p });
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(CmwError::NotNormalized { sum });
        }
        for p in probs.iter_mut() {
            *p /= sum;
        }
        Ok(Self(probs))
    }

    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0 / m as f64; m])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `p^T l`.
    pub fn expected(&self, loss: &[f64]) -> f64 {
        dot(&self.0, loss)
    }
}

/// Per-step record of the agent's costs and the per-option cumulative losses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GameHistory {
    pub expected_losses: Vec<f64>,
    pub realized_losses: Vec<f64>,
    pub cumulative_per_option: Vec<f64>,
}

impl GameHistory {
    pub fn new(m: usize) -> Self {
        Self {
            expected_losses: Vec::new(),
            realized_losses: Vec::new(),
            cumulative_per_option: vec![0.0; m],
        }
    }

    pub fn record(&mut self, dist: &Distribution, action: usize, loss: &[f64]) {
        debug_assert_eq!(loss.len(), self.cumulative_per_option.len());
        self.expected_losses.push(dist.expected(loss));
        self.realized_losses.push(loss[action]);
        for (c, l) in self.cumulative_per_option.iter_mut().zip(loss) {
            *c += l;
        }
    }

    pub fn steps(&self) -> usize {
        self.expected_losses.len()
    }

    pub fn expected_cost(&self) -> f64 {
        self.expected_losses.iter().sum()
    }

    pub fn realized_cost(&self) -> f64 {
        self.realized_losses.iter().sum()
    }
}

/// The constant `L`: the largest spread `upper_t[i] - lower_t[j]` seen over a
/// sequence of boxes.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LossRange(f64);

impl LossRange {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(CmwError::InvalidArgument(format!(
                "loss range must be finite and nonnegative, got {value}"
            )));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn loss_range(constraints: &[BoxConstraint]) -> Result<LossRange> {
    if constraints.is_empty() {
        return Err(CmwError::NoConstraints);
    }
    let value = constraints
        .iter()
        .map(BoxConstraint::range)
        .fold(0.0, f64::max);
    LossRange::new(value)
}

/// Expected cumulative loss minus the cumulative loss of the best option in
/// hindsight. May be negative.
pub fn regret(history: &GameHistory) -> Result<f64> {
    if history.cumulative_per_option.is_empty() {
        return Err(CmwError::InvalidArgument("history has no options".into()));
    }
    let (_, best) = best_in_hindsight(&history.cumulative_per_option);
    Ok(history.expected_cost() - best)
}

/// Index and value of the smallest cumulative loss; ties go to the lowest index.
pub fn best_in_hindsight(cumulative: &[f64]) -> (usize, f64) {
    let mut best = (0, cumulative[0]);
    for (i, &c) in cumulative.iter().enumerate().skip(1) {
        if c < best.1 {
            best = (i, c);
        }
    }
    best
}

/// Draws an option index from `dist` by inverting the CDF at one uniform draw.
pub fn sample<R: Rng + ?Sized>(dist: &Distribution, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let probs = dist.probs();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // round-off left u >= total mass; fall back to the last supported option
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// All `2^m` corners of the box in binary counting order (bit `i` selects
/// `upper[i]`). Degenerate intervals are not deduplicated.
pub fn corners(bx: &BoxConstraint) -> Result<Vec<LossVector>> {
    let m = bx.dim();
    if m > MAX_CORNER_DIM {
        return Err(CmwError::CornerEnumerationTooLarge {
            m,
            max: MAX_CORNER_DIM,
        });
    }
    Ok((0..1usize << m).map(|k| LossVector(bx.corner(k))).collect())
}

/// `exp(-eps * cumulative[i])` divided by its largest entry, together with the
/// sum of the scaled weights.
pub fn shifted_exp_weights(cumulative: &[f64], eps: f64) -> (Vec<f64>, f64) {
    let min = cumulative.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = cumulative
        .iter()
        .map(|&c| (-eps * (c - min)).exp())
        .collect();
    let phi = w.iter().sum();
    (w, phi)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
