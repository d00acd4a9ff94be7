//! The curvature matrix `Q = diag(u) - u u^T` of normalized weights `u`, and
//! the set of admissible correction directions `q` built on it.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{CmwError, Result};
use crate::game::{dot, SUM_TOLERANCE};

/// Membership slack for the direction set.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// `Q` kept implicitly through `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curvature {
    u: Vec<f64>,
}

impl Curvature {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if u.is_empty() {
            return Err(CmwError::InvalidArgument("empty weight vector".into()));
        }
        if u.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(CmwError::InvalidArgument(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = u.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(CmwError::NotNormalized { sum });
        }
        Ok(Self { u })
    }

    /// Normalizes raw nonnegative weights `w` by `phi = sum(w)`.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        let phi: f64 = w.iter().sum();
        if !(phi > 0.0 && phi.is_finite()) {
            return Err(CmwError::InvalidArgument(format!(
                "weights sum to {phi}"
            )));
        }
        Self::new(w.iter().map(|x| x / phi).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.u
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// `Q x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let ux = dot(&self.u, x);
        self.u
            .iter()
            .zip(x)
            .map(|(ui, xi)| ui * (xi - ux))
            .collect()
    }

    /// `x^T Q y`.
    pub fn quad(&self, x: &[f64], y: &[f64]) -> f64 {
        let uxy: f64 = self
            .u
            .iter()
            .zip(x.iter().zip(y))
            .map(|(u, (a, b))| u * a * b)
            .sum();
        uxy - dot(&self.u, x) * dot(&self.u, y)
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::from_fn(m, m, |i, j| {
            let d = if i == j { self.u[i] } else { 0.0 };
            d - self.u[i] * self.u[j]
        })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.to_matrix())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Second-order term `l^T Q (l - q)`.
pub fn objective_value(u: &[f64], l: &[f64], q: &[f64]) -> f64 {
    let diff: Vec<f64> = l.iter().zip(q).map(|(a, b)| a - b).collect();
    let ul = dot(u, l);
    let ud = dot(u, &diff);
    u.iter()
        .zip(l.iter().zip(&diff))
        .map(|(ui, (li, di))| ui * li * di)
        .sum::<f64>()
        - ul * ud
}

/// Same quantity as [`objective_value`] written as a sum over option pairs.
pub fn objective_value_pairwise(u: &[f64], l: &[f64], q: &[f64]) -> f64 {
    let m = u.len();
    let mut acc = 0.0;
    for i in 0..m {
        for j in 0..m {
            let dl = l[i] - l[j];
            let dq = q[i] - q[j];
            acc += 0.5 * u[i] * u[j] * (dl * dl - dl * dq);
        }
    }
    acc
}

/// Directions `q` with `sum(q) = 0` and `(eps/2) (q_i - u^T q) <= 1`, i.e.
/// the directions for which `u - (eps/2) Q q` stays nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSet {
    u: Vec<f64>,
    eps: f64,
}

impl FeasibleSet {
    pub fn new(u: Vec<f64>, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(CmwError::InvalidArgument(format!(
                "step size must be positive, got {eps}"
            )));
        }
        Ok(Self { u, eps })
    }

    pub fn weights(&self) -> &[f64] {
        &self.u
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// Row `j` of the inequality system `A q <= 1`.
    pub fn row(&self, j: usize) -> Vec<f64> {
        let h = 0.5 * self.eps;
        self.u
            .iter()
            .enumerate()
            .map(|(i, ui)| h * ((i == j) as u8 as f64 - ui))
            .collect()
    }

    /// `(eps/2) (q_i - u^T q)` for every option.
    pub fn constraint_values(&self, q: &[f64]) -> Vec<f64> {
        let s = dot(&self.u, q);
        q.iter().map(|qi| 0.5 * self.eps * (qi - s)).collect()
    }

    /// Largest constraint value over options with positive weight; zero-weight
    /// options carry no mass and are unconstrained.
    pub fn max_constraint(&self, q: &[f64]) -> f64 {
        self.constraint_values(q)
            .into_iter()
            .zip(&self.u)
            .filter(|(_, &u)| u > 0.0)
            .map(|(c, _)| c)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        q.len() == self.dim()
            && q.iter().sum::<f64>().abs() <= MEMBERSHIP_TOL
            && self.max_constraint(q) <= 1.0 + MEMBERSHIP_TOL
    }

    pub fn check(&self, q: &[f64]) -> Result<()> {
        if self.contains(q) {
            Ok(())
        } else {
            Err(CmwError::InfeasibleDirection {
                max_constraint: self.max_constraint(q),
                sum: q.iter().sum(),
            })
        }
    }

    /// Scales `q` toward zero when round-off pushed it past the boundary.
    /// The set is star-shaped around zero with homogeneous constraints, so
    /// dividing by the largest constraint value lands exactly on it.
    pub fn pull_inside(&self, q: &mut [f64]) {
        let c = self.max_constraint(q);
        if c > 1.0 {
            for x in q.iter_mut() {
                *x /= c;
            }
        }
    }
}
