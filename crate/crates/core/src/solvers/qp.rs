//! Primal active-set method for the Euclidean projection
//! `argmin ||q - mu||^2  s.t.  sum(q) = 0,  A q <= 1`
//! onto a [`FeasibleSet`].

use nalgebra::{DMatrix, DVector};

use crate::curvature::FeasibleSet;
use crate::error::{CmwError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub q: Vec<f64>,
    /// Multipliers of the inequality rows (zero off the working set).
    pub multipliers: Vec<f64>,
    /// Multiplier of `sum(q) = 0`.
    pub sum_multiplier: f64,
    pub iterations: usize,
}

impl Projection {
    /// Max-norm of `q - mu + A^T lambda + nu 1`.
    pub fn stationarity_residual(&self, mu: &[f64], set: &FeasibleSet) -> f64 {
        let mut g: Vec<f64> = self
            .q
            .iter()
            .zip(mu)
            .map(|(q, m)| q - m + self.sum_multiplier)
            .collect();
        for (j, &lam) in self.multipliers.iter().enumerate() {
            if lam != 0.0 {
                for (gi, aij) in g.iter_mut().zip(set.row(j)) {
                    *gi += lam * aij;
                }
            }
        }
        g.into_iter().fold(0.0, |a, x| a.max(x.abs()))
    }
}

/// Solves `M x = b` for the small symmetric positive definite Gram matrix of
/// the working rows.
fn solve_gram(m: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.solve(&b));
    }
    m.lu()
        .solve(&b)
        .ok_or_else(|| CmwError::InvalidArgument("singular working set in QP".into()))
}

pub fn qp_project(mu: &[f64], set: &FeasibleSet) -> Result<Projection> {
    let k = set.dim();
    if mu.len() != k {
        return Err(CmwError::InvalidArgument(format!(
            "mu has {} entries, set has {k}",
            mu.len()
        )));
    }
    if k == 1 {
        return Ok(Projection {
            q: vec![0.0],
            multipliers: vec![0.0],
            sum_multiplier: mu[0],
            iterations: 0,
        });
    }
    let rows: Vec<Vec<f64>> = (0..k).map(|j| set.row(j)).collect();
    let scale = 1.0 + mu.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let max_iter = 50 * k;

    let mut q = vec![0.0; k];
    let mut working: Vec<usize> = Vec::new();
    let mut last_step = f64::INFINITY;

    for iter in 0..max_iter {
        // constraint matrix of the working set: sum row first
        let nw = working.len() + 1;
        let a_w = DMatrix::from_fn(nw, k, |r, c| if r == 0 { 1.0 } else { rows[working[r - 1]][c] });
        let resid = DVector::from_iterator(k, mu.iter().zip(&q).map(|(m, x)| m - x));
        let gram = &a_w * a_w.transpose();
        let lambda = solve_gram(gram, &a_w * &resid)?;
        let step = &resid - a_w.transpose() * &lambda;
        last_step = step.amax();

        if last_step <= 1e-13 * scale {
            // stationary on the working set: check inequality multipliers
            let worst = (1..nw)
                .map(|r| (r, lambda[r]))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match worst {
                Some((r, lam)) if lam < -1e-12 * scale => {
                    working.remove(r - 1);
                    continue;
                }
                _ => {
                    let mut multipliers = vec![0.0; k];
                    for (r, &j) in working.iter().enumerate() {
                        multipliers[j] = lambda[r + 1].max(0.0);
                    }
                    return Ok(Projection {
                        q,
                        multipliers,
                        sum_multiplier: lambda[0],
                        iterations: iter + 1,
                    });
                }
            }
        }

        let mut alpha = 1.0;
        let mut blocking = None;
        for j in 0..k {
            if working.contains(&j) {
                continue;
            }
            let ap: f64 = rows[j].iter().zip(step.iter()).map(|(a, p)| a * p).sum();
            if ap > 1e-15 {
                let slack = 1.0 - rows[j].iter().zip(&q).map(|(a, x)| a * x).sum::<f64>();
                let a_j = (slack / ap).max(0.0);
                if a_j < alpha {
                    alpha = a_j;
                    blocking = Some(j);
                }
            }
        }
        for (x, p) in q.iter_mut().zip(step.iter()) {
            *x += alpha * p;
        }
        if let Some(j) = blocking {
            working.push(j);
        }
    }
    working.sort_unstable();
    Err(CmwError::QpNotConverged {
        iterations: max_iter,
        step_norm: last_step,
        working_set: working,
    })
}
