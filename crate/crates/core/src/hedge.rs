//! Classical multiplicative weights (hedge) with the fixed step size tuned to
//! a known horizon.

use serde::{Deserialize, Serialize};

use crate::error::{CmwError, Result};
use crate::game::{shifted_exp_weights, Distribution};

/// `sqrt(8 ln(m) / T) / L`.
pub fn hedge_epsilon(m: usize, horizon: usize, loss_range: f64) -> Result<f64> {
    check_args(m, horizon, loss_range)?;
    Ok((8.0 * (m as f64).ln() / horizon as f64).sqrt() / loss_range)
}

/// `L * sqrt(ln(m) * T / 2)`, the worst-case regret of hedge over losses in `[0, L]`.
pub fn hedge_regret_bound(m: usize, horizon: usize, loss_range: f64) -> Result<f64> {
    check_args(m, horizon, loss_range)?;
    Ok(loss_range * ((m as f64).ln() * horizon as f64 / 2.0).sqrt())
}

fn check_args(m: usize, horizon: usize, loss_range: f64) -> Result<()> {
    if m < 2 {
        return Err(CmwError::InvalidArgument(format!("need m >= 2, got {m}")));
    }
    if horizon == 0 {
        return Err(CmwError::InvalidArgument("horizon must be positive".into()));
    }
    if !(loss_range > 0.0 && loss_range.is_finite()) {
        return Err(CmwError::InvalidArgument(format!(
            "loss range must be positive, got {loss_range}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeState {
    cumulative: Vec<f64>,
    epsilon: f64,
    steps_seen: usize,
}

impl HedgeState {
    pub fn new(m: usize, epsilon: f64) -> Result<Self> {
        if m < 1 {
            return Err(CmwError::InvalidArgument("need at least one option".into()));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(CmwError::InvalidArgument(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(Self {
            cumulative: vec![0.0; m],
            epsilon,
            steps_seen: 0,
        })
    }

    /// Hedge tuned for horizon `T` and losses in `[0, L]`.
    pub fn for_horizon(m: usize, horizon: usize, loss_range: f64) -> Result<Self> {
        Self::new(m, hedge_epsilon(m, horizon, loss_range)?)
    }

    pub fn with_cumulative(cumulative: Vec<f64>, epsilon: f64) -> Result<Self> {
        let mut s = Self::new(cumulative.len(), epsilon)?;
        s.cumulative = cumulative;
        Ok(s)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn steps_seen(&self) -> usize {
        self.steps_seen
    }

    pub fn distribution(&self) -> Distribution {
        hedge_distribution(self)
    }

    pub fn observe(&mut self, loss: &[f64]) -> Result<()> {
        if loss.len() != self.cumulative.len() {
            return Err(CmwError::InvalidArgument(format!(
                "loss has {} entries, expected {}",
                loss.len(),
                self.cumulative.len()
            )));
        }
        for (c, l) in self.cumulative.iter_mut().zip(loss) {
            *c += l;
        }
        self.steps_seen += 1;
        Ok(())
    }
}

/// Probabilities proportional to `exp(-eps * cumulative[i])`.
pub fn hedge_distribution(state: &HedgeState) -> Distribution {
    let (w, phi) = shifted_exp_weights(&state.cumulative, state.epsilon);
    let probs = w.into_iter().map(|x| x / phi).collect();
    Distribution::new(probs).expect("softmax weights form a distribution")
}
