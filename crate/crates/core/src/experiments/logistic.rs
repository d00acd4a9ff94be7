//! Online identification of the logistic map `x' = theta x (1 - x)`.
//!
//! The truth evolves with `theta_true + n`, `n` uniform on
//! `[-noise, noise]`. Candidate `i` predicts with `theta_i` from an
//! equidistant grid; its loss is the one-step prediction error, and its
//! interval is the range of that error over all admissible noise values.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::play::{CmwPlayer, HedgePlayer};
use super::{run_trials, stream_rng, Stream, TrialPair};
use crate::engine::{CmwConfig, DEFAULT_C1};
use crate::error::{CmwError, Result};
use crate::game::BoxConstraint;
use crate::solvers::SolverKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticMapConfig {
    pub m: usize,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub theta_true: f64,
    pub noise_bound: f64,
    pub horizon: usize,
    pub x0: f64,
    pub seed: u64,
    pub trials: usize,
    pub solver: SolverKind,
    /// Loss range for both agents; `None` selects the largest possible loss.
    pub hedge_l: Option<f64>,
    pub c1: f64,
    pub c2: Option<f64>,
}

impl Default for LogisticMapConfig {
    fn default() -> Self {
        Self {
            m: 50,
            theta_lo: 3.0,
            theta_hi: 3.9,
            theta_true: 3.57,
            noise_bound: 0.05,
            horizon: 200,
            x0: 0.2,
            seed: 0,
            trials: 1,
            solver: SolverKind::Approximate,
            hedge_l: None,
            c1: DEFAULT_C1,
            c2: None,
        }
    }
}

impl LogisticMapConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CmwError::InvalidArgument(m));
        if self.m < 2 {
            return bad(format!("need m >= 2, got {}", self.m));
        }
        if !(self.theta_lo < self.theta_hi) {
            return bad("theta grid must satisfy lo < hi".into());
        }
        if !(self.x0 > 0.0 && self.x0 < 1.0) {
            return bad(format!("x0 must lie in (0, 1), got {}", self.x0));
        }
        if !(self.noise_bound >= 0.0) {
            return bad(format!("noise bound must be nonnegative, got {}", self.noise_bound));
        }
        // keeps the state inside [0, 1]
        if !(self.theta_true - self.noise_bound >= 0.0 && self.theta_true + self.noise_bound <= 4.0) {
            return bad("theta_true +- noise must lie in [0, 4]".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if let Some(l) = self.hedge_l {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("hedge L must be positive, got {l}"));
            }
        }
        Ok(())
    }

    /// Equidistant grid with both endpoints hit exactly.
    pub fn grid(&self) -> Vec<f64> {
        let step = (self.theta_hi - self.theta_lo) / (self.m - 1) as f64;
        let mut g: Vec<f64> = (0..self.m).map(|i| self.theta_lo + i as f64 * step).collect();
        g[self.m - 1] = self.theta_hi;
        g
    }

    /// `(max_i |theta_true - theta_i| + noise) / 4`, the largest loss any
    /// candidate can incur since `x (1 - x) <= 1/4`.
    pub fn loss_range(&self) -> f64 {
        self.hedge_l.unwrap_or_else(|| {
            let d = (self.theta_true - self.theta_lo).max(self.theta_hi - self.theta_true);
            (d + self.noise_bound) / 4.0
        })
    }

    pub fn cmw_config(&self) -> Result<CmwConfig> {
        self.validate()?;
        let mut cfg = CmwConfig::new(self.m, self.horizon, self.loss_range(), self.solver)?.with_c1(self.c1)?;
        if let Some(c2) = self.c2 {
            cfg = cfg.with_c2(c2)?;
        }
        Ok(cfg)
    }
}

/// `(theta_true + n) x (1 - x)` with fresh noise `n`.
pub fn logistic_truth_step<R: Rng + ?Sized>(x: f64, theta_true: f64, noise_bound: f64, rng: &mut R) -> f64 {
    let n = if noise_bound > 0.0 {
        rng.gen_range(-noise_bound..=noise_bound)
    } else {
        0.0
    };
    (theta_true + n) * x * (1.0 - x)
}

/// Range of `|(theta_true + n - theta_i) x (1 - x)|` over admissible noise.
pub fn logistic_interval(x: f64, theta_i: f64, theta_true: f64, noise_bound: f64) -> (f64, f64) {
    let g = x * (1.0 - x);
    let d = (theta_true - theta_i).abs();
    ((d - noise_bound).max(0.0) * g, (d + noise_bound) * g)
}

/// Realized prediction error of candidate `theta_i` and its interval.
pub fn logistic_loss_and_interval(
    x: f64,
    x_next: f64,
    theta_i: f64,
    theta_true: f64,
    noise_bound: f64,
) -> (f64, (f64, f64)) {
    let loss = (x_next - theta_i * x * (1.0 - x)).abs();
    (loss, logistic_interval(x, theta_i, theta_true, noise_bound))
}

/// One run along a single noisy trajectory shared by both agents.
pub fn logistic_map_run(config: &LogisticMapConfig, trial: usize) -> Result<TrialPair> {
    let cfg = config.cmw_config()?;
    let grid = config.grid();
    let mut env = stream_rng(config.seed, trial, Stream::Environment);
    let mut cmw = CmwPlayer::new(cfg, stream_rng(config.seed, trial, Stream::Cmw))?;
    let mut hedge = HedgePlayer::new(
        config.m,
        config.horizon,
        config.loss_range(),
        stream_rng(config.seed, trial, Stream::Hedge),
    )?;
    let mut x = config.x0;
    for _ in 0..config.horizon {
        let (lo, hi): (Vec<f64>, Vec<f64>) = grid
            .iter()
            .map(|&th| logistic_interval(x, th, config.theta_true, config.noise_bound))
            .unzip();
        let bx = BoxConstraint::new(lo, hi)?;
        let proposal = cmw.propose(&bx)?;
        let x_next = logistic_truth_step(x, config.theta_true, config.noise_bound, &mut env);
        let loss: Vec<f64> = grid
            .iter()
            .map(|&th| logistic_loss_and_interval(x, x_next, th, config.theta_true, config.noise_bound).0)
            .collect();
        cmw.observe(&proposal, &loss)?;
        let p = hedge.distribution();
        hedge.observe(&p, &loss)?;
        x = x_next;
    }
    Ok(TrialPair {
        trial,
        cmw: cmw.finish()?,
        hedge: hedge.finish()?,
    })
}

pub fn run_logistic(config: &LogisticMapConfig, jobs: usize) -> Result<Vec<TrialPair>> {
    config.cmw_config()?;
    run_trials(config.trials, jobs, |i| logistic_map_run(config, i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_endpoints_and_spacing() {
        let c = LogisticMapConfig::default();
        let g = c.grid();
        assert_eq!(g[0], 3.0);
        assert_eq!(g[49], 3.9);
        assert!((g[1] - g[0] - 0.9 / 49.0).abs() < 1e-15);
        // 3.57 sits between the 32nd and 33rd candidates
        assert!(g[31] < 3.57 && 3.57 < g[32]);
        assert!((g[31] - 3.5694).abs() < 1e-4 && (g[32] - 3.5878).abs() < 1e-4);
        assert!((c.loss_range() - 0.155).abs() < 1e-15);
    }

    #[test]
    fn truth_step_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(logistic_truth_step(0.0, 3.57, 0.05, &mut rng), 0.0);
        assert!((logistic_truth_step(0.5, 3.57, 0.0, &mut rng) - 0.8925).abs() < 1e-15);
        let mut x = 0.2;
        for _ in 0..10_000 {
            x = logistic_truth_step(x, 3.57, 0.05, &mut rng);
            assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn interval_examples() {
        let (lo, hi) = logistic_interval(0.5, 3.5, 3.57, 0.05);
        assert!((lo - 0.005).abs() < 1e-15 && (hi - 0.03).abs() < 1e-15);
        let (lo, hi) = logistic_interval(0.3, 3.57, 3.57, 0.05);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.05 * 0.21).abs() < 1e-15);
        assert_eq!(logistic_interval(0.0, 3.2, 3.57, 0.05), (0.0, 0.0));
        let (l, _) = logistic_loss_and_interval(0.0, 0.0, 3.2, 3.57, 0.05);
        assert_eq!(l, 0.0);
    }

    #[test]
    fn realized_losses_inside_intervals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = LogisticMapConfig::default();
        let mut x = c.x0;
        for _ in 0..2000 {
            let xn = logistic_truth_step(x, c.theta_true, c.noise_bound, &mut rng);
            for th in c.grid() {
                let (l, (lo, hi)) = logistic_loss_and_interval(x, xn, th, c.theta_true, c.noise_bound);
                assert!(l >= lo - 1e-12 && l <= hi + 1e-12);
            }
            x = xn;
        }
    }

    #[test]
    fn noiseless_run_concentrates_on_nearest_candidate() {
        let c = LogisticMapConfig {
            noise_bound: 0.0,
            seed: 2,
            ..Default::default()
        };
        let pair = logistic_map_run(&c, 0).unwrap();
        let nearest = c
            .grid()
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 3.57).abs().total_cmp(&(b.1 - 3.57).abs()))
            .unwrap()
            .0;
        assert_eq!(pair.cmw.summary.best_index, nearest);
        assert!(pair.cmw.summary.max_probability >= 0.9);
    }

    #[test]
    fn validation() {
        let c = LogisticMapConfig {
            x0: 1.5,
            ..Default::default()
        };
        assert!(c.cmw_config().is_err());
    }
}
