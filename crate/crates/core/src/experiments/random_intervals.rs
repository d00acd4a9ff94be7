use rand::Rng;
use serde::{Deserialize, Serialize};

use super::play::{CmwPlayer, HedgePlayer};
use super::{run_trials, stream_rng, Stream, TrialPair};
use crate::engine::{CmwConfig, DEFAULT_C1};
use crate::error::{CmwError, Result};
use crate::game::BoxConstraint;
use crate::solvers::SolverKind;

/// Each round every option's interval is spanned by two uniform draws on
/// `[0, 1]`; the realized loss is uniform inside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomIntervalConfig {
    pub m: usize,
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    pub solver: SolverKind,
    /// `L` used to tune hedge's step size.
    pub hedge_l: f64,
    pub c1: f64,
    /// `None` selects `2 ln(m) L^2`.
    pub c2: Option<f64>,
}

impl Default for RandomIntervalConfig {
    fn default() -> Self {
        Self {
            m: 10,
            horizon: 200,
            trials: 100,
            seed: 0,
            solver: SolverKind::ExactLp,
            hedge_l: 1.0,
            c1: DEFAULT_C1,
            c2: None,
        }
    }
}

impl RandomIntervalConfig {
    pub fn cmw_config(&self) -> Result<CmwConfig> {
        if self.trials == 0 {
            return Err(CmwError::InvalidArgument("trials must be at least 1".into()));
        }
        if !(self.hedge_l > 0.0 && self.hedge_l.is_finite()) {
            return Err(CmwError::InvalidArgument(format!(
                "hedge L must be positive, got {}",
                self.hedge_l
            )));
        }
        let mut cfg = CmwConfig::new(self.m, self.horizon, 1.0, self.solver)?.with_c1(self.c1)?;
        if let Some(c2) = self.c2 {
            cfg = cfg.with_c2(c2)?;
        }
        Ok(cfg)
    }
}

pub(crate) fn random_box<R: Rng + ?Sized>(m: usize, rng: &mut R) -> BoxConstraint {
    let (lo, hi): (Vec<f64>, Vec<f64>) = (0..m)
        .map(|_| {
            let a: f64 = rng.gen();
            let b: f64 = rng.gen();
            (a.min(b), a.max(b))
        })
        .unzip();
    BoxConstraint::new(lo, hi).expect("ordered draws")
}

pub(crate) fn uniform_in_box<R: Rng + ?Sized>(bx: &BoxConstraint, rng: &mut R) -> Vec<f64> {
    bx.lower()
        .iter()
        .zip(bx.upper())
        .map(|(&lo, &hi)| lo + (hi - lo) * rng.gen::<f64>())
        .collect()
}

/// One trial: both agents face the same boxes and realized losses.
pub fn random_intervals_trial(config: &RandomIntervalConfig, trial: usize) -> Result<TrialPair> {
    let cfg = config.cmw_config()?;
    let mut env = stream_rng(config.seed, trial, Stream::Environment);
    let mut cmw = CmwPlayer::new(cfg, stream_rng(config.seed, trial, Stream::Cmw))?;
    let mut hedge = HedgePlayer::new(
        config.m,
        config.horizon,
        config.hedge_l,
        stream_rng(config.seed, trial, Stream::Hedge),
    )?;
    for _ in 0..config.horizon {
        let bx = random_box(config.m, &mut env);
        let proposal = cmw.propose(&bx)?;
        let loss = uniform_in_box(&bx, &mut env);
        cmw.observe(&proposal, &loss)?;
        let p = hedge.distribution();
        hedge.observe(&p, &loss)?;
    }
    Ok(TrialPair {
        trial,
        cmw: cmw.finish()?,
        hedge: hedge.finish()?,
    })
}

pub fn run_random_intervals(config: &RandomIntervalConfig, jobs: usize) -> Result<Vec<TrialPair>> {
    config.cmw_config()?;
    run_trials(config.trials, jobs, |i| random_intervals_trial(config, i))
}
