//! Agent wrappers that sample actions and keep the trace.

use rand_chacha::ChaCha8Rng;

use super::records::{check_bound, Tracker};
use super::TrialRecord;
use crate::curvature::objective_value;
use crate::engine::{CmwConfig, CmwEngine, Proposal};
use crate::error::Result;
use crate::game::{sample, BoxConstraint, Distribution};
use crate::hedge::{hedge_epsilon, hedge_regret_bound, HedgeState};

pub(crate) struct CmwPlayer {
    engine: CmwEngine,
    tracker: Tracker,
    rng: ChaCha8Rng,
}

impl CmwPlayer {
    pub fn new(config: CmwConfig, rng: ChaCha8Rng) -> Result<Self> {
        let tracker = Tracker::new(config.m, config.horizon);
        Ok(Self {
            engine: CmwEngine::new(config)?,
            tracker,
            rng,
        })
    }

    pub fn engine(&self) -> &CmwEngine {
        &self.engine
    }

    pub fn propose(&self, bx: &BoxConstraint) -> Result<Proposal> {
        self.engine.propose(bx)
    }

    pub fn observe(&mut self, proposal: &Proposal, loss: &[f64]) -> Result<()> {
        let action = sample(&proposal.distribution, &mut self.rng);
        let r = self.engine.observe(proposal, loss)?;
        let bound = self.engine.regret_bound().value;
        self.tracker
            .push(proposal.epsilon, r, &proposal.distribution, action, loss, bound);
        Ok(())
    }

    /// The bound is checked when it applies: default `c2` and every loss
    /// within a window of width `L`.
    pub fn finish(self) -> Result<TrialRecord> {
        let (record, applies) = self.finish_unchecked();
        if applies {
            check_bound(&record, "constrained agent")?;
        }
        Ok(record)
    }

    /// The record and whether its bound applies.
    pub fn finish_unchecked(self) -> (TrialRecord, bool) {
        let cfg = self.engine.config();
        let applies = cfg.uses_default_c2() && cfg.fixed_epsilon.is_none() && {
            let (lo, hi) = self.tracker.loss_span();
            hi - lo <= cfg.loss_range + 1e-12
        };
        (self.tracker.finish("cmw"), applies)
    }
}

pub(crate) struct HedgePlayer {
    state: HedgeState,
    tracker: Tracker,
    rng: ChaCha8Rng,
    bound: f64,
    loss_range: f64,
}

impl HedgePlayer {
    pub fn new(m: usize, horizon: usize, loss_range: f64, rng: ChaCha8Rng) -> Result<Self> {
        Ok(Self {
            state: HedgeState::new(m, hedge_epsilon(m, horizon, loss_range)?)?,
            tracker: Tracker::new(m, horizon),
            rng,
            bound: hedge_regret_bound(m, horizon, loss_range)?,
            loss_range,
        })
    }

    pub fn distribution(&self) -> Distribution {
        self.state.distribution()
    }

    pub fn state(&self) -> &HedgeState {
        &self.state
    }

    pub fn observe(&mut self, dist: &Distribution, loss: &[f64]) -> Result<()> {
        let action = sample(dist, &mut self.rng);
        let second_order = objective_value(dist.probs(), loss, &vec![0.0; loss.len()]);
        self.tracker
            .push(self.state.epsilon(), second_order, dist, action, loss, self.bound);
        self.state.observe(loss)
    }

    pub fn finish(self) -> Result<TrialRecord> {
        let (record, applies) = self.finish_unchecked();
        if applies {
            check_bound(&record, "hedge")?;
        }
        Ok(record)
    }

    pub fn finish_unchecked(self) -> (TrialRecord, bool) {
        let (lo, hi) = self.tracker.loss_span();
        let applies = hi - lo <= self.loss_range + 1e-12;
        (self.tracker.finish("hedge"), applies)
    }
}
