use super::play::{CmwPlayer, HedgePlayer};
use super::random_intervals::random_box;
use super::{run_trials, stream_rng, RandomIntervalConfig, Stream, TrialPair};
use crate::adversary::adversarial_environment;
use crate::error::{CmwError, Result};
use crate::solvers::MAX_EXACT_DIM;

/// Random boxes as in the random-interval runs, but the realized loss is a
/// corner drawn from the worst-case strategy against the agent's weights.
pub type AdversarialConfig = RandomIntervalConfig;

/// Each agent faces its own adversary; the boxes are identical for both.
pub fn adversarial_trial(config: &AdversarialConfig, trial: usize) -> Result<TrialPair> {
    if config.m > MAX_EXACT_DIM {
        return Err(CmwError::UseApproximateSolver {
            m: config.m,
            max: MAX_EXACT_DIM,
        });
    }
    let cfg = config.cmw_config()?;

    let mut env = stream_rng(config.seed, trial, Stream::Environment);
    let mut cmw = CmwPlayer::new(cfg, stream_rng(config.seed, trial, Stream::Cmw))?;
    for _ in 0..config.horizon {
        let bx = random_box(config.m, &mut env);
        let proposal = cmw.propose(&bx)?;
        let loss = adversarial_environment(&proposal.outcome.weights, proposal.epsilon, &bx, &mut env)?;
        cmw.observe(&proposal, loss.values())?;
    }

    let mut env = stream_rng(config.seed, trial, Stream::Environment);
    let mut hedge = HedgePlayer::new(
        config.m,
        config.horizon,
        config.hedge_l,
        stream_rng(config.seed, trial, Stream::Hedge),
    )?;
    for _ in 0..config.horizon {
        let bx = random_box(config.m, &mut env);
        let p = hedge.distribution();
        let loss = adversarial_environment(p.probs(), hedge.state().epsilon(), &bx, &mut env)?;
        hedge.observe(&p, loss.values())?;
    }

    Ok(TrialPair {
        trial,
        cmw: cmw.finish()?,
        hedge: hedge.finish()?,
    })
}

pub fn run_adversarial(config: &AdversarialConfig, jobs: usize) -> Result<Vec<TrialPair>> {
    config.cmw_config()?;
    run_trials(config.trials, jobs, |i| adversarial_trial(config, i))
}
