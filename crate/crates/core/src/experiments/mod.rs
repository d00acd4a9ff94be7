//! Seeded experiment drivers producing per-step traces for the constrained
//! agent and for hedge on the same loss sequence.
//!
//! Randomness: one ChaCha8 key per run (the seed) and one stream per
//! (trial, role), so the environment's draws do not depend on the solver or
//! on how often the agents sample.

mod adversarial;
mod battery;
mod logistic;
mod play;
mod random_intervals;
mod records;
mod summary;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{CmwError, Result};

pub use adversarial::{adversarial_trial, run_adversarial, AdversarialConfig};
pub use battery::{bound_battery, BatteryReport, GameKind};
pub use logistic::{
    logistic_interval, logistic_loss_and_interval, logistic_map_run, logistic_truth_step, run_logistic,
    LogisticMapConfig,
};
pub use random_intervals::{random_intervals_trial, run_random_intervals, RandomIntervalConfig};
pub use records::{format_g17, TrialPair, TrialRecord, TrialRow, TrialSummary, CSV_HEADER};
pub use summary::{aggregate, median, AgentStats, Histogram, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Environment = 0,
    Cmw = 1,
    Hedge = 2,
}

/// Independent generator for one role in one trial.
pub fn stream_rng(seed: u64, trial: usize, role: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((trial as u64) << 2) | role as u64);
    rng
}

/// Runs `f` for every trial index on `jobs` threads; results come back in
/// trial order regardless of scheduling.
pub fn run_trials<T, F>(trials: usize, jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    if jobs <= 1 {
        return (0..trials).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CmwError::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| (0..trials).into_par_iter().map(&f).collect())
}
