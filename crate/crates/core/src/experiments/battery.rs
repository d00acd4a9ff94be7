//! Mixed battery of short games for checking both regret bounds.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::play::{CmwPlayer, HedgePlayer};
use super::random_intervals::{random_box, uniform_in_box};
use super::{run_trials, stream_rng, Stream};
use crate::adversary::adversarial_environment;
use crate::engine::CmwConfig;
use crate::error::Result;
use crate::game::BoxConstraint;
use crate::solvers::SolverKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GameKind {
    /// Random intervals, uniform realized loss.
    RandomIntervals,
    /// Unit cube, uniformly random corner.
    RandomCorners,
    /// Random intervals, worst-case corner against the agent.
    Adversary,
    /// Unit cube; the first two options alternate so that following the
    /// leader always picks the one about to lose.
    Alternating,
}

const KINDS: [GameKind; 4] = [
    GameKind::RandomIntervals,
    GameKind::RandomCorners,
    GameKind::Adversary,
    GameKind::Alternating,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameResult {
    pub kind: GameKind,
    pub m: usize,
    pub horizon: usize,
    pub hedge_regret: f64,
    pub hedge_bound: f64,
    pub cmw_regret: f64,
    pub cmw_bound: f64,
    pub claims_hold: bool,
    pub max_r_tilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub games: Vec<GameResult>,
    pub hedge_violations: usize,
    pub cmw_violations: usize,
    pub claim_violations: usize,
    /// Games where some second-order term exceeded `L^2 / 4`.
    pub range_violations: usize,
    pub max_hedge_ratio: f64,
    pub max_cmw_ratio: f64,
}

impl BatteryReport {
    pub fn passed(&self) -> bool {
        self.hedge_violations == 0
            && self.cmw_violations == 0
            && self.claim_violations == 0
            && self.range_violations == 0
    }
}

/// Box and loss for the oblivious game kinds.
fn oblivious_step(kind: GameKind, t: usize, m: usize, env: &mut ChaCha8Rng) -> Result<(BoxConstraint, Vec<f64>)> {
    if kind == GameKind::RandomIntervals {
        let bx = random_box(m, env);
        let l = uniform_in_box(&bx, env);
        return Ok((bx, l));
    }
    let bx = BoxConstraint::uniform(m, 0.0, 1.0)?;
    let l = match kind {
        GameKind::RandomCorners => bx.corner(env.gen_range(0..1usize << m)),
        _ => {
            let mut l = vec![1.0; m];
            (l[0], l[1]) = match t {
                0 => (0.5, 0.0),
                _ if t % 2 == 1 => (0.0, 1.0),
                _ => (1.0, 0.0),
            };
            l
        }
    };
    Ok((bx, l))
}

fn play(seed: u64, game: usize) -> Result<GameResult> {
    let mut pick = stream_rng(seed, game, Stream::Environment);
    // game shape from a block of the environment stream no game reaches
    pick.set_word_pos(1 << 40);
    let m = pick.gen_range(2..=10);
    let horizon = pick.gen_range(10..=200);
    let kind = KINDS[game % KINDS.len()];

    let mut cfg = CmwConfig::new(m, horizon, 1.0, SolverKind::ExactLp)?;
    cfg.check_invariants = false;
    let mut cmw = CmwPlayer::new(cfg, stream_rng(seed, game, Stream::Cmw))?;
    let mut env = stream_rng(seed, game, Stream::Environment);
    for t in 0..horizon {
        if kind == GameKind::Adversary {
            let bx = random_box(m, &mut env);
            let p = cmw.propose(&bx)?;
            let l = adversarial_environment(&p.outcome.weights, p.epsilon, &bx, &mut env)?;
            cmw.observe(&p, l.values())?;
        } else {
            let (bx, l) = oblivious_step(kind, t, m, &mut env)?;
            let p = cmw.propose(&bx)?;
            cmw.observe(&p, &l)?;
        }
    }
    let claims_hold = cmw.engine().state().claims.holds();
    let max_r_tilde = cmw
        .engine()
        .state()
        .r_tilde_trace
        .iter()
        .copied()
        .fold(0.0, f64::max);
    let (cmw_rec, _) = cmw.finish_unchecked();

    let mut hedge = HedgePlayer::new(m, horizon, 1.0, stream_rng(seed, game, Stream::Hedge))?;
    let mut env = stream_rng(seed, game, Stream::Environment);
    for t in 0..horizon {
        let p = hedge.distribution();
        let l = if kind == GameKind::Adversary {
            let bx = random_box(m, &mut env);
            adversarial_environment(p.probs(), hedge.state().epsilon(), &bx, &mut env)?.into_inner()
        } else {
            oblivious_step(kind, t, m, &mut env)?.1
        };
        hedge.observe(&p, &l)?;
    }
    let (hedge_rec, _) = hedge.finish_unchecked();

    Ok(GameResult {
        kind,
        m,
        horizon,
        hedge_regret: hedge_rec.summary.regret,
        hedge_bound: hedge_rec.summary.bound,
        cmw_regret: cmw_rec.summary.regret,
        cmw_bound: cmw_rec.summary.bound,
        claims_hold,
        max_r_tilde,
    })
}

/// `games` seeded games with `m` in 2..=10 and `T` in 10..=200 on losses in
/// `[0, 1]`, cycling through the [`GameKind`]s. The constrained agent runs
/// the exact solver with the default `c2`.
pub fn bound_battery(games: usize, seed: u64, jobs: usize) -> Result<BatteryReport> {
    let games = run_trials(games, jobs, |g| play(seed, g))?;
    let max_ratio = |f: &dyn Fn(&GameResult) -> f64| games.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    Ok(BatteryReport {
        hedge_violations: games.iter().filter(|g| g.hedge_regret > g.hedge_bound + 1e-9).count(),
        cmw_violations: games.iter().filter(|g| g.cmw_regret > g.cmw_bound + 1e-9).count(),
        claim_violations: games.iter().filter(|g| !g.claims_hold).count(),
        range_violations: games.iter().filter(|g| g.max_r_tilde > 0.25 + 1e-9).count(),
        max_hedge_ratio: max_ratio(&|g| g.hedge_regret / g.hedge_bound),
        max_cmw_ratio: max_ratio(&|g| g.cmw_regret / g.cmw_bound),
        games,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_battery_passes() {
        let r = bound_battery(24, 1, 4).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.max_hedge_ratio < 1.0);
        assert_eq!(r.games.len(), 24);
    }

    #[test]
    fn battery_is_reproducible() {
        assert_eq!(bound_battery(8, 3, 1).unwrap(), bound_battery(8, 3, 3).unwrap());
    }
}
