//! Multiplicative weights with constraints.
//!
//! Each round the engine reads the revealed box, computes the step size from
//! the accumulated second-order terms, asks an inner solver for the
//! correction direction `q`, and plays
//! `p = u - (eps/2) Q q` with `u` the exponential weights. After the loss is
//! revealed the realized second-order term, floored at `r_bar`, feeds the
//! next step size.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::curvature::{objective_value, FeasibleSet};
use crate::error::{CmwError, Result};
use crate::game::{dot, shifted_exp_weights, BoxConstraint, Distribution};
use crate::solvers::{self, prune_dominated, SolverKind, SolverOutcome, MAX_EXACT_DIM};


/// Tolerance on the revealed loss lying inside the announced box.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
const INVARIANT_TOL: f64 = 1e-9;

pub const DEFAULT_C1: f64 = 1e-2;

/// Environment switch enabling per-step invariant checks in release builds.
pub const DEBUG_ASSERT_ENV: &str = "CMW_DEBUG_ASSERT";

pub fn invariant_checks_from_env() -> bool {
    cfg!(debug_assertions) || std::env::var(DEBUG_ASSERT_ENV).is_ok_and(|v| v == "1")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmwConfig {
    pub m: usize,
    pub horizon: usize,
    pub c1: f64,
    pub c2: f64,
    pub loss_range: f64,
    pub solver: SolverKind,
    /// Replaces the adaptive schedule with a constant step.
    pub fixed_epsilon: Option<f64>,
    /// Check the per-step invariants (second-order term range and the two
    /// step-size summation inequalities) and fail the round on violation.
    pub check_invariants: bool,
}

/// `2 ln(m) L^2`, the value of `c2` under which the regret bound is stated.
pub fn default_c2(m: usize, loss_range: f64) -> f64 {
    2.0 * (m as f64).ln() * loss_range * loss_range
}

impl CmwConfig {
    pub fn new(m: usize, horizon: usize, loss_range: f64, solver: SolverKind) -> Result<Self> {
        let cfg = Self {
            m,
            horizon,
            c1: DEFAULT_C1,
            c2: default_c2(m, loss_range),
            loss_range,
            solver,
            fixed_epsilon: None,
            check_invariants: invariant_checks_from_env(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_c1(mut self, c1: f64) -> Result<Self> {
        self.c1 = c1;
        self.validate()?;
        Ok(self)
    }

    pub fn with_c2(mut self, c2: f64) -> Result<Self> {
        self.c2 = c2;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CmwError::InvalidArgument(msg));
        if self.m < 2 {
            return bad(format!("need m >= 2, got {}", self.m));
        }
        if self.horizon == 0 {
            return bad("horizon must be positive".into());
        }
        if !(self.loss_range > 0.0 && self.loss_range.is_finite()) {
            return bad(format!("loss range must be positive, got {}", self.loss_range));
        }
        if !(self.c1 > 0.0 && self.c1.is_finite()) {
            return bad(format!("c1 must be positive, got {}", self.c1));
        }
        if !(self.c2 > 0.0 && self.c2.is_finite()) {
            return bad(format!("c2 must be positive, got {}", self.c2));
        }
        if let Some(e) = self.fixed_epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return bad(format!("fixed step must be positive, got {e}"));
            }
        }
        match self.solver {
            SolverKind::ClosedFormM2 if self.m != 2 => {
                Err(CmwError::ClosedFormRequiresTwo(self.m))
            }
            SolverKind::ExactLp if self.m > MAX_EXACT_DIM => Err(CmwError::UseApproximateSolver {
                m: self.m,
                max: MAX_EXACT_DIM,
            }),
            _ => Ok(()),
        }
    }

    pub fn uses_default_c2(&self) -> bool {
        let d = default_c2(self.m, self.loss_range);
        (self.c2 - d).abs() <= 1e-12 * d
    }

    /// Two options always use the closed form in place of the LP.
    pub fn effective_solver(&self) -> SolverKind {
        match self.solver {
            SolverKind::ExactLp if self.m == 2 => SolverKind::ClosedFormM2,
            k => k,
        }
    }
}

/// `c1 ln(m)^(2/3) L^2 T^(-1/3)`, the floor on the second-order terms.
pub fn r_bar(config: &CmwConfig) -> f64 {
    let lnm = (config.m as f64).ln();
    config.c1 * lnm.powf(2.0 / 3.0) * config.loss_range.powi(2) * (config.horizon as f64).powf(-1.0 / 3.0)
}

/// Running sums behind the two step-size inequalities
/// `sum_j r_j / sqrt(s_{j-1}) <= 2 sqrt(2 s_t)` and
/// `sum_j 1 / s_{j-1} <= ln(4 s_t / L^2) / r_bar + 1 / c2`
/// with `s_t = c2 + sum_{j <= t} r_j`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClaimTracker {
    pub ratio_sum: f64,
    pub inverse_sum: f64,
    /// Largest observed `lhs - rhs` of the first inequality.
    pub worst_ratio_slack: f64,
    /// Largest observed `lhs - rhs` of the second inequality.
    pub worst_inverse_slack: f64,
    pub checked_steps: usize,
}

impl ClaimTracker {
    fn new() -> Self {
        Self {
            worst_ratio_slack: f64::NEG_INFINITY,
            worst_inverse_slack: f64::NEG_INFINITY,
            ..Self::default()
        }
    }

    /// Adds step `t` given `s_{t-1}` and `s_t`; returns the two slacks.
    fn push(&mut self, r: f64, s_prev: f64, s_now: f64, r_bar: f64, c2: f64, l: f64) -> (f64, f64) {
        self.ratio_sum += r / s_prev.sqrt();
        self.inverse_sum += 1.0 / s_prev;
        let slack1 = self.ratio_sum - 2.0 * (2.0 * s_now).sqrt();
        let slack2 = self.inverse_sum - ((4.0 * s_now / (l * l)).ln() / r_bar + 1.0 / c2);
        self.worst_ratio_slack = self.worst_ratio_slack.max(slack1);
        self.worst_inverse_slack = self.worst_inverse_slack.max(slack2);
        self.checked_steps += 1;
        (slack1, slack2)
    }

    pub fn holds(&self) -> bool {
        self.worst_ratio_slack <= INVARIANT_TOL && self.worst_inverse_slack <= INVARIANT_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmwState {
    pub cumulative: Vec<f64>,
    pub r_tilde_sum: f64,
    pub r_tilde_trace: Vec<f64>,
    pub r_bar: f64,
    pub step: usize,
    pub claims: ClaimTracker,
}

impl CmwState {
    pub fn new(config: &CmwConfig) -> Self {
        Self {
            cumulative: vec![0.0; config.m],
            r_tilde_sum: 0.0,
            r_tilde_trace: Vec::new(),
            r_bar: r_bar(config),
            step: 0,
            claims: ClaimTracker::new(),
        }
    }

    /// `s = c2 + sum of floored second-order terms so far`.
    pub fn s(&self, config: &CmwConfig) -> f64 {
        config.c2 + self.r_tilde_sum
    }
}

/// `sqrt(2 ln(m) / (c2 + sum r_tilde))`, or the configured constant step.
pub fn epsilon(state: &CmwState, config: &CmwConfig) -> f64 {
    match config.fixed_epsilon {
        Some(e) => e,
        None => (2.0 * (config.m as f64).ln() / state.s(config)).sqrt(),
    }
}

/// Exponential weights scaled by their maximum, with their sum.
pub fn weights(cumulative: &[f64], eps: f64) -> (Vec<f64>, f64) {
    shifted_exp_weights(cumulative, eps)
}

/// `p = u - (eps/2) Q q`, evaluated per entry as `u_i (1 - (eps/2)(q_i - u^T q))`.
pub fn distribution(u: &[f64], eps: f64, q: &[f64]) -> Result<Distribution> {
    let set = FeasibleSet::new(u.to_vec(), eps)?;
    set.check(q)?;
    let s = dot(u, q);
    let p = u
        .iter()
        .zip(q)
        .map(|(ui, qi)| ui * (1.0 - 0.5 * eps * (qi - s)))
        .collect();
    Distribution::new(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretBound {
    pub value: f64,
    /// False when `c2` differs from `2 ln(m) L^2`, where the bound is not proved.
    pub default_c2: bool,
}

/// `3 sqrt(ln(m) S) + (7 ln(m) L^3 / (4 r_bar)) ln(8 ln(m) + 4 S / L^2)`
/// at the current `S = sum r_tilde`.
pub fn regret_bound(state: &CmwState, config: &CmwConfig) -> RegretBound {
    let lnm = (config.m as f64).ln();
    let l = config.loss_range;
    let s = state.r_tilde_sum;
    let value = 3.0 * (lnm * s).sqrt()
        + 7.0 * lnm * l.powi(3) / (4.0 * state.r_bar) * (8.0 * lnm + 4.0 * s / (l * l)).ln();
    RegretBound {
        value,
        default_c2: config.uses_default_c2(),
    }
}

/// What the agent commits to in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub step: usize,
    pub epsilon: f64,
    pub outcome: SolverOutcome,
    pub distribution: Distribution,
    pub constraint: BoxConstraint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmwEngine {
    config: CmwConfig,
    state: CmwState,
}

impl CmwEngine {
    pub fn new(config: CmwConfig) -> Result<Self> {
        config.validate()?;
        let state = CmwState::new(&config);
        let eps0 = epsilon(&state, &config);
        if eps0 * config.loss_range > 1.0 + 1e-12 {
            warn!(
                "initial step {eps0} gives eps*L = {} > 1; the second-order bookkeeping assumes eps*L <= 1",
                eps0 * config.loss_range
            );
        }
        Ok(Self { config, state })
    }

    pub fn config(&self) -> &CmwConfig {
        &self.config
    }

    pub fn state(&self) -> &CmwState {
        &self.state
    }

    pub fn epsilon(&self) -> f64 {
        epsilon(&self.state, &self.config)
    }

    pub fn regret_bound(&self) -> RegretBound {
        regret_bound(&self.state, &self.config)
    }

    /// Normalized weights restricted to `active` (zero elsewhere), shifted by
    /// the smallest active cumulative loss so at least one entry is one.
    fn active_weights(&self, active: &[usize], eps: f64) -> Vec<f64> {
        let cum: Vec<f64> = active.iter().map(|&i| self.state.cumulative[i]).collect();
        let (w, phi) = weights(&cum, eps);
        let mut u = vec![0.0; self.config.m];
        for (&i, wi) in active.iter().zip(w) {
            u[i] = wi / phi;
        }
        u
    }

    pub fn propose(&self, constraint: &BoxConstraint) -> Result<Proposal> {
        if constraint.dim() != self.config.m {
            return Err(CmwError::InvalidArgument(format!(
                "box has {} options, engine has {}",
                constraint.dim(),
                self.config.m
            )));
        }
        let eps = self.epsilon();
        let kind = self.config.effective_solver();
        let outcome = if kind == SolverKind::Zero {
            let all: Vec<usize> = (0..self.config.m).collect();
            solvers::solve(kind, &self.active_weights(&all, eps), eps, constraint)?
        } else {
            let active = prune_dominated(constraint).active;
            solvers::solve(kind, &self.active_weights(&active, eps), eps, constraint)?
        };
        let distribution = distribution(&outcome.weights, eps, &outcome.q)?;
        Ok(Proposal {
            step: self.state.step,
            epsilon: eps,
            outcome,
            distribution,
            constraint: constraint.clone(),
        })
    }

    /// Records the revealed loss; returns the floored second-order term.
    pub fn observe(&mut self, proposal: &Proposal, loss: &[f64]) -> Result<f64> {
        if proposal.step != self.state.step {
            return Err(CmwError::InvalidArgument(format!(
                "proposal for step {} observed at step {}",
                proposal.step, self.state.step
            )));
        }
        proposal.constraint.check_contains(loss, MEMBERSHIP_TOL)?;
        let realized = objective_value(&proposal.outcome.weights, loss, &proposal.outcome.q);
        let r_tilde = realized.max(self.state.r_bar);

        let cfg = &self.config;
        if cfg.check_invariants
            && matches!(cfg.effective_solver(), SolverKind::ExactLp | SolverKind::ClosedFormM2)
        {
            let cap = cfg.loss_range * cfg.loss_range / 4.0;
            if r_tilde > cap + INVARIANT_TOL {
                return Err(CmwError::InvariantViolated(format!(
                    "step {}: second-order term {r_tilde} exceeds L^2/4 = {cap}",
                    self.state.step
                )));
            }
        }

        let s_prev = self.state.s(cfg);
        for (c, l) in self.state.cumulative.iter_mut().zip(loss) {
            *c += l;
        }
        self.state.r_tilde_sum += r_tilde;
        self.state.r_tilde_trace.push(r_tilde);
        self.state.step += 1;

        if cfg.fixed_epsilon.is_none() && cfg.uses_default_c2() {
            let s_now = self.state.s(cfg);
            let (slack1, slack2) = self.state.claims.push(
                r_tilde,
                s_prev,
                s_now,
                self.state.r_bar,
                cfg.c2,
                cfg.loss_range,
            );
            if cfg.check_invariants && (slack1 > INVARIANT_TOL || slack2 > INVARIANT_TOL) {
                return Err(CmwError::InvariantViolated(format!(
                    "step {}: step-size inequalities violated (slacks {slack1:e}, {slack2:e})",
                    self.state.step - 1
                )));
            }
        }
        Ok(r_tilde)
    }
}
