use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{CmwError, Result};
use crate::game::{best_in_hindsight, Distribution};

pub const CSV_HEADER: &str = "t,epsilon,r_tilde,p_expected_loss,realized_loss,action,best_cum,regret,bound";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    /// Step number, starting at 1.
    pub t: usize,
    /// Step size used to build this step's distribution.
    pub epsilon: f64,
    /// Floored second-order term for the constrained agent; the plain
    /// `l^T Q l` for hedge.
    pub r_tilde: f64,
    pub p_expected_loss: f64,
    pub realized_loss: f64,
    pub action: usize,
    pub best_cum: f64,
    pub regret: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub expected_cost: f64,
    pub realized_cost: f64,
    pub best_cost: f64,
    pub best_index: usize,
    pub regret: f64,
    pub realized_regret: f64,
    pub bound: f64,
    pub max_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub algorithm: String,
    pub rows: Vec<TrialRow>,
    pub summary: TrialSummary,
}

/// Both agents' traces for one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPair {
    pub trial: usize,
    pub cmw: TrialRecord,
    pub hedge: TrialRecord,
}

/// `%.17g`-style rendering: round-trips every `f64`.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.16e}");
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mant), exp.abs())
    }
}

impl TrialRecord {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.t,
                format_g17(r.epsilon),
                format_g17(r.r_tilde),
                format_g17(r.p_expected_loss),
                format_g17(r.realized_loss),
                r.action,
                format_g17(r.best_cum),
                format_g17(r.regret),
                format_g17(r.bound),
            );
        }
        out
    }
}

/// Accumulates one agent's trace.
#[derive(Debug, Clone)]
pub(crate) struct Tracker {
    cumulative: Vec<f64>,
    expected: f64,
    realized: f64,
    max_loss: f64,
    min_loss: f64,
    max_probability: f64,
    rows: Vec<TrialRow>,
}

impl Tracker {
    pub fn new(m: usize, horizon: usize) -> Self {
        Self {
            cumulative: vec![0.0; m],
            expected: 0.0,
            realized: 0.0,
            max_loss: f64::NEG_INFINITY,
            min_loss: f64::INFINITY,
            max_probability: 0.0,
            rows: Vec::with_capacity(horizon),
        }
    }

    /// Smallest and largest single loss entry seen so far.
    pub fn loss_span(&self) -> (f64, f64) {
        (self.min_loss, self.max_loss)
    }

    pub fn push(&mut self, epsilon: f64, r_tilde: f64, dist: &Distribution, action: usize, loss: &[f64], bound: f64) {
        let pl = dist.expected(loss);
        self.expected += pl;
        self.realized += loss[action];
        for (c, l) in self.cumulative.iter_mut().zip(loss) {
            *c += l;
            self.max_loss = self.max_loss.max(*l);
            self.min_loss = self.min_loss.min(*l);
        }
        self.max_probability = dist.probs().iter().copied().fold(0.0, f64::max);
        let (_, best) = best_in_hindsight(&self.cumulative);
        self.rows.push(TrialRow {
            t: self.rows.len() + 1,
            epsilon,
            r_tilde,
            p_expected_loss: pl,
            realized_loss: loss[action],
            action,
            best_cum: best,
            regret: self.expected - best,
            bound,
        });
    }

    pub fn finish(self, algorithm: &str) -> TrialRecord {
        let (best_index, best_cost) = best_in_hindsight(&self.cumulative);
        let bound = self.rows.last().map_or(0.0, |r| r.bound);
        TrialRecord {
            algorithm: algorithm.to_string(),
            rows: self.rows,
            summary: TrialSummary {
                expected_cost: self.expected,
                realized_cost: self.realized,
                best_cost,
                best_index,
                regret: self.expected - best_cost,
                realized_regret: self.realized - best_cost,
                bound,
                max_probability: self.max_probability,
            },
        }
    }
}

/// Fails when a record's regret exceeds its bound by more than `1e-9`.
pub(crate) fn check_bound(record: &TrialRecord, label: &str) -> Result<()> {
    let s = &record.summary;
    if s.regret > s.bound + 1e-9 {
        return Err(CmwError::InvariantViolated(format!(
            "{label}: regret {} exceeds bound {}",
            s.regret, s.bound
        )));
    }
    Ok(())
}
