use serde::{Deserialize, Serialize};

use super::records::TrialPair;
use crate::error::{CmwError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub origin: f64,
    pub bin_width: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: &[f64], bin_width: f64) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let origin = (min / bin_width).floor() * bin_width;
        let mut counts = Vec::new();
        for &v in values {
            let b = ((v - origin) / bin_width).floor().max(0.0) as usize;
            if counts.len() <= b {
                counts.resize(b + 1, 0);
            }
            counts[b] += 1;
        }
        Self { origin, bin_width, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentStats {
    pub median_regret: f64,
    pub mean_regret: f64,
    pub median_expected_cost: f64,
    pub mean_expected_cost: f64,
    pub mean_realized_cost: f64,
    pub max_regret_to_bound: f64,
    pub expected_cost_histogram: Histogram,
    pub realized_cost_histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: usize,
    pub cmw: AgentStats,
    pub hedge: AgentStats,
    pub mean_best_cost: f64,
    pub best_cost_histogram: Histogram,
    /// Fraction of trials where the constrained agent's expected cost is
    /// strictly below hedge's.
    pub cmw_beats_hedge_expected: f64,
    pub cmw_beats_hedge_realized: f64,
    pub cmw_negative_regret: f64,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn fraction(flags: impl Iterator<Item = bool>, n: usize) -> f64 {
    flags.filter(|&b| b).count() as f64 / n as f64
}

fn agent_stats<'a>(records: impl Iterator<Item = &'a super::TrialRecord> + Clone, bin_width: f64) -> AgentStats {
    let regret: Vec<f64> = records.clone().map(|r| r.summary.regret).collect();
    let exp: Vec<f64> = records.clone().map(|r| r.summary.expected_cost).collect();
    let real: Vec<f64> = records.clone().map(|r| r.summary.realized_cost).collect();
    let ratio = records
        .map(|r| r.summary.regret / r.summary.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    AgentStats {
        median_regret: median(&regret),
        mean_regret: mean(&regret),
        median_expected_cost: median(&exp),
        mean_expected_cost: mean(&exp),
        mean_realized_cost: mean(&real),
        max_regret_to_bound: ratio,
        expected_cost_histogram: Histogram::new(&exp, bin_width),
        realized_cost_histogram: Histogram::new(&real, bin_width),
    }
}

/// Cross-trial statistics; `bin_width` sets the cost histograms' resolution.
pub fn aggregate(pairs: &[TrialPair], bin_width: f64) -> Result<Summary> {
    if pairs.is_empty() {
        return Err(CmwError::InvalidArgument("no trials to aggregate".into()));
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(CmwError::InvalidArgument(format!("bad bin width {bin_width}")));
    }
    let n = pairs.len();
    let best: Vec<f64> = pairs.iter().map(|p| p.cmw.summary.best_cost).collect();
    Ok(Summary {
        trials: n,
        cmw: agent_stats(pairs.iter().map(|p| &p.cmw), bin_width),
        hedge: agent_stats(pairs.iter().map(|p| &p.hedge), bin_width),
        mean_best_cost: mean(&best),
        best_cost_histogram: Histogram::new(&best, bin_width),
        cmw_beats_hedge_expected: fraction(
            pairs.iter().map(|p| p.cmw.summary.expected_cost < p.hedge.summary.expected_cost),
            n,
        ),
        cmw_beats_hedge_realized: fraction(
            pairs.iter().map(|p| p.cmw.summary.realized_cost < p.hedge.summary.realized_cost),
            n,
        ),
        cmw_negative_regret: fraction(pairs.iter().map(|p| p.cmw.summary.regret < 0.0), n),
    })
}
