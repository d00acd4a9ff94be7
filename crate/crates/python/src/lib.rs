//! Python bindings: `import cmw`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cmw_core::adversary;
use cmw_core::experiments::{self, LogisticMapConfig, RandomIntervalConfig, TrialPair};
use cmw_core::solvers::{self, SolverKind};
use cmw_core::{hedge, verify, BoxConstraint, CmwConfig, CmwError};

fn err(e: CmwError) -> PyErr {
    match e {
        CmwError::InvalidArgument(_) | CmwError::UseApproximateSolver { .. } | CmwError::ClosedFormRequiresTwo(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn solver(name: &str) -> PyResult<SolverKind> {
    name.parse().map_err(err)
}

fn make_box(lower: Vec<f64>, upper: Vec<f64>) -> PyResult<BoxConstraint> {
    BoxConstraint::new(lower, upper).map_err(err)
}

/// Per-option loss intervals for one round.
#[pyclass(name = "BoxConstraint", frozen)]
struct PyBox(BoxConstraint);

#[pymethods]
impl PyBox {
    #[new]
    fn new(lower: Vec<f64>, upper: Vec<f64>) -> PyResult<Self> {
        make_box(lower, upper).map(Self)
    }

    #[getter]
    fn lower(&self) -> Vec<f64> {
        self.0.lower().to_vec()
    }

    #[getter]
    fn upper(&self) -> Vec<f64> {
        self.0.upper().to_vec()
    }

    /// Corner `index`: bit `i` set picks option `i`'s upper end.
    fn corner(&self, index: usize) -> Vec<f64> {
        self.0.corner(index)
    }

    fn __len__(&self) -> usize {
        self.0.dim()
    }

    fn __repr__(&self) -> String {
        format!("BoxConstraint(lower={:?}, upper={:?})", self.0.lower(), self.0.upper())
    }
}

/// One round's commitment, to be passed back to `CmwEngine.observe`.
#[pyclass(name = "Proposal", frozen)]
struct PyProposal(cmw_core::Proposal);

#[pymethods]
impl PyProposal {
    #[getter]
    fn step(&self) -> usize {
        self.0.step
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon
    }

    #[getter]
    fn distribution(&self) -> Vec<f64> {
        self.0.distribution.probs().to_vec()
    }

    #[getter]
    fn q(&self) -> Vec<f64> {
        self.0.outcome.q.clone()
    }

    /// Solver value: `r*` for the exact solvers, an upper bound otherwise.
    #[getter]
    fn value(&self) -> f64 {
        self.0.outcome.value
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.0.outcome.weights.clone()
    }

    fn __repr__(&self) -> String {
        format!("Proposal(step={}, epsilon={})", self.0.step, self.0.epsilon)
    }
}

/// The constrained agent.
#[pyclass(name = "CmwEngine")]
struct PyEngine(cmw_core::CmwEngine);

#[pymethods]
impl PyEngine {
    #[new]
    #[pyo3(signature = (m, horizon, loss_range = 1.0, solver = "exact", c1 = None, c2 = None, check_invariants = false))]
    fn new(
        m: usize,
        horizon: usize,
        loss_range: f64,
        solver: &str,
        c1: Option<f64>,
        c2: Option<f64>,
        check_invariants: bool,
    ) -> PyResult<Self> {
        let mut cfg = CmwConfig::new(m, horizon, loss_range, self::solver(solver)?).map_err(err)?;
        if let Some(c1) = c1 {
            cfg = cfg.with_c1(c1).map_err(err)?;
        }
        if let Some(c2) = c2 {
            cfg = cfg.with_c2(c2).map_err(err)?;
        }
        cfg.check_invariants = check_invariants;
        cmw_core::CmwEngine::new(cfg).map(Self).map_err(err)
    }

    fn propose(&self, constraint: &PyBox) -> PyResult<PyProposal> {
        self.0.propose(&constraint.0).map(PyProposal).map_err(err)
    }

    /// Records the loss for `proposal`; returns the step's `r~`.
    fn observe(&mut self, proposal: &PyProposal, loss: Vec<f64>) -> PyResult<f64> {
        self.0.observe(&proposal.0, &loss).map_err(err)
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon()
    }

    #[getter]
    fn step(&self) -> usize {
        self.0.state().step
    }

    #[getter]
    fn cumulative(&self) -> Vec<f64> {
        self.0.state().cumulative.clone()
    }

    #[getter]
    fn r_tilde_sum(&self) -> f64 {
        self.0.state().r_tilde_sum
    }

    #[getter]
    fn r_bar(&self) -> f64 {
        self.0.state().r_bar
    }

    /// Current regret bound; `None` when a custom `c2` voids it.
    #[getter]
    fn regret_bound(&self) -> Option<f64> {
        let b = self.0.regret_bound();
        b.default_c2.then_some(b.value)
    }
}

/// Multiplicative weights with a fixed step.
#[pyclass(name = "Hedge")]
struct PyHedge(hedge::HedgeState);

#[pymethods]
impl PyHedge {
    #[new]
    #[pyo3(signature = (m, horizon, loss_range = 1.0))]
    fn new(m: usize, horizon: usize, loss_range: f64) -> PyResult<Self> {
        hedge::HedgeState::for_horizon(m, horizon, loss_range).map(Self).map_err(err)
    }

    fn distribution(&self) -> Vec<f64> {
        self.0.distribution().probs().to_vec()
    }

    fn observe(&mut self, loss: Vec<f64>) -> PyResult<()> {
        self.0.observe(&loss).map_err(err)
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon()
    }

    #[getter]
    fn cumulative(&self) -> Vec<f64> {
        self.0.cumulative().to_vec()
    }
}

#[pyfunction]
fn hedge_regret_bound(m: usize, horizon: usize, loss_range: f64) -> PyResult<f64> {
    hedge::hedge_regret_bound(m, horizon, loss_range).map_err(err)
}

/// Inner problem for weights `u`, step `eps` and the box; returns `(q, value)`.
#[pyfunction]
#[pyo3(signature = (u, eps, constraint, solver = "exact"))]
fn solve(u: Vec<f64>, eps: f64, constraint: &PyBox, solver: &str) -> PyResult<(Vec<f64>, f64)> {
    let out = solvers::solve(self::solver(solver)?, &u, eps, &constraint.0).map_err(err)?;
    Ok((out.q, out.value))
}

/// Worst-case corner distribution as `([(corner, prob), ...], r_star)`.
#[pyfunction]
fn worst_case_strategy(u: Vec<f64>, eps: f64, constraint: &PyBox) -> PyResult<(Vec<(usize, f64)>, f64)> {
    let (s, r) = adversary::worst_case_strategy(&u, eps, &constraint.0).map_err(err)?;
    Ok((s.corner_probs().to_vec(), r))
}

/// `r*` minus the best response value against `strategy`.
#[pyfunction]
fn verify_equilibrium(strategy: Vec<(usize, f64)>, u: Vec<f64>, eps: f64, constraint: &PyBox) -> PyResult<f64> {
    let s = adversary::CornerStrategy::new(strategy).map_err(err)?;
    adversary::verify_equilibrium(&s, &u, eps, &constraint.0).map_err(err)
}

fn summary_dict<'py>(py: Python<'py>, pairs: &[TrialPair], bin_width: f64) -> PyResult<Bound<'py, PyAny>> {
    let summary = experiments::aggregate(pairs, bin_width).map_err(err)?;
    let json = serde_json::to_string(&summary).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (json,))
}

/// Random-interval experiment; returns the summary as a dict.
#[pyfunction]
#[pyo3(signature = (m = 10, horizon = 200, trials = 100, seed = 0, solver = "exact", adversarial = false, jobs = 1, bin_width = 1.0))]
#[allow(clippy::too_many_arguments)]
fn run_random_intervals<'py>(
    py: Python<'py>,
    m: usize,
    horizon: usize,
    trials: usize,
    seed: u64,
    solver: &str,
    adversarial: bool,
    jobs: usize,
    bin_width: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = RandomIntervalConfig {
        m,
        horizon,
        trials,
        seed,
        solver: self::solver(solver)?,
        ..RandomIntervalConfig::default()
    };
    let pairs = py
        .detach(|| {
            if adversarial {
                experiments::run_adversarial(&cfg, jobs)
            } else {
                experiments::run_random_intervals(&cfg, jobs)
            }
        })
        .map_err(err)?;
    summary_dict(py, &pairs, bin_width)
}

/// Logistic-map identification run; returns the summary as a dict, with
/// each trial's best-in-hindsight option under `best_index`.
#[pyfunction]
#[pyo3(signature = (seed = 0, horizon = 200, m = 50, trials = 1, solver = "approx", x0 = 0.2, theta_true = 3.57, noise = 0.05, jobs = 1))]
#[allow(clippy::too_many_arguments)]
fn run_logistic<'py>(
    py: Python<'py>,
    seed: u64,
    horizon: usize,
    m: usize,
    trials: usize,
    solver: &str,
    x0: f64,
    theta_true: f64,
    noise: f64,
    jobs: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = LogisticMapConfig {
        seed,
        horizon,
        m,
        trials,
        solver: self::solver(solver)?,
        x0,
        theta_true,
        noise_bound: noise,
        ..LogisticMapConfig::default()
    };
    let pairs = py.detach(|| experiments::run_logistic(&cfg, jobs)).map_err(err)?;
    let out = summary_dict(py, &pairs, 1.0)?;
    let best: Vec<usize> = pairs.iter().map(|p| p.cmw.summary.best_index).collect();
    out.cast::<PyDict>()?.set_item("best_index", best)?;
    Ok(out)
}

/// Self-check suites; returns `[(name, passed, detail), ...]`.
#[pyfunction]
#[pyo3(signature = (seed = 0, games = 200, instances = 50, m = 4, jobs = 1))]
fn run_verify(
    py: Python<'_>,
    seed: u64,
    games: usize,
    instances: usize,
    m: usize,
    jobs: usize,
) -> PyResult<Vec<(String, bool, String)>> {
    let reports = py
        .detach(|| -> cmw_core::Result<Vec<verify::SuiteReport>> {
            Ok(vec![
                verify::psd_suite(1000, seed)?,
                verify::solver_suite(instances, seed)?,
                verify::equilibrium_suite(instances, m, seed)?,
                verify::bounds_suite(games, seed, jobs)?,
            ])
        })
        .map_err(err)?;
    Ok(reports.into_iter().map(|r| (r.name, r.passed, r.detail)).collect())
}

#[pymodule]
fn cmw(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBox>()?;
    m.add_class::<PyProposal>()?;
    m.add_class::<PyEngine>()?;
    m.add_class::<PyHedge>()?;
    m.add_function(wrap_pyfunction!(hedge_regret_bound, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(worst_case_strategy, m)?)?;
    m.add_function(wrap_pyfunction!(verify_equilibrium, m)?)?;
    m.add_function(wrap_pyfunction!(run_random_intervals, m)?)?;
    m.add_function(wrap_pyfunction!(run_logistic, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    Ok(())
}
