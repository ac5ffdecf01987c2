//! Python bindings: axis updates, score parsing, metrics, ICC and offline
//! sessions. Structured results are returned as plain dicts and lists.

use std::sync::{Arc, Mutex};

use persona_core::analyzer::{self, Lexicon, ScoreRange, ScoreResult};
use persona_core::axis::{self, AxisConfig, AxisState, ProbVector, SelectionMode, Weights};
use persona_core::eval::{self, PredictionOutcome};
use persona_core::orchestrator::{
    run_scripted_session, trajectory_csv, trajectory_rows, Backends, Scenario as CoreScenario,
    Session as CoreSession,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Serialize through JSON into native Python objects.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn range(min: i64, max: i64) -> PyResult<ScoreRange> {
    ScoreRange::new(min, max).map_err(value_err)
}

fn axis_inputs(
    states: usize,
    default_state: usize,
    sigma: f64,
    weights: (f64, f64, f64, f64),
    current: usize,
    carried: Vec<f64>,
) -> PyResult<(AxisConfig, AxisState)> {
    let cfg = AxisConfig {
        states,
        default_state,
        sigma,
        weights: Weights::new(weights.0, weights.1, weights.2, weights.3),
        mode: SelectionMode::Deterministic,
        rng_seed: None,
    };
    cfg.validate().map_err(value_err)?;
    let state = AxisState {
        current,
        carried_probs: ProbVector::new(carried).map_err(value_err)?,
    };
    state.validate_for(&cfg).map_err(value_err)?;
    Ok((cfg, state))
}

/// Transition probabilities of one axis.
///
/// `weights` is `(w_default, w_current, w_carried, w_outside)`.
#[pyfunction]
#[pyo3(signature = (states, default_state, sigma, weights, current, carried, outside))]
fn transition_probs(
    states: usize,
    default_state: usize,
    sigma: f64,
    weights: (f64, f64, f64, f64),
    current: usize,
    carried: Vec<f64>,
    outside: Vec<f64>,
) -> PyResult<Vec<f64>> {
    let (cfg, state) = axis_inputs(states, default_state, sigma, weights, current, carried)?;
    let outside = ProbVector::new(outside).map_err(value_err)?;
    Ok(axis::transition_probs(&cfg, &state, &outside)
        .map_err(value_err)?
        .into_inner())
}

/// Carried probabilities after one step, same arguments as
/// `transition_probs`.
#[pyfunction]
#[pyo3(signature = (states, default_state, sigma, weights, current, carried, outside))]
fn updated_carried_probs(
    states: usize,
    default_state: usize,
    sigma: f64,
    weights: (f64, f64, f64, f64),
    current: usize,
    carried: Vec<f64>,
    outside: Vec<f64>,
) -> PyResult<Vec<f64>> {
    let (cfg, state) = axis_inputs(states, default_state, sigma, weights, current, carried)?;
    let outside = ProbVector::new(outside).map_err(value_err)?;
    Ok(axis::updated_carried_probs(&cfg, &state, &outside)
        .map_err(value_err)?
        .into_inner())
}

#[pyfunction]
fn mirror(probs: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(axis::mirror(&ProbVector::new(probs).map_err(value_err)?).into_inner())
}

/// First number in `text`, rounded and clamped; `None` if there is none.
#[pyfunction]
#[pyo3(signature = (text, min=0, max=10))]
fn parse_score(text: &str, min: i64, max: i64) -> PyResult<Option<i64>> {
    Ok(analyzer::parse_score(text, range(min, max)?).map(|p| p.score))
}

#[pyfunction]
#[pyo3(signature = (score, states, min=0, max=10))]
fn score_to_state(score: i64, states: usize, min: i64, max: i64) -> PyResult<usize> {
    if states < 2 {
        return Err(value_err("states must be at least 2"));
    }
    Ok(analyzer::score_to_state(score, range(min, max)?, states))
}

/// Score of `message` on `axis` with the built-in lexicon.
#[pyfunction]
fn lexicon_score(axis: &str, message: &str) -> PyResult<i64> {
    Lexicon::builtin()
        .score(axis, message)
        .ok_or_else(|| value_err(format!("lexicon has no axis `{axis}`")))
}

/// ICC(2,1) of a messages x raters matrix.
#[pyfunction]
fn icc(ratings: Vec<Vec<f64>>) -> PyResult<f64> {
    eval::icc(&ratings).map_err(value_err)
}

/// Metrics over `(predicted, target)` pairs; `predicted` is `None` for an
/// unparseable prediction.
#[pyfunction]
fn compute_metrics<'py>(py: Python<'py>, pairs: Vec<(Option<i64>, i64)>) -> PyResult<Bound<'py, PyAny>> {
    let outcomes: Vec<PredictionOutcome> = pairs
        .into_iter()
        .enumerate()
        .map(|(record, (predicted, target))| PredictionOutcome {
            record,
            result: match predicted {
                Some(score) => ScoreResult::Ok { score, clamped: false },
                None => ScoreResult::ParseError { raw_text: String::new() },
            },
            target,
        })
        .collect();
    to_py(py, &eval::compute_metrics(&outcomes).map_err(value_err)?)
}

#[pyclass(frozen)]
struct Scenario {
    inner: Arc<CoreScenario>,
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(CoreScenario::load(path).map_err(value_err)?),
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(CoreScenario::from_json(text).map_err(value_err)?),
        })
    }

    #[getter]
    fn scenario_id(&self) -> &str {
        &self.inner.scenario_id
    }

    #[getter]
    fn title(&self) -> &str {
        &self.inner.title
    }

    #[getter]
    fn role_description(&self) -> &str {
        &self.inner.role_description
    }

    fn __repr__(&self) -> String {
        format!("Scenario({:?})", self.inner.scenario_id)
    }
}

/// An offline session: built-in lexicon analyzer and echo replies.
#[pyclass(frozen)]
struct Session {
    inner: Mutex<CoreSession>,
    backends: Backends,
}

#[pymethods]
impl Session {
    #[new]
    #[pyo3(signature = (scenario, seed=0))]
    fn new(scenario: &Scenario, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: Mutex::new(CoreSession::new(scenario.inner.clone(), seed).map_err(value_err)?),
            backends: Backends::hermetic(),
        })
    }

    /// Processes one user message and returns the full turn trace.
    fn send<'py>(&self, py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
        let trace = py
            .detach(|| self.inner.lock().unwrap().process_user_message(&self.backends, text))
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        to_py(py, &trace)
    }

    fn snapshot<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let snapshot = self.inner.lock().unwrap().snapshot();
        to_py(py, &snapshot)
    }

    fn state(&self, model: &str, axis: &str) -> Option<usize> {
        self.inner.lock().unwrap().snapshot().state(model, axis)
    }

    #[getter]
    fn system_prompt(&self) -> String {
        self.inner.lock().unwrap().system_prompt()
    }

    #[getter]
    fn turns(&self) -> usize {
        self.inner.lock().unwrap().turns().len()
    }

    fn trajectory_csv(&self) -> PyResult<String> {
        let session = self.inner.lock().unwrap();
        let rows = trajectory_rows(session.scenario(), session.turns()).map_err(value_err)?;
        Ok(trajectory_csv(&rows))
    }
}

/// Runs `messages` through an offline session and returns the trajectory
/// CSV.
#[pyfunction]
#[pyo3(signature = (scenario, messages, seed=0))]
fn simulate(py: Python<'_>, scenario: &Scenario, messages: Vec<String>, seed: u64) -> PyResult<String> {
    let s = scenario.inner.clone();
    py.detach(move || {
        let turns = run_scripted_session(s.clone(), &messages, seed, &Backends::hermetic())
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        let rows = trajectory_rows(&s, &turns).map_err(value_err)?;
        Ok(trajectory_csv(&rows))
    })
}

#[pymodule]
fn persona(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(transition_probs, m)?)?;
    m.add_function(wrap_pyfunction!(updated_carried_probs, m)?)?;
    m.add_function(wrap_pyfunction!(mirror, m)?)?;
    m.add_function(wrap_pyfunction!(parse_score, m)?)?;
    m.add_function(wrap_pyfunction!(score_to_state, m)?)?;
    m.add_function(wrap_pyfunction!(lexicon_score, m)?)?;
    m.add_function(wrap_pyfunction!(icc, m)?)?;
    m.add_function(wrap_pyfunction!(compute_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_class::<Scenario>()?;
    m.add_class::<Session>()?;
    Ok(())
}
