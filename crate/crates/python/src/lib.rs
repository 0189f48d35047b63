use ::basiscorr::lhv::{self, PolytopeVerdict};
use ::basiscorr::protocol::{self, ChoiceMode, Distribution, Scenario};
use ::basiscorr::{cli, reality, stats};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn scenario(mode: &str, choice_prob: f64) -> PyResult<Scenario> {
    let mode: ChoiceMode = mode.parse().map_err(value_error)?;
    let s = Scenario::new(mode, choice_prob);
    s.validate().map_err(value_error)?;
    Ok(s)
}

fn distribution(probs: Vec<f64>) -> PyResult<Distribution> {
    let probs: [f64; 16] = probs.try_into().map_err(|v: Vec<f64>| {
        value_error(format!("expected 16 probabilities, got {}", v.len()))
    })?;
    Distribution::new(probs).map_err(value_error)
}

/// Amplitudes of (|00⟩ − |11⟩)/√2.
#[pyfunction]
fn bell_state() -> Vec<Complex64> {
    protocol::bell_state().amplitudes().to_vec()
}

/// Final 16×16 density matrix as nested lists of complex numbers.
#[pyfunction]
#[pyo3(signature = (mode="coherent", choice_prob=0.5))]
fn final_density(mode: &str, choice_prob: f64) -> PyResult<Vec<Vec<Complex64>>> {
    let rho = protocol::build_final_density(&scenario(mode, choice_prob)?).map_err(value_error)?;
    Ok(rho.entries().rows())
}

/// Outcome probabilities in basis-index order (q1 most significant, +1 ↔ bit 0).
#[pyfunction]
#[pyo3(signature = (mode="coherent", choice_prob=0.5))]
fn outcome_distribution(mode: &str, choice_prob: f64) -> PyResult<Vec<f64>> {
    let d = protocol::scenario_distribution(&scenario(mode, choice_prob)?).map_err(value_error)?;
    Ok(d.probs().to_vec())
}

#[pyfunction]
#[pyo3(signature = (probs, epsilon=reality::DEFAULT_EPSILON))]
fn hardy_chain_check<'py>(
    py: Python<'py>,
    probs: Vec<f64>,
    epsilon: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = reality::hardy_chain_check(&distribution(probs)?, epsilon).map_err(value_error)?;
    let out = PyDict::new(py);
    out.set_item("facts", r.facts().to_vec())?;
    out.set_item("established", r.established.to_vec())?;
    out.set_item("contradiction", r.contradiction)?;
    out.set_item("verdict", r.verdict())?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (probs, epsilon=reality::DEFAULT_EPSILON))]
fn certainty_predictions<'py>(
    py: Python<'py>,
    probs: Vec<f64>,
    epsilon: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let preds =
        reality::certainty_predictions(&distribution(probs)?, epsilon).map_err(value_error)?;
    preds
        .into_iter()
        .map(|p| {
            let given = PyDict::new(py);
            for (var, sign) in p.given.constrained() {
                given.set_item(var.name(), sign.value())?;
            }
            let out = PyDict::new(py);
            out.set_item("given", given)?;
            out.set_item("variable", p.predicted_variable.name())?;
            out.set_item("value", p.predicted_value.value())?;
            out.set_item("confidence", p.confidence)?;
            Ok(out)
        })
        .collect()
}

/// `(delta_q3, delta_q4, signaling)` for the table conditioned on (q1, q2).
#[pyfunction]
#[pyo3(signature = (probs, tol=lhv::DEFAULT_TOL))]
fn no_signaling_check(probs: Vec<f64>, tol: f64) -> PyResult<(f64, f64, bool)> {
    let t = lhv::conditional_table(&distribution(probs)?).map_err(value_error)?;
    let r = lhv::no_signaling_check(&t, tol);
    Ok((r.delta_q3, r.delta_q4, r.signaling))
}

/// Verdict label and, when it is not signaling, the largest CHSH combination.
#[pyfunction]
#[pyo3(signature = (probs, tol=lhv::DEFAULT_TOL))]
fn local_polytope_check(probs: Vec<f64>, tol: f64) -> PyResult<(String, Option<f64>)> {
    let t = lhv::conditional_table(&distribution(probs)?).map_err(value_error)?;
    let v = lhv::local_polytope_check(&t, tol);
    let value = match &v {
        PolytopeVerdict::Local { max_combination } => Some(*max_combination),
        PolytopeVerdict::NonlocalNosignaling { value, .. } => Some(*value),
        PolytopeVerdict::Signaling { .. } => None,
    };
    Ok((v.label().to_string(), value))
}

/// PR box as a 16-entry distribution with uniform inputs.
#[pyfunction]
fn pr_box() -> Vec<f64> {
    lhv::ConditionalTable::pr_box()
        .with_uniform_inputs()
        .probs()
        .to_vec()
}

type Pair = (i8, i8);

/// `((f(+1), f(−1)), (g(+1), g(−1)), chsh)` for all 16 strategies.
#[pyfunction]
fn enumerate_strategies() -> Vec<(Pair, Pair, i32)> {
    lhv::enumerate_strategies()
        .into_iter()
        .map(|s| {
            let (f, g) = (s.strategy.f, s.strategy.g);
            (
                (f[0].value(), f[1].value()),
                (g[0].value(), g[1].value()),
                s.chsh,
            )
        })
        .collect()
}

#[pyfunction]
fn chsh_value(a0: f64, a1: f64, b0: f64, b1: f64) -> PyResult<f64> {
    stats::chsh_value(
        &protocol::bell_state(),
        &stats::ChshSettings::new(a0, a1, b0, b1),
    )
    .map_err(value_error)
}

/// Counts of `n` draws in basis-index order.
#[pyfunction]
fn sample(probs: Vec<f64>, n: u64, seed: u64) -> PyResult<Vec<u64>> {
    let r = stats::sample(&distribution(probs)?, n, seed).map_err(value_error)?;
    Ok(r.counts.to_vec())
}

/// Runs the command-line interface in-process and returns its stdout.
#[pyfunction]
fn run_cli(args: Vec<String>) -> PyResult<String> {
    let argv = std::iter::once("basiscorr".to_string()).chain(args);
    cli::run(argv).map_err(value_error)
}

#[pymodule]
pub fn basiscorr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(bell_state, m)?)?;
    m.add_function(wrap_pyfunction!(final_density, m)?)?;
    m.add_function(wrap_pyfunction!(outcome_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(hardy_chain_check, m)?)?;
    m.add_function(wrap_pyfunction!(certainty_predictions, m)?)?;
    m.add_function(wrap_pyfunction!(no_signaling_check, m)?)?;
    m.add_function(wrap_pyfunction!(local_polytope_check, m)?)?;
    m.add_function(wrap_pyfunction!(pr_box, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_strategies, m)?)?;
    m.add_function(wrap_pyfunction!(chsh_value, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
