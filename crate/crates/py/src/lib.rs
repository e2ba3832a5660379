//! Python bindings. Scripts and reports cross the boundary as JSON strings.

use std::path::Path;

use evcomp::corpus::{parse_document as parse_line, read_corpus, Script};
use evcomp::evalx::{evaluate, EvalSet};
use evcomp::gc::features::extract_fillnofill_features;
use evcomp::gc::{convert_instance, GcInstance, GcRecord, MappingTable};
use evcomp::inference::Predictor;
use evcomp::toyworld::{generate, ToyConfig, ToyKind};
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: evcomp::Error) -> PyErr {
    match e {
        evcomp::Error::Numeric(_) => PyArithmeticError::new_err(e.to_string()),
        evcomp::Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_json(script: &Script) -> PyResult<String> {
    serde_json::to_string(&script.to_record()).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Validates one corpus line and returns its normalized form.
#[pyfunction]
fn parse_document(line: &str) -> PyResult<String> {
    to_json(&parse_line(line, 1).map_err(py_err)?)
}

/// The event-token pseudo-sentence of a corpus line.
#[pyfunction]
fn pseudo_sentence(line: &str) -> PyResult<Vec<String>> {
    let script = parse_line(line, 1).map_err(py_err)?;
    Ok(evcomp::embeddings::build_pseudo_sentence(&script))
}

/// Synthetic corpus lines; `kind` is "selectional" or "salience".
#[pyfunction]
#[pyo3(signature = (kind, scripts=None, seed=0))]
fn toy_world(kind: &str, scripts: Option<usize>, seed: u64) -> PyResult<Vec<String>> {
    let kind = ToyKind::parse(kind).ok_or_else(|| PyValueError::new_err(format!("unknown toy world {kind:?}")))?;
    let mut config = ToyConfig::for_kind(kind);
    if let Some(n) = scripts {
        config.scripts = n;
    }
    generate(kind, &config, seed).iter().map(to_json).collect()
}

/// Evaluates the "random" or "mostfreq" baseline on a corpus file and
/// returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (corpus, model="mostfreq", seed=0))]
fn evaluate_baseline(py: Python<'_>, corpus: &str, model: &str, seed: u64) -> PyResult<String> {
    let predictor = match model {
        "random" => Predictor::Random,
        "mostfreq" => Predictor::MostFreq,
        _ => return Err(PyValueError::new_err(format!("unknown baseline {model:?}"))),
    };
    let report = py.detach(|| {
        let set = EvalSet::from_scripts(read_corpus(Path::new(corpus))?, seed, None)?;
        let mut rng = evcomp::rng::seeded(evcomp::rng::derive_seed(seed, "predict"));
        let (mut report, _) = evaluate(&set, &predictor, &mut rng, 1)?;
        report.config.seed = seed;
        Ok::<_, evcomp::Error>(report)
    });
    serde_json::to_string(&report.map_err(py_err)?).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn gc_instance(record: &str) -> PyResult<GcInstance> {
    let record: GcRecord = serde_json::from_str(record).map_err(|e| PyValueError::new_err(e.to_string()))?;
    convert_instance(&record, &MappingTable::builtin()).map_err(py_err)
}

/// Open (not locally filled) roles of an implicit-argument record.
#[pyfunction]
fn gc_open_roles(record: &str) -> PyResult<Vec<String>> {
    Ok(gc_instance(record)?.open.iter().map(|o| o.role.clone()).collect())
}

/// Fill/no-fill features for the `role`-th open role of a record.
#[pyfunction]
fn gc_features(record: &str, role: usize) -> PyResult<Vec<String>> {
    let instance = gc_instance(record)?;
    if role >= instance.open.len() {
        return Err(PyValueError::new_err(format!("record has {} open roles", instance.open.len())));
    }
    extract_fillnofill_features(&instance, role).map_err(py_err)
}

/// Loss of one triple from the coherence probabilities of its positive and
/// negative pair.
#[pyfunction]
fn triple_loss(pos: f64, neg: f64) -> f64 {
    evcomp::eventcomp::triple_loss(pos, neg)
}

#[pymodule]
fn evcomp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(parse_document, m)?)?;
    m.add_function(wrap_pyfunction!(pseudo_sentence, m)?)?;
    m.add_function(wrap_pyfunction!(toy_world, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(gc_open_roles, m)?)?;
    m.add_function(wrap_pyfunction!(gc_features, m)?)?;
    m.add_function(wrap_pyfunction!(triple_loss, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
