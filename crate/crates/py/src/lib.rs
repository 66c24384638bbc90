//! Python bindings. Models travel as MPS text, records and reports as the
//! same JSON documents the command line prints, converted to dicts.

use std::time::Duration;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde_json::Value;

use structprop_core::bench::shifted_geometric_mean as sgm;
use structprop_core::detect::{detect_all, detect_family, records_from_json, records_to_json, DetectConfig, Family};
use structprop_core::mps::parse_mps;
use structprop_core::propagate::{run_fixpoint, PropagatorConfig};
use structprop_core::search::{dfs_solve, PropFreq, SearchConfig};
use structprop_core::synth::{obfuscate as obfuscate_instance, reverse_sample, ObfuscationConfig, SizeParams};
use structprop_core::verify::{ladder_report, run_ladders, LadderConfig};
use structprop_core::{DomainBox, MipModel, Tolerances};

fn value_error(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, doc: &Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (doc.to_string(),))
}

fn model_of(mps: &str) -> PyResult<MipModel> {
    parse_mps(mps.as_bytes()).map_err(value_error)
}

fn families_of(family: &str) -> PyResult<Vec<Family>> {
    if family.eq_ignore_ascii_case("all") {
        Ok(Family::ALL.to_vec())
    } else {
        Ok(vec![family.parse().map_err(value_error)?])
    }
}

fn detect_config(tolerance: f64) -> DetectConfig {
    DetectConfig {
        tolerances: Tolerances::with_feasibility(tolerance),
        ..DetectConfig::default()
    }
}

fn records_of(model: &MipModel, records: Option<&str>, tolerance: f64) -> PyResult<Vec<structprop_core::detect::SemanticRecord>> {
    match records {
        Some(text) => {
            let doc: Value = serde_json::from_str(text).map_err(value_error)?;
            records_from_json(model, &doc).map_err(value_error)
        }
        None => Ok(detect_all(model, &detect_config(tolerance)).records),
    }
}

/// Names of the supported families.
#[pyfunction]
fn families() -> Vec<&'static str> {
    Family::ALL.iter().map(|f| f.name()).collect()
}

/// Records document of an MPS model.
#[pyfunction]
#[pyo3(signature = (mps, family = "all", tolerance = 1e-6))]
fn detect<'py>(py: Python<'py>, mps: &str, family: &str, tolerance: f64) -> PyResult<Bound<'py, PyAny>> {
    let model = model_of(mps)?;
    let config = detect_config(tolerance);
    let (records, warnings) = match families_of(family)?.as_slice() {
        [one] => (detect_family(&model, *one, &config), Vec::new()),
        _ => {
            let r = detect_all(&model, &config);
            (r.records, r.warnings)
        }
    };
    to_py(py, &records_to_json(&model, &records, &warnings).map_err(value_error)?)
}

/// Root fixpoint. `records` is a records document as JSON text; records are
/// detected when it is omitted.
#[pyfunction]
#[pyo3(signature = (mps, records = None, rounds = 100, tolerance = 1e-6))]
fn propagate<'py>(
    py: Python<'py>,
    mps: &str,
    records: Option<&str>,
    rounds: usize,
    tolerance: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let model = model_of(mps)?;
    let records = records_of(&model, records, tolerance)?;
    let config = PropagatorConfig {
        max_fixpoint_rounds: rounds,
        tolerances: Tolerances::with_feasibility(tolerance),
        ..PropagatorConfig::default()
    };
    let mut dom = DomainBox::from_model(&model);
    let out = run_fixpoint(&model, &records, &mut dom, &config);
    to_py(py, &out.to_named_json(&model, records.len(), false))
}

/// Depth-first search; `propfreq` is "root" or "all".
#[pyfunction]
#[pyo3(signature = (mps, propfreq = "root", node_limit = 1_000_000, time_limit = 60.0, records = None, use_records = true))]
fn search<'py>(
    py: Python<'py>,
    mps: &str,
    propfreq: &str,
    node_limit: u64,
    time_limit: f64,
    records: Option<&str>,
    use_records: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let propfreq = match propfreq {
        "root" => PropFreq::RootOnly,
        "all" => PropFreq::EveryNode,
        other => return Err(value_error(format!("propfreq must be \"root\" or \"all\", not {other:?}"))),
    };
    if !(time_limit.is_finite() && time_limit >= 0.0) {
        return Err(value_error("time_limit must be a non-negative number of seconds"));
    }
    let model = model_of(mps)?;
    let records = if use_records { records_of(&model, records, 1e-6)? } else { Vec::new() };
    let config = SearchConfig {
        propfreq,
        node_limit,
        time_limit: Duration::from_secs_f64(time_limit),
        ..SearchConfig::default()
    };
    let result = py.detach(|| dfs_solve(&model, &records, &config)).map_err(value_error)?;
    to_py(py, &result.to_named_json(&model, propfreq, records.len(), false))
}

/// A planted instance as `(mps_text, sidecar)`.
#[pyfunction]
#[pyo3(signature = (family, seed = 0, size = None, obfuscate = true))]
fn synth<'py>(
    py: Python<'py>,
    family: &str,
    seed: u64,
    size: Option<&str>,
    obfuscate: bool,
) -> PyResult<(String, Bound<'py, PyAny>)> {
    let family: Family = family.parse().map_err(value_error)?;
    let sizes: SizeParams = size.map(str::parse).transpose().map_err(value_error)?.unwrap_or_default();
    let mut instance = reverse_sample(family, sizes, seed).map_err(value_error)?;
    if obfuscate {
        let config = ObfuscationConfig {
            seed,
            ..ObfuscationConfig::default()
        };
        instance = obfuscate_instance(&instance, &config).map_err(value_error)?;
    }
    let mps = structprop_core::mps::write_mps(&instance.model).map_err(value_error)?;
    let sidecar = serde_json::to_value(instance.sidecar().map_err(value_error)?).map_err(value_error)?;
    Ok((String::from_utf8(mps).map_err(value_error)?, to_py(py, &sidecar)?))
}

/// Gate ladder report for `family` ("all" or one name).
#[pyfunction]
#[pyo3(signature = (family = "all", suite_seed = 0, detector_suite = 50, soundness_suite = 100))]
fn verify<'py>(
    py: Python<'py>,
    family: &str,
    suite_seed: u64,
    detector_suite: usize,
    soundness_suite: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let families = families_of(family)?;
    let config = LadderConfig {
        detector_suite,
        soundness_suite,
        ..LadderConfig::default()
    };
    let results = py.detach(|| run_ladders(&families, suite_seed, &config));
    to_py(py, &ladder_report(&results, suite_seed, false))
}

/// `None` for an empty list, a non-positive shift or a value at or below
/// `-shift`.
#[pyfunction]
fn shifted_geometric_mean(values: Vec<f64>, shift: f64) -> Option<f64> {
    sgm(&values, shift)
}

#[pymodule]
fn structprop(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(families, m)?)?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(propagate, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(shifted_geometric_mean, m)?)?;
    Ok(())
}
