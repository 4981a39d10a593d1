//! Python bindings for `patternforge`.
//!
//! Structured values (pattern instances, catalog entries) cross the boundary
//! as plain dicts and lists through their JSON form. Images and descriptor
//! sets are wrapped classes.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use patternforge::forge;
use patternforge::matcher::{self, AssignedPair, DescriptorSet, Hit, MatchList, PromptAssignment, QueryMatches};
use patternforge::metrics::{self, GroundTruth, Prediction};
use patternforge::patterns::{self, PatternCombo, PatternInstance, PatternSplit};
use patternforge::{seed, synth, Error, Image};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py<'py, T: Serialize + ?Sized>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(format!("malformed value: {e}")))
}

#[pyclass(name = "Image", module = "patternforge", from_py_object)]
#[derive(Clone)]
pub struct PyImage {
    inner: Image,
}

#[pymethods]
impl PyImage {
    /// Interleaved 8-bit RGB, row-major.
    #[new]
    fn new(width: u32, height: u32, data: &[u8]) -> PyResult<Self> {
        Image::new(width, height, data.to_vec()).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Image::load(path).map(|inner| Self { inner }).map_err(py_err)
    }

    /// Deterministic synthetic source image.
    #[staticmethod]
    fn synthetic(seed: u64, width: u32, height: u32) -> Self {
        Self { inner: synth::source_image(seed, width, height) }
    }

    fn save_png(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save_png(path).map_err(py_err)
    }

    #[getter]
    fn width(&self) -> u32 {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> u32 {
        self.inner.height()
    }

    fn tobytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.inner.data())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.inner.width(), self.inner.height())
    }
}

#[pyclass(name = "DescriptorSet", module = "patternforge", from_py_object)]
#[derive(Clone)]
pub struct PyDescriptorSet {
    inner: DescriptorSet,
}

#[pymethods]
impl PyDescriptorSet {
    /// Rows must be unit-norm and ids unique.
    #[new]
    fn new(ids: Vec<String>, rows: Vec<Vec<f32>>) -> PyResult<Self> {
        DescriptorSet::from_rows(ids, rows).map(|inner| Self { inner }).map_err(py_err)
    }

    /// Reads an `APDS` file and its `.ids` sidecar.
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        matcher::read_descriptors(path).map(|inner| Self { inner }).map_err(py_err)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        matcher::write_descriptors(&self.inner, path).map_err(py_err)
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.inner.ids().to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn rows(&self) -> Vec<Vec<f32>> {
        (0..self.inner.len()).map(|i| self.inner.row(i).to_vec()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("DescriptorSet(count={}, dim={})", self.inner.len(), self.inner.dim())
    }
}

type PyMatches = Vec<(String, Vec<(String, f64)>)>;

fn matches_to_py(list: MatchList) -> PyMatches {
    list.queries
        .into_iter()
        .map(|q| (q.query_id, q.hits.into_iter().map(|h| (h.gallery_id, h.score)).collect()))
        .collect()
}

fn matches_from_py(rows: PyMatches) -> MatchList {
    MatchList {
        queries: rows
            .into_iter()
            .map(|(query_id, hits)| QueryMatches {
                query_id,
                hits: hits.into_iter().map(|(gallery_id, score)| Hit { gallery_id, score }).collect(),
            })
            .collect(),
    }
}

fn ground_truth(gt: BTreeMap<String, String>) -> PyResult<GroundTruth> {
    GroundTruth::new(gt).map_err(py_err)
}

/// Catalog entries as dicts with `id`, `category`, `split` and `param_schema`.
#[pyfunction]
fn catalog(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, patterns::catalog())
}

#[pyfunction]
fn sample_instance<'py>(py: Python<'py>, pattern_id: &str, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &patterns::sample_instance(pattern_id, seed).map_err(py_err)?)
}

#[pyfunction]
fn apply(image: &PyImage, instance: &Bound<'_, PyAny>) -> PyResult<PyImage> {
    let instance: PatternInstance = from_py(instance)?;
    patterns::apply(&image.inner, &instance).map(|inner| PyImage { inner }).map_err(py_err)
}

/// Applies instances left to right.
#[pyfunction]
fn apply_combo(image: &PyImage, instances: &Bound<'_, PyAny>) -> PyResult<PyImage> {
    let combo: PatternCombo = from_py(instances)?;
    patterns::apply_combo(&image.inner, &combo).map(|inner| PyImage { inner }).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (split, seed, kmin = 1, kmax = 3))]
fn sample_combo<'py>(
    py: Python<'py>,
    split: &str,
    seed: u64,
    kmin: usize,
    kmax: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let split: PatternSplit = split.parse().map_err(py_err)?;
    to_py(py, &forge::sample_combo(split, seed, (kmin, kmax)).map_err(py_err)?)
}

#[pyfunction]
fn combo_key(pattern_ids: Vec<String>) -> String {
    patterns::combo_key(pattern_ids.iter().map(String::as_str))
}

#[pyfunction]
fn derive_seed(global_seed: u64, entity_id: &str, index: u64) -> u64 {
    seed::derive_seed(global_seed, entity_id, index)
}

#[pyfunction]
fn thumbnail_descriptor(image: &PyImage) -> Vec<f32> {
    matcher::thumbnail_descriptor(&image.inner)
}

/// Per query: `(query_id, [(gallery_id, score), ...])`, best first.
#[pyfunction]
fn search_topk(queries: &PyDescriptorSet, gallery: &PyDescriptorSet, k: usize) -> PyResult<PyMatches> {
    matcher::search_topk(&queries.inner, &gallery.inner, k).map(matches_to_py).map_err(py_err)
}

#[pyfunction]
fn aggregate_max(lists: Vec<PyMatches>) -> PyResult<PyMatches> {
    let lists: Vec<MatchList> = lists.into_iter().map(matches_from_py).collect();
    matcher::aggregate_max(&lists).map(matches_to_py).map_err(py_err)
}

/// `rows` are `(query_id, gallery_id, score)`; `gt` maps true queries to sources.
#[pyfunction]
fn micro_average_precision(rows: Vec<(String, String, f64)>, gt: BTreeMap<String, String>) -> PyResult<f64> {
    let preds: Vec<Prediction> =
        rows.into_iter().map(|(query_id, gallery_id, score)| Prediction { query_id, gallery_id, score }).collect();
    metrics::micro_average_precision(&preds, &ground_truth(gt)?).map_err(py_err)
}

#[pyfunction]
fn recall_at_1(matches: PyMatches, gt: BTreeMap<String, String>) -> PyResult<f64> {
    metrics::recall_at_1(&matches_from_py(matches), &ground_truth(gt)?).map_err(py_err)
}

/// `first_pairs` maps each query to its top assigned pair id.
#[pyfunction]
fn pattern_accuracy(
    first_pairs: BTreeMap<String, String>,
    query_combos: BTreeMap<String, Vec<String>>,
    pool_combos: BTreeMap<String, Vec<String>>,
    gt: BTreeMap<String, String>,
) -> PyResult<f64> {
    let sets = |m: BTreeMap<String, Vec<String>>| -> BTreeMap<String, BTreeSet<String>> {
        m.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect()
    };
    let (query_combos, pool_combos) = (sets(query_combos), sets(pool_combos));
    let mut assignment = PromptAssignment::default();
    for (q, pair_id) in first_pairs {
        let pair = AssignedPair { pair_id, original_id: String::new(), replica_id: q.clone() };
        assignment.pairs.insert(q, vec![pair]);
    }
    metrics::pattern_accuracy(&assignment, &query_combos, &pool_combos, &ground_truth(gt)?).map_err(py_err)
}

#[pymodule]
#[pyo3(name = "patternforge")]
pub fn patternforge_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyDescriptorSet>()?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(sample_instance, m)?)?;
    m.add_function(wrap_pyfunction!(apply, m)?)?;
    m.add_function(wrap_pyfunction!(apply_combo, m)?)?;
    m.add_function(wrap_pyfunction!(sample_combo, m)?)?;
    m.add_function(wrap_pyfunction!(combo_key, m)?)?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    m.add_function(wrap_pyfunction!(thumbnail_descriptor, m)?)?;
    m.add_function(wrap_pyfunction!(search_topk, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate_max, m)?)?;
    m.add_function(wrap_pyfunction!(micro_average_precision, m)?)?;
    m.add_function(wrap_pyfunction!(recall_at_1, m)?)?;
    m.add_function(wrap_pyfunction!(pattern_accuracy, m)?)?;
    Ok(())
}
