//! Python bindings. Matrices cross the boundary as lists of rows.

use std::path::PathBuf;

use gri_core::corpus::Corpus;
use gri_core::isoloss;
use gri_core::isometry;
use gri_core::lexicon::{SeedLexicon, SeedPair, Split};
use gri_core::mapeval;
use gri_core::semgraph::{normalize_adjacency, SemanticGraph};
use gri_core::synth::{generate, SynthConfig};
use gri_core::trainer::{self, EpochStats, IsoBatch};
use gri_core::{Embeddings, GriError, IsoLossKind, Matrix};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(gri, GriRuntimeError, PyException, "Data or numerical failure inside gri.");

fn py_err(e: GriError) -> PyErr {
    match e {
        GriError::InvalidConfig(m) => PyValueError::new_err(m),
        GriError::Io(e) => PyOSError::new_err(e.to_string()),
        other => GriRuntimeError::new_err(other.to_string()),
    }
}

type Rows = Vec<Vec<f64>>;

pub fn to_matrix(rows: &[Vec<f64>]) -> gri_core::Result<Matrix> {
    Matrix::from_rows(rows)
}

pub fn to_rows(m: &Matrix) -> Rows {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn matrix(rows: Rows) -> PyResult<Matrix> {
    to_matrix(&rows).map_err(py_err)
}

fn pairs(raw: Vec<(String, String)>) -> Vec<SeedPair> {
    raw.into_iter().map(|(s, t)| SeedPair::new(s, t)).collect()
}

fn lexicon(raw: Vec<(String, String)>, train_end: usize, test_end: usize) -> PyResult<SeedLexicon> {
    SeedLexicon::split_ordered(pairs(raw), train_end, test_end).map_err(py_err)
}

#[pyclass(name = "Embeddings", module = "gri", from_py_object)]
#[derive(Clone)]
pub struct PyEmbeddings {
    inner: Embeddings,
}

#[pymethods]
impl PyEmbeddings {
    #[new]
    fn new(words: Vec<String>, vectors: Rows) -> PyResult<Self> {
        Ok(PyEmbeddings {
            inner: Embeddings::new(words, matrix(vectors)?).map_err(py_err)?,
        })
    }

    /// Reads word2vec text format.
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(PyEmbeddings {
            inner: Embeddings::read_word2vec(path).map_err(py_err)?,
        })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_word2vec(path).map_err(py_err)
    }

    #[getter]
    fn words(&self) -> Vec<String> {
        self.inner.words().to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn vector(&self, word: &str) -> Option<Vec<f64>> {
        self.inner.vector(word).map(<[f64]>::to_vec)
    }

    fn to_lists(&self) -> Rows {
        to_rows(self.inner.matrix())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, word: &str) -> bool {
        self.inner.index_of(word).is_some()
    }

    fn __repr__(&self) -> String {
        format!("Embeddings(words={}, dim={})", self.inner.len(), self.inner.dim())
    }
}

/// Trainer hyperparameters; omitted arguments take the library defaults.
#[pyclass(name = "TrainerConfig", module = "gri", from_py_object)]
#[derive(Clone)]
pub struct PyTrainerConfig {
    #[pyo3(get, set)]
    alpha: f64,
    #[pyo3(get, set)]
    lr: f64,
    #[pyo3(get, set)]
    epochs: usize,
    #[pyo3(get, set)]
    negatives: usize,
    #[pyo3(get, set)]
    iso_batch: String,
    #[pyo3(get, set)]
    dim: usize,
    #[pyo3(get, set)]
    hidden: Option<usize>,
    #[pyo3(get, set)]
    kind: String,
    #[pyo3(get, set)]
    rng_seed: u64,
    #[pyo3(get, set)]
    window: usize,
    #[pyo3(get, set)]
    subsample_t: f64,
    #[pyo3(get, set)]
    batch_size: usize,
    #[pyo3(get, set)]
    use_gcn: bool,
}

impl From<&trainer::TrainerConfig> for PyTrainerConfig {
    fn from(c: &trainer::TrainerConfig) -> Self {
        PyTrainerConfig {
            alpha: c.alpha,
            lr: c.lr,
            epochs: c.epochs,
            negatives: c.negatives,
            iso_batch: c.iso_batch.to_string(),
            dim: c.dim,
            hidden: c.hidden,
            kind: c.kind.to_string(),
            rng_seed: c.rng_seed,
            window: c.window,
            subsample_t: c.subsample_t,
            batch_size: c.batch_size,
            use_gcn: c.use_gcn,
        }
    }
}

impl PyTrainerConfig {
    fn to_core(&self) -> PyResult<trainer::TrainerConfig> {
        let cfg = trainer::TrainerConfig {
            alpha: self.alpha,
            lr: self.lr,
            epochs: self.epochs,
            negatives: self.negatives,
            iso_batch: self.iso_batch.parse::<IsoBatch>().map_err(py_err)?,
            dim: self.dim,
            hidden: self.hidden,
            kind: self.kind.parse::<IsoLossKind>().map_err(py_err)?,
            rng_seed: self.rng_seed,
            window: self.window,
            subsample_t: self.subsample_t,
            batch_size: self.batch_size,
            use_gcn: self.use_gcn,
        };
        cfg.validate().map_err(py_err)?;
        Ok(cfg)
    }
}

#[pymethods]
impl PyTrainerConfig {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(py: Python<'_>, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let cfg = Bound::new(py, PyTrainerConfig::from(&trainer::TrainerConfig::default()))?;
        if let Some(kwargs) = kwargs {
            for (k, v) in kwargs.iter() {
                cfg.setattr(k.extract::<String>()?.as_str(), v)?;
            }
        }
        let out = cfg.borrow().clone();
        out.to_core()?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!(
            "TrainerConfig(alpha={}, lr={}, epochs={}, dim={}, kind={:?}, use_gcn={}, rng_seed={})",
            self.alpha, self.lr, self.epochs, self.dim, self.kind, self.use_gcn, self.rng_seed
        )
    }
}

fn config(c: Option<PyTrainerConfig>) -> PyResult<trainer::TrainerConfig> {
    match c {
        Some(c) => c.to_core(),
        None => Ok(trainer::TrainerConfig::default()),
    }
}

fn epochs_to_py<'py>(py: Python<'py>, epochs: &[EpochStats]) -> PyResult<Vec<Bound<'py, PyDict>>> {
    epochs
        .iter()
        .map(|e| {
            let d = PyDict::new(py);
            d.set_item("epoch", e.epoch)?;
            d.set_item("steps", e.steps)?;
            d.set_item("pairs", e.pairs)?;
            d.set_item("sg_loss", e.sg_loss)?;
            d.set_item("iso_loss", e.iso_loss)?;
            d.set_item("combined_loss", e.combined_loss)?;
            Ok(d)
        })
        .collect()
}

/// Synthetic bilingual corpus: source and target lines plus the ordered lexicon.
#[pyfunction]
#[pyo3(signature = (vocab_size=300, sentences=5000, seed=7, train_pairs=150, test_pairs=75))]
fn synth(py: Python<'_>, vocab_size: usize, sentences: usize, seed: u64, train_pairs: usize, test_pairs: usize) -> PyResult<Bound<'_, PyDict>> {
    let data = generate(&SynthConfig {
        vocab_size,
        sentences,
        seed,
        train_pairs,
        test_pairs,
        ..SynthConfig::default()
    })
    .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("source_lines", data.source_lines)?;
    d.set_item("target_lines", data.target_lines)?;
    let p: Vec<(String, String)> = data.pairs.into_iter().map(|p| (p.source, p.target)).collect();
    d.set_item("pairs", p)?;
    Ok(d)
}

/// Skip-gram only training; returns embeddings and per-epoch losses.
#[pyfunction]
#[pyo3(signature = (lines, config=None, min_count=5))]
fn train_sgns<'py>(py: Python<'py>, lines: Vec<String>, config: Option<PyTrainerConfig>, min_count: u64) -> PyResult<(PyEmbeddings, Vec<Bound<'py, PyDict>>)> {
    let cfg = self::config(config)?;
    let out = py
        .detach(|| {
            let corpus = Corpus::from_lines(&lines, min_count)?;
            trainer::train_sgns(&cfg, &corpus)
        })
        .map_err(py_err)?;
    Ok((PyEmbeddings { inner: out.embeddings }, epochs_to_py(py, &out.report.epochs)?))
}

/// Joint skip-gram and isomorphism training against fixed target vectors.
#[pyfunction]
#[pyo3(signature = (lines, pairs, train_end, test_end, target, config=None, min_count=5, thr=0.5, graph_splits="all"))]
#[allow(clippy::too_many_arguments)]
fn train_gri<'py>(
    py: Python<'py>,
    lines: Vec<String>,
    pairs: Vec<(String, String)>,
    train_end: usize,
    test_end: usize,
    target: &PyEmbeddings,
    config: Option<PyTrainerConfig>,
    min_count: u64,
    thr: f64,
    graph_splits: &str,
) -> PyResult<(PyEmbeddings, Vec<Bound<'py, PyDict>>)> {
    let cfg = self::config(config)?;
    let lex = lexicon(pairs, train_end, test_end)?;
    let splits = match graph_splits {
        "all" => vec![Split::Train, Split::Dev, Split::Test],
        "train" => vec![Split::Train],
        other => return Err(PyValueError::new_err(format!("graph_splits must be all or train, got {other:?}"))),
    };
    let target = &target.inner;
    let out = py
        .detach(|| {
            let corpus = Corpus::from_lines(&lines, min_count)?;
            let graph = SemanticGraph::build(&lex.target_words(&splits), target, thr)?;
            trainer::train(&cfg, &corpus, &lex, target, &normalize_adjacency(&graph))
        })
        .map_err(py_err)?;
    Ok((PyEmbeddings { inner: out.embeddings }, epochs_to_py(py, &out.report.epochs)?))
}

/// Preprocess, align on the train split and score P@1 on `split`.
#[pyfunction]
#[pyo3(signature = (source, target, pairs, train_end, test_end, split="test"))]
fn evaluate<'py>(
    py: Python<'py>,
    source: &PyEmbeddings,
    target: &PyEmbeddings,
    pairs: Vec<(String, String)>,
    train_end: usize,
    test_end: usize,
    split: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let lex = lexicon(pairs, train_end, test_end)?;
    let split: Split = split.parse().map_err(py_err)?;
    let (model, report) = py
        .detach(|| mapeval::evaluate(&source.inner, &target.inner, &lex, split))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("p_at_1", report.p_at_1)?;
    d.set_item("n_queries", report.n_queries)?;
    d.set_item("oov_queries", report.oov_queries)?;
    d.set_item("correct", report.correct)?;
    d.set_item("degenerate", model.degenerate)?;
    let preds: Vec<(String, String, bool)> = report.predictions.into_iter().map(|p| (p.source, p.predicted, p.correct)).collect();
    d.set_item("predictions", preds)?;
    Ok(d)
}

/// Unit-normalize, mean-center, unit-normalize.
#[pyfunction]
fn preprocess(e: &PyEmbeddings) -> PyResult<PyEmbeddings> {
    Ok(PyEmbeddings {
        inner: mapeval::preprocess(&e.inner).map_err(py_err)?,
    })
}

/// Optimal orthogonal map `w` of `u` onto `v` and the resulting loss.
#[pyfunction]
fn procrustes(u: Rows, v: Rows) -> PyResult<(Rows, f64)> {
    let (u, v) = (matrix(u)?, matrix(v)?);
    let w = isoloss::procrustes_solve(&u, &v).map_err(py_err)?.w;
    let loss = isoloss::procrustes_loss(&u, &v).map_err(py_err)?;
    Ok((to_rows(&w), loss))
}

#[pyfunction]
fn l2_loss(u: Rows, v: Rows) -> PyResult<f64> {
    isoloss::l2_loss(&matrix(u)?, &matrix(v)?).map_err(py_err)
}

#[pyfunction]
fn procrustes_loss(u: Rows, v: Rows) -> PyResult<f64> {
    isoloss::procrustes_loss(&matrix(u)?, &matrix(v)?).map_err(py_err)
}

#[pyfunction]
fn pearson_isometry(u: Rows, v: Rows) -> PyResult<f64> {
    isometry::pearson_isometry(&matrix(u)?, &matrix(v)?).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (u, v, k_nn=10))]
fn eigenvector_similarity(u: Rows, v: Rows, k_nn: usize) -> PyResult<f64> {
    Ok(isometry::eigenvector_similarity(&matrix(u)?, &matrix(v)?, k_nn).map_err(py_err)?.score)
}

/// Pearson isometry and eigenvector similarity over seed pairs.
#[pyfunction]
#[pyo3(signature = (source, target, pairs, max_seeds=1000, k_nn=10))]
fn isometry_report<'py>(
    py: Python<'py>,
    source: &PyEmbeddings,
    target: &PyEmbeddings,
    pairs: Vec<(String, String)>,
    max_seeds: usize,
    k_nn: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let seeds = self::pairs(pairs);
    let r = isometry::isometry_report(&source.inner, &target.inner, &seeds, max_seeds, k_nn).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("pearson_r", r.pearson_r)?;
    d.set_item("eigsim", r.eigsim)?;
    d.set_item("k_used", r.k_used)?;
    d.set_item("k_nn", r.k_nn)?;
    d.set_item("n_seeds_used", r.n_seeds_used)?;
    Ok(d)
}

/// Edges `(word_a, word_b, cosine)` with cosine at or above `thr`.
#[pyfunction]
#[pyo3(signature = (words, pretrained, thr=0.5))]
fn semantic_graph(words: Vec<String>, pretrained: &PyEmbeddings, thr: f64) -> PyResult<Vec<(String, String, f64)>> {
    Ok(SemanticGraph::build(&words, &pretrained.inner, thr).map_err(py_err)?.word_edges())
}

#[pymodule]
fn gri(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", gri_core::VERSION)?;
    m.add("GriRuntimeError", m.py().get_type::<GriRuntimeError>())?;
    m.add_class::<PyEmbeddings>()?;
    m.add_class::<PyTrainerConfig>()?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(train_sgns, m)?)?;
    m.add_function(wrap_pyfunction!(train_gri, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(preprocess, m)?)?;
    m.add_function(wrap_pyfunction!(procrustes, m)?)?;
    m.add_function(wrap_pyfunction!(l2_loss, m)?)?;
    m.add_function(wrap_pyfunction!(procrustes_loss, m)?)?;
    m.add_function(wrap_pyfunction!(pearson_isometry, m)?)?;
    m.add_function(wrap_pyfunction!(eigenvector_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(isometry_report, m)?)?;
    m.add_function(wrap_pyfunction!(semantic_graph, m)?)?;
    Ok(())
}
