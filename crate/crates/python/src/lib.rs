//! Python bindings: corpus handling, the wire format, lexical and task
//! metrics, and the human-evaluation statistics.

use std::collections::BTreeMap;
use std::path::PathBuf;

use dialeval::ingest::{filter_corpus, sample_fewshot, FewShotSpec, FilterPolicy};
use dialeval::lexical::{self, ChrfParams, TokenizationConfig};
use dialeval::serialize::{self, WireFormatConfig};
use dialeval::stats;
use dialeval::{io, model, DialogTurn, GroundedInstance, RatingMatrix, Speaker, SystemOutput};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: dialeval::Error) -> PyErr {
    match e {
        dialeval::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn speaker(name: &str) -> PyResult<Speaker> {
    match name {
        "user" => Ok(Speaker::User),
        "system" => Ok(Speaker::System),
        other => Err(PyValueError::new_err(format!("speaker must be `user` or `system`, got `{other}`"))),
    }
}

fn speaker_name(s: Speaker) -> &'static str {
    match s {
        Speaker::User => "user",
        Speaker::System => "system",
    }
}

#[pyclass(from_py_object, name = "Turn")]
#[derive(Clone)]
struct PyTurn {
    #[pyo3(get)]
    speaker: String,
    #[pyo3(get)]
    text: String,
}

#[pymethods]
impl PyTurn {
    #[new]
    fn new(speaker: &str, text: String) -> PyResult<Self> {
        self::speaker(speaker)?;
        Ok(PyTurn {
            speaker: speaker.to_owned(),
            text,
        })
    }

    fn __repr__(&self) -> String {
        format!("Turn({:?}, {:?})", self.speaker, self.text)
    }

    fn __eq__(&self, other: &PyTurn) -> bool {
        self.speaker == other.speaker && self.text == other.text
    }
}

impl From<&DialogTurn> for PyTurn {
    fn from(t: &DialogTurn) -> Self {
        PyTurn {
            speaker: speaker_name(t.speaker).to_owned(),
            text: t.text.clone(),
        }
    }
}

/// One prediction point: context turns, environment text and the target.
#[pyclass(from_py_object, name = "Instance")]
#[derive(Clone)]
struct PyInstance {
    inner: GroundedInstance,
}

#[pymethods]
impl PyInstance {
    #[new]
    #[pyo3(signature = (context, environment = String::new(), target = String::new(), instance_id = String::new()))]
    fn new(context: Vec<PyTurn>, environment: String, target: String, instance_id: String) -> PyResult<Self> {
        let context = context
            .iter()
            .map(|t| Ok(DialogTurn::new(speaker(&t.speaker)?, t.text.clone())))
            .collect::<PyResult<Vec<_>>>()?;
        Ok(PyInstance {
            inner: GroundedInstance {
                instance_id,
                context,
                environment,
                target,
            },
        })
    }

    #[getter]
    fn instance_id(&self) -> &str {
        &self.inner.instance_id
    }

    #[getter]
    fn context(&self) -> Vec<PyTurn> {
        self.inner.context.iter().map(PyTurn::from).collect()
    }

    #[getter]
    fn environment(&self) -> &str {
        &self.inner.environment
    }

    #[getter]
    fn target(&self) -> &str {
        &self.inner.target
    }

    /// The single-line training form with the default markers.
    fn serialize(&self) -> PyResult<String> {
        serialize::serialize_instance(&self.inner, &WireFormatConfig::default()).map_err(py_err)
    }

    #[staticmethod]
    fn parse(line: &str) -> PyResult<Self> {
        serialize::parse_instance(line, &WireFormatConfig::default())
            .map(|inner| PyInstance { inner })
            .map_err(py_err)
    }

    fn __eq__(&self, other: &PyInstance) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Instance(id={:?}, turns={})", self.inner.instance_id, self.inner.context.len())
    }
}

/// A corpus of grounded dialogs in the interchange JSONL format.
#[pyclass(name = "Corpus")]
struct PyCorpus {
    inner: model::Corpus,
}

#[pymethods]
impl PyCorpus {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        io::read_corpus(&path).map(|inner| PyCorpus { inner }).map_err(py_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::write_corpus(&path, &self.inner).map_err(py_err)
    }

    #[getter]
    fn source_tag(&self) -> &str {
        &self.inner.source_tag
    }

    fn dialog_ids(&self) -> Vec<String> {
        self.inner.dialogs.iter().map(|d| d.dialog_id.clone()).collect()
    }

    fn instances(&self) -> Vec<PyInstance> {
        self.inner.instances().map(|i| PyInstance { inner: i.clone() }).collect()
    }

    /// Invariant violations, formatted one per string.
    fn validate(&self) -> Vec<String> {
        model::validate_corpus(&self.inner).iter().map(ToString::to_string).collect()
    }

    #[pyo3(signature = (block_words = Vec::new(), min_score = None, max_turn_chars = None))]
    fn filter(&self, block_words: Vec<String>, min_score: Option<i64>, max_turn_chars: Option<usize>) -> PyCorpus {
        let policy = FilterPolicy {
            block_words: block_words.into_iter().map(|w| w.to_lowercase()).collect(),
            min_score,
            max_turn_chars,
            ..FilterPolicy::none()
        };
        PyCorpus {
            inner: filter_corpus(&self.inner, &policy).0,
        }
    }

    fn sample(&self, k: usize, seed: u64) -> PyResult<PyCorpus> {
        sample_fewshot(&self.inner, &FewShotSpec::new(k, seed))
            .map(|inner| PyCorpus { inner })
            .map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.dialogs.len()
    }
}

#[pyfunction]
fn unigram_f1(hypothesis: &str, reference: &str) -> f64 {
    lexical::unigram_f1(hypothesis, reference, &TokenizationConfig::default())
}

#[pyfunction]
fn knowledge_f1(hypothesis: &str, knowledge: Vec<String>) -> f64 {
    lexical::knowledge_f1(hypothesis, &knowledge, &TokenizationConfig::default()).score
}

#[pyfunction]
#[pyo3(signature = (hypothesis, reference, max_n = 6, beta = 2.0))]
fn chrf(hypothesis: &str, reference: &str, max_n: usize, beta: f64) -> f64 {
    let params = ChrfParams {
        max_n,
        beta,
        ..ChrfParams::default()
    };
    lexical::chrf(hypothesis, reference, &params)
}

#[pyfunction]
fn corpus_bleu4(pairs: Vec<(String, String)>) -> PyResult<f64> {
    lexical::corpus_bleu4(&pairs, &TokenizationConfig::default().for_bleu()).map_err(py_err)
}

/// Scores aligned hypothesis/reference lists; returns
/// `{"corpus": {...}, "per_example": {...}}` with fractions.
#[pyfunction]
#[pyo3(signature = (hypotheses, references, knowledge = None))]
fn score<'py>(
    py: Python<'py>,
    hypotheses: Vec<String>,
    references: Vec<String>,
    knowledge: Option<Vec<Vec<String>>>,
) -> PyResult<Bound<'py, PyDict>> {
    if hypotheses.len() != references.len() {
        return Err(py_err(dialeval::Error::LengthMismatch(hypotheses.len(), references.len())));
    }
    let knowledge = knowledge.unwrap_or_else(|| vec![Vec::new(); hypotheses.len()]);
    if knowledge.len() != hypotheses.len() {
        return Err(py_err(dialeval::Error::LengthMismatch(hypotheses.len(), knowledge.len())));
    }
    let outputs: Vec<SystemOutput> = hypotheses
        .into_iter()
        .zip(references)
        .zip(knowledge)
        .enumerate()
        .map(|(i, ((h, r), k))| SystemOutput::new(i.to_string(), h, r, k))
        .collect();
    let report = lexical::score_outputs(&outputs, &TokenizationConfig::default()).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("corpus", report.corpus)?;
    d.set_item("per_example", report.per_example)?;
    Ok(d)
}

/// `(inform + success) * 0.5 + bleu` in percent, inputs as fractions.
#[pyfunction]
fn combined(inform: f64, success: f64, bleu: f64) -> PyResult<f64> {
    dialeval::task::combined(inform, success, bleu).map_err(py_err)
}

#[pyfunction]
fn paired_ttest<'py>(py: Python<'py>, a: Vec<f64>, b: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let r = stats::paired_ttest(&stats::PairedSamples::new(a, b).map_err(py_err)?);
    let d = PyDict::new(py);
    d.set_item("t", r.t)?;
    d.set_item("p", r.p)?;
    d.set_item("df", r.df)?;
    Ok(d)
}

/// Interval alpha over a raters x items grid; `None` marks a missing rating.
#[pyfunction]
#[pyo3(signature = (ratings, min = 1.0, max = 5.0))]
fn krippendorff_alpha(ratings: Vec<Vec<Option<f64>>>, min: f64, max: f64) -> PyResult<f64> {
    if min > max {
        return Err(PyValueError::new_err("min must not exceed max"));
    }
    let mut m = RatingMatrix::new(min, max);
    for (r, row) in ratings.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            if let Some(v) = v {
                m.insert(&r.to_string(), &i.to_string(), *v).map_err(py_err)?;
            }
        }
    }
    stats::krippendorff_alpha_interval(&m).map_err(py_err)
}

#[pyfunction]
fn spearman(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    stats::spearman_rho(&x, &y).map_err(py_err)
}

/// Win/tie/loss counts of system A from per-item ratings of both systems.
#[pyfunction]
fn likert_to_wtl(a: Vec<f64>, b: Vec<f64>) -> PyResult<BTreeMap<&'static str, usize>> {
    let w = stats::likert_to_wtl(&a, &b).map_err(py_err)?;
    Ok([("win", w.win), ("tie", w.tie), ("loss", w.loss)].into())
}

#[pymodule]
fn pydialeval(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTurn>()?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PyCorpus>()?;
    m.add_function(wrap_pyfunction!(unigram_f1, m)?)?;
    m.add_function(wrap_pyfunction!(knowledge_f1, m)?)?;
    m.add_function(wrap_pyfunction!(chrf, m)?)?;
    m.add_function(wrap_pyfunction!(corpus_bleu4, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(combined, m)?)?;
    m.add_function(wrap_pyfunction!(paired_ttest, m)?)?;
    m.add_function(wrap_pyfunction!(krippendorff_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(likert_to_wtl, m)?)?;
    Ok(())
}
