//! JSON and CSV documents for spaces, completions and trace configurations.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::completion::{complete_k, CompletionError, Iterate};
use crate::metric::{build_space, FiniteMetricSpace, SpaceError};
use crate::scalar::{Exact, Mode, Scalar};
use crate::trace::{BigonConfig, ChainSample, TraceError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Completion(#[from] CompletionError),
}

/// A space in either numeric mode.
#[derive(Debug, Clone, PartialEq)]
pub enum AnySpace {
    Exact(FiniteMetricSpace<Exact>),
    Float(FiniteMetricSpace<f64>),
}

impl AnySpace {
    pub fn mode(&self) -> Mode {
        match self {
            AnySpace::Exact(_) => Mode::Exact,
            AnySpace::Float(_) => Mode::Float,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            AnySpace::Exact(s) => s.len(),
            AnySpace::Float(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> &[String] {
        match self {
            AnySpace::Exact(s) => s.labels(),
            AnySpace::Float(s) => s.labels(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            AnySpace::Exact(s) => space_to_json(s),
            AnySpace::Float(s) => space_to_json(s),
        }
    }

    pub fn to_csv(&self) -> String {
        match self {
            AnySpace::Exact(s) => space_to_csv(s),
            AnySpace::Float(s) => space_to_csv(s),
        }
    }

    fn from_strings(labels: Vec<String>, cells: &[Vec<String>], mode: Mode, name: Option<String>) -> Result<Self, IoError> {
        let out = match mode {
            Mode::Exact => AnySpace::Exact(build_space(labels, cells)?),
            Mode::Float => AnySpace::Float(build_space(labels, cells)?),
        };
        Ok(match name {
            Some(n) => out.with_name(n),
            None => out,
        })
    }

    pub fn with_name(self, name: impl Into<String>) -> Self {
        match self {
            AnySpace::Exact(s) => AnySpace::Exact(s.with_name(name)),
            AnySpace::Float(s) => AnySpace::Float(s.with_name(name)),
        }
    }
}

impl From<FiniteMetricSpace<Exact>> for AnySpace {
    fn from(s: FiniteMetricSpace<Exact>) -> Self {
        AnySpace::Exact(s)
    }
}

impl From<FiniteMetricSpace<f64>> for AnySpace {
    fn from(s: FiniteMetricSpace<f64>) -> Self {
        AnySpace::Float(s)
    }
}

/// `{"name", "labels", "matrix", "mode"}`; exact entries are `"p/q"` strings.
pub fn space_to_json<S: Scalar>(space: &FiniteMetricSpace<S>) -> Value {
    let matrix: Vec<Value> = space
        .rows()
        .map(|row| Value::Array(row.iter().map(Scalar::to_json).collect()))
        .collect();
    json!({
        "name": space.name(),
        "labels": space.labels(),
        "matrix": matrix,
        "mode": S::MODE,
    })
}

#[derive(Deserialize)]
struct SpaceDocument {
    #[serde(default)]
    name: Option<String>,
    labels: Vec<String>,
    matrix: Vec<Vec<Value>>,
    #[serde(default)]
    mode: Option<Mode>,
}

fn cell_text(v: &Value) -> Result<String, IoError> {
    match v {
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        other => Err(IoError::Shape(format!("matrix entries must be numbers or strings, got {other}"))),
    }
}

/// Reads a space document. `mode` overrides the document's own mode; without
/// either the space is read in float mode.
pub fn space_from_json(value: &Value, mode: Option<Mode>) -> Result<AnySpace, IoError> {
    let doc = SpaceDocument::deserialize(value)?;
    let cells = doc
        .matrix
        .iter()
        .map(|row| row.iter().map(cell_text).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let mode = mode.or(doc.mode).unwrap_or(Mode::Float);
    AnySpace::from_strings(doc.labels, &cells, mode, doc.name)
}

pub fn parse_space_json(text: &str, mode: Option<Mode>) -> Result<AnySpace, IoError> {
    space_from_json(&serde_json::from_str(text)?, mode)
}

/// Reads a labeled CSV matrix: the first row holds a corner cell and the
/// column labels, each later row a label followed by its entries.
pub fn parse_space_csv(text: &str, mode: Option<Mode>) -> Result<AnySpace, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = records
        .next()
        .ok_or_else(|| IoError::Shape("empty CSV".into()))??;
    let labels: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut cells = Vec::with_capacity(labels.len());
    for (row, record) in records.enumerate() {
        let record = record?;
        let row_label = record.get(0).unwrap_or_default();
        if labels.get(row).map(String::as_str) != Some(row_label) {
            return Err(IoError::Shape(format!(
                "row {} is labeled `{row_label}` but the column order expects `{}`",
                row + 1,
                labels.get(row).map_or("<none>", String::as_str)
            )));
        }
        cells.push(record.iter().skip(1).map(str::to_owned).collect());
    }
    AnySpace::from_strings(labels, &cells, mode.unwrap_or(Mode::Float), None)
}

pub fn space_to_csv<S: Scalar>(space: &FiniteMetricSpace<S>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = std::iter::once("").chain(space.labels().iter().map(String::as_str)).collect();
    writer.write_record(&header).expect("writing to memory");
    for (label, row) in space.labels().iter().zip(space.rows()) {
        let cells = std::iter::once(label.clone()).chain(row.iter().map(|d| match d.to_json() {
            Value::String(s) => s,
            other => other.to_string(),
        }));
        writer.write_record(cells).expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("flushing to memory")).expect("CSV output is UTF-8")
}

fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })
}

/// Loads a space from a `.csv` file or a JSON document.
pub fn load_space(path: &Path, mode: Option<Mode>) -> Result<AnySpace, IoError> {
    let text = read_text(path)?;
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        parse_space_csv(&text, mode)
    } else {
        parse_space_json(&text, mode)
    }
}

pub fn load_json(path: &Path) -> Result<Value, IoError> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

/// A space document for `M^k(X)` with a `provenance` map from each label to
/// its pair tree over the base labels.
pub fn iterate_to_json<S: Scalar>(iterate: &Iterate<S>) -> Value {
    let mut doc = space_to_json(&iterate.space);
    let provenance: BTreeMap<&str, &crate::completion::PairTree> = iterate
        .space
        .labels()
        .iter()
        .map(String::as_str)
        .zip(&iterate.trees)
        .collect();
    doc["level"] = json!(iterate.level);
    doc["provenance"] = json!(provenance);
    doc
}

#[derive(Deserialize)]
struct SampleDocument {
    param: Value,
    x: String,
    y: String,
    midpoint: String,
}

#[derive(Deserialize)]
struct TraceDocument {
    space: Value,
    #[serde(default)]
    levels: usize,
    p_minus: String,
    p_plus: String,
    samples: Vec<SampleDocument>,
}

/// Reads a trace configuration:
///
/// `{"space": <space document>, "levels": k, "p_minus": label, "p_plus": label,
///   "samples": [{"param", "x", "y", "midpoint"}]}`
///
/// Labels refer to `M^k` of the given space (`levels` defaults to 0).
pub fn trace_config_from_json<S: Scalar>(value: &Value, cap: usize, tol: f64) -> Result<BigonConfig<S>, IoError> {
    let doc = TraceDocument::deserialize(value)?;
    let base: FiniteMetricSpace<S> = match space_from_json(&doc.space, Some(S::MODE))? {
        AnySpace::Exact(s) => s.convert().map_err(|e| IoError::Shape(e.to_string()))?,
        AnySpace::Float(s) => s.convert().map_err(|e| IoError::Shape(e.to_string()))?,
    };
    let space = complete_k(&base, doc.levels, cap)?.space;
    let samples = doc
        .samples
        .iter()
        .map(|s| {
            let param = S::parse_entry(&cell_text(&s.param)?).map_err(|e| IoError::Shape(e.to_string()))?;
            Ok(ChainSample {
                param,
                x: space.index_of(&s.x)?,
                y: space.index_of(&s.y)?,
                midpoint: space.index_of(&s.midpoint)?,
            })
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    let (p_minus, p_plus) = (space.index_of(&doc.p_minus)?, space.index_of(&doc.p_plus)?);
    Ok(BigonConfig::new(space, p_minus, p_plus, samples, tol)?)
}
