//! Dataset ingestion and emission.
//!
//! CSV datasets carry a header. Binary files use `score,label`; multi-class
//! files use `score_0,...,score_{n-1},label`. Other columns are ignored on
//! ingest but kept for commands that append to the input rows. JSONL rows are
//! objects with `scores` (array) and `label`; a one-element `scores` array is
//! a binary row holding the positive-class score.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use losscal_core::sbr::Sidecar;
use losscal_core::ScoredDataset;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Slack allowed outside `[0, 1]` before a score is rejected; scores within
/// it are clamped.
pub const SCORE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    /// `jsonl` for `.jsonl`/`.ndjson` paths, otherwise CSV.
    pub fn infer(path: Option<&Path>) -> Self {
        match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => Self::Jsonl,
            _ => Self::Csv,
        }
    }
}

/// Input rows as read, for commands that echo them back with extra columns.
#[derive(Debug, Clone, PartialEq)]
pub enum RawRows {
    Csv {
        header: Vec<String>,
        records: Vec<Vec<String>>,
    },
    Jsonl(Vec<Map<String, Value>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub dataset: ScoredDataset,
    pub raw: RawRows,
}

/// Decimal form used for every emitted float: the shortest representation
/// that parses back to the same value (at most 17 significant digits),
/// switching to exponent form for very small or large magnitudes.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn parse_score(text: &str, line: usize) -> Result<f64, CliError> {
    let v: f64 = text.trim().parse().map_err(|_| CliError::Parse {
        line,
        msg: format!("invalid score {text:?}"),
    })?;
    check_score(v, line)
}

fn check_score(v: f64, line: usize) -> Result<f64, CliError> {
    if !(-SCORE_SLACK..=1.0 + SCORE_SLACK).contains(&v) {
        return Err(CliError::Range {
            line,
            msg: format!("score {v} outside [0, 1]"),
        });
    }
    Ok(v.clamp(0.0, 1.0))
}

fn check_label(v: usize, n_classes: usize, line: usize) -> Result<usize, CliError> {
    if v >= n_classes {
        return Err(CliError::Range {
            line,
            msg: format!("label {v} outside [0, {n_classes})"),
        });
    }
    Ok(v)
}

fn parse_label(text: &str, n_classes: usize, line: usize) -> Result<usize, CliError> {
    let v: usize = text.trim().parse().map_err(|_| CliError::Parse {
        line,
        msg: format!("invalid label {text:?}"),
    })?;
    check_label(v, n_classes, line)
}

pub fn ingest(path: &Path, format: Format) -> Result<Ingested, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
    ingest_reader(std::io::BufReader::new(file), format)
}

pub fn ingest_reader(reader: impl BufRead, format: Format) -> Result<Ingested, CliError> {
    match format {
        Format::Csv => ingest_csv(reader),
        Format::Jsonl => ingest_jsonl(reader),
    }
}

fn ingest_csv(reader: impl BufRead) -> Result<Ingested, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Parse {
            line: 1,
            msg: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let find = |name: &str| header.iter().position(|h| h == name);
    let label_col = find("label").ok_or(CliError::Parse {
        line: 1,
        msg: "missing `label` column".into(),
    })?;
    let score_cols: Vec<usize> = match find("score") {
        Some(c) => vec![c],
        None => {
            let cols: Vec<usize> = (0..)
                .map_while(|i| find(&format!("score_{i}")))
                .collect();
            if cols.len() < 2 {
                return Err(CliError::Parse {
                    line: 1,
                    msg: "expected a `score` column or `score_0..score_{n-1}` columns".into(),
                });
            }
            cols
        }
    };
    let binary = score_cols.len() == 1;
    let n_classes = if binary { 2 } else { score_cols.len() };

    let mut records = Vec::new();
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        for &c in &score_cols {
            scores.push(parse_score(&rec[c], line)?);
        }
        labels.push(parse_label(&rec[label_col], n_classes, line)?);
        records.push(rec.iter().map(str::to_string).collect());
    }
    if labels.is_empty() {
        return Err(CliError::Core(losscal_core::Error::EmptyDataset));
    }
    let dataset = if binary {
        ScoredDataset::binary(scores, labels)?
    } else {
        ScoredDataset::multi_flat(n_classes, scores, labels)?
    };
    Ok(Ingested {
        dataset,
        raw: RawRows::Csv { header, records },
    })
}

fn ingest_jsonl(reader: impl BufRead) -> Result<Ingested, CliError> {
    let mut width = None;
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    let mut objects = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line.map_err(|e| CliError::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        if text.trim().is_empty() {
            continue;
        }
        let parse_err = |msg: String| CliError::Parse { line: line_no, msg };
        let obj: Map<String, Value> =
            serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
        let row_scores = obj
            .get("scores")
            .and_then(Value::as_array)
            .ok_or_else(|| parse_err("missing `scores` array".into()))?;
        let w = *width.get_or_insert(row_scores.len());
        if row_scores.len() != w || w == 0 {
            return Err(parse_err(format!(
                "expected {w} scores, found {}",
                row_scores.len()
            )));
        }
        for v in row_scores {
            let v = v
                .as_f64()
                .ok_or_else(|| parse_err(format!("score {v} is not a number")))?;
            scores.push(check_score(v, line_no)?);
        }
        let n_classes = if w == 1 { 2 } else { w };
        let label = obj
            .get("label")
            .and_then(Value::as_u64)
            .ok_or_else(|| parse_err("missing integer `label`".into()))?;
        labels.push(check_label(label as usize, n_classes, line_no)?);
        objects.push(obj);
    }
    let Some(w) = width else {
        return Err(CliError::Core(losscal_core::Error::EmptyDataset));
    };
    let dataset = if w == 1 {
        ScoredDataset::binary(scores, labels)?
    } else {
        ScoredDataset::multi_flat(w, scores, labels)?
    };
    Ok(Ingested {
        dataset,
        raw: RawRows::Jsonl(objects),
    })
}

/// Writes a dataset in ingest format, optionally with the simulator's
/// `signal` and `true_posterior` columns.
pub fn emit_dataset(
    out: &mut dyn Write,
    data: &ScoredDataset,
    sidecar: Option<&Sidecar>,
    format: Format,
) -> Result<(), CliError> {
    let n = data.n_classes();
    let mut line = String::new();
    match format {
        Format::Csv => {
            let mut header: Vec<String> = if data.is_binary() {
                vec!["score".into()]
            } else {
                (0..n).map(|i| format!("score_{i}")).collect()
            };
            header.push("label".into());
            if sidecar.is_some() {
                header.push("signal".into());
                if data.is_binary() {
                    header.push("true_posterior".into());
                } else {
                    header.extend((0..n).map(|i| format!("true_posterior_{i}")));
                }
            }
            writeln!(out, "{}", header.join(","))?;
            for row in 0..data.len() {
                line.clear();
                for v in row_scores(data, row) {
                    let _ = write!(line, "{},", fmt_f64(v));
                }
                let _ = write!(line, "{}", data.labels()[row]);
                if let Some(side) = sidecar {
                    let _ = write!(line, ",{}", side.signals[row]);
                    for v in posterior_values(data, side, row) {
                        let _ = write!(line, ",{}", fmt_f64(v));
                    }
                }
                writeln!(out, "{line}")?;
            }
        }
        Format::Jsonl => {
            for row in 0..data.len() {
                let mut obj = Map::new();
                obj.insert("scores".into(), floats(&row_scores(data, row)));
                obj.insert("label".into(), Value::from(data.labels()[row]));
                if let Some(side) = sidecar {
                    obj.insert("signal".into(), Value::from(side.signals[row]));
                    let post = posterior_values(data, side, row);
                    let value = if data.is_binary() {
                        float(post[0])
                    } else {
                        floats(&post)
                    };
                    obj.insert("true_posterior".into(), value);
                }
                writeln!(out, "{}", Value::Object(obj))?;
            }
        }
    }
    Ok(())
}

fn row_scores(data: &ScoredDataset, row: usize) -> Vec<f64> {
    match data.score_vector(row) {
        Some(v) => v.to_vec(),
        None => vec![data.class_score(row, 1)],
    }
}

fn posterior_values(data: &ScoredDataset, side: &Sidecar, row: usize) -> Vec<f64> {
    let post = side.true_posterior(row);
    if data.is_binary() {
        vec![post.gamma1()]
    } else {
        post.probs().to_vec()
    }
}

pub(crate) fn float(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub(crate) fn floats(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| float(x)).collect())
}

/// Reads an `n x n` weight matrix from a headerless CSV file.
pub fn read_weight_matrix(path: &Path) -> Result<losscal_core::WeightMatrix, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        let row = rec
            .iter()
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| CliError::Parse {
                    line: i + 1,
                    msg: format!("invalid weight {f:?}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(losscal_core::WeightMatrix::from_rows(rows)?)
}
