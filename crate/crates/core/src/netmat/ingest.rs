//! File ingestion: edge lists, dense CSV matrices, and JSON.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmat::{Arm, DiagonalPolicy, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkFormat {
    /// CSV rows `src,dst[,weight]`; requires a label manifest for isolated
    /// agents. Unweighted when no weight column exists.
    EdgeList,
    /// N rows of N comma-separated reals.
    DenseCsv,
    /// `{"labels": [...], "matrix": [[...]], "mask": [[...]]?}`
    Json,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub arm: Arm,
    /// Label manifest (one label per line). Required for edge lists; optional
    /// for dense CSV (indices are used otherwise).
    pub labels: Option<PathBuf>,
}

impl LoadOptions {
    pub fn new(arm: Arm) -> Self {
        LoadOptions { arm, labels: None }
    }

    pub fn with_labels(mut self, path: impl Into<PathBuf>) -> Self {
        self.labels = Some(path.into());
        self
    }
}

pub fn load_network(path: &Path, format: NetworkFormat, options: &LoadOptions) -> Result<Network> {
    match format {
        NetworkFormat::EdgeList => load_edge_list(path, options),
        NetworkFormat::DenseCsv => load_dense_csv(path, options),
        NetworkFormat::Json => load_json(path, options),
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn read_label_manifest(path: &Path) -> Result<Vec<String>> {
    let text = read_to_string(path)?;
    let labels: Vec<String> = text
        .lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty())
        .map(|l| l.to_string())
        .collect();
    if labels.is_empty() {
        return Err(parse_err(path, "label manifest is empty"));
    }
    Ok(labels)
}

fn load_edge_list(path: &Path, options: &LoadOptions) -> Result<Network> {
    let manifest = options
        .labels
        .as_ref()
        .ok_or_else(|| Error::Config("edge-list ingestion requires a label manifest".into()))?;
    let labels = read_label_manifest(manifest)?;
    let index: HashMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let n = labels.len();

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(path, e.to_string()))?;

    let mut values = DMatrix::<f64>::zeros(n, n);
    let mut seen: HashMap<(usize, usize), f64> = HashMap::new();
    let mut explicit_diagonal = false;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(path, e.to_string()))?;
        if record.len() < 2 || record.len() > 3 {
            return Err(parse_err(
                path,
                format!("row {}: expected src,dst[,weight]", line + 1),
            ));
        }
        let src = record.get(0).unwrap();
        let dst = record.get(1).unwrap();
        let &i = index
            .get(src)
            .ok_or_else(|| Error::UnknownLabel(src.to_string()))?;
        let &j = index
            .get(dst)
            .ok_or_else(|| Error::UnknownLabel(dst.to_string()))?;
        let weight = match record.get(2) {
            None | Some("") => 1.0,
            Some(w) => w
                .parse::<f64>()
                .map_err(|_| parse_err(path, format!("row {}: bad weight {w:?}", line + 1)))?,
        };
        if weight.is_nan() {
            return Err(Error::NanEntry { i, j });
        }
        let key = (i.min(j), i.max(j));
        if let Some(&prev) = seen.get(&key) {
            if prev != weight {
                return Err(Error::DuplicateEdge {
                    src: src.to_string(),
                    dst: dst.to_string(),
                    a: prev,
                    b: weight,
                });
            }
        } else {
            seen.insert(key, weight);
        }
        if i == j {
            explicit_diagonal = true;
        }
        values[(i, j)] = weight;
        values[(j, i)] = weight;
    }
    let policy = if explicit_diagonal {
        DiagonalPolicy::Stored
    } else {
        DiagonalPolicy::DefaultedZero
    };
    Ok(Network::new(labels, values, None, options.arm)?.with_diagonal_policy(policy))
}

fn load_dense_csv(path: &Path, options: &LoadOptions) -> Result<Network> {
    let text = read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                cell.trim().parse::<f64>().map_err(|_| {
                    parse_err(path, format!("row {}: bad number {cell:?}", lineno + 1))
                })
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    let n = rows.len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(parse_err(
                path,
                format!("row {} has {} cells, expected {n}", i + 1, row.len()),
            ));
        }
    }
    let labels = match &options.labels {
        Some(manifest) => read_label_manifest(manifest)?,
        None => (0..n).map(|i| i.to_string()).collect(),
    };
    let values = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    Network::new(labels, values, None, options.arm)
}

#[derive(Deserialize)]
struct JsonNetwork {
    labels: Vec<String>,
    matrix: Vec<Vec<f64>>,
    #[serde(default)]
    mask: Option<Vec<Vec<bool>>>,
}

fn load_json(path: &Path, options: &LoadOptions) -> Result<Network> {
    let text = read_to_string(path)?;
    let parsed: JsonNetwork =
        serde_json::from_str(&text).map_err(|e| parse_err(path, e.to_string()))?;
    let n = parsed.matrix.len();
    for (i, row) in parsed.matrix.iter().enumerate() {
        if row.len() != n {
            return Err(parse_err(
                path,
                format!("matrix row {i} has {} cells, expected {n}", row.len()),
            ));
        }
    }
    let values = DMatrix::from_fn(n, n, |i, j| parsed.matrix[i][j]);
    let mask = match parsed.mask {
        None => None,
        Some(rows) => {
            for (i, row) in rows.iter().enumerate() {
                if row.len() != n {
                    return Err(parse_err(
                        path,
                        format!("mask row {i} has {} cells, expected {n}", row.len()),
                    ));
                }
            }
            Some(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
        }
    };
    Network::new(parsed.labels, values, mask, options.arm)
}
