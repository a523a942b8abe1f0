//! Agent attribute tables and subgroup conditioning.
//!
//! Subgroups condition the analysis on agent types (e.g. high/low borrowing
//! propensity). A within-group expression induces the subnetwork on matching
//! agents; a cross-group expression produces the bipartite block between two
//! disjoint selections, routed through the symmetrization so within-side
//! dyads are structurally masked.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::netmat::{symmetrize_bipartite, Network};

/// Per-agent attributes loaded from a CSV with a `label` header column.
#[derive(Debug, Clone)]
pub struct AttributeTable {
    columns: Vec<String>,
    rows: HashMap<String, Vec<String>>,
}

impl AttributeTable {
    pub fn load(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?
            .clone();
        if headers.get(0) != Some("label") {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                message: "first attribute column must be `label`".into(),
            });
        }
        let columns: Vec<String> = headers.iter().skip(1).map(|h| h.to_string()).collect();
        let mut rows = HashMap::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
            let label = record.get(0).unwrap_or("").to_string();
            let values: Vec<String> = record.iter().skip(1).map(|v| v.to_string()).collect();
            rows.insert(label, values);
        }
        Ok(AttributeTable { columns, rows })
    }

    pub fn from_rows(columns: Vec<String>, rows: Vec<(String, Vec<String>)>) -> Self {
        AttributeTable {
            columns,
            rows: rows.into_iter().collect(),
        }
    }

    pub fn get(&self, label: &str, attr: &str) -> Option<&str> {
        let col = self.columns.iter().position(|c| c == attr)?;
        self.rows.get(label).and_then(|r| r.get(col)).map(|s| s.as_str())
    }
}

/// `attr=value` selections, within one group or across two.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupingExpr {
    /// Induced subnetwork on agents with attr == value.
    Select { attr: String, value: String },
    /// Bipartite block between two disjoint selections.
    Cross {
        left_attr: String,
        left_value: String,
        right_attr: String,
        right_value: String,
    },
}

impl GroupingExpr {
    /// Parses `attr=value`.
    pub fn parse_select(expr: &str) -> Result<Self> {
        let (attr, value) = expr
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("bad grouping expression {expr:?}, want attr=value")))?;
        Ok(GroupingExpr::Select {
            attr: attr.trim().to_string(),
            value: value.trim().to_string(),
        })
    }

    pub fn parse_cross(left: &str, right: &str) -> Result<Self> {
        let (l, r) = (Self::parse_select(left)?, Self::parse_select(right)?);
        match (l, r) {
            (
                GroupingExpr::Select { attr: la, value: lv },
                GroupingExpr::Select { attr: ra, value: rv },
            ) => Ok(GroupingExpr::Cross {
                left_attr: la,
                left_value: lv,
                right_attr: ra,
                right_value: rv,
            }),
            _ => unreachable!("parse_select only returns Select"),
        }
    }
}

fn select_indices(
    net: &Network,
    attrs: &AttributeTable,
    attr: &str,
    value: &str,
) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, label) in net.labels().iter().enumerate() {
        match attrs.get(label, attr) {
            Some(v) => {
                if v == value {
                    out.push(i);
                }
            }
            None => {
                return Err(Error::MissingAttribute {
                    label: label.clone(),
                    attr: attr.to_string(),
                })
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptySelection(format!("{attr}={value}")));
    }
    Ok(out)
}

fn induced(net: &Network, idx: &[usize]) -> Result<Network> {
    let k = idx.len();
    if k < 2 {
        return Err(Error::TooSmall(k));
    }
    let values = DMatrix::from_fn(k, k, |a, b| net.value(idx[a], idx[b]));
    let mask = net
        .mask()
        .map(|m| DMatrix::from_fn(k, k, |a, b| m[(idx[a], idx[b])]));
    let labels = idx.iter().map(|&i| net.labels()[i].clone()).collect();
    Network::new(labels, values, mask, net.arm())
}

/// Conditions a network on an agent grouping. Within-group selections give
/// the induced subnetwork; cross-group selections give the symmetrized
/// bipartite network on the two sides.
pub fn subset_by_group(
    net: &Network,
    attrs: &AttributeTable,
    expr: &GroupingExpr,
) -> Result<Network> {
    match expr {
        GroupingExpr::Select { attr, value } => {
            let idx = select_indices(net, attrs, attr, value)?;
            induced(net, &idx)
        }
        GroupingExpr::Cross {
            left_attr,
            left_value,
            right_attr,
            right_value,
        } => {
            let left = select_indices(net, attrs, left_attr, left_value)?;
            let right = select_indices(net, attrs, right_attr, right_value)?;
            if let Some(&dup) = left.iter().find(|i| right.contains(i)) {
                return Err(Error::LabelCollision(net.labels()[dup].clone()));
            }
            for &l in &left {
                for &r in &right {
                    if net.is_masked(l, r) {
                        return Err(Error::Config(
                            "cross-group block touches masked cells of the source network".into(),
                        ));
                    }
                }
            }
            let block = DMatrix::from_fn(left.len(), right.len(), |a, b| {
                net.value(left[a], right[b])
            });
            let left_labels: Vec<String> =
                left.iter().map(|&i| net.labels()[i].clone()).collect();
            let right_labels: Vec<String> =
                right.iter().map(|&i| net.labels()[i].clone()).collect();
            symmetrize_bipartite(&left_labels, &right_labels, &block, net.arm())
        }
    }
}
