//! Network representation, ingestion, validation, function-embedding spectra,
//! and homomorphism-density utilities.
//!
//! A [`Network`] is a symmetric matrix of dyadic outcomes over a labelled set
//! of agents, with an optional symmetric mask for structurally-missing dyads
//! (e.g. the within-side cells of a symmetrized bipartite network). All
//! integrals in this crate are over ordered dyads, denominator N^2, with the
//! diagonal included at its stored value.

mod homdens;
mod ingest;
mod spectra;

pub use homdens::{homomorphism_density, Pattern};
pub use ingest::{load_network, LoadOptions, NetworkFormat};
pub use spectra::{eigen_pairs, indicator_spectrum, spectrum, EigenPair, Spectrum};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which experimental arm a network belongs to: the group assigned the new
/// policy (`Treated`, tag 1) or the status quo (`Control`, tag 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Treated,
    Control,
}

impl Arm {
    pub fn tag(self) -> u8 {
        match self {
            Arm::Treated => 1,
            Arm::Control => 0,
        }
    }
}

/// Records whether self-dyads were present in the input or defaulted to zero
/// during ingestion. Metadata only: the diagonal always enters integrals at
/// its stored value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalPolicy {
    Stored,
    DefaultedZero,
}

/// A weighted symmetric network over labelled agents.
///
/// Invariants (checked at construction):
/// - `values` and `mask` are symmetric, with no NaN entries;
/// - masked cells store 0 and are excluded from all counts and means;
/// - dimension N >= 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    labels: Vec<String>,
    values: DMatrix<f64>,
    mask: Option<DMatrix<bool>>,
    arm: Arm,
    diagonal_policy: DiagonalPolicy,
}

impl Network {
    pub fn new(
        labels: Vec<String>,
        values: DMatrix<f64>,
        mask: Option<DMatrix<bool>>,
        arm: Arm,
    ) -> Result<Self> {
        let n = values.nrows();
        if n < 2 {
            return Err(Error::TooSmall(n));
        }
        if values.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "network matrix must be square",
                expected: n,
                actual: values.ncols(),
            });
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                context: "label count must match matrix dimension",
                expected: n,
                actual: labels.len(),
            });
        }
        {
            let mut seen = std::collections::HashSet::new();
            for l in &labels {
                if !seen.insert(l.as_str()) {
                    return Err(Error::DuplicateLabel(l.clone()));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[(i, j)];
                if v.is_nan() {
                    return Err(Error::NanEntry { i, j });
                }
                if j > i && v != values[(j, i)] {
                    return Err(Error::Asymmetric {
                        i,
                        j,
                        a: v,
                        b: values[(j, i)],
                    });
                }
            }
        }
        let mut values = values;
        if let Some(m) = &mask {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    context: "mask dimension must match matrix",
                    expected: n,
                    actual: m.nrows(),
                });
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    if m[(i, j)] != m[(j, i)] {
                        return Err(Error::Asymmetric {
                            i,
                            j,
                            a: m[(i, j)] as u8 as f64,
                            b: m[(j, i)] as u8 as f64,
                        });
                    }
                }
            }
            // masked cells carry no outcome value
            for i in 0..n {
                for j in 0..n {
                    if m[(i, j)] {
                        values[(i, j)] = 0.0;
                    }
                }
            }
        }
        let mask = mask.filter(|m| m.iter().any(|&b| b));
        Ok(Network {
            labels,
            values,
            mask,
            arm,
            diagonal_policy: DiagonalPolicy::Stored,
        })
    }

    /// Builds an unmasked network from dense rows. Convenience for tests and
    /// programmatic construction.
    pub fn from_dense(labels: Vec<String>, rows: Vec<Vec<f64>>, arm: Arm) -> Result<Self> {
        let n = rows.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "dense row length",
                    expected: n,
                    actual: rows[i].len(),
                });
            }
        }
        let values = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Network::new(labels, values, None, arm)
    }

    pub(crate) fn with_diagonal_policy(mut self, policy: DiagonalPolicy) -> Self {
        self.diagonal_policy = policy;
        self
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn arm(&self) -> Arm {
        self.arm
    }

    pub fn diagonal_policy(&self) -> DiagonalPolicy {
        self.diagonal_policy
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn is_masked(&self, i: usize, j: usize) -> bool {
        self.mask.as_ref().map_or(false, |m| m[(i, j)])
    }

    pub fn has_mask(&self) -> bool {
        self.mask.is_some()
    }

    pub fn mask(&self) -> Option<&DMatrix<bool>> {
        self.mask.as_ref()
    }

    /// Number of unmasked ordered cells (diagonal included).
    pub fn unmasked_cells(&self) -> usize {
        match &self.mask {
            None => self.n() * self.n(),
            Some(m) => m.iter().filter(|&&b| !b).count(),
        }
    }

    /// Fraction of ordered cells that are unmasked.
    pub fn unmasked_fraction(&self) -> f64 {
        self.unmasked_cells() as f64 / (self.n() * self.n()) as f64
    }

    /// Mean of the unmasked cells.
    pub fn mean(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..self.n() {
            for j in 0..self.n() {
                if !self.is_masked(i, j) {
                    sum += self.values[(i, j)];
                    count += 1;
                }
            }
        }
        sum / count as f64
    }

    /// Fraction of ordered cells with value <= y. Masked cells behave as +inf
    /// and never satisfy the threshold; the denominator stays N^2.
    pub fn fraction_leq(&self, y: f64) -> f64 {
        let n = self.n();
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..n {
                if !self.is_masked(i, j) && self.values[(i, j)] <= y {
                    count += 1;
                }
            }
        }
        count as f64 / (n * n) as f64
    }

    /// Sorted distinct unmasked values (diagonal included).
    pub fn distinct_values(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = Vec::new();
        for i in 0..self.n() {
            for j in 0..self.n() {
                if !self.is_masked(i, j) {
                    vals.push(self.values[(i, j)]);
                }
            }
        }
        vals.sort_by(|a, b| a.partial_cmp(b).expect("no NaN after validation"));
        vals.dedup();
        vals
    }

    /// True when every unmasked cell is 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.distinct_values().iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Dense matrix with masked cells replaced by `mask_fill`.
    pub fn filled(&self, mask_fill: f64) -> DMatrix<f64> {
        match &self.mask {
            None => self.values.clone(),
            Some(m) => {
                let mut out = self.values.clone();
                for i in 0..self.n() {
                    for j in 0..self.n() {
                        if m[(i, j)] {
                            out[(i, j)] = mask_fill;
                        }
                    }
                }
                out
            }
        }
    }

    /// Relabels agents by a permutation: entry (i,j) of the result is the
    /// original (perm[i], perm[j]). Used by tests and the oracle.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        if perm.len() != n {
            return Err(Error::DimensionMismatch {
                context: "permutation length",
                expected: n,
                actual: perm.len(),
            });
        }
        let values = DMatrix::from_fn(n, n, |i, j| self.values[(perm[i], perm[j])]);
        let mask = self
            .mask
            .as_ref()
            .map(|m| DMatrix::from_fn(n, n, |i, j| m[(perm[i], perm[j])]));
        let labels = perm.iter().map(|&p| self.labels[p].clone()).collect();
        let out = Network::new(labels, values, mask, self.arm)?;
        Ok(out.with_diagonal_policy(self.diagonal_policy))
    }
}

/// Binary network with cell 1 iff value <= y. Masked cells behave as +inf
/// (indicator 0 for every finite y) and remain masked in the output.
pub fn threshold_indicator(net: &Network, y: f64) -> Network {
    let n = net.n();
    let values = DMatrix::from_fn(n, n, |i, j| {
        if !net.is_masked(i, j) && net.value(i, j) <= y {
            1.0
        } else {
            0.0
        }
    });
    Network {
        labels: net.labels.clone(),
        values,
        mask: net.mask.clone(),
        arm: net.arm,
        diagonal_policy: net.diagonal_policy,
    }
}

/// Symmetrizes a rectangular (rows x cols) matrix into an (m+n) x (m+n)
/// network with off-diagonal blocks B and B^T. All within-side cells
/// (including the diagonal) are masked; thresholding then yields 0 there for
/// every finite threshold, realizing dyads that are fixed at +inf.
pub fn symmetrize_bipartite(
    rows: &[String],
    cols: &[String],
    b: &DMatrix<f64>,
    arm: Arm,
) -> Result<Network> {
    let (m, n) = (rows.len(), cols.len());
    if b.nrows() != m || b.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "bipartite block shape",
            expected: m * n,
            actual: b.nrows() * b.ncols(),
        });
    }
    for r in rows {
        if cols.contains(r) {
            return Err(Error::LabelCollision(r.clone()));
        }
    }
    let total = m + n;
    let values = DMatrix::from_fn(total, total, |i, j| {
        if i < m && j >= m {
            b[(i, j - m)]
        } else if i >= m && j < m {
            b[(j, i - m)]
        } else {
            0.0
        }
    });
    let mask = DMatrix::from_fn(total, total, |i, j| (i < m) == (j < m));
    let labels = rows.iter().chain(cols.iter()).cloned().collect();
    Network::new(labels, values, Some(mask), arm)
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    pub fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("a{i}")).collect()
    }

    /// 6-node star: hub a0 connected to a1..a5.
    pub fn star6(arm: Arm) -> Network {
        let mut rows = vec![vec![0.0; 6]; 6];
        for k in 1..6 {
            rows[0][k] = 1.0;
            rows[k][0] = 1.0;
        }
        Network::from_dense(labels(6), rows, arm).unwrap()
    }

    /// 6-node path a0-a1-a2-a3-a4-a5.
    pub fn line6(arm: Arm) -> Network {
        let mut rows = vec![vec![0.0; 6]; 6];
        for k in 0..5 {
            rows[k][k + 1] = 1.0;
            rows[k + 1][k] = 1.0;
        }
        Network::from_dense(labels(6), rows, arm).unwrap()
    }
}
