//! Per-outcome-cell probability bound tables for discrete outcomes.
//!
//! For support values a of arm 1 and b of arm 0, the cell P(Y1 = a, Y0 = b)
//! is bounded by interval arithmetic on the inclusion-exclusion identity
//! F(a,b) - F(a-,b) - F(a,b-) + F(a-,b-), where each corner F is bounded by
//! the DPO machinery and a- denotes the previous support value. Cells are
//! then tightened by the exactly-identified marginal pmfs.
//!
//! When the networks carry masks (symmetrized bipartite data), probabilities
//! are reported conditional on structurally-present dyads: every bound is
//! divided by the unmasked fraction, which must agree between arms. This is
//! what makes the marginal pmfs sum to one.

use serde::Serialize;

use crate::bounds::{dpo_bounds, BoundInterval, LowerSource, UpperSource};
use crate::error::{Error, Result};
use crate::netmat::Network;

const MAX_SUPPORT: usize = 12;

/// Bounds on the joint pmf over the product of observed supports, with the
/// exactly-identified marginals.
#[derive(Debug, Clone, Serialize)]
pub struct DpoCellTable {
    /// Sorted distinct unmasked values of arm 1 (rows).
    pub support1: Vec<f64>,
    /// Sorted distinct unmasked values of arm 0 (columns).
    pub support0: Vec<f64>,
    /// cells[i][j] bounds P(Y1 = support1[i], Y0 = support0[j]).
    pub cells: Vec<Vec<BoundInterval>>,
    /// Exact pmf of arm-1 values over unmasked cells; sums to 1.
    pub marginals1: Vec<f64>,
    /// Exact pmf of arm-0 values over unmasked cells; sums to 1.
    pub marginals0: Vec<f64>,
    /// Fraction of ordered dyads that are structurally present (1 when
    /// unmasked); probabilities are conditional on these.
    pub unmasked_fraction: f64,
}

fn exact_marginals(net: &Network, support: &[f64]) -> Vec<f64> {
    let n = net.n();
    let mut counts = vec![0usize; support.len()];
    let mut total = 0usize;
    for i in 0..n {
        for j in 0..n {
            if !net.is_masked(i, j) {
                total += 1;
                let v = net.value(i, j);
                let k = support
                    .iter()
                    .position(|&s| s == v)
                    .expect("support covers every unmasked value");
                counts[k] += 1;
            }
        }
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// Cell-bound table with the default (unadjusted) DPO corner bounds.
pub fn pmf_cell_bounds(net1: &Network, net0: &Network) -> Result<DpoCellTable> {
    pmf_cell_bounds_with(net1, net0, dpo_bounds)
}

/// Cell-bound table with a caller-supplied corner bound, e.g. the
/// reduction-adjusted variant. The bounder is called at every pair of
/// consecutive support thresholds.
pub fn pmf_cell_bounds_with<F>(net1: &Network, net0: &Network, corner: F) -> Result<DpoCellTable>
where
    F: Fn(&Network, &Network, f64, f64) -> Result<BoundInterval>,
{
    let support1 = net1.distinct_values();
    let support0 = net0.distinct_values();
    for (support, ctx) in [(&support1, "arm 1"), (&support0, "arm 0")] {
        if support.len() > MAX_SUPPORT {
            return Err(Error::TooManyValues {
                context: if ctx == "arm 1" {
                    "pmf_cell_bounds arm 1"
                } else {
                    "pmf_cell_bounds arm 0"
                },
                actual: support.len(),
                limit: MAX_SUPPORT,
            });
        }
    }
    let mu1 = net1.unmasked_fraction();
    let mu0 = net0.unmasked_fraction();
    if (mu1 - mu0).abs() > 1e-12 {
        return Err(Error::MaskFractionMismatch { mu1, mu0 });
    }
    let mu = mu1;

    // corner bounds F(support1[i], support0[j]); index -1 encoded as None
    let point = |l: f64, u: f64| BoundInterval {
        lower: l,
        upper: u,
        lower_active: LowerSource::Zero,
        upper_active: UpperSource::CoPaired,
    };
    let mut corners: Vec<Vec<BoundInterval>> =
        vec![vec![point(0.0, 0.0); support0.len()]; support1.len()];
    for (i, &a) in support1.iter().enumerate() {
        for (j, &b) in support0.iter().enumerate() {
            corners[i][j] = corner(net1, net0, a, b)?;
        }
    }
    let corner_at = |i: isize, j: isize| -> BoundInterval {
        if i < 0 || j < 0 {
            point(0.0, 0.0)
        } else {
            corners[i as usize][j as usize]
        }
    };

    let marginals1 = exact_marginals(net1, &support1);
    let marginals0 = exact_marginals(net0, &support0);

    let mut cells: Vec<Vec<BoundInterval>> = Vec::with_capacity(support1.len());
    for i in 0..support1.len() as isize {
        let mut row = Vec::with_capacity(support0.len());
        for j in 0..support0.len() as isize {
            let f = corner_at(i, j);
            let fa = corner_at(i - 1, j);
            let fb = corner_at(i, j - 1);
            let fab = corner_at(i - 1, j - 1);
            // [l,u] - [l',u'] = [l-u', u-l'], applied to the four corners,
            // then conditioned on unmasked dyads
            let mut lower = (f.lower - fa.upper - fb.upper + fab.lower) / mu;
            let mut upper = (f.upper - fa.lower - fb.lower + fab.upper) / mu;
            let m1 = marginals1[i as usize];
            let m0 = marginals0[j as usize];
            let mut lower_active = LowerSource::AntiPaired;
            let mut upper_active = UpperSource::CoPaired;
            if m1 + m0 - 1.0 > lower {
                lower = m1 + m0 - 1.0;
                lower_active = LowerSource::SumMinusOne;
            }
            if 0.0 > lower {
                lower = 0.0;
                lower_active = LowerSource::Zero;
            }
            if m1 < upper {
                upper = m1;
                upper_active = UpperSource::Marginal1;
            }
            if m0 < upper {
                upper = m0;
                upper_active = UpperSource::Marginal0;
            }
            let upper = upper.clamp(0.0, 1.0);
            let lower = lower.clamp(0.0, 1.0).min(upper);
            row.push(BoundInterval {
                lower,
                upper,
                lower_active,
                upper_active,
            });
        }
        cells.push(row);
    }

    let table = DpoCellTable {
        support1,
        support0,
        cells,
        marginals1,
        marginals0,
        unmasked_fraction: mu,
    };
    table.check_marginal_consistency()?;
    Ok(table)
}

impl DpoCellTable {
    /// Row/column sums of cell bounds must bracket the exact marginals.
    pub fn check_marginal_consistency(&self) -> Result<()> {
        let tol = 1e-9;
        for (i, &m) in self.marginals1.iter().enumerate() {
            let lo: f64 = self.cells[i].iter().map(|c| c.lower).sum();
            let hi: f64 = self.cells[i].iter().map(|c| c.upper).sum();
            if lo > m + tol || hi < m - tol {
                return Err(Error::Config(format!(
                    "cell table row {i} inconsistent with marginal {m}: bounds sum to [{lo}, {hi}]"
                )));
            }
        }
        for (j, &m) in self.marginals0.iter().enumerate() {
            let lo: f64 = self.cells.iter().map(|r| r[j].lower).sum();
            let hi: f64 = self.cells.iter().map(|r| r[j].upper).sum();
            if lo > m + tol || hi < m - tol {
                return Err(Error::Config(format!(
                    "cell table column {j} inconsistent with marginal {m}: bounds sum to [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmat::testutil::{labels, line6, star6};
    use crate::netmat::Arm;

    #[test]
    fn identical_networks_diagonal_cells_contain_truth() {
        let net = star6(Arm::Control);
        let table = pmf_cell_bounds(&net, &net).unwrap();
        assert_eq!(table.support1, vec![0.0, 1.0]);
        // exact diagonal pmf: P(0,0) = 26/36, P(1,1) = 10/36
        assert!(table.cells[0][0].contains(26.0 / 36.0, 1e-9));
        assert!(table.cells[1][1].contains(10.0 / 36.0, 1e-9));
        // off-diagonal lower bounds are 0
        assert_eq!(table.cells[0][1].lower, 0.0);
        assert_eq!(table.cells[1][0].lower, 0.0);
    }

    #[test]
    fn marginals_sum_to_one() {
        let table = pmf_cell_bounds(&line6(Arm::Treated), &star6(Arm::Control)).unwrap();
        let s1: f64 = table.marginals1.iter().sum();
        let s0: f64 = table.marginals0.iter().sum();
        assert!((s1 - 1.0).abs() < 1e-12);
        assert!((s0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn toy_table_contains_sharp_destroyed_cell() {
        // P(Y1=0, Y0=1) is the destroyed fraction, sharp values {6/36, 8/36}
        let table = pmf_cell_bounds(&line6(Arm::Treated), &star6(Arm::Control)).unwrap();
        let cell = table.cells[0][1];
        assert!(cell.contains(6.0 / 36.0, 1e-9), "{cell:?}");
        assert!(cell.contains(8.0 / 36.0, 1e-9), "{cell:?}");
    }

    #[test]
    fn too_many_values_rejected() {
        let n = 14;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { 0.0 } else { (i + j) as f64 })
                    .collect()
            })
            .collect();
        let net = Network::from_dense(labels(n), rows, Arm::Control).unwrap();
        let err = pmf_cell_bounds(&net, &net).unwrap_err();
        assert!(matches!(err, Error::TooManyValues { .. }));
    }

    #[test]
    fn conditional_on_unmasked_for_bipartite() {
        use nalgebra::DMatrix;
        let b1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b0 = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        let r: Vec<String> = vec!["r0".into(), "r1".into()];
        let c: Vec<String> = vec!["c0".into(), "c1".into()];
        let net1 = crate::netmat::symmetrize_bipartite(&r, &c, &b1, Arm::Treated).unwrap();
        let net0 = crate::netmat::symmetrize_bipartite(&r, &c, &b0, Arm::Control).unwrap();
        let table = pmf_cell_bounds(&net1, &net0).unwrap();
        assert_eq!(table.unmasked_fraction, 0.5);
        let s1: f64 = table.marginals1.iter().sum();
        assert!((s1 - 1.0).abs() < 1e-12, "conditional marginals sum to 1");
        // both blocks half ones: conditional marginal of 1 is 1/2
        assert!((table.marginals1[1] - 0.5).abs() < 1e-12);
    }
}
