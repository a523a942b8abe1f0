//! Bounds on the distribution of treatment effects Delta(y), the mass of
//! dyads whose outcome change is at most y.
//!
//! Each threshold pair (y1, y0) with y1 - y0 = y yields a valid bound built
//! from the DPO terms; the reported bound optimizes over a finite grid
//! derived from the observed supports. Two kinds of candidates are used:
//!
//! - exact pairs (c, c - y), including copies shifted jointly by -eps to
//!   capture left limits at atoms;
//! - y0-side shifted pairs (c, c - y - eps). These bound Delta(y + eps),
//!   which equals Delta(y) as long as no treatment-effect atom lies in
//!   (y, y + eps]; eps is chosen below the distance to the nearest atom of
//!   the difference support above y, so the transfer is always valid. This
//!   is what captures events like {Y1 = 0, Y0 = 1} on discrete data, where
//!   the weak-inequality pairs are uninformative.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::bounds::{prop2_terms, BoundInterval};
use crate::error::{Error, Result};
use crate::netmat::{indicator_spectrum, Network};

#[derive(Debug, Clone, PartialEq)]
pub enum GridPolicy {
    /// Support-derived candidate thresholds with strict-inequality shifts.
    Full,
    /// Explicit y1 candidates; y0 = y1 - y.
    Custom(Vec<f64>),
}

/// A DTE bound at one y, with the threshold pairs that attained each side.
#[derive(Debug, Clone)]
pub struct DtePointBound {
    pub y: f64,
    pub interval: BoundInterval,
    /// (y1, y0) attaining the lower bound (first lexicographically on ties).
    pub lower_at: (f64, f64),
    pub upper_at: (f64, f64),
}

/// Monotone bound functions for Delta on a grid of y values.
#[derive(Debug, Clone)]
pub struct DteCurve {
    pub grid: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Half the minimum gap between consecutive distinct pooled values, used as
/// the baseline strict-inequality shift.
fn pooled_half_gap(s1: &[f64], s0: &[f64]) -> Option<f64> {
    let mut pooled: Vec<f64> = s1.iter().chain(s0.iter()).cloned().collect();
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pooled.dedup();
    pooled
        .windows(2)
        .map(|w| (w[1] - w[0]) / 2.0)
        .min_by(|a, b| a.partial_cmp(b).unwrap())
}

/// Smallest value of the treatment-effect support {a - b} strictly above y.
fn nearest_difference_atom_above(s1: &[f64], s0: &[f64], y: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    for &a in s1 {
        // want the largest b with a - b > y, i.e. b < a - y
        for &b in s0.iter().rev() {
            if b < a - y {
                let d = a - b;
                if d > y && best.map_or(true, |cur| d < cur) {
                    best = Some(d);
                }
                break;
            }
        }
    }
    best
}

/// Candidate (y1, y0) pairs for the sup/inf at level y, deduplicated and
/// sorted lexicographically. Capped at N(N+1) pairs.
fn candidate_pairs(net1: &Network, net0: &Network, y: f64, policy: &GridPolicy) -> Result<Vec<(f64, f64)>> {
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    match policy {
        GridPolicy::Custom(y1s) => {
            for &y1 in y1s {
                pairs.push((y1, y1 - y));
            }
        }
        GridPolicy::Full => {
            let s1 = net1.distinct_values();
            let s0 = net0.distinct_values();
            let eps = {
                let by_gap = pooled_half_gap(&s1, &s0);
                let by_atom = nearest_difference_atom_above(&s1, &s0, y).map(|d| (d - y) / 2.0);
                match (by_gap, by_atom) {
                    (Some(g), Some(a)) => g.min(a),
                    (Some(g), None) => g,
                    (None, Some(a)) => a,
                    (None, None) => 0.0,
                }
            };
            let mut push = |y1: f64, y0: f64| pairs.push((y1, y0));
            for &c in s1.iter().chain(s0.iter().map(|b| b + y).collect::<Vec<_>>().iter()) {
                push(c, c - y); // exact
                if eps > 0.0 {
                    push(c - eps, c - eps - y); // exact, left limit
                    push(c, c - y - eps); // y0-side shift (atom-safe transfer)
                }
            }
        }
    }
    pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pairs.dedup();
    if pairs.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let cap = {
        let n = net1.n().max(net0.n());
        n * (n + 1)
    };
    if pairs.len() > cap {
        // thin deterministically, keeping the extremes
        let step = (pairs.len() + cap - 1) / cap;
        let last = *pairs.last().unwrap();
        let mut thinned: Vec<(f64, f64)> = pairs.into_iter().step_by(step).collect();
        if *thinned.last().unwrap() != last {
            thinned.push(last);
        }
        pairs = thinned;
    }
    Ok(pairs)
}

/// Per-threshold indicator spectra, computed in parallel and keyed by the
/// threshold's bit pattern. Read-only once built.
struct SpectraByThreshold(HashMap<u64, Vec<f64>>);

impl SpectraByThreshold {
    fn build(net: &Network, thresholds: &[f64]) -> Result<Self> {
        let mut keys: Vec<f64> = thresholds.to_vec();
        keys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        keys.dedup();
        let entries: Result<Vec<(u64, Vec<f64>)>> = keys
            .par_iter()
            .map(|&t| indicator_spectrum(net, t).map(|s| (t.to_bits(), s.eigenvalues)))
            .collect();
        Ok(SpectraByThreshold(entries?.into_iter().collect()))
    }

    fn get(&self, t: f64) -> &[f64] {
        &self.0[&t.to_bits()]
    }
}

fn point_bound_from(
    pairs: &[(f64, f64)],
    spec1: &SpectraByThreshold,
    spec0: &SpectraByThreshold,
    y: f64,
) -> DtePointBound {
    let mut lower = 0.0;
    let mut lower_at = pairs[0];
    let mut upper = 1.0;
    let mut upper_at = pairs[0];
    let mut lower_src = super::LowerSource::Zero;
    let mut upper_src = super::UpperSource::Marginal0;
    for &(y1, y0) in pairs {
        let t = prop2_terms(spec1.get(y1), spec0.get(y0));
        let cand_lower = [
            (t.sum1 - t.sum0, super::LowerSource::SumMinusOne),
            (t.sum1 - t.co, super::LowerSource::AntiPaired),
            (0.0, super::LowerSource::Zero),
        ];
        // upper_active: Marginal1 = marginal-difference term, CoPaired =
        // pairing term, Marginal0 = the trivial bound 1
        let cand_upper = [
            (1.0 + (t.sum1 - t.sum0), super::UpperSource::Marginal1),
            (1.0 + (t.co - t.sum0), super::UpperSource::CoPaired),
            (1.0, super::UpperSource::Marginal0),
        ];
        let (mut lo, mut lo_src) = cand_lower[0];
        for &(v, s) in &cand_lower[1..] {
            if v > lo {
                lo = v;
                lo_src = s;
            }
        }
        let (mut hi, mut hi_src) = cand_upper[0];
        for &(v, s) in &cand_upper[1..] {
            if v < hi {
                hi = v;
                hi_src = s;
            }
        }
        if lo > lower {
            lower = lo;
            lower_at = (y1, y0);
            lower_src = lo_src;
        }
        if hi < upper {
            upper = hi;
            upper_at = (y1, y0);
            upper_src = hi_src;
        }
    }
    let upper = upper.clamp(0.0, 1.0);
    let lower = lower.clamp(0.0, 1.0).min(upper);
    DtePointBound {
        y,
        interval: BoundInterval {
            lower,
            upper,
            lower_active: lower_src,
            upper_active: upper_src,
        },
        lower_at,
        upper_at,
    }
}

/// Bounds on Delta(y) optimized over the threshold grid.
pub fn dte_bounds(
    net1: &Network,
    net0: &Network,
    y: f64,
    policy: &GridPolicy,
) -> Result<DtePointBound> {
    let pairs = candidate_pairs(net1, net0, y, policy)?;
    let t1: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let t0: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let spec1 = SpectraByThreshold::build(net1, &t1)?;
    let spec0 = SpectraByThreshold::build(net0, &t0)?;
    Ok(point_bound_from(&pairs, &spec1, &spec0, y))
}

/// Pointwise DTE bounds over a sorted grid, followed by isotonic repair:
/// running max on the lower curve, reverse running min on the upper. The
/// repaired curves are nondecreasing with lower <= upper pointwise.
pub fn dte_curve(net1: &Network, net0: &Network, grid: &[f64]) -> Result<DteCurve> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config("dte_curve grid must be sorted".into()));
    }
    // gather every threshold needed across the grid so each indicator
    // spectrum is decomposed once
    let mut all_pairs: Vec<Vec<(f64, f64)>> = Vec::with_capacity(grid.len());
    for &y in grid {
        all_pairs.push(candidate_pairs(net1, net0, y, &GridPolicy::Full)?);
    }
    let t1: Vec<f64> = all_pairs.iter().flatten().map(|p| p.0).collect();
    let t0: Vec<f64> = all_pairs.iter().flatten().map(|p| p.1).collect();
    let spec1 = SpectraByThreshold::build(net1, &t1)?;
    let spec0 = SpectraByThreshold::build(net0, &t0)?;

    let mut lower: Vec<f64> = Vec::with_capacity(grid.len());
    let mut upper: Vec<f64> = Vec::with_capacity(grid.len());
    for (&y, pairs) in grid.iter().zip(all_pairs.iter()) {
        let p = point_bound_from(pairs, &spec1, &spec0, y);
        lower.push(p.interval.lower);
        upper.push(p.interval.upper);
    }
    for i in 1..lower.len() {
        lower[i] = lower[i].max(lower[i - 1]);
    }
    for i in (0..upper.len().saturating_sub(1)).rev() {
        upper[i] = upper[i].min(upper[i + 1]);
    }
    Ok(DteCurve {
        grid: grid.to_vec(),
        lower,
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmat::testutil::{line6, star6};
    use crate::netmat::Arm;

    #[test]
    fn identical_networks_very_negative_y() {
        let net = line6(Arm::Treated);
        let b = dte_bounds(&net, &net, -100.0, &GridPolicy::Full).unwrap();
        assert_eq!(b.interval.lower, 0.0, "no mass below any shifted threshold");
    }

    #[test]
    fn identical_networks_zero_effect() {
        let net = line6(Arm::Treated);
        let b = dte_bounds(&net, &net, 0.0, &GridPolicy::Full).unwrap();
        assert!(b.interval.lower >= 0.0);
        assert!(b.interval.upper <= 1.0);
        // truth Delta(0) = 1 under the zero-effect coupling must lie within
        assert!((b.interval.upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn toy_destroyed_fraction_contained() {
        // Delta(-1) is the destroyed fraction; sharp values {6/36, 8/36}
        let line = line6(Arm::Treated);
        let star = star6(Arm::Control);
        let b = dte_bounds(&line, &star, -1.0, &GridPolicy::Full).unwrap();
        assert!(b.interval.contains(6.0 / 36.0, 1e-12), "{:?}", b.interval);
        assert!(b.interval.contains(8.0 / 36.0, 1e-12), "{:?}", b.interval);
        // the y0-side shift makes the lower bound informative here
        assert!(b.interval.lower > 0.0, "lower {}", b.interval.lower);
    }

    #[test]
    fn toy_curve_monotone_and_positive_at_minus_one() {
        let line = line6(Arm::Treated);
        let star = star6(Arm::Control);
        let c = dte_curve(&line, &star, &[-1.0, 0.0, 1.0]).unwrap();
        assert!(c.lower[0] > 0.0);
        for i in 1..3 {
            assert!(c.lower[i] >= c.lower[i - 1]);
            assert!(c.upper[i] >= c.upper[i - 1]);
        }
        for i in 0..3 {
            assert!(c.lower[i] <= c.upper[i]);
        }
    }

    #[test]
    fn identical_binary_curve_reaches_one() {
        let net = line6(Arm::Treated);
        let c = dte_curve(&net, &net, &[-1.0, 0.0, 1.0]).unwrap();
        assert!((c.upper[2] - 1.0).abs() < 1e-12, "Delta(1) = 1 for binary");
    }

    #[test]
    fn single_point_curve_matches_dte_bounds() {
        let line = line6(Arm::Treated);
        let star = star6(Arm::Control);
        let b = dte_bounds(&line, &star, -1.0, &GridPolicy::Full).unwrap();
        let c = dte_curve(&line, &star, &[-1.0]).unwrap();
        assert_eq!(c.lower[0], b.interval.lower);
        assert_eq!(c.upper[0], b.interval.upper);
    }

    #[test]
    fn unsorted_grid_rejected() {
        let net = line6(Arm::Treated);
        assert!(dte_curve(&net, &net, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn custom_grid_policy() {
        let line = line6(Arm::Treated);
        let star = star6(Arm::Control);
        let full = dte_bounds(&line, &star, -1.0, &GridPolicy::Full).unwrap();
        let custom = dte_bounds(&line, &star, -1.0, &GridPolicy::Custom(vec![0.0])).unwrap();
        // fewer candidates can only widen
        assert!(custom.interval.lower <= full.interval.lower + 1e-12);
        assert!(custom.interval.upper >= full.interval.upper - 1e-12);
    }
}
