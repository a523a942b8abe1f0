//! Outer bounds on the joint distribution of potential outcomes (DPO) and on
//! the distribution of treatment effects (DTE), plus the conventional
//! comparators they are measured against.
//!
//! The DPO bound at a threshold pair (y1, y0) intersects three relaxations:
//! the marginal masses of each indicator, their co-paired eigenvalue product
//! (sorted-with-sorted), and on the lower side the anti-paired product and
//! the additive mass bound. Because the squared eigenvalues of an indicator
//! embedding sum exactly to its cell density, the marginal terms reproduce
//! the Frechet-Hoeffding bounds, so these intervals are never wider.

mod cells;
mod dte;

pub use cells::{pmf_cell_bounds, pmf_cell_bounds_with, DpoCellTable};
pub use dte::{dte_bounds, dte_curve, DteCurve, DtePointBound, GridPolicy};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::netmat::{indicator_spectrum, Network, Spectrum};

/// Which lower-bound relaxation was binding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerSource {
    /// m1 + m0 - 1 (additive mass).
    SumMinusOne,
    /// Anti-paired eigenvalue product (sorted against anti-sorted).
    AntiPaired,
    /// The trivial bound 0.
    Zero,
}

/// Which upper-bound relaxation was binding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperSource {
    /// Arm-1 marginal mass.
    Marginal1,
    /// Arm-0 marginal mass.
    Marginal0,
    /// Co-paired eigenvalue product.
    CoPaired,
}

/// A lower/upper probability pair with the provenance of the binding
/// relaxations, clipped to [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInterval {
    pub lower: f64,
    pub upper: f64,
    pub lower_active: LowerSource,
    pub upper_active: UpperSource,
}

impl BoundInterval {
    /// Builds the interval from candidate terms, taking the largest lower and
    /// smallest upper. Ties keep the earliest candidate, so provenance is
    /// deterministic.
    pub(crate) fn from_candidates(
        lower_candidates: &[(f64, LowerSource)],
        upper_candidates: &[(f64, UpperSource)],
    ) -> BoundInterval {
        let (mut lower, mut lower_active) = lower_candidates[0];
        for &(v, src) in &lower_candidates[1..] {
            if v > lower {
                lower = v;
                lower_active = src;
            }
        }
        let (mut upper, mut upper_active) = upper_candidates[0];
        for &(v, src) in &upper_candidates[1..] {
            if v < upper {
                upper = v;
                upper_active = src;
            }
        }
        let upper = upper.clamp(0.0, 1.0);
        let lower = lower.clamp(0.0, 1.0).min(upper);
        BoundInterval {
            lower,
            upper,
            lower_active,
            upper_active,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.lower - tol <= x && x <= self.upper + tol
    }

    /// Intersection of two valid intervals for the same quantity.
    pub fn intersect(&self, other: &BoundInterval) -> BoundInterval {
        let (lower, lower_active) = if other.lower > self.lower {
            (other.lower, other.lower_active)
        } else {
            (self.lower, self.lower_active)
        };
        let (upper, upper_active) = if other.upper < self.upper {
            (other.upper, other.upper_active)
        } else {
            (self.upper, self.upper_active)
        };
        BoundInterval {
            lower: lower.min(upper),
            upper,
            lower_active,
            upper_active,
        }
    }
}

/// JSON record for a DPO bound at a threshold pair.
#[derive(Debug, Clone, Serialize)]
pub struct DpoBoundRecord {
    pub y1: f64,
    pub y0: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_active: LowerSource,
    pub upper_active: UpperSource,
}

impl DpoBoundRecord {
    pub fn new(y1: f64, y0: f64, interval: BoundInterval) -> Self {
        DpoBoundRecord {
            y1,
            y0,
            lower: interval.lower,
            upper: interval.upper,
            lower_active: interval.lower_active,
            upper_active: interval.upper_active,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairingMode {
    /// Sorted-with-sorted inner product (the maximum over orthogonal
    /// rotations).
    Co,
    /// Sorted-with-anti-sorted (the minimum).
    Anti,
}

/// Pads the shorter eigenvalue list with zeros, re-sorts both descending, and
/// returns the co- or anti-paired inner product.
pub fn paired_products(s1: &Spectrum, s0: &Spectrum, mode: PairingMode) -> f64 {
    paired_product_slices(&s1.eigenvalues, &s0.eigenvalues, mode)
}

pub(crate) fn paired_product_slices(a: &[f64], b: &[f64], mode: PairingMode) -> f64 {
    let len = a.len().max(b.len());
    let pad_sort = |xs: &[f64]| {
        let mut v = xs.to_vec();
        v.resize(len, 0.0);
        v.sort_by(|p, q| q.partial_cmp(p).expect("finite eigenvalues"));
        v
    };
    let a = pad_sort(a);
    let b = pad_sort(b);
    match mode {
        PairingMode::Co => a.iter().zip(b.iter()).map(|(x, y)| x * y).sum(),
        PairingMode::Anti => a.iter().zip(b.iter().rev()).map(|(x, y)| x * y).sum(),
    }
}

pub(crate) struct Prop2Terms {
    pub sum1: f64,
    pub sum0: f64,
    pub co: f64,
    pub anti: f64,
}

pub(crate) fn prop2_terms(l1: &[f64], l0: &[f64]) -> Prop2Terms {
    Prop2Terms {
        sum1: l1.iter().map(|x| x * x).sum(),
        sum0: l0.iter().map(|x| x * x).sum(),
        co: paired_product_slices(l1, l0, PairingMode::Co),
        anti: paired_product_slices(l1, l0, PairingMode::Anti),
    }
}

pub(crate) fn dpo_interval_from_terms(t: &Prop2Terms) -> BoundInterval {
    BoundInterval::from_candidates(
        &[
            (t.sum1 + t.sum0 - 1.0, LowerSource::SumMinusOne),
            (t.anti, LowerSource::AntiPaired),
            (0.0, LowerSource::Zero),
        ],
        &[
            (t.sum1, UpperSource::Marginal1),
            (t.sum0, UpperSource::Marginal0),
            (t.co, UpperSource::CoPaired),
        ],
    )
}

/// Eigenvalue outer bounds on the DPO F(y1, y0), the mass of dyads with
/// outcome <= y1 under the new policy and <= y0 under the status quo.
pub fn dpo_bounds(net1: &Network, net0: &Network, y1: f64, y0: f64) -> Result<BoundInterval> {
    let s1 = indicator_spectrum(net1, y1)?;
    let s0 = indicator_spectrum(net0, y0)?;
    Ok(dpo_interval_from_terms(&prop2_terms(
        &s1.eigenvalues,
        &s0.eigenvalues,
    )))
}

/// Classical marginal-only bounds on F(y1, y0):
/// max(m1 + m0 - 1, 0) <= F <= min(m1, m0).
pub fn frechet_hoeffding(net1: &Network, net0: &Network, y1: f64, y0: f64) -> BoundInterval {
    let m1 = net1.fraction_leq(y1);
    let m0 = net0.fraction_leq(y0);
    BoundInterval::from_candidates(
        &[
            (m1 + m0 - 1.0, LowerSource::SumMinusOne),
            (0.0, LowerSource::Zero),
        ],
        &[(m1, UpperSource::Marginal1), (m0, UpperSource::Marginal0)],
    )
}

/// Mean of unmasked cells of net1 minus mean of unmasked cells of net0:
/// the conventional difference-in-connections statistic.
pub fn mean_difference(net1: &Network, net0: &Network) -> f64 {
    net1.mean() - net0.mean()
}

/// Bounds on the fraction of links destroyed and created by the policy, for
/// binary networks. Destroyed = F1(0) - F(0,0); created = F0(0) - F(0,0),
/// with the joint mass F(0,0) bounded by `overlap` and the marginals exact.
pub fn destroyed_created_from_overlap(
    net1: &Network,
    net0: &Network,
    overlap: &BoundInterval,
) -> Result<(BoundInterval, BoundInterval)> {
    if !net1.is_binary() || !net0.is_binary() {
        return Err(crate::error::Error::NotBinary("destroyed/created bounds"));
    }
    let f1 = net1.fraction_leq(0.0);
    let f0 = net0.fraction_leq(0.0);
    let flip = |marginal: f64, source_hi: UpperSource| {
        BoundInterval::from_candidates(
            &[
                (marginal - overlap.upper, LowerSource::AntiPaired),
                (0.0, LowerSource::Zero),
            ],
            &[(marginal - overlap.lower, source_hi)],
        )
    };
    Ok((
        flip(f1, UpperSource::CoPaired),
        flip(f0, UpperSource::CoPaired),
    ))
}

/// Frechet-Hoeffding bounds on destroyed/created link fractions for binary
/// networks (the Section-2 comparator): destroyed is the overlap of
/// 1{Y1 = 0} and 1{Y0 = 1}, bounded using marginal masses only.
pub fn frechet_hoeffding_destroyed_created(
    net1: &Network,
    net0: &Network,
) -> Result<(BoundInterval, BoundInterval)> {
    if !net1.is_binary() || !net0.is_binary() {
        return Err(crate::error::Error::NotBinary("destroyed/created bounds"));
    }
    let zeros1 = net1.fraction_leq(0.0);
    let ones1 = 1.0 - zeros1;
    let zeros0 = net0.fraction_leq(0.0);
    let ones0 = 1.0 - zeros0;
    let fh = |ma: f64, mb: f64| {
        BoundInterval::from_candidates(
            &[
                (ma + mb - 1.0, LowerSource::SumMinusOne),
                (0.0, LowerSource::Zero),
            ],
            &[(ma, UpperSource::Marginal1), (mb, UpperSource::Marginal0)],
        )
    };
    Ok((fh(zeros1, ones0), fh(ones1, zeros0)))
}
