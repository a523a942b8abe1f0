//! Exact small-instance machinery: sharp identified sets by exhaustive
//! permutation search, and the orthogonal-relaxation closed forms they are
//! sandwiched by. Used for validation and for generating expected values in
//! tests; the enumeration is limited to n <= 10 (n! permutations).

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{paired_product_slices, PairingMode};
use crate::error::{Error, Result};
use crate::netmat::{indicator_spectrum, threshold_indicator, Network};

const MAX_ORACLE_N: usize = 10;

/// The achievable values of a statistic over all relabelings, with witness
/// permutations for the extremes.
#[derive(Debug, Clone, Serialize)]
pub struct SharpSet {
    /// Sorted distinct achievable values.
    pub values: Vec<f64>,
    pub argmin_perm: Vec<usize>,
    pub argmax_perm: Vec<usize>,
}

impl SharpSet {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

fn check_sizes(net1: &Network, net0: &Network) -> Result<usize> {
    let (n1, n0) = (net1.n(), net0.n());
    if n1 != n0 {
        return Err(Error::OracleUnequalSizes { n1, n0 });
    }
    if n1 > MAX_ORACLE_N {
        return Err(Error::OracleTooLarge {
            n: n1,
            limit: MAX_ORACLE_N,
        });
    }
    Ok(n1)
}

/// Calls `visit` with every permutation of 0..n that starts with `first`.
/// Lexicographic enumeration over the remaining positions.
fn for_each_perm_in_coset(n: usize, first: usize, visit: &mut impl FnMut(&[usize])) {
    let mut rest: Vec<usize> = (0..n).filter(|&k| k != first).collect();
    let mut perm = vec![first; n];
    loop {
        perm[1..].copy_from_slice(&rest);
        visit(&perm);
        // next lexicographic arrangement of `rest`
        if rest.len() < 2 {
            return;
        }
        let mut i = rest.len() - 1;
        while i > 0 && rest[i - 1] >= rest[i] {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        let mut j = rest.len() - 1;
        while rest[j] <= rest[i - 1] {
            j -= 1;
        }
        rest.swap(i - 1, j);
        rest[i..].reverse();
    }
}

/// Fold over all n! permutations, partitioned into first-element cosets that
/// run in parallel; merging is associative so the result is deterministic up
/// to the tie-breaks applied in `merge`.
fn enumerate_permutations<S, FInit, FVisit, FMerge>(
    n: usize,
    init: FInit,
    visit: FVisit,
    merge: FMerge,
) -> S
where
    S: Send,
    FInit: Fn() -> S + Sync + Send,
    FVisit: Fn(&mut S, &[usize]) + Sync + Send,
    FMerge: Fn(S, S) -> S + Sync + Send,
{
    (0..n)
        .into_par_iter()
        .map(|first| {
            let mut state = init();
            for_each_perm_in_coset(n, first, &mut |perm| visit(&mut state, perm));
            state
        })
        .reduce_with(merge)
        .expect("n >= 1")
}

#[derive(Clone)]
struct CountStats {
    seen: std::collections::BTreeSet<u64>,
    min: (u64, Vec<usize>),
    max: (u64, Vec<usize>),
}

fn count_stats_for<F>(n: usize, statistic: F) -> CountStats
where
    F: Fn(&[usize]) -> u64 + Sync,
{
    enumerate_permutations(
        n,
        || CountStats {
            seen: std::collections::BTreeSet::new(),
            min: (u64::MAX, Vec::new()),
            max: (0, Vec::new()),
        },
        |state, perm| {
            let v = statistic(perm);
            state.seen.insert(v);
            if v < state.min.0 || (v == state.min.0 && perm < &state.min.1[..]) {
                state.min = (v, perm.to_vec());
            }
            if v > state.max.0 || (v == state.max.0 && perm < &state.max.1[..]) {
                state.max = (v, perm.to_vec());
            }
        },
        |mut a, b| {
            a.seen.extend(b.seen);
            if b.min.0 < a.min.0 || (b.min.0 == a.min.0 && b.min.1 < a.min.1) {
                a.min = b.min;
            }
            if b.max.0 > a.max.0 || (b.max.0 == a.max.0 && b.max.1 < a.max.1) {
                a.max = b.max;
            }
            a
        },
    )
}

fn binary_cells(net: &Network) -> Vec<Vec<u64>> {
    let n = net.n();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if net.value(i, j) != 0.0 { 1 } else { 0 })
                .collect()
        })
        .collect()
}

/// The multiset of overlap values (1/n^2) sum_ij 1{net1 <= y1}_{p(i)p(j)}
/// 1{net0 <= y0}_{ij} over all n x n permutations p.
pub fn sharp_overlap_set(
    net1: &Network,
    net0: &Network,
    y1: f64,
    y0: f64,
) -> Result<SharpSet> {
    let n = check_sizes(net1, net0)?;
    let a1 = binary_cells(&threshold_indicator(net1, y1));
    let a0 = binary_cells(&threshold_indicator(net0, y0));
    let stats = count_stats_for(n, |perm| {
        let mut count = 0u64;
        for i in 0..n {
            let row = &a1[perm[i]];
            for j in 0..n {
                count += row[perm[j]] & a0[i][j];
            }
        }
        count
    });
    let denom = (n * n) as f64;
    Ok(SharpSet {
        values: stats.seen.iter().map(|&c| c as f64 / denom).collect(),
        argmin_perm: stats.min.1,
        argmax_perm: stats.max.1,
    })
}

/// Recomputes the overlap statistic at a given permutation; used to verify
/// the sharp-set witnesses.
pub fn overlap_statistic(
    net1: &Network,
    net0: &Network,
    y1: f64,
    y0: f64,
    perm: &[usize],
) -> f64 {
    let n = net1.n();
    let a1 = binary_cells(&threshold_indicator(net1, y1));
    let a0 = binary_cells(&threshold_indicator(net0, y0));
    let mut count = 0u64;
    for i in 0..n {
        for j in 0..n {
            count += a1[perm[i]][perm[j]] & a0[i][j];
        }
    }
    count as f64 / (n * n) as f64
}

/// Anti- and co-paired products of the indicator spectra: the exact extremes
/// of the overlap when the permutations are relaxed to orthogonal matrices.
/// Any sizes; spectra are padded.
pub fn orthogonal_relaxation(
    net1: &Network,
    net0: &Network,
    y1: f64,
    y0: f64,
) -> Result<(f64, f64)> {
    let s1 = indicator_spectrum(net1, y1)?;
    let s0 = indicator_spectrum(net0, y0)?;
    let min = paired_product_slices(&s1.eigenvalues, &s0.eigenvalues, PairingMode::Anti);
    let max = paired_product_slices(&s1.eigenvalues, &s0.eigenvalues, PairingMode::Co);
    Ok((min, max))
}

/// Sharp sets for the destroyed and created link counts of binary networks,
/// in unordered-pair form with the diagonal excluded:
/// destroyed = sum_{i<j} (1 - Y1_{p(i)p(j)}) Y0_{ij}, created symmetrically.
pub fn sharp_destroyed_created(net1: &Network, net0: &Network) -> Result<(SharpSet, SharpSet)> {
    let n = check_sizes(net1, net0)?;
    if !net1.is_binary() || !net0.is_binary() {
        return Err(Error::NotBinary("sharp_destroyed_created"));
    }
    let a1 = binary_cells(net1);
    let a0 = binary_cells(net0);
    let destroyed = count_stats_for(n, |perm| {
        let mut count = 0u64;
        for i in 0..n {
            for j in (i + 1)..n {
                count += (1 - a1[perm[i]][perm[j]]) & a0[i][j];
            }
        }
        count
    });
    let created = count_stats_for(n, |perm| {
        let mut count = 0u64;
        for i in 0..n {
            for j in (i + 1)..n {
                count += a1[perm[i]][perm[j]] & (1 - a0[i][j]);
            }
        }
        count
    });
    let to_set = |s: CountStats| SharpSet {
        values: s.seen.iter().map(|&c| c as f64).collect(),
        argmin_perm: s.min.1,
        argmax_perm: s.max.1,
    };
    Ok((to_set(destroyed), to_set(created)))
}

/// Extremes over all permutations of the raw-value overlap
/// (1/n^2) sum_ij net1_{p(i)p(j)} net0_{ij}, for weighted matrices. This is
/// the exact quantity the rearrangement sandwich brackets.
pub fn raw_overlap_range(net1: &Network, net0: &Network) -> Result<(f64, f64)> {
    let n = check_sizes(net1, net0)?;
    let m1 = net1.filled(0.0);
    let m0 = net0.filled(0.0);
    let (min, max) = enumerate_permutations(
        n,
        || (f64::INFINITY, f64::NEG_INFINITY),
        |state, perm| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += m1[(perm[i], perm[j])] * m0[(i, j)];
                }
            }
            state.0 = state.0.min(s);
            state.1 = state.1.max(s);
        },
        |a, b| (a.0.min(b.0), a.1.max(b.1)),
    );
    Ok((min / (n * n) as f64, max / (n * n) as f64))
}
