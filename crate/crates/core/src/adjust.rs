//! Pre-processing adjustments: a row-offset reduction that tightens the
//! eigenvalue bounds under row/column heteroskedasticity, and singular-value-
//! threshold denoising for noisy networks.
//!
//! The reduction splits a symmetric matrix A into r 1^T + 1 r^T plus a
//! residual with zero row sums (r_i = rowmean_i - grandmean/2). Relabeling
//! then acts on the pieces separately: the bilinear residual term is bounded
//! by eigenvalue pairing, while the rank-one offset term is a linear
//! assignment whose extremes are the sorted and anti-sorted dot products.
//! The adjusted interval is intersected with the unadjusted one, so it can
//! only tighten.

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::bounds::{
    dpo_bounds, paired_product_slices, BoundInterval, LowerSource, PairingMode, UpperSource,
};
use crate::error::{Error, Result};
use crate::netmat::{spectrum, threshold_indicator, Network};

/// Split of a symmetric network into symmetric row offsets and a residual.
#[derive(Debug, Clone)]
pub struct ReductionDecomposition {
    /// The reduced matrix; its row sums are zero.
    pub residual: Network,
    /// One offset per agent.
    pub row_offsets: Vec<f64>,
    /// Always zero under this reduction; kept so the reconstruction identity
    /// residual + r 1^T + 1 r^T + grand_offset reads off the fields.
    pub grand_offset: f64,
}

impl ReductionDecomposition {
    /// residual + r 1^T + 1 r^T + grand_offset.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let n = self.residual.n();
        let mut out = self.residual.values().clone();
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += self.row_offsets[i] + self.row_offsets[j] + self.grand_offset;
            }
        }
        out
    }
}

/// The classical symmetric reduction r_i = rowmean_i - grandmean/2. Operates
/// on the stored values (masked cells as 0); the residual's row sums vanish,
/// which removes the cross terms from the relabeled bilinear form.
pub fn reduce(net: &Network) -> ReductionDecomposition {
    let n = net.n();
    let values = net.filled(0.0);
    let grand_mean = values.iter().sum::<f64>() / (n * n) as f64;
    let row_offsets: Vec<f64> = (0..n)
        .map(|i| values.row(i).iter().sum::<f64>() / n as f64 - grand_mean / 2.0)
        .collect();
    let residual_values = DMatrix::from_fn(n, n, |i, j| {
        values[(i, j)] - (row_offsets[i] + row_offsets[j])
    });
    let residual = Network::new(
        net.labels().to_vec(),
        residual_values,
        None,
        net.arm(),
    )
    .expect("residual of a valid network is valid");
    ReductionDecomposition {
        residual,
        row_offsets,
        grand_offset: 0.0,
    }
}

fn sorted_dot_extremes(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let max: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
    let min: f64 = a.iter().zip(b.iter().rev()).map(|(x, y)| x * y).sum();
    (min, max)
}

/// Reduction-adjusted bounds on the overlap F(y1, y0), intersected with the
/// unadjusted interval. Requires equal group sizes for the linear part;
/// unequal sizes fall back to the unadjusted bounds with a warning.
pub fn adjusted_overlap_bounds(
    net1: &Network,
    net0: &Network,
    y1: f64,
    y0: f64,
) -> Result<BoundInterval> {
    let base = dpo_bounds(net1, net0, y1, y0)?;
    let n = net1.n();
    if n != net0.n() {
        log::warn!(
            "adjusted bounds need equal group sizes ({} vs {}); returning unadjusted",
            n,
            net0.n()
        );
        return Ok(base);
    }
    let ind1 = threshold_indicator(net1, y1);
    let ind0 = threshold_indicator(net0, y0);
    let red1 = reduce(&ind1);
    let red0 = reduce(&ind0);
    let s1 = spectrum(&red1.residual, 0.0)?;
    let s0 = spectrum(&red0.residual, 0.0)?;
    let quad_min = paired_product_slices(&s1.eigenvalues, &s0.eigenvalues, PairingMode::Anti);
    let quad_max = paired_product_slices(&s1.eigenvalues, &s0.eigenvalues, PairingMode::Co);
    let (lin_min, lin_max) = sorted_dot_extremes(&red1.row_offsets, &red0.row_offsets);
    let nf = n as f64;
    let constant = 2.0 * red1.row_offsets.iter().sum::<f64>() * red0.row_offsets.iter().sum::<f64>()
        / (nf * nf);
    let adj_lower = quad_min + 2.0 * lin_min / nf + constant;
    let adj_upper = quad_max + 2.0 * lin_max / nf + constant;
    let adjusted = BoundInterval::from_candidates(
        &[(adj_lower, LowerSource::AntiPaired), (0.0, LowerSource::Zero)],
        &[(adj_upper, UpperSource::CoPaired)],
    );
    Ok(base.intersect(&adjusted))
}

/// Overlap bounds at (y1, y0) with the indicator matrices SVT-denoised
/// before the eigenvalue pairing. The marginal-mass terms stay exact (they
/// are identified from the raw data), and the co/anti pairing terms are
/// widened by a Hoffman-Wielandt slack so the interval remains valid for the
/// raw indicators no matter how aggressive the truncation was:
/// |co - co_hat| <= e1 sqrt(m0) + e0 sqrt(sum lhat1^2), with
/// e_t = ||ind_t - den_t||_F / N_t bounding the sorted eigenvalue drift.
pub fn denoised_overlap_bounds(
    net1: &Network,
    net0: &Network,
    y1: f64,
    y0: f64,
    threshold: SvtThreshold,
) -> Result<BoundInterval> {
    let ind1 = threshold_indicator(net1, y1);
    let ind0 = threshold_indicator(net0, y0);
    let den1 = svt_denoise(&ind1, threshold)?;
    let den0 = svt_denoise(&ind0, threshold)?;
    let m1 = net1.fraction_leq(y1);
    let m0 = net0.fraction_leq(y0);
    let s1 = spectrum(&den1, 0.0)?;
    let s0 = spectrum(&den0, 0.0)?;
    let co = paired_product_slices(&s1.eigenvalues, &s0.eigenvalues, PairingMode::Co);
    let anti = paired_product_slices(&s1.eigenvalues, &s0.eigenvalues, PairingMode::Anti);
    let embedded_distance = |a: &Network, b: &Network| -> f64 {
        let n = a.n() as f64;
        (a.filled(0.0) - b.filled(0.0)).norm() / n
    };
    let e1 = embedded_distance(&ind1, &den1);
    let e0 = embedded_distance(&ind0, &den0);
    let slack = e1 * m0.sqrt() + e0 * s1.sum_sq().sqrt();
    Ok(BoundInterval::from_candidates(
        &[
            (m1 + m0 - 1.0, LowerSource::SumMinusOne),
            (anti - slack, LowerSource::AntiPaired),
            (0.0, LowerSource::Zero),
        ],
        &[
            (m1, UpperSource::Marginal1),
            (m0, UpperSource::Marginal0),
            (co + slack, UpperSource::CoPaired),
        ],
    ))
}

/// How to pick the SVT cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvtThreshold {
    /// 2.01 sqrt(N p(1-p)) for binary data with p the edge density, and
    /// 2.01 sqrt(N) s otherwise with s the cell standard deviation.
    Auto,
    Fixed(f64),
}

/// Universal-threshold constant for bounded-entry noise; exposed through
/// [`svt_denoise_with_constant`].
pub const SVT_DEFAULT_CONSTANT: f64 = 2.01;

/// Denoises by zeroing all matrix-scale eigenvalues with |lambda| < tau and
/// reconstructing. Binary inputs are clipped back to [0,1]. Masked cells stay
/// masked.
pub fn svt_denoise(net: &Network, threshold: SvtThreshold) -> Result<Network> {
    svt_denoise_with_constant(net, threshold, SVT_DEFAULT_CONSTANT)
}

pub fn svt_denoise_with_constant(
    net: &Network,
    threshold: SvtThreshold,
    constant: f64,
) -> Result<Network> {
    let n = net.n();
    let binary = net.is_binary();
    let tau = match threshold {
        SvtThreshold::Fixed(t) => {
            if t <= 0.0 {
                return Err(Error::InvalidSvtThreshold(t));
            }
            t
        }
        SvtThreshold::Auto => {
            if binary {
                let p = net.mean();
                constant * (n as f64 * p * (1.0 - p)).sqrt()
            } else {
                let mean = net.mean();
                let mut var = 0.0;
                let mut count = 0usize;
                for i in 0..n {
                    for j in 0..n {
                        if !net.is_masked(i, j) {
                            let d = net.value(i, j) - mean;
                            var += d * d;
                            count += 1;
                        }
                    }
                }
                let sd = (var / count as f64).sqrt();
                constant * (n as f64).sqrt() * sd
            }
        }
    };

    let filled = net.filled(0.0);
    let eig = nalgebra::SymmetricEigen::try_new(filled, f64::EPSILON, 0).ok_or_else(|| {
        Error::EigenFailure {
            context: format!("svt_denoise {:?} arm", net.arm()),
            n,
        }
    })?;
    let mut values = DMatrix::<f64>::zeros(n, n);
    for (r, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() >= tau && lambda != 0.0 {
            let v = eig.eigenvectors.column(r);
            for i in 0..n {
                for j in 0..n {
                    values[(i, j)] += lambda * (v[i] * v[j]);
                }
            }
        }
    }
    if binary {
        for v in values.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
    }
    Network::new(net.labels().to_vec(), values, net.mask().cloned(), net.arm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmat::testutil::{labels, line6, star6};
    use crate::netmat::Arm;

    #[test]
    fn reduce_constant_matrix() {
        let c = 0.8;
        let net =
            Network::from_dense(labels(4), vec![vec![c; 4]; 4], Arm::Control).unwrap();
        let red = reduce(&net);
        assert!(red.residual.values().iter().all(|&v| v.abs() < 1e-15));
        for &r in &red.row_offsets {
            assert!((r - c / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn reduce_row_regular_gives_equal_offsets() {
        // cycle: every row sums to 2
        let n = 5;
        let mut rows = vec![vec![0.0; n]; n];
        for k in 0..n {
            rows[k][(k + 1) % n] = 1.0;
            rows[(k + 1) % n][k] = 1.0;
        }
        let net = Network::from_dense(labels(n), rows, Arm::Control).unwrap();
        let red = reduce(&net);
        let first = red.row_offsets[0];
        assert!(red.row_offsets.iter().all(|&r| (r - first).abs() < 1e-14));
    }

    #[test]
    fn reduce_star_hub_offset_dominates() {
        let red = reduce(&star6(Arm::Control));
        assert!(red.row_offsets[0] > red.row_offsets[1]);
        // residual row means all equal (zero here)
        for i in 0..6 {
            let mean: f64 = red.residual.values().row(i).iter().sum::<f64>() / 6.0;
            assert!(mean.abs() < 1e-14, "row {i} mean {mean}");
        }
    }

    #[test]
    fn reconstruction_is_exact() {
        let red = reduce(&line6(Arm::Treated));
        let recon = red.reconstruct();
        let diff = (recon - line6(Arm::Treated).values()).abs().max();
        assert!(diff < 1e-12);
    }

    #[test]
    fn adjusted_no_wider_than_unadjusted() {
        let line = line6(Arm::Treated);
        let star = star6(Arm::Control);
        for (y1, y0) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)] {
            let base = dpo_bounds(&line, &star, y1, y0).unwrap();
            let adj = adjusted_overlap_bounds(&line, &star, y1, y0).unwrap();
            assert!(adj.lower >= base.lower - 1e-12);
            assert!(adj.upper <= base.upper + 1e-12);
        }
    }

    #[test]
    fn adjusted_exact_for_constant_networks() {
        let a = Network::from_dense(labels(4), vec![vec![1.0; 4]; 4], Arm::Treated).unwrap();
        let b = Network::from_dense(labels(4), vec![vec![1.0; 4]; 4], Arm::Control).unwrap();
        // residuals vanish; overlap of all-ones indicators is exactly 1
        let adj = adjusted_overlap_bounds(&a, &b, 1.0, 1.0).unwrap();
        assert!((adj.lower - 1.0).abs() < 1e-12);
        assert!((adj.upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn toy_adjusted_destroyed_counts() {
        // regression for the closed-form reduction on the toy pair: the
        // destroyed-count interval [F1(0) - U, F1(0) - L] * 18
        let line = line6(Arm::Treated);
        let star = star6(Arm::Control);
        let adj = adjusted_overlap_bounds(&line, &star, 0.0, 0.0).unwrap();
        let f1 = line.fraction_leq(0.0);
        let lo_count = 18.0 * (f1 - adj.upper);
        let hi_count = 18.0 * (f1 - adj.lower);
        // values from the prototype of this reduction
        assert!((lo_count - 1.8873).abs() < 1e-3, "lo {lo_count}");
        assert!((hi_count - 5.0).abs() < 1e-9, "hi {hi_count}");
        // binding requirement: contains the sharp set {3, 4}
        assert!(lo_count <= 3.0 && 4.0 <= hi_count);
    }

    #[test]
    fn unequal_sizes_fall_back_to_unadjusted() {
        let small =
            Network::from_dense(labels(4), vec![vec![0.0; 4]; 4], Arm::Treated).unwrap();
        let star = star6(Arm::Control);
        let adj = adjusted_overlap_bounds(&small, &star, 0.5, 0.5).unwrap();
        let base = dpo_bounds(&small, &star, 0.5, 0.5).unwrap();
        assert_eq!(adj, base);
    }

    #[test]
    fn svt_zero_network_unchanged() {
        let net = Network::from_dense(labels(4), vec![vec![0.0; 4]; 4], Arm::Control).unwrap();
        let out = svt_denoise(&net, SvtThreshold::Auto).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn svt_infinite_threshold_zeroes_everything() {
        let net = star6(Arm::Control);
        let out = svt_denoise(&net, SvtThreshold::Fixed(f64::INFINITY)).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn svt_rejects_nonpositive_fixed_threshold() {
        let net = star6(Arm::Control);
        assert!(matches!(
            svt_denoise(&net, SvtThreshold::Fixed(0.0)),
            Err(Error::InvalidSvtThreshold(_))
        ));
        assert!(matches!(
            svt_denoise(&net, SvtThreshold::Fixed(-1.0)),
            Err(Error::InvalidSvtThreshold(_))
        ));
    }

    #[test]
    fn svt_planted_rank_one_recovers_signal() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 60;
        // planted block: strong rank-1 signal p_ij = 0.8 inside, 0.1 outside
        let mut expected = vec![vec![0.0; n]; n];
        let mut observed = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let p = if i < n / 2 && j < n / 2 { 0.8 } else { 0.1 };
                expected[i][j] = p;
                expected[j][i] = p;
                let draw = if rng.gen_bool(p) { 1.0 } else { 0.0 };
                observed[i][j] = draw;
                observed[j][i] = draw;
            }
        }
        let net = Network::from_dense(labels(n), observed.clone(), Arm::Control).unwrap();
        let denoised = svt_denoise(&net, SvtThreshold::Auto).unwrap();
        let err = |rows: &dyn Fn(usize, usize) -> f64| -> f64 {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let d = rows(i, j) - expected[i][j];
                    s += d * d;
                }
            }
            s.sqrt()
        };
        let raw_err = err(&|i, j| observed[i][j]);
        let den_err = err(&|i, j| denoised.value(i, j));
        assert!(
            den_err < raw_err,
            "denoised error {den_err} should beat raw noise level {raw_err}"
        );
    }

    #[test]
    fn svt_idempotent_for_fixed_threshold() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 12;
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        let net = Network::from_dense(labels(n), rows, Arm::Control).unwrap();
        let tau = 1.3;
        let once = svt_denoise(&net, SvtThreshold::Fixed(tau)).unwrap();
        let twice = svt_denoise(&once, SvtThreshold::Fixed(tau)).unwrap();
        let diff = (once.values() - twice.values()).abs().max();
        assert!(diff < 1e-9, "idempotence violation {diff}");
    }
}
