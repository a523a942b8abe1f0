//! Function-embedding spectra.
//!
//! An N x N matrix embeds as a step function on the unit square; the embedded
//! eigenvalues are the matrix eigenvalues divided by N, and eigenvectors are
//! scaled by sqrt(N) so the embedded eigenfunctions have unit L2 norm. Under
//! this scaling, sum_r lambda_r^2 equals the L2 norm of the function, which
//! for an indicator matrix is the fraction of cells below the threshold.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::netmat::{threshold_indicator, Network};

/// Sorted eigenvalue multiset of a unit-square function embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Eigenvalues divided by N, sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Dimension of the source matrix.
    pub source_dim: usize,
    /// Threshold y when the decomposed matrix was an indicator 1{value <= y}.
    pub threshold: Option<f64>,
}

impl Spectrum {
    pub fn sum_sq(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l * l).sum()
    }
}

/// Embedded eigenvalues with their sqrt(N)-scaled eigenvectors.
///
/// Columns of `vectors` are orthonormal up to the sqrt(N) factor, and
/// sum_r lambda_r v_r v_r^T reproduces the (filled) source matrix.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub eigenvalues: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub source_dim: usize,
    pub threshold: Option<f64>,
}

fn decompose(net: &Network, mask_fill: f64) -> Result<nalgebra::SymmetricEigen<f64, nalgebra::Dyn>> {
    let n = net.n();
    let filled = net.filled(mask_fill);
    nalgebra::SymmetricEigen::try_new(filled, f64::EPSILON, 0).ok_or_else(|| Error::EigenFailure {
        context: format!("{:?} arm network", net.arm()),
        n,
    })
}

/// All N embedded eigenvalues of the network, masked cells replaced by
/// `mask_fill` before decomposition (use 0 for indicator matrices).
pub fn spectrum(net: &Network, mask_fill: f64) -> Result<Spectrum> {
    let eig = decompose(net, mask_fill)?;
    let n = net.n();
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().map(|l| l / n as f64).collect();
    eigenvalues.sort_by(|a, b| b.partial_cmp(a).expect("eigenvalues are finite"));
    Ok(Spectrum {
        eigenvalues,
        source_dim: n,
        threshold: None,
    })
}

/// Spectrum of the indicator matrix 1{value <= y}, with the threshold recorded.
pub fn indicator_spectrum(net: &Network, y: f64) -> Result<Spectrum> {
    let mut s = spectrum(&threshold_indicator(net, y), 0.0)?;
    s.threshold = Some(y);
    Ok(s)
}

/// Full eigendecomposition at the embedding scale: eigenvalues divided by N,
/// eigenvectors multiplied by sqrt(N), both sorted by descending eigenvalue.
pub fn eigen_pairs(net: &Network, mask_fill: f64) -> Result<EigenPair> {
    let eig = decompose(net, mask_fill)?;
    let n = net.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are finite")
    });
    let scale = (n as f64).sqrt();
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k] / n as f64).collect();
    let vectors = DMatrix::from_fn(n, n, |i, r| eig.eigenvectors[(i, order[r])] * scale);
    Ok(EigenPair {
        eigenvalues,
        vectors,
        source_dim: n,
        threshold: None,
    })
}

impl EigenPair {
    /// Reconstructs sum_r lambda_r v_r v_r^T (equals the filled source matrix).
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let n = self.source_dim;
        let mut out = DMatrix::zeros(n, n);
        for (r, &l) in self.eigenvalues.iter().enumerate() {
            let v = self.vectors.column(r);
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += l * (v[i] * v[j]);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmat::testutil::{labels, line6, star6};
    use crate::netmat::{symmetrize_bipartite, Arm};

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!((a - b).abs() <= tol, "{what}: {a} vs {b}");
    }

    /// K_{1,5} spectrum from its characteristic polynomial: +-sqrt(5), zeros.
    #[test]
    fn star_spectrum_matches_characteristic_polynomial() {
        let s = spectrum(&star6(Arm::Control), 0.0).unwrap();
        let root5 = 5.0_f64.sqrt();
        let expect = [root5 / 6.0, 0.0, 0.0, 0.0, 0.0, -root5 / 6.0];
        for (got, want) in s.eigenvalues.iter().zip(expect.iter()) {
            assert_close(*got, *want, 1e-12, "star eigenvalue");
        }
    }

    /// Path-graph spectrum 2cos(k pi/7), k=1..6, divided by 6.
    #[test]
    fn line_spectrum_matches_path_formula() {
        let s = spectrum(&line6(Arm::Treated), 0.0).unwrap();
        let mut expect: Vec<f64> = (1..=6)
            .map(|k| 2.0 * (k as f64 * std::f64::consts::PI / 7.0).cos() / 6.0)
            .collect();
        expect.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (got, want) in s.eigenvalues.iter().zip(expect.iter()) {
            assert_close(*got, *want, 1e-12, "line eigenvalue");
        }
    }

    #[test]
    fn zero_matrix_spectrum_is_zero() {
        let net =
            Network::from_dense(labels(3), vec![vec![0.0; 3]; 3], Arm::Control).unwrap();
        let s = spectrum(&net, 0.0).unwrap();
        assert!(s.eigenvalues.iter().all(|&l| l == 0.0));
        assert_eq!(s.source_dim, 3);
    }

    #[test]
    fn sum_sq_equals_cell_mean_square() {
        let s = spectrum(&star6(Arm::Control), 0.0).unwrap();
        // (1/N^2) sum A_ij^2 = 10/36 for the star
        assert_close(s.sum_sq(), 10.0 / 36.0, 1e-12, "density identity");
    }

    #[test]
    fn eigen_pairs_diag_identity() {
        let net = Network::from_dense(
            labels(2),
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            Arm::Control,
        )
        .unwrap();
        let ep = eigen_pairs(&net, 0.0).unwrap();
        assert_close(ep.eigenvalues[0], 0.5, 1e-14, "eigenvalue");
        assert_close(ep.eigenvalues[1], 0.5, 1e-14, "eigenvalue");
        let recon = ep.reconstruct();
        assert!((recon - net.values()).norm() < 1e-10);
    }

    #[test]
    fn eigen_pairs_rank_one() {
        // v v^T has single nonzero eigenvalue |v|^2/N
        let v = [1.0, 2.0, -1.0, 0.5];
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| v[i] * v[j]).collect())
            .collect();
        let net = Network::from_dense(labels(4), rows, Arm::Treated).unwrap();
        let ep = eigen_pairs(&net, 0.0).unwrap();
        let norm_sq: f64 = v.iter().map(|x| x * x).sum();
        assert_close(ep.eigenvalues[0], norm_sq / 4.0, 1e-12, "top eigenvalue");
        for &l in &ep.eigenvalues[1..] {
            assert_close(l, 0.0, 1e-12, "null eigenvalue");
        }
        // top vector proportional to v (3rd example checks ordering on the star)
        let top = ep.vectors.column(0);
        let scale = top[0] / v[0];
        for i in 0..4 {
            assert_close(top[i], v[i] * scale, 1e-9, "top eigenvector");
        }
    }

    #[test]
    fn star_top_eigenvector_weights_hub_first() {
        let ep = eigen_pairs(&star6(Arm::Control), 0.0).unwrap();
        // eigenvector equation for K_{1,5}: top vector prop to (sqrt5,1,1,1,1,1)
        let top = ep.vectors.column(0);
        let ratio = top[0] / top[1];
        assert_close(ratio.abs(), 5.0_f64.sqrt(), 1e-10, "hub/leaf ratio");
        for k in 2..6 {
            assert_close(top[k], top[1], 1e-10, "leaf symmetry");
        }
    }

    #[test]
    fn eigen_pairs_reconstruction_and_orthonormality() {
        let net = star6(Arm::Control);
        let ep = eigen_pairs(&net, 0.0).unwrap();
        let recon = ep.reconstruct();
        let rel = (&recon - net.values()).norm() / net.values().norm();
        assert!(rel < 1e-8, "reconstruction rel err {rel}");
        // columns orthonormal after removing the sqrt(N) embedding factor
        let n = net.n() as f64;
        for a in 0..6 {
            for b in 0..6 {
                let dot: f64 = (0..6)
                    .map(|i| ep.vectors[(i, a)] * ep.vectors[(i, b)])
                    .sum::<f64>()
                    / n;
                let expect = if a == b { 1.0 } else { 0.0 };
                assert_close(dot, expect, 1e-8, "orthonormality");
            }
        }
    }

    #[test]
    fn bipartite_spectrum_is_singular_values() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.5, -1.0]);
        let rows: Vec<String> = vec!["r0".into(), "r1".into()];
        let cols: Vec<String> = vec!["c0".into(), "c1".into()];
        let net = symmetrize_bipartite(&rows, &cols, &b, Arm::Control).unwrap();
        let s = spectrum(&net, 0.0).unwrap();
        // independent route: dense SVD of the block
        let svd = b.svd(false, false);
        let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let expect = [sv[0] / 4.0, sv[1] / 4.0, -sv[1] / 4.0, -sv[0] / 4.0];
        for (got, want) in s.eigenvalues.iter().zip(expect.iter()) {
            assert_close(*got, *want, 1e-10, "bipartite eigenvalue");
        }
    }
}
