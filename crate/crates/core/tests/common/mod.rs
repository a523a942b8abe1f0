//! Shared generators for the integration suites. Everything is seeded so
//! failures reproduce.

use nalgebra::DMatrix;
use neteffects::netmat::Network;
use neteffects::Arm;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("a{i}")).collect()
}

/// Random binary symmetric network with zero diagonal.
pub fn random_binary(rng: &mut ChaCha8Rng, n: usize, p: f64, arm: Arm) -> Network {
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..i {
            let v = if rng.gen_bool(p) { 1.0 } else { 0.0 };
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    Network::from_dense(labels(n), rows, arm).unwrap()
}

/// Random symmetric weighted network (entries in [-1, 1], free diagonal).
pub fn random_weighted(rng: &mut ChaCha8Rng, n: usize, arm: Arm) -> Network {
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = rng.gen_range(-1.0..1.0);
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    Network::from_dense(labels(n), rows, arm).unwrap()
}

pub fn random_permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    perm
}

/// 6-node star (hub first).
pub fn star6(arm: Arm) -> Network {
    let mut rows = vec![vec![0.0; 6]; 6];
    for k in 1..6 {
        rows[0][k] = 1.0;
        rows[k][0] = 1.0;
    }
    Network::from_dense(labels(6), rows, arm).unwrap()
}

/// 6-node path.
pub fn line6(arm: Arm) -> Network {
    let mut rows = vec![vec![0.0; 6]; 6];
    for k in 0..5 {
        rows[k][k + 1] = 1.0;
        rows[k + 1][k] = 1.0;
    }
    Network::from_dense(labels(6), rows, arm).unwrap()
}

/// Mean-square difference (1/n^2) ||A - B||_F^2 between two equally sized
/// networks, with net1 relabeled by `perm`.
pub fn permuted_mean_square_diff(net1: &Network, net0: &Network, perm: &[usize]) -> f64 {
    let n = net0.n();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = net1.value(perm[i], perm[j]) - net0.value(i, j);
            s += d * d;
        }
    }
    s / (n * n) as f64
}

/// Random orthonormal columns at the sqrt(n) embedding scale, via Gram-
/// Schmidt on a random matrix.
pub fn random_orthonormal_embedded(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let qr = raw.qr();
    let q = qr.q();
    q * (n as f64).sqrt()
}
