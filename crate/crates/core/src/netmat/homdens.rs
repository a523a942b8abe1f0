//! Homomorphism densities: the moments of a network.
//!
//! The density of a pattern multigraph G in a network is the normalized sum
//! over all vertex maps of the product of cell values along G's edges. These
//! are the quantities balanced across arms by the identification assumption;
//! the tests use them as relabeling-invariance witnesses.

use crate::error::{Error, Result};
use crate::netmat::Network;

const MAX_PATTERN_VERTICES: usize = 5;

/// A small pattern multigraph. Edges are an ordered multiset and may repeat;
/// self-loops map to diagonal cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl Pattern {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        for &(u, v) in &edges {
            if u >= vertices || v >= vertices {
                return Err(Error::Config(format!(
                    "pattern edge ({u},{v}) references a vertex >= {vertices}"
                )));
            }
        }
        Ok(Pattern { vertices, edges })
    }

    /// Single edge on two vertices.
    pub fn edge() -> Self {
        Pattern {
            vertices: 2,
            edges: vec![(0, 1)],
        }
    }

    pub fn triangle() -> Self {
        Pattern {
            vertices: 3,
            edges: vec![(0, 1), (1, 2), (2, 0)],
        }
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// (1/N^|V|) sum over all vertex maps of the product of mapped cell values.
/// Masked cells contribute `mask_fill`. Exhaustive N^|V| enumeration, so the
/// pattern is limited to 5 vertices.
pub fn homomorphism_density(pattern: &Pattern, net: &Network, mask_fill: f64) -> Result<f64> {
    let v = pattern.vertices;
    if v > MAX_PATTERN_VERTICES {
        return Err(Error::PatternTooLarge(v));
    }
    let n = net.n();
    let filled = net.filled(mask_fill);

    // odometer over all maps [v] -> [n]
    let mut map = vec![0usize; v];
    let mut total = 0.0;
    loop {
        let mut prod = 1.0;
        for &(a, b) in &pattern.edges {
            prod *= filled[(map[a], map[b])];
            if prod == 0.0 {
                break;
            }
        }
        total += prod;

        let mut k = 0;
        loop {
            if k == v {
                let norm = (n as f64).powi(v as i32);
                return Ok(total / norm);
            }
            map[k] += 1;
            if map[k] < n {
                break;
            }
            map[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmat::testutil::{line6, star6};
    use crate::netmat::Arm;

    #[test]
    fn edge_density_of_toy_networks() {
        // both toy networks have 5 edges: sum A_ij / 36 = 10/36
        let star = star6(Arm::Control);
        let line = line6(Arm::Treated);
        let e = Pattern::edge();
        assert!((homomorphism_density(&e, &star, 0.0).unwrap() - 10.0 / 36.0).abs() < 1e-15);
        assert!((homomorphism_density(&e, &line, 0.0).unwrap() - 10.0 / 36.0).abs() < 1e-15);
    }

    #[test]
    fn stars_are_triangle_free() {
        let star = star6(Arm::Control);
        assert_eq!(
            homomorphism_density(&Pattern::triangle(), &star, 0.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn oversized_pattern_rejected() {
        let p = Pattern::new(6, vec![(0, 5)]).unwrap();
        let star = star6(Arm::Control);
        let err = homomorphism_density(&p, &star, 0.0).unwrap_err();
        assert!(matches!(err, Error::PatternTooLarge(6)));
    }

    #[test]
    fn masked_cells_contribute_fill() {
        use nalgebra::DMatrix;
        let b = DMatrix::from_row_slice(1, 1, &[1.0]);
        let net = crate::netmat::symmetrize_bipartite(&["r".into()], &["c".into()], &b, Arm::Control)
            .unwrap();
        // edge density with fill 0: only the two off-diagonal ones count
        let d0 = homomorphism_density(&Pattern::edge(), &net, 0.0).unwrap();
        assert!((d0 - 2.0 / 4.0).abs() < 1e-15);
        // fill 1: masked diagonal cells now contribute as well
        let d1 = homomorphism_density(&Pattern::edge(), &net, 1.0).unwrap();
        assert!((d1 - 1.0).abs() < 1e-15);
    }
}
