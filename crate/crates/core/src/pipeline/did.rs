//! Difference-in-differences outcomes: the change in network connections for
//! a pair of agents over time.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::netmat::Network;

/// Cellwise post - pre, after aligning the pre-period network to the
/// post-period label order. For binary inputs the support is {-1, 0, 1}.
pub fn build_did_outcome(post: &Network, pre: &Network) -> Result<Network> {
    let n = post.n();
    // align by label: find pre's index for every post label
    let mut pre_index = Vec::with_capacity(n);
    let mut only_left: Vec<String> = Vec::new();
    for label in post.labels() {
        match pre.labels().iter().position(|l| l == label) {
            Some(k) => pre_index.push(k),
            None => only_left.push(label.clone()),
        }
    }
    let only_right: Vec<String> = pre
        .labels()
        .iter()
        .filter(|l| !post.labels().contains(l))
        .cloned()
        .collect();
    if !only_left.is_empty() || !only_right.is_empty() {
        return Err(Error::LabelMismatch {
            only_left,
            only_right,
        });
    }
    for i in 0..n {
        for j in 0..n {
            if post.is_masked(i, j) != pre.is_masked(pre_index[i], pre_index[j]) {
                return Err(Error::MaskMismatch);
            }
        }
    }
    let values = DMatrix::from_fn(n, n, |i, j| {
        if post.is_masked(i, j) {
            0.0
        } else {
            post.value(i, j) - pre.value(pre_index[i], pre_index[j])
        }
    });
    Network::new(
        post.labels().to_vec(),
        values,
        post.mask().cloned(),
        post.arm(),
    )
}
