//! Identification of socially disruptive policies from two-arm network
//! experiments.
//!
//! Given the networks observed in a treated and a control group, this crate
//! computes:
//!
//! - eigenvalue-based outer bounds on the joint distribution of potential
//!   dyadic outcomes (DPO) and on the distribution of treatment effects
//!   (DTE), together with classical Frechet-Hoeffding and mean-difference
//!   comparators ([`bounds`]);
//! - spectral treatment effects (STT/STU), a lower bound on aggregate
//!   disruption, and point identification of the DTE under matrix rank
//!   invariance ([`ste`]);
//! - exact sharp identified sets for small instances via exhaustive
//!   permutation search, used to validate the relaxations ([`oracle`]);
//! - pre-processing adjustments: a row-offset reduction that tightens the
//!   bounds under row/column heteroskedasticity, and singular-value-threshold
//!   denoising ([`adjust`]);
//! - batch pipelines mirroring the empirical workflow: difference-in-
//!   differences outcomes, subgroup conditioning, and report generation
//!   ([`pipeline`]).
//!
//! Networks are symmetric matrices embedded as step functions on the unit
//! square; all spectra are at the embedding scale (matrix eigenvalues divided
//! by N). See [`netmat`] for representation and ingestion.
//!
//! Everything is pure and immutable after construction; operations are safe
//! to run concurrently.

pub mod adjust;
pub mod bounds;
pub mod error;
pub mod netmat;
pub mod oracle;
pub mod pipeline;
pub mod ste;

pub use error::{Error, ErrorKind, Result};
pub use netmat::{Arm, Network};
