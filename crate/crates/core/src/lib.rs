//! Online single-timescale actor-critic on finite MDPs.
//!
//! The crate is split into the learner itself ([`simulate`]) and the exact
//! machinery needed to judge it: every analytic quantity of the average-reward
//! setting (stationary distribution, differential values, TD fixed point,
//! policy gradient, mixing constants) is computed by dense linear algebra in
//! [`oracle`], and the error metrics and step-size constant calculus live in
//! [`diagnostics`].
//!
//! Everything here is `no_std` + `alloc`; file formats, configuration and the
//! command line live in the companion `saclab` crate.

#![no_std]
// `!(x <= bound)` is used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod diagnostics;
pub mod error;
pub mod features;
pub mod linalg;
pub mod mdp;
pub mod oracle;
pub mod policy;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
pub use features::{FeatureKind, FeatureMap};
pub use mdp::{FiniteMdp, GarnetSpec, InducedChain};
pub use oracle::OracleBundle;
pub use policy::{PolicyConstants, PolicyParams, SoftmaxPolicy};

pub use nalgebra;
