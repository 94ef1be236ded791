//! Data valuation with out-of-bag estimates from bagging ensembles.
//!
//! The centre of the crate is [`oob`]: per-point values computed from the
//! out-of-bag scores of a bagged decision-tree ensemble, together with the
//! infinitesimal-jackknife influence of the out-of-bag estimate and an
//! order-consistency checker relating the two. Around it sit a CART/bagging
//! implementation ([`forest`]), the input pipeline ([`data`]), comparison
//! valuators ([`baselines`]) and the experiment harness ([`eval`], [`cli`]).

pub mod baselines;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod forest;
pub mod oob;
pub mod rng;

pub use error::{Error, Result};
