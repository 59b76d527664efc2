//! Reward distances, behavioural models and misspecification-robustness
//! certificates for finite MDPs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
mod linalg;
pub mod mdp;
pub mod models;
pub mod oracle;
pub mod policy_metric;
pub mod robustness;
pub mod starc;
pub mod transforms;

pub use error::{Error, Result};
