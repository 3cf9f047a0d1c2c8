//! Simulation of support recovery over a shared-codebook Gaussian multiple
//! access channel, with invariant causal prediction baselines and closed-form
//! error-probability lower bounds.

pub mod bounds;
pub mod channel;
pub mod codebook;
pub mod decoders;
pub mod error;
pub mod experiments;
pub mod icp;
pub mod linalg;
pub mod stats;

pub use error::{Error, Result};
