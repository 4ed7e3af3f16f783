//! Sample-reuse estimation of robustness degradation functions for
//! uncertain SISO control loops.

pub mod engine;
pub mod error;
pub mod lti;
pub mod rng;
pub mod uncertainty;

pub use error::{Error, Result};
