//! Numerical toolkit for stability forms of equivariant minimal surfaces in
//! flat bundles, limits of generically semisimple Higgs fields, and a rank-2
//! self-duality model.

pub mod banded;
pub mod error;
pub mod experiments;
pub mod lie_sl;
pub mod limit_stability;
pub mod poly;
pub mod report;
pub mod riemann;
pub mod selfdual;

pub use error::{Error, Result};
