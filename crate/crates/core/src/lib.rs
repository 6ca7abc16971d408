//! Isotonic conditional laws on finite probability spaces.

pub mod calibration;
pub mod cli;
pub mod closure;
pub mod distributions;
pub mod error;
pub mod functionals;
pub mod icl;
pub mod isotonic;
pub mod oracle;
pub mod random;
pub mod scoring;
pub mod space;
pub mod verify;

#[cfg(test)]
mod test_support;

pub use distributions::{QuantileSide, StepCdf};
pub use error::{IclError, Result};
pub use icl::{icl_fit, icl_quantile, IclFit};
pub use isotonic::{isotonic_mean, IsotonicFit};
pub use space::{CovariateTable, FiniteSpace, Preorder, UpperSet};
