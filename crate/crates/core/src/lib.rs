//! Simulation and verification toolkit for excursion-set percolation of
//! planar Gaussian fields.
//!
//! The crate computes threshold heights and threshold locations of crossing
//! events, checks the Ornstein-Uhlenbeck covariance representation of the
//! threshold variance, measures how spread out the threshold location is,
//! detects discrete saddles, and fuzz-verifies RSW gluing constructions.

pub mod bessel;
pub mod error;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod kernel;
pub mod montecarlo;
pub mod ou_variance;
pub mod percolation;
pub mod rng;
pub mod rsw;
pub mod saddle;
pub mod stats;
pub mod threshold;
pub mod union_find;

pub use error::{Error, Result};
pub use field::{FieldSample, Sampler, SamplerKind};
pub use grid::GridSpec;
pub use kernel::StationaryKernel;
pub use percolation::{Config, EventSpec};
pub use stats::EstimatorReport;
