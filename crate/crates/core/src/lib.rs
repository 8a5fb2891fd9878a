//! Compatibility of two discrete conditional probability matrices.
//!
//! Given `A = P(X | Y)` (columns sum to one) and `B = P(Y | X)` (rows sum to
//! one), decide whether some joint distribution has both as its
//! conditionals, recover that joint, fill in unknown entries under the
//! assumption of compatibility, and measure how far an incompatible pair is
//! from compatibility. All arithmetic is exact.

pub mod cli;
pub mod compat;
pub mod completion;
pub mod dsystem;
pub mod error;
pub mod exact;
pub mod io;
pub mod lp;
pub mod model;
pub mod oracle;

pub use error::{Axis, Error, Result};
pub use exact::{RatMatrix, Rational};
pub use model::{
    derive_conditionals, CompatibilityVerdict, ConditionalMatrix, JointDistribution, MarginalPair,
    Orientation,
};
