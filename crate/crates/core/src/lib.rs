//! Rectangular partial sums of multiple trigonometric Fourier series on the
//! torus `T^N`, lacunary index families, Weyl-multiplier weights, maximal
//! operators and the exact summation identities around them.

pub mod decomp;
pub mod error;
pub mod lattice;
pub mod maximal;
pub mod seqcalc;
pub mod spectral;
pub mod weyl;

pub use error::{Error, Result};

/// Library version, embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
