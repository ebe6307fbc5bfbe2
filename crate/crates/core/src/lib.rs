//! Correlation bounds for finite-state continuous-time Markov jump processes.
//!
//! The crate evaluates both sides of a family of inequalities that limit how
//! fast two-point (and multi-point) correlation functions can change, in
//! terms of the dynamical activity of the process, and provides the exact
//! and stochastic oracles used to check them.
//!
//! Conventions: a generator `W` has `W[(nu, mu)]` equal to the rate of
//! jumping from `mu` to `nu`; its columns sum to zero and probability vectors
//! are columns, `dP/dt = W P`.

pub mod bounds;
pub mod correlation;
pub mod distances;
pub mod error;
pub mod linear_response;
pub mod markov;
pub mod path_space;
pub mod quadrature;
pub mod sweep;

pub use error::{Error, Result};
pub use markov::{ProbVector, RateMatrix, ScoreVector};
pub use nalgebra::{DMatrix, DVector};

/// Crate version, embedded in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Formats a real with 17 significant digits, enough to round-trip any
/// `f64`. Infinities are written `inf` / `-inf`.
pub fn fmt_real(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.16e}")
}
