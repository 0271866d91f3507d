//! Statistics of cyclically reduced words in free groups and of closed walks on regular graphs.
//!
//! Exact paths (big-integer Laurent polynomials, transfer matrices over polynomial
//! entries) are paired with floating-point closed forms so that every formula can be
//! checked against enumeration.

pub mod chebyshev;
pub mod cyclotomic;
pub mod error;
pub mod free_group;
pub mod graph;
pub mod laurent;
pub mod linalg;
pub mod perturbation;
pub mod stats;
pub mod walks;
pub mod zeta;

pub use error::{Error, Result};
pub use laurent::LaurentPoly;
