//! Norm models and a case reasoner.
//!
//! [`lang`] parses and checks model text; [`reasoner`] runs cases against a
//! compiled [`Model`].

pub mod lang;
pub mod reasoner;

pub use lang::{parse, validate, Diagnostic, Literal, Specification};
pub use reasoner::*;

/// Models shipped with the crate.
pub mod fixtures {
    /// Quittance (tax-relief) application model used in the tests and docs.
    pub const QUITTANCE: &str = include_str!("../fixtures/quittance.norm");
}
