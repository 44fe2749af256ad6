//! Schützenberger groups and maximal subgroups of max-plus matrices.
//!
//! Scalars are exact: rationals extended by infinitesimal tags, so that
//! entries can be chosen integrally independent. See [`semiring`].

pub mod cli;
pub mod components;
pub mod constructors;
pub mod error;
pub mod matrix;
pub mod permgroups;
pub mod semiring;
pub mod spaces;
pub mod stabilizer;

pub use error::{Error, Result};
pub use matrix::{MonomialMatrix, TropMatrix};
pub use semiring::{TropScalar, Value};

/// Search and enumeration budgets shared by all exact searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Backtracking nodes per search.
    pub max_nodes: u64,
    /// Largest group enumerated element by element.
    pub max_order: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_nodes: 5_000_000,
            max_order: 1_000_000,
        }
    }
}
