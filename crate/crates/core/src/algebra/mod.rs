//! Exact integer linear algebra.

pub mod group;
pub mod lattice;
pub mod matrix;
pub mod smith;

pub use group::{cokernel, kernel_group, presented_homology, FgAbGroup, Quotient};
pub use lattice::{image, kernel, preimage, solve, unimodular_inverse, Subgroup};
pub use matrix::{big_vec, is_zero_vec, IntMatrix};
pub use smith::{smith_normal_form, SmithForm};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlgebraError {
    #[error("subgroups live in different ambient lattices (rank {0} vs {1})")]
    AmbientMismatch(usize, usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("relation subgroup is not contained in the numerator")]
    NotContained,
    #[error("element is not in the numerator subgroup")]
    NotInSubgroup,
    #[error("map does not respect the presentations")]
    NotWellDefined,
}
