//! Novikov ring, Novikov complexes of closed 1-forms and families over the circle.

pub mod complex;
pub mod family;
pub mod ring;

pub use complex::{
    circle_one_form, novikov_homology, rank, NovMatrix, NovikovComplexData, NovikovFlow,
    NovikovHomology,
};
pub use family::{
    monodromy_family, novikov_family, reference_rescaling_check, torus_with_fiber_class,
    NovikovBlock, NovikovFamily, NovikovFamilyComplex, NovikovFamilyPages,
};
pub use ring::{CoeffLattice, Mode, NovikovElement, NovikovError};
