pub mod algebra;
pub mod checks;
pub mod complexes;
pub mod cubical;
pub mod family;
pub mod flowcount;
pub mod library;
pub mod morse;
pub mod novikov;
pub mod spectral;

pub use algebra::{AlgebraError, FgAbGroup, IntMatrix, SmithForm, Subgroup};
pub use complexes::{ChainMap, FilteredComplex, GradedComplex, GradedMap};
pub use family::{FamilyComplex, FamilyDescriptor};
pub use flowcount::{ChartedBundle, FlowLineRecord, FlowcountError, Tolerances};
pub use morse::{LocalSystem, MorseData};
pub use novikov::{CoeffLattice, NovikovElement, NovikovHomology};
pub use spectral::{Page, SpectralSequence};
