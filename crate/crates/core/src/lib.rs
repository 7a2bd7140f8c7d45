//! Exact spectra, variational ground states and phase analysis for two- and
//! three-level atoms coupled to a single cavity mode.

pub mod basis;
pub mod coherent;
pub mod error;
pub mod model;
pub mod observables;
pub mod operator;
pub mod optim;
pub mod phase;
pub mod spectra;
pub mod state;
pub mod variational;

pub use basis::{enumerate_basis, Basis, Label, Sector, SectorSpec};
pub use error::{Error, Result};
pub use model::{Atoms, Configuration, ModelKind, ModelSpec, Param};
pub use operator::{assemble_hamiltonian, operator_matrix, OpId, OperatorMatrix};
pub use state::StateVector;
