//! Lindblad Liouvillians whose decoherence-free subspaces hold a quantum
//! many-body scar tower.
//!
//! Basis conventions: site 0 is the leftmost (slowest-varying) tensor factor;
//! spin-1/2 states are ordered `|up>, |down>` and spin-1 states `|1>, |0>, |-1>`.
//! Density matrices are stored row-major; superoperators act on
//! column-stacked vectors.

pub mod aklt;
pub mod chain;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod liouvillian;
pub mod models;
pub mod operator;
pub mod projectors;
pub mod sparse;
pub mod spin;
pub mod trajectory;

pub use num_complex::Complex64 as C64;

pub use chain::{Boundary, ChainSpec};
pub use error::{Error, Result};
pub use models::{LiouvillianModel, ModelKind, ModelSpec, ScarTower};
pub use operator::OperatorMatrix;
pub use sparse::SparseOperator;
