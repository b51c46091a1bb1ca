//! Construction and certification of multipartite entangled states built
//! from entanglement-breaking subspaces.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constructions;
pub mod criteria;
pub mod eb;
pub mod error;
pub mod hilbert;
pub mod io;
pub mod lemma5;
pub mod linalg;
pub mod measures;
pub mod rng;
pub mod tolerance;

pub use error::{Error, Result};
pub use hilbert::{HilbertStructure, LocalOperator, PureVector, StateMatrix};
pub use tolerance::Tolerances;

/// Library version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
