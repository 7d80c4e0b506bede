//! Clock Hamiltonians for quantum circuits: compilation to 4-, 3- and
//! 2-local constructions, invariant-subspace checks and walk dynamics.

pub mod circuit;
pub mod compiler;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod sparse;
pub mod subspace;

pub use circuit::{parse_circuit, Circuit, Gate, Input};
pub use compiler::{compile, Backend, ClockMap, Compilation};
pub use error::{Error, Result};
pub use model::{Register, Term, TermList};
