//! Quantum reservoir computing on brickwall circuits of two-qubit gates.
//!
//! The crate is organised bottom-up:
//!
//! * [`gates`] builds and characterises two-qubit gates (Cartan kernels,
//!   dual-unitary dressings, solvable gates, entangling power and gate
//!   typicality).
//! * [`circuit`] assembles the single-timestep brickwall unitary and evolves
//!   density matrices.
//! * [`datasets`] generates the NARMA and Mackey–Glass benchmark series.
//! * [`reservoir`] runs the injection / multiplexed readout protocol and trains
//!   the pseudoinverse readout.
//! * [`krylov`] performs Arnoldi iteration in operator space and derives
//!   Krylov complexity and observability.
//! * [`ergodicity`] holds the closed-form diagnostics: the single-bond
//!   correlation map, mixing rates and the second-moment design gap.

pub mod circuit;
pub mod datasets;
pub mod ergodicity;
pub mod error;
pub mod gates;
pub mod krylov;
pub mod linalg;
pub mod reservoir;
pub mod stats;

pub use error::{QrcError, Result};
pub use linalg::C64;
