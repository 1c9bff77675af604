//! Simulator and analysis toolkit for the quantum Magic Square game played
//! over cavity-coupled quantum-dot spin qubits.
//!
//! The crate is organized by layer:
//!
//! - [`qcore`] — dense statevector / unitary engine (big-endian qubit order)
//! - [`gates`] — gate library and the rotation-convention resolver
//! - [`game`] — shared state, player circuits, win predicate, round success
//! - [`analysis`] — θ sweeps, classical brute force, thresholds, referee bias
//! - [`cavity`] — reflection coefficients and the spin–photon gate
//!
//! Everything is exact, deterministic and immutable after construction;
//! shot sampling is left to callers.
//!
//! ```
//! use magicsq::analysis::classical_optimum;
//! use magicsq::game::{round_success, Backend, RoundInput};
//!
//! // perfect entangled play wins the round the classical bound loses
//! let round = RoundInput::new(2, 3).unwrap();
//! let p = round_success(round, 0.0, Backend::Reference).unwrap();
//! assert!((p - 1.0).abs() < 1e-9);
//! assert_eq!(classical_optimum().max_wins, 8);
//! ```

pub mod analysis;
pub mod cavity;
pub mod game;
pub mod gates;
pub mod qcore;

pub use qcore::{equal_up_to_global_phase, GateMatrix, ProbabilityTable, StateVector};
