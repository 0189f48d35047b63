//! Simulation and analysis of measurement-basis choices recorded in qubits.
//!
//! Two parties share the Bell pair `(|00⟩ − |11⟩)/√2` on `Q1 Q2`. Each picks
//! the Z or X basis and records the choice in an extra qubit (`Q3` for
//! Alice, `Q4` for Bob). The crate builds the resulting four-qubit density
//! matrix, reads off its outcome distribution, and asks whether the choice
//! registers can depend only on their own party's outcome:
//!
//! - [`qcore`]: dense state vectors, unitaries and density matrices.
//! - [`protocol`]: the experiment itself and its outcome distribution.
//! - [`stats`]: probability queries, CHSH values and seeded sampling.
//! - [`reality`]: certainty predictions and the four-fact contradiction chain.
//! - [`lhv`]: no-signaling and local-polytope checks with `(q1, q2)` as inputs.
//! - [`cli`]: the `basiscorr` command line.

pub mod cli;
pub mod lhv;
pub mod protocol;
pub mod qcore;
pub mod reality;
pub mod stats;

pub use protocol::{
    bell_state, build_final_density, outcome_distribution, ChoiceMode, Distribution,
    OutcomeQuadruple, Scenario, Sign, Var,
};
pub use qcore::{DensityMatrix, StateVector, UnitaryMatrix};
