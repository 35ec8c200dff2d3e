//! Decision procedures, proof checkers and countermodels for the
//! provability logics GL, S and D.

pub mod formula;
pub mod kripke;
pub mod calculi;
pub mod prover;
pub mod glin;
pub mod transforms;
pub mod hilbert;
