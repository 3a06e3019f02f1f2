//! Simulation toolkit for unambiguous comparison of two unknown unitary
//! channels, expressed in the process-POVM (Choi operator) picture.

pub mod cli;
pub mod comparator;
pub mod error;
pub mod haar;
pub mod matcore;
pub mod qrep;
pub mod symmetry;
