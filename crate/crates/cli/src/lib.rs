//! Library surface of the experiment runner, shared by the binary and the
//! acceptance suite.

pub mod runner;
pub mod spec;
