//! A miniature verification toolchain for hybrid systems.
//!
//! The pipeline runs end to end over one small logic: parse differential
//! dynamic logic formulas and hybrid programs, replay machine-checkable
//! proofs in a trusted sequent kernel, cross-check the axioms against an
//! executable transition semantics, synthesize runtime monitors from the
//! proved models, and wrap an untrusted controller in a monitored sandbox
//! that falls back to a proven-safe action whenever a check fails.

pub mod arith;
pub mod kernel;
pub mod modelplex;
pub mod parser;
pub mod sandbox;
pub mod sim;
pub mod syntax;
