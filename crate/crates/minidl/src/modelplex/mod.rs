//! Runtime monitor synthesis and compilation.
//!
//! Offline proofs certify a model; at runtime the model must still match
//! reality. This module turns a verified model into checkable artifacts:
//! [`symexec`] enumerates a loop body's execution paths symbolically,
//! [`monitor`] condenses them into a quantifier-free prior/posterior
//! relation (a controller monitor for the discrete fragment, a model
//! monitor for the full body), and [`compile`] lowers a monitor to stack
//! code that an embedded interpreter can run without a formula library.

pub mod compile;
pub mod monitor;
pub mod symexec;

pub use compile::{compile, parse_instructions, render, run, Instr};
pub use monitor::{
    eval_monitor, loop_body, monitor_equiv, monitor_for_model, post_name, transition_state,
    Equivalence, GridSpec, MonitorError, MonitorFormula, MonitorKind,
};
pub use symexec::{symexec, SymExecError, SymState};
