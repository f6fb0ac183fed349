//! Runtime safety sandbox around an untrusted controller.
//!
//! The sandbox holds the plant state, asks an external controller process
//! what to do each cycle, and actuates its proposal only if the controller
//! monitor accepts the resulting transition — otherwise a verified fallback
//! action runs instead. After each plant period the model monitor checks
//! whether reality still behaves like the verified model; a violation means
//! the offline safety proof no longer transfers, and the run flags it.

pub mod config;
pub mod demo;
pub mod runner;
pub mod wire;

pub use config::{expand_self, parse_config_file, parse_config_source, ConfigError, SandboxConfig};
pub use demo::{run_demo_controller, DemoMode};
pub use runner::{
    load_sandbox, run_sandbox, Action, CycleRecord, RunOutcome, Sandbox, SandboxError,
    ScriptedTransport, SubprocessTransport, Summary, Transport,
};
pub use wire::{from_decimal, parse_proposal, parse_request, state_request, to_decimal};
