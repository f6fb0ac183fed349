//! The proof kernel: goal normalization, proof rules, scripts, and replay.
//!
//! Proofs are sequent-calculus goal trees. A replay session starts from a
//! model's problem formula, normalizes propositional structure away
//! automatically, and applies scripted rules — program-axiom rewrites, loop
//! induction, ODE solving (with kernel-checked solutions), differential
//! induction, the modal rules K, M, G, and V, quantifier steps, and `close`,
//! which hands program-free goals to the arithmetic backend. The kernel is
//! deliberately small: everything above these rules (in particular the two
//! bundled proof scripts) is untrusted input that the kernel re-checks.

pub mod check;
pub mod normalize;
pub mod rules;
pub mod script;

pub use check::{
    check_proof, GoalNode, GoalStatus, Policy, ProofError, ProofReport, ProofResult, Session,
};
pub use normalize::{normalize, FreshNames};
pub use rules::{
    apply_box_step, rule_di, rule_g, rule_inst, rule_k, rule_loop, rule_m, rule_solve_ode,
    rule_v, rule_witness, RuleError, Side, Target,
};
pub use script::{parse_script, ProofStep, ScriptError};
