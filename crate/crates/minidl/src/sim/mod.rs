//! Executable semantics under explicit finite budgets: term/formula
//! evaluation, ODE integration, reachable-state enumeration, and the
//! axiom fuzzer built on top of them.

pub mod eval;
pub mod fuzz;
pub mod ode;
pub mod reach;
pub mod state;

pub use eval::{eval_term, holds_qf, EvalError};
pub use ode::{integrate_ode, OdeMode, OdeSpec, SimError, Trace};
pub use reach::{check_box, check_diamond, reachable_states, EnumBudget, RProg};
pub use state::{NumMode, State, Value};
