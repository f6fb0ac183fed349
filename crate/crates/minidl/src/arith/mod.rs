//! Real-arithmetic reasoning: exact polynomials, a layered decision
//! procedure, and an optional external solver escalation.

pub mod decide;
pub mod fm;
pub mod poly;
pub mod smt;

pub use decide::{decide_sequent, ArithConfig, Method, Verdict};
pub use fm::fm_decide;
pub use poly::{poly_normalize, poly_zero, Poly};
pub use smt::{smt_decide, SmtConfig, SmtError};
