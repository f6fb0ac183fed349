//! Terms, formulas, hybrid programs, and the operations on their syntax:
//! variable analyses, capture-checked substitution, and differentials.

pub mod ast;
pub mod diff;
pub mod pretty;
pub mod subst;
pub mod vars;

pub use ast::{Formula, HybridProgram, Sequent, Term, VarName};
pub use diff::differential;
pub use subst::{substitute, substitute_many, subst_term, Substitution};
pub use vars::{bound_vars, free_vars, program_vars, term_vars, VarSet};
