//! Free- and bound-variable computation.
//!
//! Modal formulas use a deliberately conservative notion of freeness: the
//! free variables of `[a]P` are every variable mentioned by `a` (bound or
//! not) together with the free variables of `P`. Over-approximating keeps
//! the vacuity side condition of the constant-postcondition axiom sound
//! without a must-bound analysis.

use super::ast::{Formula, HybridProgram, Term, VarName};
use std::collections::BTreeSet;

pub type VarSet = BTreeSet<VarName>;

/// All variables occurring in a term.
pub fn term_vars(t: &Term) -> VarSet {
    let mut out = VarSet::new();
    collect_term(t, &mut out);
    out
}

fn collect_term(t: &Term, out: &mut VarSet) {
    match t {
        Term::Var(x) => {
            out.insert(x.clone());
        }
        Term::Lit(_) => {}
        Term::Neg(a) => collect_term(a, out),
        Term::Plus(a, b) | Term::Minus(a, b) | Term::Times(a, b) => {
            collect_term(a, out);
            collect_term(b, out);
        }
        Term::Pow(a, _) => collect_term(a, out),
    }
}

/// Free variables of a formula (conservative across modalities).
pub fn free_vars(f: &Formula) -> VarSet {
    match f {
        Formula::True | Formula::False => VarSet::new(),
        Formula::Eq(a, b)
        | Formula::Geq(a, b)
        | Formula::Gt(a, b)
        | Formula::Leq(a, b)
        | Formula::Lt(a, b)
        | Formula::Neq(a, b) => {
            let mut s = term_vars(a);
            s.extend(term_vars(b));
            s
        }
        Formula::Not(g) => free_vars(g),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imply(a, b) | Formula::Equiv(a, b) => {
            let mut s = free_vars(a);
            s.extend(free_vars(b));
            s
        }
        Formula::Forall(x, g) | Formula::Exists(x, g) => {
            let mut s = free_vars(g);
            s.remove(x);
            s
        }
        Formula::Box_(p, g) | Formula::Diamond(p, g) => {
            let mut s = program_vars(p);
            s.extend(free_vars(g));
            s
        }
    }
}

/// Every variable mentioned by a program, including assignment and ODE
/// targets and the primed names an ODE introduces.
pub fn program_vars(p: &HybridProgram) -> VarSet {
    match p {
        HybridProgram::Assign(x, e) => {
            let mut s = term_vars(e);
            s.insert(x.clone());
            s
        }
        HybridProgram::Test(f) => free_vars(f),
        HybridProgram::Ode(eqs, dom) => {
            let mut s = free_vars(dom);
            for (x, e) in eqs {
                s.insert(x.clone());
                s.insert(x.to_primed());
                s.extend(term_vars(e));
            }
            s
        }
        HybridProgram::Choice(a, b) | HybridProgram::Seq(a, b) => {
            let mut s = program_vars(a);
            s.extend(program_vars(b));
            s
        }
        HybridProgram::Loop(a) => program_vars(a),
    }
}

/// Variables a program can write: assignment targets plus ODE variables and
/// their primes.
pub fn bound_vars(p: &HybridProgram) -> VarSet {
    match p {
        HybridProgram::Assign(x, _) => [x.clone()].into_iter().collect(),
        HybridProgram::Test(_) => VarSet::new(),
        HybridProgram::Ode(eqs, _) => {
            let mut s = VarSet::new();
            for (x, _) in eqs {
                s.insert(x.clone());
                s.insert(x.to_primed());
            }
            s
        }
        HybridProgram::Choice(a, b) | HybridProgram::Seq(a, b) => {
            let mut s = bound_vars(a);
            s.extend(bound_vars(b));
            s
        }
        HybridProgram::Loop(a) => bound_vars(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::ast::Term as T;

    fn v(s: &str) -> VarName {
        VarName::new(s)
    }

    #[test]
    fn quantifier_binds_its_variable() {
        // free_vars(\forall x (x >= y)) = {y}
        let f = Formula::forall(v("x"), Formula::Geq(T::var("x"), T::var("y")));
        assert_eq!(free_vars(&f), [v("y")].into_iter().collect());
    }

    #[test]
    fn modal_freeness_is_conservative() {
        // free_vars([x:=1] g>0) = {g, x}: the write target counts as mentioned
        let f = Formula::boxed(
            HybridProgram::assign(v("x"), T::int(1)),
            Formula::Gt(T::var("g"), T::int(0)),
        );
        assert_eq!(free_vars(&f), [v("g"), v("x")].into_iter().collect());
    }

    #[test]
    fn ode_binds_variable_and_its_prime() {
        let p = HybridProgram::Ode(vec![(v("x"), T::var("v"))], Formula::True);
        let bv = bound_vars(&p);
        assert!(bv.contains(&v("x")));
        assert!(bv.contains(&VarName::primed("x")));
        assert!(!bv.contains(&v("v")));
    }

    #[test]
    fn loop_and_choice_union_their_writes() {
        let p = HybridProgram::repeat(HybridProgram::choice(
            HybridProgram::assign(v("a"), T::int(0)),
            HybridProgram::assign(v("b"), T::int(1)),
        ));
        assert_eq!(bound_vars(&p), [v("a"), v("b")].into_iter().collect());
    }
}
