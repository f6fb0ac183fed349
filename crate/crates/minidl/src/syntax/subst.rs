//! Capture-checked substitution of terms for variables.
//!
//! Substitution never renames binders. If a replacement would move a free
//! variable of the payload under a quantifier (or program binder) for it,
//! the whole operation fails with [`CaptureError`] and the caller must
//! rename first. For substitution under a modality we additionally require
//! that the substituted variable is not written by the program and that the
//! program writes nothing the payload reads; both conditions together make
//! the plain syntactic replacement semantics-preserving.

use super::ast::{Formula, HybridProgram, Term, VarName};
use super::vars::{bound_vars, free_vars, term_vars, VarSet};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CaptureError {
    #[error("substituting {var} would capture {offender} under a quantifier for it")]
    Quantifier { var: VarName, offender: VarName },
    #[error("substituting {var} under a program that binds {offender} is not admissible")]
    Program { var: VarName, offender: VarName },
}

/// A simultaneous (parallel) substitution.
pub type Substitution = BTreeMap<VarName, Term>;

/// Replaces `x` by `t` in a term; terms have no binders so this never fails.
pub fn subst_term(term: &Term, x: &VarName, t: &Term) -> Term {
    let mut map = Substitution::new();
    map.insert(x.clone(), t.clone());
    subst_term_many(term, &map)
}

/// Parallel substitution in a term.
pub fn subst_term_many(term: &Term, map: &Substitution) -> Term {
    match term {
        Term::Var(y) => map.get(y).cloned().unwrap_or_else(|| term.clone()),
        Term::Lit(_) => term.clone(),
        Term::Neg(a) => Term::neg(subst_term_many(a, map)),
        Term::Plus(a, b) => Term::plus(subst_term_many(a, map), subst_term_many(b, map)),
        Term::Minus(a, b) => Term::minus(subst_term_many(a, map), subst_term_many(b, map)),
        Term::Times(a, b) => Term::times(subst_term_many(a, map), subst_term_many(b, map)),
        Term::Pow(a, e) => Term::pow(subst_term_many(a, map), *e),
    }
}

/// Replaces free occurrences of `x` by `t` in a formula.
pub fn substitute(f: &Formula, x: &VarName, t: &Term) -> Result<Formula, CaptureError> {
    let mut map = Substitution::new();
    map.insert(x.clone(), t.clone());
    substitute_many(f, &map)
}

/// Parallel substitution in a formula. All replacements happen at once, so
/// payload terms are never rewritten by other entries of the map.
pub fn substitute_many(f: &Formula, map: &Substitution) -> Result<Formula, CaptureError> {
    if map.is_empty() {
        return Ok(f.clone());
    }
    let payload_vars: VarSet = map.values().flat_map(term_vars).collect();
    go(f, map, &payload_vars)
}

fn go(f: &Formula, map: &Substitution, payload: &VarSet) -> Result<Formula, CaptureError> {
    let st = |term: &Term| subst_term_many(term, map);
    Ok(match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Eq(a, b) => Formula::Eq(st(a), st(b)),
        Formula::Geq(a, b) => Formula::Geq(st(a), st(b)),
        Formula::Gt(a, b) => Formula::Gt(st(a), st(b)),
        Formula::Leq(a, b) => Formula::Leq(st(a), st(b)),
        Formula::Lt(a, b) => Formula::Lt(st(a), st(b)),
        Formula::Neq(a, b) => Formula::Neq(st(a), st(b)),
        Formula::Not(g) => Formula::not(go(g, map, payload)?),
        Formula::And(a, b) => Formula::and(go(a, map, payload)?, go(b, map, payload)?),
        Formula::Or(a, b) => Formula::or(go(a, map, payload)?, go(b, map, payload)?),
        Formula::Imply(a, b) => Formula::imply(go(a, map, payload)?, go(b, map, payload)?),
        Formula::Equiv(a, b) => Formula::equiv(go(a, map, payload)?, go(b, map, payload)?),
        Formula::Forall(y, g) | Formula::Exists(y, g) => {
            // Entries for the bound variable are shadowed inside.
            let mut inner = map.clone();
            inner.remove(y);
            if inner.is_empty() {
                return Ok(f.clone());
            }
            let fv = free_vars(g);
            let replaced_inside = inner.keys().any(|v| fv.contains(v));
            if replaced_inside && payload.contains(y) {
                return Err(CaptureError::Quantifier {
                    var: inner.keys().find(|v| fv.contains(v)).unwrap().clone(),
                    offender: y.clone(),
                });
            }
            let inner_payload: VarSet = inner.values().flat_map(term_vars).collect();
            let body = go(g, &inner, &inner_payload)?;
            match f {
                Formula::Forall(..) => Formula::forall(y.clone(), body),
                _ => Formula::exists(y.clone(), body),
            }
        }
        Formula::Box_(p, g) | Formula::Diamond(p, g) => {
            let bv = bound_vars(p);
            if let Some(v) = map.keys().find(|v| bv.contains(*v)) {
                return Err(CaptureError::Program { var: v.clone(), offender: v.clone() });
            }
            if let Some(off) = payload.iter().find(|v| bv.contains(*v)) {
                return Err(CaptureError::Program {
                    var: map.keys().next().unwrap().clone(),
                    offender: off.clone(),
                });
            }
            let prog = subst_program(p, map, payload)?;
            let body = go(g, map, payload)?;
            match f {
                Formula::Box_(..) => Formula::boxed(prog, body),
                _ => Formula::diamond(prog, body),
            }
        }
    })
}

fn subst_program(
    p: &HybridProgram,
    map: &Substitution,
    payload: &VarSet,
) -> Result<HybridProgram, CaptureError> {
    Ok(match p {
        HybridProgram::Assign(y, e) => HybridProgram::Assign(y.clone(), subst_term_many(e, map)),
        HybridProgram::Test(q) => HybridProgram::Test(go(q, map, payload)?),
        HybridProgram::Ode(eqs, dom) => HybridProgram::Ode(
            eqs.iter().map(|(y, e)| (y.clone(), subst_term_many(e, map))).collect(),
            go(dom, map, payload)?,
        ),
        HybridProgram::Choice(a, b) => {
            HybridProgram::choice(subst_program(a, map, payload)?, subst_program(b, map, payload)?)
        }
        HybridProgram::Seq(a, b) => {
            HybridProgram::seq(subst_program(a, map, payload)?, subst_program(b, map, payload)?)
        }
        HybridProgram::Loop(a) => HybridProgram::repeat(subst_program(a, map, payload)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> VarName {
        VarName::new(s)
    }

    #[test]
    fn replaces_in_atoms_including_power_bases() {
        // (2g*x = 2g*H - v^2)[v := -c*v]  ~>  ... - (-c*v)^2
        let e = Formula::Eq(
            Term::times(Term::times(Term::int(2), Term::var("g")), Term::var("x")),
            Term::minus(
                Term::times(Term::times(Term::int(2), Term::var("g")), Term::var("H")),
                Term::pow(Term::var("v"), 2),
            ),
        );
        let minus_cv = Term::times(Term::neg(Term::var("c")), Term::var("v"));
        let got = substitute(&e, &v("v"), &minus_cv).unwrap();
        match got {
            Formula::Eq(_, rhs) => match rhs {
                Term::Minus(_, sq) => assert_eq!(*sq, Term::pow(minus_cv, 2)),
                other => panic!("unexpected rhs {other:?}"),
            },
            other => panic!("unexpected formula {other:?}"),
        }
    }

    #[test]
    fn bound_occurrences_are_left_alone() {
        let f = Formula::forall(v("x"), Formula::Geq(Term::var("x"), Term::int(0)));
        assert_eq!(substitute(&f, &v("x"), &Term::int(5)).unwrap(), f);
    }

    #[test]
    fn capture_under_quantifier_is_an_error() {
        // (\forall y (x >= y))[x := y+1] must fail, not silently capture
        let f = Formula::forall(v("y"), Formula::Geq(Term::var("x"), Term::var("y")));
        let t = Term::plus(Term::var("y"), Term::int(1));
        assert!(matches!(
            substitute(&f, &v("x"), &t),
            Err(CaptureError::Quantifier { .. })
        ));
    }

    #[test]
    fn program_binding_the_substituted_variable_is_an_error() {
        let f = Formula::boxed(
            HybridProgram::assign(v("x"), Term::int(0)),
            Formula::Geq(Term::var("x"), Term::int(0)),
        );
        assert!(matches!(
            substitute(&f, &v("x"), &Term::int(1)),
            Err(CaptureError::Program { .. })
        ));
    }

    #[test]
    fn parallel_substitution_does_not_chain() {
        // {x -> v, v -> x} swaps, it must not turn x into x via v
        let f = Formula::Eq(Term::var("x"), Term::var("v"));
        let mut map = Substitution::new();
        map.insert(v("x"), Term::var("v"));
        map.insert(v("v"), Term::var("x"));
        assert_eq!(
            substitute_many(&f, &map).unwrap(),
            Formula::Eq(Term::var("v"), Term::var("x"))
        );
    }

    #[test]
    fn substitution_through_nonconflicting_program_is_allowed() {
        // [v := g] (x >= 0) with x := 2: v not substituted, x free in post
        let f = Formula::boxed(
            HybridProgram::assign(v("v"), Term::var("g")),
            Formula::Geq(Term::var("x"), Term::int(0)),
        );
        let got = substitute(&f, &v("x"), &Term::int(2)).unwrap();
        assert_eq!(
            got,
            Formula::boxed(
                HybridProgram::assign(v("v"), Term::var("g")),
                Formula::Geq(Term::int(2), Term::int(0)),
            )
        );
    }
}
