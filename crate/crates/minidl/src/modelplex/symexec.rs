//! Symbolic execution of loop-free hybrid programs.
//!
//! Each path through the program yields a [`SymState`]: a simultaneous
//! update mapping every written variable to a term over the *initial*
//! variables, plus a path condition collecting the tests and domain
//! constraints encountered along the way. Continuous dynamics enter through
//! their annotated closed-form solutions: an ODE contributes a fresh
//! duration symbol `t >= 0`, routes the solution through the current update,
//! and records the evolution domain at both endpoints of the flow (the
//! interior is addressed by the concavity check during monitor synthesis).

use crate::kernel::FreshNames;
use crate::sim::RProg;
use crate::syntax::ast::{Formula, Term, VarName};
use crate::syntax::subst::{subst_term, subst_term_many, substitute_many, Substitution};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymExecError {
    #[error("loops cannot be executed symbolically; monitor one iteration of the body instead")]
    LoopNotSupported,
    #[error("the ODE for `{0}` has no solution annotation")]
    MissingSolution(VarName),
    #[error("test or domain constraint `{0}` is not quantifier-free")]
    QuantifiedCondition(Formula),
}

/// One symbolic path: where every variable ended up, and what had to hold.
#[derive(Debug, Clone, PartialEq)]
pub struct SymState {
    /// Final value of each written variable, as a term over initial values
    /// (plus any not-yet-eliminated duration symbols).
    pub update: BTreeMap<VarName, Term>,
    /// Conjuncts accumulated from tests and domain constraints.
    pub path_condition: Vec<Formula>,
    /// Duration symbols introduced by ODEs, in order of introduction.
    pub durations: Vec<VarName>,
}

impl SymState {
    fn empty() -> SymState {
        SymState { update: BTreeMap::new(), path_condition: Vec::new(), durations: Vec::new() }
    }

    /// The final value of `x` on this path.
    pub fn value_of(&self, x: &VarName) -> Term {
        self.update.get(x).cloned().unwrap_or(Term::Var(x.clone()))
    }

    fn assume(&mut self, f: Formula) {
        let f = f.fold();
        if f != Formula::True {
            self.path_condition.push(f);
        }
    }
}

/// All symbolic paths through `p`, in choice order.
pub fn symexec(p: &RProg, fresh: &mut FreshNames) -> Result<Vec<SymState>, SymExecError> {
    run(p, SymState::empty(), fresh)
}

fn run(p: &RProg, s: SymState, fresh: &mut FreshNames) -> Result<Vec<SymState>, SymExecError> {
    match p {
        RProg::Assign(x, e) => {
            let mut s = s;
            let value = subst_term_many(e, &s.update).fold();
            s.update.insert(x.clone(), value);
            Ok(vec![s])
        }
        RProg::Test(q) => {
            let mut s = s;
            s.assume(apply_update(q, &s.update)?);
            Ok(vec![s])
        }
        RProg::Choice(a, b) => {
            let mut paths = run(a, s.clone(), fresh)?;
            paths.extend(run(b, s, fresh)?);
            Ok(paths)
        }
        RProg::Seq(a, b) => {
            let mut out = Vec::new();
            for path in run(a, s, fresh)? {
                out.extend(run(b, path, fresh)?);
            }
            Ok(out)
        }
        RProg::Loop(_) => Err(SymExecError::LoopNotSupported),
        RProg::Ode(spec) => {
            let mut s = s;
            let sol = spec
                .solution
                .as_ref()
                .ok_or_else(|| SymExecError::MissingSolution(spec.flow[0].0.clone()))?;
            let t = fresh.fresh(&sol.time.base);

            // The solution curve for each flow variable, started from the
            // current symbolic values.
            let mut at_t: Substitution = BTreeMap::new();
            for (y, _) in &spec.flow {
                let curve = sol
                    .for_var(y)
                    .ok_or_else(|| SymExecError::MissingSolution(y.clone()))?;
                let curve = subst_term(curve, &sol.time, &Term::Var(t.clone()));
                let curve = subst_term_many(&curve, &s.update).fold();
                fresh.note_term(&curve);
                at_t.insert(y.clone(), curve);
            }

            s.assume(Formula::Geq(Term::Var(t.clone()), Term::int(0)));
            s.assume(apply_update(&spec.domain, &s.update)?);
            let mut update = s.update.clone();
            update.extend(at_t);
            s.assume(apply_update(&spec.domain, &update)?);
            s.update = update;
            s.durations.push(t);
            Ok(vec![s])
        }
    }
}

/// A condition transported back to initial variables through the update.
fn apply_update(q: &Formula, update: &Substitution) -> Result<Formula, SymExecError> {
    if !q.is_quantifier_free() {
        return Err(SymExecError::QuantifiedCondition(q.clone()));
    }
    // Quantifier- and program-free, so substitution cannot capture.
    Ok(substitute_many(q, update).expect("no binders to capture"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::model::parse_model_source;
    use crate::parser::{parse_formula, parse_program};

    fn exec(src: &str) -> Vec<SymState> {
        let p = RProg::from_program(&parse_program(src).unwrap());
        symexec(&p, &mut FreshNames::new()).unwrap()
    }

    fn pc_strings(s: &SymState) -> Vec<String> {
        s.path_condition.iter().map(|f| f.to_string()).collect()
    }

    #[test]
    fn the_controller_has_two_paths() {
        let paths = exec("?x=0; v := -c*v ++ ?x!=0");
        assert_eq!(paths.len(), 2);
        assert_eq!(pc_strings(&paths[0]), ["x=0"]);
        assert_eq!(paths[0].value_of(&VarName::new("v")).to_string(), "-c*v");
        assert_eq!(pc_strings(&paths[1]), ["x!=0"]);
        assert!(paths[1].update.is_empty());
    }

    #[test]
    fn tests_see_earlier_assignments() {
        let paths = exec("x := x+1; ?x>0");
        assert_eq!(paths.len(), 1);
        assert_eq!(pc_strings(&paths[0]), ["x+1>0"]);
        assert_eq!(paths[0].value_of(&VarName::new("x")).to_string(), "x+1");
    }

    #[test]
    fn updates_stay_in_terms_of_initial_variables() {
        let paths = exec("x := v; v := x");
        assert_eq!(paths[0].value_of(&VarName::new("x")).to_string(), "v");
        // The second assignment reads the x written by the first, which is
        // the initial v.
        assert_eq!(paths[0].value_of(&VarName::new("v")).to_string(), "v");
    }

    #[test]
    fn an_ode_samples_its_domain_at_both_endpoints() {
        let model = parse_model_source(
            "ball",
            "Constants.\n  g;\nProblem. \
             x>=0 -> [{x'=v, v'=-g & x>=0} @solution(t; x=x+v*t-g/2*t^2, v=v-g*t)]x>=0",
        )
        .unwrap();
        let body = RProg::from_model(&model).unwrap();
        let paths = symexec(&body, &mut FreshNames::new()).unwrap();
        assert_eq!(paths.len(), 1);
        let s = &paths[0];
        assert_eq!(pc_strings(s), ["t>=0", "x>=0", "x+v*t-(1/2)*g*t^2>=0"]);
        assert_eq!(s.value_of(&VarName::new("v")).to_string(), "v-g*t");
        assert_eq!(s.durations.len(), 1);
    }

    #[test]
    fn the_duration_symbol_avoids_program_variables() {
        let model = parse_model_source(
            "clash",
            "Problem. t=1 -> [{x'=1 & x<=t} @solution(t; x=x+t)]x<=t",
        )
        .unwrap();
        let body = RProg::from_model(&model).unwrap();
        let mut fresh = FreshNames::new();
        fresh.note_formula(&model.problem);
        let paths = symexec(&body, &mut fresh).unwrap();
        assert_eq!(paths[0].durations[0].to_string(), "t_1");
        assert_eq!(paths[0].value_of(&VarName::new("x")).to_string(), "x+t_1");
    }

    #[test]
    fn loops_are_rejected() {
        let p = RProg::from_program(&parse_program("{x := x+1}*").unwrap());
        let err = symexec(&p, &mut FreshNames::new()).unwrap_err();
        assert_eq!(err, SymExecError::LoopNotSupported);
    }

    #[test]
    fn unannotated_odes_are_rejected() {
        let p = RProg::from_program(&parse_program("{x'=1 & true}").unwrap());
        let err = symexec(&p, &mut FreshNames::new()).unwrap_err();
        assert!(matches!(err, SymExecError::MissingSolution(_)));
    }

    #[test]
    fn quantified_tests_are_rejected() {
        let q = parse_formula("\\forall y y^2>=0").unwrap();
        let p = RProg::Test(q);
        let err = symexec(&p, &mut FreshNames::new()).unwrap_err();
        assert!(matches!(err, SymExecError::QuantifiedCondition(_)));
    }
}
