//! Exhaustive state enumeration for hybrid programs under a finite budget.
//!
//! The transition relation of a hybrid program ranges over arbitrary loop
//! counts and real-valued ODE durations; a budget discretizes both so the
//! relation becomes finite and enumerable. Loops unroll from zero up to
//! `loop_bound` iterations, ODEs stop at each time-grid point whose whole
//! sample prefix keeps the evolution domain true, and choices are explored
//! exhaustively. For closed-form annotated ODEs in exact mode this computes
//! the discretized relation precisely, which is what makes executable
//! equivalence checks against the proof calculus meaningful.

use super::eval::{eval_term, holds_qf};
use super::ode::{integrate_ode, OdeMode, OdeSpec, SimError};
use super::state::State;
use crate::parser::ModelFile;
use crate::syntax::ast::{Formula, HybridProgram, VarName};
use num_rational::BigRational;
use num_traits::Signed;
use std::collections::BTreeSet;

/// A hybrid program with solution annotations resolved onto its ODE nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum RProg {
    Assign(VarName, crate::syntax::ast::Term),
    Test(Formula),
    Ode(OdeSpec),
    Choice(Box<RProg>, Box<RProg>),
    Seq(Box<RProg>, Box<RProg>),
    Loop(Box<RProg>),
}

impl RProg {
    /// Resolves a bare program; ODE nodes get no solution annotations.
    pub fn from_program(p: &HybridProgram) -> RProg {
        let mut ode_ix = 0;
        resolve(p, &|_| None, &mut ode_ix)
    }

    /// Resolves a model file's program, attaching each `@solution` to its
    /// ODE by occurrence order.
    pub fn from_model(model: &ModelFile) -> Option<RProg> {
        let (_, program, _) = model.implication_parts()?;
        let mut ode_ix = 0;
        Some(resolve(program, &|i| model.solutions.get(&i).cloned(), &mut ode_ix))
    }

    pub fn seq(a: RProg, b: RProg) -> RProg {
        RProg::Seq(Box::new(a), Box::new(b))
    }

    pub fn choice(a: RProg, b: RProg) -> RProg {
        RProg::Choice(Box::new(a), Box::new(b))
    }
}

fn resolve(
    p: &HybridProgram,
    solution_for: &dyn Fn(usize) -> Option<crate::parser::SolutionAnnotation>,
    ode_ix: &mut usize,
) -> RProg {
    match p {
        HybridProgram::Assign(x, e) => RProg::Assign(x.clone(), e.clone()),
        HybridProgram::Test(q) => RProg::Test(q.clone()),
        HybridProgram::Ode(flow, domain) => {
            let ix = *ode_ix;
            *ode_ix += 1;
            RProg::Ode(OdeSpec {
                flow: flow.clone(),
                domain: domain.clone(),
                solution: solution_for(ix),
            })
        }
        HybridProgram::Choice(a, b) => RProg::Choice(
            Box::new(resolve(a, solution_for, ode_ix)),
            Box::new(resolve(b, solution_for, ode_ix)),
        ),
        HybridProgram::Seq(a, b) => RProg::Seq(
            Box::new(resolve(a, solution_for, ode_ix)),
            Box::new(resolve(b, solution_for, ode_ix)),
        ),
        HybridProgram::Loop(body) => RProg::Loop(Box::new(resolve(body, solution_for, ode_ix))),
    }
}

/// Finite discretization of the transition relation.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumBudget {
    /// Maximum loop unrollings; iteration counts 0..=bound are enumerated.
    pub loop_bound: u32,
    /// Candidate ODE stopping times (also the domain-check sample times).
    pub time_grid: Vec<BigRational>,
    pub ode_mode: OdeMode,
    /// Cap on the enumerated state-set size.
    pub state_cap: usize,
}

impl EnumBudget {
    /// Closed-form budget over the given stopping times.
    pub fn closed_form(loop_bound: u32, time_grid: Vec<BigRational>) -> EnumBudget {
        EnumBudget { loop_bound, time_grid, ode_mode: OdeMode::ClosedForm, state_cap: 100_000 }
    }
}

/// All states the program can reach from `s` under the budget.
pub fn reachable_states(
    p: &RProg,
    s: &State,
    b: &EnumBudget,
) -> Result<BTreeSet<State>, SimError> {
    let mut out = BTreeSet::new();
    step(p, s, b, &mut out)?;
    Ok(out)
}

fn guard_cap(set: &BTreeSet<State>, b: &EnumBudget) -> Result<(), SimError> {
    if set.len() > b.state_cap {
        Err(SimError::BudgetExceeded { cap: b.state_cap })
    } else {
        Ok(())
    }
}

fn step(
    p: &RProg,
    s: &State,
    b: &EnumBudget,
    out: &mut BTreeSet<State>,
) -> Result<(), SimError> {
    match p {
        RProg::Assign(x, e) => {
            let v = eval_term(s, e)?;
            let mut next = s.clone();
            next.set(x.clone(), v);
            out.insert(next);
        }
        RProg::Test(q) => {
            if holds_qf(s, q)? {
                out.insert(s.clone());
            }
        }
        RProg::Ode(spec) => {
            let mut stops: Vec<BigRational> =
                b.time_grid.iter().filter(|t| !t.is_negative()).cloned().collect();
            stops.sort();
            stops.dedup();
            for t in stops {
                match integrate_ode(s, spec, &t, &b.ode_mode, &b.time_grid) {
                    Ok(trace) => {
                        if let Some(end) = trace.last_state() {
                            out.insert(end.without_primes());
                        }
                    }
                    // An in-range violation also rejects every later stop.
                    Err(SimError::DomainViolation { .. }) => break,
                    Err(e) => return Err(e),
                }
            }
        }
        RProg::Choice(a, c) => {
            step(a, s, b, out)?;
            step(c, s, b, out)?;
        }
        RProg::Seq(a, c) => {
            let mut mids = BTreeSet::new();
            step(a, s, b, &mut mids)?;
            guard_cap(&mids, b)?;
            for m in &mids {
                step(c, m, b, out)?;
                guard_cap(out, b)?;
            }
        }
        RProg::Loop(body) => {
            let mut frontier: BTreeSet<State> = BTreeSet::new();
            frontier.insert(s.clone());
            out.insert(s.clone());
            for _ in 0..b.loop_bound {
                let mut next = BTreeSet::new();
                for m in &frontier {
                    step(body, m, b, &mut next)?;
                    guard_cap(&next, b)?;
                }
                frontier = next.difference(out).cloned().collect();
                out.extend(next);
                guard_cap(out, b)?;
                if frontier.is_empty() {
                    break;
                }
            }
        }
    }
    guard_cap(out, b)
}

/// Does the quantifier-free postcondition hold in every reachable state?
pub fn check_box(p: &RProg, s: &State, post: &Formula, b: &EnumBudget) -> Result<bool, SimError> {
    for m in reachable_states(p, s, b)? {
        if !holds_qf(&m, post)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Does it hold in at least one reachable state?
pub fn check_diamond(
    p: &RProg,
    s: &State,
    post: &Formula,
    b: &EnumBudget,
) -> Result<bool, SimError> {
    for m in reachable_states(p, s, b)? {
        if holds_qf(&m, post)? {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_formula, parse_model_source, parse_program};
    use num_traits::{One, Zero};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn ball_control() -> RProg {
        RProg::from_program(&parse_program("{?x=0; v:=-c*v} ++ ?x!=0").unwrap())
    }

    fn discrete_budget() -> EnumBudget {
        EnumBudget::closed_form(3, vec![])
    }

    #[test]
    fn control_takes_only_the_enabled_branch() {
        let bounce = State::exact([
            (VarName::new("x"), BigRational::zero()),
            (VarName::new("v"), rat(-2, 1)),
            (VarName::new("c"), BigRational::one()),
        ]);
        let states = reachable_states(&ball_control(), &bounce, &discrete_budget()).unwrap();
        assert_eq!(states.len(), 1);
        let s = states.first().unwrap();
        assert_eq!(s.get(&VarName::new("v")).unwrap().as_exact().unwrap(), rat(2, 1));

        let aloft = State::exact([
            (VarName::new("x"), rat(5, 1)),
            (VarName::new("v"), rat(-2, 1)),
            (VarName::new("c"), BigRational::one()),
        ]);
        let states = reachable_states(&ball_control(), &aloft, &discrete_budget()).unwrap();
        assert_eq!(states.len(), 1);
        assert_eq!(states.first().unwrap(), &aloft);
    }

    #[test]
    fn loops_enumerate_every_iteration_count() {
        let p = RProg::from_program(&parse_program("{x:=x+1}*").unwrap());
        let s = State::exact([(VarName::new("x"), BigRational::zero())]);
        let states = reachable_states(&p, &s, &discrete_budget()).unwrap();
        let xs: Vec<BigRational> = states
            .iter()
            .map(|m| m.get(&VarName::new("x")).unwrap().as_exact().unwrap())
            .collect();
        assert_eq!(xs, vec![rat(0, 1), rat(1, 1), rat(2, 1), rat(3, 1)]);
    }

    #[test]
    fn loop_budget_is_monotone() {
        let p = RProg::from_program(&parse_program("{x:=x+1}*").unwrap());
        let s = State::exact([(VarName::new("x"), BigRational::zero())]);
        let small = reachable_states(&p, &s, &EnumBudget::closed_form(2, vec![])).unwrap();
        let large = reachable_states(&p, &s, &EnumBudget::closed_form(3, vec![])).unwrap();
        assert!(small.is_subset(&large));
    }

    #[test]
    fn ode_stops_at_domain_respecting_grid_times_only() {
        let src = "Constants. g;\nProblem. x=1 & v=0 & g=2 -> [{x'=v, v'=-g & x>=0} @solution(t; x=x+v*t-g/2*t^2, v=v-g*t)] x>=0\n";
        let model = parse_model_source("fall", src).unwrap();
        let p = RProg::from_model(&model).unwrap();
        let s = State::exact([
            (VarName::new("x"), BigRational::one()),
            (VarName::new("v"), BigRational::zero()),
            (VarName::new("g"), rat(2, 1)),
        ]);
        // x reaches 0 at t=1; stopping past that violates the domain
        let b = EnumBudget::closed_form(0, vec![rat(0, 1), rat(1, 2), rat(1, 1), rat(2, 1)]);
        let states = reachable_states(&p, &s, &b).unwrap();
        let xs: Vec<BigRational> = states
            .iter()
            .map(|m| m.get(&VarName::new("x")).unwrap().as_exact().unwrap())
            .collect();
        assert_eq!(xs, vec![rat(0, 1), rat(3, 4), rat(1, 1)]);
        // primes do not leak out of the evolution
        assert!(states.iter().all(|m| m.get(&VarName::primed("x")).is_none()));
    }

    #[test]
    fn box_and_diamond_are_dual_over_choice() {
        let p = RProg::from_program(&parse_program("x:=1 ++ x:=2").unwrap());
        let s = State::exact([(VarName::new("x"), BigRational::zero())]);
        let post = parse_formula("x=1").unwrap();
        let b = discrete_budget();
        assert!(!check_box(&p, &s, &post, &b).unwrap());
        assert!(check_diamond(&p, &s, &post, &b).unwrap());
    }

    #[test]
    fn failed_test_has_no_transitions() {
        let p = RProg::from_program(&parse_program("?false").unwrap());
        let s = State::exact([(VarName::new("x"), BigRational::zero())]);
        assert!(!check_diamond(&p, &s, &Formula::True, &discrete_budget()).unwrap());
        assert!(check_box(&p, &s, &Formula::False, &discrete_budget()).unwrap());
    }

    #[test]
    fn loop_body_preserves_the_energy_invariant_on_the_grid() {
        let src = "Constants. g; c;\nProblem. x=1 -> [{{x'=v, v'=-g & x>=0} @solution(t; x=x+v*t-g/2*t^2, v=v-g*t); {?x=0; v:=-c*v ++ ?x!=0}}*] x>=0\n";
        let model = parse_model_source("ball", src).unwrap();
        let RProg::Loop(body) = RProg::from_model(&model).unwrap() else {
            panic!("expected a loop")
        };
        let s = State::exact([
            (VarName::new("x"), BigRational::one()),
            (VarName::new("v"), BigRational::zero()),
            (VarName::new("g"), rat(2, 1)),
            (VarName::new("H"), BigRational::one()),
            (VarName::new("c"), BigRational::one()),
        ]);
        let b = EnumBudget::closed_form(1, vec![rat(0, 1), rat(1, 2), rat(1, 1)]);
        let j = parse_formula("2*g*x=2*g*H-v^2 & x>=0").unwrap();
        assert!(check_box(&body, &s, &j, &b).unwrap());
    }

    #[test]
    fn state_cap_is_enforced() {
        let p = RProg::from_program(&parse_program("{x:=x+1}*").unwrap());
        let s = State::exact([(VarName::new("x"), BigRational::zero())]);
        let mut b = EnumBudget::closed_form(100, vec![]);
        b.state_cap = 10;
        match reachable_states(&p, &s, &b) {
            Err(SimError::BudgetExceeded { cap: 10 }) => {}
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn sequence_composes_relations() {
        let p = RProg::from_program(&parse_program("{x:=1 ++ x:=2}; {y:=x ++ y:=0}").unwrap());
        let s = State::exact([
            (VarName::new("x"), BigRational::zero()),
            (VarName::new("y"), BigRational::zero()),
        ]);
        let states = reachable_states(&p, &s, &discrete_budget()).unwrap();
        assert_eq!(states.len(), 4);
    }
}
