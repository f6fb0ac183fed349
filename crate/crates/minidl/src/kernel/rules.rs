//! The proof rules of the kernel.
//!
//! Every rule consumes one goal and produces the list of premises that
//! remain to be proved. Rules that rewrite along a program-logic axiom
//! (`step`) accept a target on either side of the sequent because the
//! underlying axioms are equivalences; the derived rules (`loop`, `solve`,
//! `dI`, `M`, `G`, `V`, `K`) only ever strengthen a succedent claim and are
//! therefore restricted to succedent targets.

use crate::arith::poly_normalize;
use crate::parser::model::SolutionAnnotation;
use crate::syntax::ast::{Formula, HybridProgram, Sequent, Term, VarName};
use crate::syntax::diff::{differential, PrimedInDifferential};
use crate::syntax::subst::{
    subst_term, subst_term_many, substitute, substitute_many, CaptureError, Substitution,
};
use crate::syntax::vars::{bound_vars, free_vars, term_vars, VarSet};
use std::fmt;
use thiserror::Error;

use super::normalize::FreshNames;

/// Which half of a sequent a rule targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Ante,
    Succ,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Ante => "ante",
            Side::Succ => "succ",
        })
    }
}

/// A formula position inside a sequent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Target {
    pub side: Side,
    pub index: usize,
}

impl Target {
    pub fn ante(index: usize) -> Self {
        Target { side: Side::Ante, index }
    }

    pub fn succ(index: usize) -> Self {
        Target { side: Side::Succ, index }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleError {
    #[error("no formula at {side} position {index}")]
    BadTarget { side: Side, index: usize },
    #[error("target is not a box or diamond formula")]
    NotABoxFormula,
    #[error("target is not a box around a loop")]
    NotALoop,
    #[error("target is not a box around a differential equation")]
    NotAnOde,
    #[error("boxes around differential equations need the solve or dI rule")]
    OdeRequiresDedicatedRule,
    #[error("the {rule} rule only applies to succedent targets")]
    SuccedentOnly { rule: &'static str },
    #[error("the {rule} rule only applies to antecedent targets")]
    AntecedentOnly { rule: &'static str },
    #[error("target is not a universally quantified formula")]
    NotAForall,
    #[error("target is not an existentially quantified formula")]
    NotAnExists,
    #[error("the loop rule needs an invariant")]
    MissingInvariant,
    #[error("no solution given for {var}")]
    MissingSolution { var: VarName },
    #[error("solution check failed for {var}: residual {residual} is not zero")]
    SolutionCheckFailed { var: VarName, residual: Term },
    #[error("dI needs an equational postcondition")]
    NotAnEquation,
    #[error("dI needs the postcondition equation among the assumptions")]
    EquationNotAssumed,
    #[error("the program writes {} which the postcondition reads", fmt_vars(.vars))]
    SideConditionViolated { vars: VarSet },
    #[error("close cannot decide a sequent that still contains programs")]
    ContainsModality,
    #[error(transparent)]
    Capture(#[from] CaptureError),
    #[error(transparent)]
    Differential(#[from] PrimedInDifferential),
}

fn fmt_vars(vars: &VarSet) -> String {
    vars.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

fn formula_at<'a>(seq: &'a Sequent, t: Target) -> Result<&'a Formula, RuleError> {
    let half = match t.side {
        Side::Ante => &seq.ante,
        Side::Succ => &seq.succ,
    };
    half.get(t.index).ok_or(RuleError::BadTarget { side: t.side, index: t.index })
}

/// The sequent with the target formula replaced.
fn replace_at(seq: &Sequent, t: Target, f: Formula) -> Sequent {
    let mut out = seq.clone();
    match t.side {
        Side::Ante => out.ante[t.index] = f,
        Side::Succ => out.succ[t.index] = f,
    }
    out
}

fn require_succ(t: Target, rule: &'static str) -> Result<(), RuleError> {
    match t.side {
        Side::Succ => Ok(()),
        Side::Ante => Err(RuleError::SuccedentOnly { rule }),
    }
}

/// Rewrites the target along the program axiom matching its shape:
/// assignments substitute, tests become implications, choices become
/// conjunctions of boxes, sequences nest, loops unwind one iteration, and
/// diamonds turn into negated boxes. Differential equations are refused;
/// they have their own rules.
pub fn apply_box_step(seq: &Sequent, t: Target) -> Result<Vec<Sequent>, RuleError> {
    let rewritten = match formula_at(seq, t)? {
        Formula::Box_(prog, post) => {
            let post = (**post).clone();
            match &**prog {
                HybridProgram::Assign(x, e) => substitute(&post, x, e)?,
                HybridProgram::Test(q) => Formula::imply((*q).clone(), post),
                HybridProgram::Choice(a, b) => Formula::and(
                    Formula::boxed((**a).clone(), post.clone()),
                    Formula::boxed((**b).clone(), post),
                ),
                HybridProgram::Seq(a, b) => {
                    Formula::boxed((**a).clone(), Formula::boxed((**b).clone(), post))
                }
                HybridProgram::Loop(body) => Formula::and(
                    post.clone(),
                    Formula::boxed(
                        (**body).clone(),
                        Formula::boxed(HybridProgram::Loop(body.clone()), post),
                    ),
                ),
                HybridProgram::Ode(..) => return Err(RuleError::OdeRequiresDedicatedRule),
            }
        }
        Formula::Diamond(prog, post) => {
            Formula::not(Formula::boxed((**prog).clone(), Formula::not((**post).clone())))
        }
        _ => return Err(RuleError::NotABoxFormula),
    };
    Ok(vec![replace_at(seq, t, rewritten)])
}

/// Loop induction: proves `Γ ⊢ [p*]P, Δ` from the invariant `J` holding
/// initially (`Γ ⊢ J, Δ`), being preserved by the body (`J ⊢ [p]J`), and
/// implying the postcondition (`J ⊢ P`).
pub fn rule_loop(
    seq: &Sequent,
    t: Target,
    inv: Option<&Formula>,
) -> Result<Vec<Sequent>, RuleError> {
    require_succ(t, "loop")?;
    let (body, post) = match formula_at(seq, t)? {
        Formula::Box_(prog, post) => match &**prog {
            HybridProgram::Loop(body) => ((**body).clone(), (**post).clone()),
            _ => return Err(RuleError::NotALoop),
        },
        _ => return Err(RuleError::NotALoop),
    };
    let inv = inv.ok_or(RuleError::MissingInvariant)?.clone();
    let init = replace_at(seq, t, inv.clone());
    let step =
        Sequent::new(vec![inv.clone()], vec![Formula::boxed(body, inv.clone())]);
    let use_case = Sequent::new(vec![inv], vec![post]);
    Ok(vec![init, step, use_case])
}

/// Solves the ODE with the annotated closed form and reduces the box to a
/// quantified arithmetic claim over the duration.
///
/// The solution is not trusted: the rule checks `y(0) = x` and
/// `d/dt y(t) = f(y(t))` by polynomial normalization before using it.
pub fn rule_solve_ode(
    seq: &Sequent,
    t: Target,
    sol: &SolutionAnnotation,
    fresh: &mut FreshNames,
) -> Result<Vec<Sequent>, RuleError> {
    require_succ(t, "solve")?;
    let (flow, dom, post) = match formula_at(seq, t)? {
        Formula::Box_(prog, post) => match &**prog {
            HybridProgram::Ode(flow, dom) => (flow.clone(), dom.clone(), (**post).clone()),
            _ => return Err(RuleError::NotAnOde),
        },
        _ => return Err(RuleError::NotAnOde),
    };
    let time = &sol.time;

    // Admissibility: the annotation must actually solve the flow from the
    // symbolic initial state.
    let mut curves = Substitution::new();
    for (x, _) in &flow {
        let y = sol
            .for_var(x)
            .ok_or_else(|| RuleError::MissingSolution { var: x.clone() })?;
        curves.insert(x.clone(), y.clone());
    }
    for (x, rhs) in &flow {
        let y = &curves[x];
        let at_zero = subst_term(y, time, &Term::int(0)).fold();
        if !crate::arith::poly_zero(&at_zero, &Term::Var(x.clone())) {
            let residual =
                poly_normalize(&Term::minus(at_zero, Term::Var(x.clone())));
            return Err(RuleError::SolutionCheckFailed { var: x.clone(), residual });
        }
        let dy = differential(y)?;
        let mut primes = Substitution::new();
        for v in term_vars(&dy) {
            if v.primed {
                let value = if v == time.to_primed() { Term::int(1) } else { Term::int(0) };
                primes.insert(v, value);
            }
        }
        let dy = subst_term_many(&dy, &primes).fold();
        let expected = subst_term_many(rhs, &curves);
        if !crate::arith::poly_zero(&dy, &expected) {
            let residual = poly_normalize(&Term::minus(dy, expected));
            return Err(RuleError::SolutionCheckFailed { var: x.clone(), residual });
        }
    }

    // Fresh duration variable, substituted through the solution curves.
    let t_var = fresh.fresh(&time.to_string());
    let mut at_t = Substitution::new();
    for (x, y) in &curves {
        at_t.insert(x.clone(), subst_term(y, time, &Term::Var(t_var.clone())));
    }
    let post_t = substitute_many(&post, &at_t)?;

    let body = if dom == Formula::True {
        post_t
    } else {
        // The evolution domain must have held all along the flow, which
        // needs a second quantifier for the intermediate times.
        let s_var = fresh.fresh("s");
        let mut at_s = Substitution::new();
        for (x, y) in &curves {
            at_s.insert(x.clone(), subst_term(y, time, &Term::Var(s_var.clone())));
        }
        let dom_s = substitute_many(&dom, &at_s)?;
        let in_range = Formula::and(
            Formula::Leq(Term::int(0), Term::Var(s_var.clone())),
            Formula::Leq(Term::Var(s_var.clone()), Term::Var(t_var.clone())),
        );
        Formula::imply(
            Formula::forall(s_var, Formula::imply(in_range, dom_s)),
            post_t,
        )
    };
    let quantified = Formula::forall(
        t_var.clone(),
        Formula::imply(Formula::Geq(Term::Var(t_var), Term::int(0)), body),
    );
    Ok(vec![replace_at(seq, t, quantified)])
}

/// Differential induction for equations: `[x'=f & Q](a=b)` reduces to the
/// derivative claim `Q ⊢ (a)' = (b)'` with each primed flow variable
/// replaced by its right-hand side and every other primed variable by zero.
///
/// Sound only when the equation is known to hold initially, so the rule
/// insists on finding it among the antecedents.
pub fn rule_di(seq: &Sequent, t: Target) -> Result<Vec<Sequent>, RuleError> {
    require_succ(t, "dI")?;
    let (flow, dom, post) = match formula_at(seq, t)? {
        Formula::Box_(prog, post) => match &**prog {
            HybridProgram::Ode(flow, dom) => (flow.clone(), dom.clone(), (**post).clone()),
            _ => return Err(RuleError::NotAnOde),
        },
        _ => return Err(RuleError::NotAnOde),
    };
    let Formula::Eq(a, b) = &post else {
        return Err(RuleError::NotAnEquation);
    };
    if !seq.ante.iter().any(|f| f == &post) {
        return Err(RuleError::EquationNotAssumed);
    }
    let da = differential(a)?;
    let db = differential(b)?;
    let mut primes = Substitution::new();
    for (x, rhs) in &flow {
        primes.insert(x.to_primed(), rhs.clone());
    }
    for v in term_vars(&da).into_iter().chain(term_vars(&db)) {
        if v.primed {
            primes.entry(v).or_insert_with(|| Term::int(0));
        }
    }
    let lhs = subst_term_many(&da, &primes).fold();
    let rhs = subst_term_many(&db, &primes).fold();
    Ok(vec![Sequent::new(vec![dom], vec![Formula::Eq(lhs, rhs)])])
}

/// Monotonicity: proves `Γ ⊢ [α]P, Δ` from `Γ ⊢ [α]B, Δ` and `B ⊢ P`.
pub fn rule_m(seq: &Sequent, t: Target, mid: &Formula) -> Result<Vec<Sequent>, RuleError> {
    require_succ(t, "M")?;
    let (prog, post) = expect_box(formula_at(seq, t)?)?;
    let boxed = replace_at(seq, t, Formula::boxed(prog, mid.clone()));
    let implies = Sequent::new(vec![mid.clone()], vec![post]);
    Ok(vec![boxed, implies])
}

/// Gödel generalization: proves `Γ ⊢ [α]P, Δ` from `⊢ P`, dropping the
/// context (which need not survive the program).
pub fn rule_g(seq: &Sequent, t: Target) -> Result<Vec<Sequent>, RuleError> {
    require_succ(t, "G")?;
    let (_, post) = expect_box(formula_at(seq, t)?)?;
    Ok(vec![Sequent::concluding(post)])
}

/// Vacuity: `[α]p` is just `p` when the program writes no variable read by
/// `p`.
pub fn rule_v(seq: &Sequent, t: Target) -> Result<Vec<Sequent>, RuleError> {
    require_succ(t, "V")?;
    let (prog, post) = expect_box(formula_at(seq, t)?)?;
    let clash: VarSet =
        free_vars(&post).intersection(&bound_vars(&prog)).cloned().collect();
    if !clash.is_empty() {
        return Err(RuleError::SideConditionViolated { vars: clash });
    }
    Ok(vec![replace_at(seq, t, post)])
}

/// Modal modus ponens: proves `Γ ⊢ [α]Q, Δ` from `Γ ⊢ [α](P → Q), Δ` and
/// `Γ ⊢ [α]P, Δ`.
pub fn rule_k(seq: &Sequent, t: Target, mid: &Formula) -> Result<Vec<Sequent>, RuleError> {
    require_succ(t, "K")?;
    let (prog, post) = expect_box(formula_at(seq, t)?)?;
    let implication = replace_at(
        seq,
        t,
        Formula::boxed(prog.clone(), Formula::imply(mid.clone(), post)),
    );
    let premise = replace_at(seq, t, Formula::boxed(prog, mid.clone()));
    Ok(vec![implication, premise])
}

/// Existential witness: replaces `∃x P` in the succedent by `P[x ↦ e]`.
pub fn rule_witness(seq: &Sequent, t: Target, e: &Term) -> Result<Vec<Sequent>, RuleError> {
    require_succ(t, "witness")?;
    let Formula::Exists(x, body) = formula_at(seq, t)? else {
        return Err(RuleError::NotAnExists);
    };
    let instantiated = substitute(body, x, e)?;
    Ok(vec![replace_at(seq, t, instantiated)])
}

/// Universal instantiation: adds `P[x ↦ e]` to the antecedent next to
/// `∀x P` (the quantified assumption is kept for further instantiation).
pub fn rule_inst(seq: &Sequent, t: Target, e: &Term) -> Result<Vec<Sequent>, RuleError> {
    match t.side {
        Side::Ante => {}
        Side::Succ => return Err(RuleError::AntecedentOnly { rule: "inst" }),
    }
    let Formula::Forall(x, body) = formula_at(seq, t)? else {
        return Err(RuleError::NotAForall);
    };
    let instantiated = substitute(body, x, e)?;
    let mut out = seq.clone();
    out.ante.push(instantiated);
    Ok(vec![out])
}

fn expect_box(f: &Formula) -> Result<(HybridProgram, Formula), RuleError> {
    match f {
        Formula::Box_(prog, post) => Ok(((**prog).clone(), (**post).clone())),
        _ => Err(RuleError::NotABoxFormula),
    }
}

/// True if the formula mentions any box or diamond.
pub fn contains_modality(f: &Formula) -> bool {
    match f {
        Formula::True
        | Formula::False
        | Formula::Eq(..)
        | Formula::Geq(..)
        | Formula::Gt(..)
        | Formula::Leq(..)
        | Formula::Lt(..)
        | Formula::Neq(..) => false,
        Formula::Not(g) => contains_modality(g),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imply(a, b) | Formula::Equiv(a, b) => {
            contains_modality(a) || contains_modality(b)
        }
        Formula::Forall(_, g) | Formula::Exists(_, g) => contains_modality(g),
        Formula::Box_(..) | Formula::Diamond(..) => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_formula, parse_sequent, parse_term};

    fn seq(src: &str) -> Sequent {
        parse_sequent(src).unwrap()
    }

    fn strings(goals: &[Sequent]) -> Vec<String> {
        goals.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn assignment_substitutes() {
        let goals = apply_box_step(&seq("|- [v := -c*v] v^2 <= 9"), Target::succ(0)).unwrap();
        assert_eq!(strings(&goals), vec!["|- (-c*v)^2<=9"]);
    }

    #[test]
    fn test_becomes_implication() {
        let goals = apply_box_step(&seq("|- [?x=0] v=1"), Target::succ(0)).unwrap();
        assert_eq!(strings(&goals), vec!["|- x=0 -> v=1"]);
    }

    #[test]
    fn choice_becomes_conjunction() {
        let goals = apply_box_step(&seq("|- [x:=1 ++ x:=2] x>=1"), Target::succ(0)).unwrap();
        assert_eq!(strings(&goals), vec!["|- [x := 1]x>=1 & [x := 2]x>=1"]);
    }

    #[test]
    fn sequencing_nests() {
        let goals = apply_box_step(&seq("|- [x:=1; v:=2] x<=v"), Target::succ(0)).unwrap();
        assert_eq!(strings(&goals), vec!["|- [x := 1][v := 2]x<=v"]);
    }

    #[test]
    fn loops_unwind_one_round() {
        let goals = apply_box_step(&seq("|- [{x:=x+1}*] x>=0"), Target::succ(0)).unwrap();
        assert_eq!(strings(&goals), vec!["|- x>=0 & [x := x+1][{x := x+1}*]x>=0"]);
    }

    #[test]
    fn diamonds_dualize() {
        let goals = apply_box_step(&seq("|- <x:=1> x>=0"), Target::succ(0)).unwrap();
        assert_eq!(strings(&goals), vec!["|- ![x := 1]!x>=0"]);
    }

    #[test]
    fn step_rewrites_antecedent_boxes_too() {
        let goals = apply_box_step(&seq("[x:=1] x>=0 |- v=0"), Target::ante(0)).unwrap();
        assert_eq!(strings(&goals), vec!["1>=0 |- v=0"]);
    }

    #[test]
    fn odes_are_refused_by_step() {
        let err = apply_box_step(&seq("|- [{x'=v}] x>=0"), Target::succ(0)).unwrap_err();
        assert_eq!(err, RuleError::OdeRequiresDedicatedRule);
    }

    #[test]
    fn step_needs_a_modality() {
        let err = apply_box_step(&seq("|- x>=0"), Target::succ(0)).unwrap_err();
        assert_eq!(err, RuleError::NotABoxFormula);
        let err = apply_box_step(&seq("|- x>=0"), Target::succ(3)).unwrap_err();
        assert_eq!(err, RuleError::BadTarget { side: Side::Succ, index: 3 });
    }

    #[test]
    fn assignment_reports_capture() {
        // The postcondition quantifies over the substituted payload.
        let goals = apply_box_step(
            &seq("|- [x := y] \\forall y y >= x"),
            Target::succ(0),
        );
        assert!(matches!(goals, Err(RuleError::Capture(_))));
    }

    #[test]
    fn loop_rule_produces_three_premises() {
        let inv = parse_formula("x>=1").unwrap();
        let goals =
            rule_loop(&seq("x=2 |- [{x:=x+1}*] x>=0, v=9"), Target::succ(0), Some(&inv))
                .unwrap();
        assert_eq!(
            strings(&goals),
            vec!["x=2 |- x>=1, v=9", "x>=1 |- [x := x+1]x>=1", "x>=1 |- x>=0"]
        );
    }

    #[test]
    fn loop_rule_requires_a_loop() {
        let inv = parse_formula("x>=1").unwrap();
        let err = rule_loop(&seq("|- [x:=1] x>=0"), Target::succ(0), Some(&inv)).unwrap_err();
        assert_eq!(err, RuleError::NotALoop);
    }

    #[test]
    fn loop_rule_requires_an_invariant() {
        let err = rule_loop(&seq("|- [{x:=x+1}*] x>=0"), Target::succ(0), None).unwrap_err();
        assert_eq!(err, RuleError::MissingInvariant);
    }

    #[test]
    fn loop_rule_is_succedent_only() {
        let inv = parse_formula("x>=1").unwrap();
        let err =
            rule_loop(&seq("[{x:=x+1}*] x>=0 |- v=0"), Target::ante(0), Some(&inv)).unwrap_err();
        assert_eq!(err, RuleError::SuccedentOnly { rule: "loop" });
    }

    fn annotation(time: &str, pairs: &[(&str, &str)]) -> SolutionAnnotation {
        SolutionAnnotation {
            time: VarName::new(time),
            per_var: pairs
                .iter()
                .map(|(x, t)| (VarName::new(*x), parse_term(t).unwrap()))
                .collect(),
        }
    }

    #[test]
    fn solve_reduces_to_quantified_arithmetic() {
        let sol = annotation("t", &[("x", "x + 2*t")]);
        let mut fresh = FreshNames::new();
        let goals =
            rule_solve_ode(&seq("|- [{x'=2}] x>=1"), Target::succ(0), &sol, &mut fresh).unwrap();
        assert_eq!(strings(&goals), vec!["|- \\forall t (t>=0 -> x+2*t>=1)"]);
    }

    #[test]
    fn solve_threads_the_evolution_domain() {
        let sol = annotation("t", &[("x", "x + v*t - g/2*t^2"), ("v", "v - g*t")]);
        let mut fresh = FreshNames::new();
        let goals = rule_solve_ode(
            &seq("v=0 |- [{x'=v, v'=-g & x>=0}] x>=0"),
            Target::succ(0),
            &sol,
            &mut fresh,
        )
        .unwrap();
        assert_eq!(goals.len(), 1);
        let rendered = goals[0].to_string();
        assert!(rendered.starts_with("v=0 |- \\forall t (t>=0 -> "), "got {rendered}");
        assert!(rendered.contains("\\forall s (0<=s & s<=t -> "), "got {rendered}");
    }

    #[test]
    fn solve_checks_the_derivative() {
        let sol = annotation("t", &[("x", "x + 3*t")]);
        let mut fresh = FreshNames::new();
        let err = rule_solve_ode(&seq("|- [{x'=2}] x>=1"), Target::succ(0), &sol, &mut fresh)
            .unwrap_err();
        match err {
            RuleError::SolutionCheckFailed { var, residual } => {
                assert_eq!(var, VarName::new("x"));
                assert_eq!(residual.to_string(), "1");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn solve_checks_the_initial_value() {
        let sol = annotation("t", &[("x", "2*t")]);
        let mut fresh = FreshNames::new();
        let err = rule_solve_ode(&seq("|- [{x'=2}] x>=1"), Target::succ(0), &sol, &mut fresh)
            .unwrap_err();
        assert!(matches!(err, RuleError::SolutionCheckFailed { .. }));
    }

    #[test]
    fn solve_needs_a_curve_for_every_flow_variable() {
        let sol = annotation("t", &[("x", "x + v*t")]);
        let mut fresh = FreshNames::new();
        let err = rule_solve_ode(
            &seq("|- [{x'=v, v'=-g}] x>=0"),
            Target::succ(0),
            &sol,
            &mut fresh,
        )
        .unwrap_err();
        assert_eq!(err, RuleError::MissingSolution { var: VarName::new("v") });
    }

    #[test]
    fn solve_renames_a_clashing_duration_variable() {
        let sol = annotation("t", &[("x", "x + 2*t")]);
        let mut fresh = FreshNames::new();
        fresh.note_sequent(&seq("t=1 |- [{x'=2}] x>=t"));
        let goals = rule_solve_ode(
            &seq("t=1 |- [{x'=2}] x>=t"),
            Target::succ(0),
            &sol,
            &mut fresh,
        )
        .unwrap();
        assert_eq!(strings(&goals), vec!["t=1 |- \\forall t_1 (t_1>=0 -> x+2*t_1>=t)"]);
    }

    #[test]
    fn di_reduces_an_equation_to_its_differential() {
        let goals = rule_di(
            &seq("2*g*x=2*g*H-v^2 |- [{x'=v, v'=-g & x>=0}] 2*g*x=2*g*H-v^2"),
            Target::succ(0),
        )
        .unwrap();
        assert_eq!(strings(&goals), vec!["x>=0 |- 2*g*v=-(2*v*(-g))"]);
    }

    #[test]
    fn di_requires_an_equation() {
        let err = rule_di(&seq("x>=0 |- [{x'=v}] x>=0"), Target::succ(0)).unwrap_err();
        assert_eq!(err, RuleError::NotAnEquation);
    }

    #[test]
    fn di_requires_the_equation_to_be_assumed() {
        let err = rule_di(&seq("x=1 |- [{x'=v}] x=v"), Target::succ(0)).unwrap_err();
        assert_eq!(err, RuleError::EquationNotAssumed);
    }

    #[test]
    fn di_requires_an_ode() {
        let err = rule_di(&seq("x=v |- [x:=1] x=v"), Target::succ(0)).unwrap_err();
        assert_eq!(err, RuleError::NotAnOde);
    }

    #[test]
    fn monotonicity_splits_into_box_and_implication() {
        let mid = parse_formula("x=1").unwrap();
        let goals = rule_m(&seq("v=0 |- [x:=1] x>=0, v=1"), Target::succ(0), &mid).unwrap();
        assert_eq!(strings(&goals), vec!["v=0 |- [x := 1]x=1, v=1", "x=1 |- x>=0"]);
    }

    #[test]
    fn generalization_drops_the_context() {
        let goals = rule_g(&seq("v=0 |- [x:=1] x*x>=0"), Target::succ(0)).unwrap();
        assert_eq!(strings(&goals), vec!["|- x*x>=0"]);
    }

    #[test]
    fn vacuity_needs_disjoint_writes() {
        let goals = rule_v(&seq("g>0 |- [x:=1] g>0"), Target::succ(0)).unwrap();
        assert_eq!(strings(&goals), vec!["g>0 |- g>0"]);
        let err = rule_v(&seq("|- [x:=1] x>0"), Target::succ(0)).unwrap_err();
        assert_eq!(
            err,
            RuleError::SideConditionViolated { vars: [VarName::new("x")].into_iter().collect() }
        );
    }

    #[test]
    fn modal_modus_ponens_produces_two_boxes() {
        let mid = parse_formula("x>=1").unwrap();
        let goals = rule_k(&seq("v=0 |- [x:=1] x>=0"), Target::succ(0), &mid).unwrap();
        assert_eq!(
            strings(&goals),
            vec!["v=0 |- [x := 1](x>=1 -> x>=0)", "v=0 |- [x := 1]x>=1"]
        );
    }

    #[test]
    fn witness_replaces_the_existential() {
        let e = parse_term("x+1").unwrap();
        let goals = rule_witness(&seq("|- \\exists y y>x"), Target::succ(0), &e).unwrap();
        assert_eq!(strings(&goals), vec!["|- x+1>x"]);
        let err = rule_witness(&seq("|- x>0"), Target::succ(0), &e).unwrap_err();
        assert_eq!(err, RuleError::NotAnExists);
    }

    #[test]
    fn instantiation_keeps_the_universal_assumption() {
        let e = parse_term("t").unwrap();
        let goals =
            rule_inst(&seq("\\forall s s>=0 |- t>=0"), Target::ante(0), &e).unwrap();
        assert_eq!(strings(&goals), vec!["\\forall s s>=0, t>=0 |- t>=0"]);
        let err = rule_inst(&seq("|- \\forall s s>=0"), Target::succ(0), &e).unwrap_err();
        assert_eq!(err, RuleError::AntecedentOnly { rule: "inst" });
    }
}
