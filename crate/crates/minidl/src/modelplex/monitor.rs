//! Monitor synthesis: quantifier-free formulas relating one control-loop
//! iteration's prior state to its posterior state.
//!
//! A monitor is built in three stages. Symbolic execution turns the loop
//! body into finitely many paths, each an update plus a path condition.
//! Every path becomes a relation by equating each posterior variable
//! (`x_post`) with its updated value. Finally the flow durations introduced
//! by ODEs are eliminated: some posterior equation is linear in the
//! duration `t` with a coefficient whose sign follows from the model's
//! assumptions, so `t` can be solved for and substituted everywhere, with
//! denominators cleared against the sign information. The controller
//! monitor runs this pipeline on the discrete fragment only; the model
//! monitor covers the whole body.
//!
//! Elimination keeps formulas division-free by multiplying every affected
//! comparison through by a positive power of the denominator, then tidies
//! the result: rational coefficients are made primitive and any common
//! monomial factor with an assumption-determined sign is divided out (for
//! the bouncing ball this turns `g^2*x_post - g^2*x - (g/2)*v^2 + ...` into
//! the familiar energy identity scaled by 2).

use super::symexec::{symexec, SymExecError, SymState};
use crate::arith::poly::Monomial;
use crate::arith::{decide_sequent, ArithConfig, Poly, Verdict};
use crate::kernel::FreshNames;
use crate::parser::ModelFile;
use crate::sim::{holds_qf, EvalError, OdeSpec, RProg, State};
use crate::syntax::ast::{Formula, Sequent, Term, VarName};
use crate::syntax::diff::differential;
use crate::syntax::subst::{subst_term, subst_term_many, substitute_many, Substitution};
use crate::syntax::vars::{free_vars, term_vars, VarSet};
use num_rational::BigRational;
use num_traits::{One, Signed};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitorKind {
    /// Relates states across the discrete controller only.
    Controller,
    /// Relates states across one full iteration of the loop body.
    Model,
}

impl fmt::Display for MonitorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MonitorKind::Controller => "controller",
            MonitorKind::Model => "model",
        })
    }
}

/// A synthesized monitor: quantifier-free, program-free, division-free,
/// over prior variables and `_post`-suffixed posterior variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorFormula {
    pub kind: MonitorKind,
    pub formula: Formula,
    /// Soundness caveats, e.g. when endpoint domain checks could miss an
    /// interior violation.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonitorError {
    #[error(transparent)]
    Exec(#[from] SymExecError),
    #[error("no posterior equation is linear in the flow duration `{0}`")]
    NotLinearInTime(VarName),
    #[error("cannot fix the sign of the duration coefficient `{0}` from the model's assumptions")]
    AmbiguousCoefficientSign(Term),
    #[error("the model's problem is not of the shape `A -> [{{body}}*]B`")]
    NoLoopToMonitor,
}

/// The posterior-state name of a variable.
pub fn post_name(x: &VarName) -> VarName {
    VarName { base: format!("{}_post", x.base), primed: x.primed }
}

/// Variables a program can write: assignment targets and flow variables.
pub fn written_vars(p: &RProg) -> VarSet {
    let mut out = VarSet::new();
    collect_written(p, &mut out);
    out
}

fn collect_written(p: &RProg, out: &mut VarSet) {
    match p {
        RProg::Assign(x, _) => {
            out.insert(x.clone());
        }
        RProg::Test(_) => {}
        RProg::Ode(spec) => out.extend(spec.flow.iter().map(|(y, _)| y.clone())),
        RProg::Choice(a, b) | RProg::Seq(a, b) => {
            collect_written(a, out);
            collect_written(b, out);
        }
        RProg::Loop(body) => collect_written(body, out),
    }
}

/// One path as a relation between prior and posterior variables: the path
/// condition followed by `x_post = value` for every monitored variable.
fn relation(path: &SymState, all_vars: &VarSet) -> Vec<Formula> {
    let mut rel = path.path_condition.clone();
    rel.extend(
        all_vars.iter().map(|x| Formula::Eq(Term::Var(post_name(x)), path.value_of(x))),
    );
    rel
}

enum Sign {
    Positive,
    Negative,
}

/// The sign of `p` when it follows from the assumptions, decided by the
/// internal arithmetic only.
fn sign_under(p: &Poly, assumptions: &[Formula]) -> Option<Sign> {
    if let Some(c) = p.as_constant() {
        return if c.is_positive() {
            Some(Sign::Positive)
        } else if c.is_negative() {
            Some(Sign::Negative)
        } else {
            None
        };
    }
    let cfg = ArithConfig { smt: None };
    let proves = |goal: Formula| {
        matches!(
            decide_sequent(&Sequent::new(assumptions.to_vec(), vec![goal]), &cfg),
            Ok(Verdict::Valid(_))
        )
    };
    if proves(Formula::Gt(p.to_term(), Term::int(0))) {
        Some(Sign::Positive)
    } else if proves(Formula::Lt(p.to_term(), Term::int(0))) {
        Some(Sign::Negative)
    } else {
        None
    }
}

/// Eliminates the flow duration `t` from a relation.
///
/// Picks the first equation linear in `t` whose `t`-coefficient has a sign
/// determined by the assumptions, solves it as `t = num/den` with `den > 0`,
/// and substitutes into every other conjunct, clearing denominators (sound
/// in either direction because `den > 0`). The defining equation itself is
/// consumed; `t >= 0` in the relation turns into the sign condition
/// `num >= 0`.
pub fn eliminate_time(
    rel: &[Formula],
    t: &VarName,
    assumptions: &[Formula],
) -> Result<Vec<Formula>, MonitorError> {
    let mut defining = None;
    let mut ambiguous = None;
    for (i, f) in rel.iter().enumerate() {
        let Formula::Eq(l, r) = f else { continue };
        let p = Poly::from_term(&Term::minus(l.clone(), r.clone()));
        if p.degree_in(t) != 1 {
            continue;
        }
        let coeffs = p.coeffs_in(t);
        let (b, a) = (&coeffs[0], &coeffs[1]);
        match sign_under(a, assumptions) {
            Some(Sign::Positive) => {
                defining = Some((i, b.scale(&-BigRational::one()), a.clone()));
            }
            Some(Sign::Negative) => {
                defining = Some((i, b.clone(), a.scale(&-BigRational::one())));
            }
            None => {
                ambiguous.get_or_insert_with(|| a.to_term());
                continue;
            }
        }
        break;
    }
    let Some((defining_ix, num, den)) = defining else {
        return Err(match ambiguous {
            Some(coefficient) => MonitorError::AmbiguousCoefficientSign(coefficient),
            None => MonitorError::NotLinearInTime(t.clone()),
        });
    };

    let mut out = Vec::new();
    for (i, f) in rel.iter().enumerate() {
        if i == defining_ix {
            continue;
        }
        out.push(clear_duration(f, t, &num, &den, assumptions));
    }
    Ok(out)
}

/// Substitutes `t = num/den` (`den > 0`) into a quantifier-free formula,
/// clearing denominators comparison by comparison.
fn clear_duration(
    f: &Formula,
    t: &VarName,
    num: &Poly,
    den: &Poly,
    assumptions: &[Formula],
) -> Formula {
    if !free_vars(f).contains(t) {
        return f.clone();
    }
    let atom = |l: &Term, r: &Term, flip: bool| {
        let p = Poly::from_term(&Term::minus(l.clone(), r.clone()));
        let p = if flip { p.scale(&-BigRational::one()) } else { p };
        clear_poly(&p, t, num, den)
    };
    match f {
        Formula::Eq(l, r) => tidy_atom(Cmp::Eq, atom(l, r, false), assumptions),
        Formula::Neq(l, r) => tidy_atom(Cmp::Neq, atom(l, r, false), assumptions),
        Formula::Geq(l, r) => tidy_atom(Cmp::Geq, atom(l, r, false), assumptions),
        Formula::Gt(l, r) => tidy_atom(Cmp::Gt, atom(l, r, false), assumptions),
        Formula::Leq(l, r) => tidy_atom(Cmp::Geq, atom(l, r, true), assumptions),
        Formula::Lt(l, r) => tidy_atom(Cmp::Gt, atom(l, r, true), assumptions),
        Formula::Not(g) => Formula::not(clear_duration(g, t, num, den, assumptions)),
        Formula::And(a, b) => Formula::and(
            clear_duration(a, t, num, den, assumptions),
            clear_duration(b, t, num, den, assumptions),
        ),
        Formula::Or(a, b) => Formula::or(
            clear_duration(a, t, num, den, assumptions),
            clear_duration(b, t, num, den, assumptions),
        ),
        Formula::Imply(a, b) => Formula::imply(
            clear_duration(a, t, num, den, assumptions),
            clear_duration(b, t, num, den, assumptions),
        ),
        Formula::Equiv(a, b) => Formula::equiv(
            clear_duration(a, t, num, den, assumptions),
            clear_duration(b, t, num, den, assumptions),
        ),
        // Quantifier-free and program-free by the symexec contract.
        other => other.clone(),
    }
}

/// `p` with `t := num/den` and the denominator cleared: multiplying by
/// `den^deg` turns `sum p_k t^k` into `sum p_k num^k den^(deg-k)`.
fn clear_poly(p: &Poly, t: &VarName, num: &Poly, den: &Poly) -> Poly {
    let coeffs = p.coeffs_in(t);
    let deg = coeffs.len() - 1;
    let mut out = Poly::zero();
    for (k, c) in coeffs.iter().enumerate() {
        out = &out + &(&(c * &num.pow(k as u32)) * &den.pow((deg - k) as u32));
    }
    out
}

#[derive(Clone, Copy)]
enum Cmp {
    Eq,
    Neq,
    Geq,
    Gt,
}

/// Canonicalizes a cleared atom `p ~ 0`: divides out the rational content
/// and any common monomial factor whose sign the assumptions determine
/// (flipping the comparison when that sign is negative and the power odd),
/// and renders the positive part against the negated negative part, so
/// `c_post - c >= 0` comes out as `c_post>=c`.
fn tidy_atom(cmp: Cmp, p: Poly, assumptions: &[Formula]) -> Formula {
    let sign_free = matches!(cmp, Cmp::Eq | Cmp::Neq);
    let mut p = p;
    let content = p.content();
    if content.is_positive() {
        let inv = BigRational::one() / content;
        p = p.scale(&inv);
    }
    let mut divisor = Monomial::new();
    let mut flip = false;
    for (x, e) in p.common_monomial() {
        match sign_under(&Poly::var(x.clone()), assumptions) {
            Some(Sign::Positive) => {
                divisor.insert(x, e);
            }
            Some(Sign::Negative) => {
                divisor.insert(x, e);
                flip ^= e % 2 == 1;
            }
            None => {}
        }
    }
    if !divisor.is_empty() {
        p = p.div_monomial(&divisor);
    }
    if flip && !sign_free {
        // A negative factor was divided out of an inequality: restore the
        // direction by negating the polynomial instead.
        p = p.scale(&-BigRational::one());
    }
    if sign_free {
        // Equations may be negated freely; put the largest monomial on the
        // positive side.
        if let Some((_, c)) = p.terms().iter().next_back() {
            if c.is_negative() {
                p = p.scale(&-BigRational::one());
            }
        }
    }
    let mut pos = BTreeMap::new();
    let mut neg = BTreeMap::new();
    for (m, c) in p.terms() {
        if c.is_positive() {
            pos.insert(m.clone(), c.clone());
        } else {
            neg.insert(m.clone(), -c.clone());
        }
    }
    let (l, r) = (Poly::from_map(pos), Poly::from_map(neg));
    let mirror = l.is_zero() && !r.is_zero();
    let (l, r) = (l.to_term(), r.to_term());
    let atom = match (cmp, mirror) {
        (Cmp::Eq, _) => Formula::Eq(l, r),
        (Cmp::Neq, _) => Formula::Neq(l, r),
        // `0 >= q` reads better as `q <= 0`.
        (Cmp::Geq, false) => Formula::Geq(l, r),
        (Cmp::Geq, true) => Formula::Leq(r, l),
        (Cmp::Gt, false) => Formula::Gt(l, r),
        (Cmp::Gt, true) => Formula::Lt(r, l),
    };
    atom.fold()
}

/// Per-path relations with durations eliminated and conjuncts tidied.
fn path_relations(
    p: &RProg,
    all_vars: &VarSet,
    assumptions: &[Formula],
    fresh: &mut FreshNames,
) -> Result<Vec<Vec<Formula>>, MonitorError> {
    symexec(p, fresh)?
        .into_iter()
        .map(|path| {
            let mut rel = relation(&path, all_vars);
            for t in &path.durations {
                rel = eliminate_time(&rel, t, assumptions)?;
            }
            Ok(tidy(rel))
        })
        .collect()
}

/// Folds conjuncts, drops duplicates and truths; `false` absorbs the path.
fn tidy(rel: Vec<Formula>) -> Vec<Formula> {
    let mut out = Vec::new();
    for f in rel {
        let f = f.fold();
        if f == Formula::False {
            return vec![Formula::False];
        }
        if f == Formula::True || out.contains(&f) {
            continue;
        }
        out.push(f);
    }
    out
}

/// Conjuncts shared by every path float out of the disjunction.
fn assemble(paths: Vec<Vec<Formula>>) -> Formula {
    let common: Vec<Formula> = match paths.first() {
        None => return Formula::False,
        Some(first) => {
            first.iter().filter(|f| paths.iter().all(|p| p.contains(f))).cloned().collect()
        }
    };
    let residuals: Vec<Formula> = paths
        .into_iter()
        .map(|p| Formula::conj(p.into_iter().filter(|f| !common.contains(f)).collect()))
        .collect();
    let disj = residuals
        .into_iter()
        .reduce(|a, b| Formula::or(a, b))
        .unwrap_or(Formula::True);
    let mut conjuncts = common;
    if disj != Formula::True {
        conjuncts.push(disj);
    }
    Formula::conj(conjuncts).fold()
}

/// Monitor for a discrete controller fragment: accepts exactly the state
/// pairs some controller path can produce.
pub fn synth_controller_monitor(
    ctrl: &RProg,
    all_vars: &VarSet,
    assumptions: &[Formula],
    fresh: &mut FreshNames,
) -> Result<MonitorFormula, MonitorError> {
    let formula = assemble(path_relations(ctrl, all_vars, assumptions, fresh)?);
    Ok(MonitorFormula { kind: MonitorKind::Controller, formula, warnings: Vec::new() })
}

/// Monitor for one full iteration of the loop body.
pub fn synth_model_monitor(
    body: &RProg,
    all_vars: &VarSet,
    assumptions: &[Formula],
    fresh: &mut FreshNames,
) -> Result<MonitorFormula, MonitorError> {
    let formula = assemble(path_relations(body, all_vars, assumptions, fresh)?);
    let warnings = endpoint_warnings(body, assumptions);
    Ok(MonitorFormula { kind: MonitorKind::Model, formula, warnings })
}

/// Warns when checking an evolution domain only at the flow's endpoints
/// could miss an interior violation. A lower bound on a flow variable is
/// safe when the variable's second time-derivative is a nonpositive
/// constant (concavity), an upper bound when it is nonnegative (convexity);
/// anything else earns a warning.
fn endpoint_warnings(p: &RProg, assumptions: &[Formula]) -> Vec<String> {
    let mut specs = Vec::new();
    collect_odes(p, &mut specs);
    let mut warnings = Vec::new();
    for spec in specs {
        for conjunct in spec.domain.conjuncts() {
            if *conjunct == Formula::True {
                continue;
            }
            if !endpoints_suffice(conjunct, spec, assumptions) {
                let w = format!(
                    "domain constraint `{conjunct}` is only checked at the endpoints of \
                     `{{{}}}`; interior violations would go unnoticed",
                    spec.flow
                        .iter()
                        .map(|(y, e)| format!("{y}'={e}"))
                        .collect::<Vec<_>>()
                        .join(", ")
                );
                if !warnings.contains(&w) {
                    warnings.push(w);
                }
            }
        }
    }
    warnings
}

fn collect_odes<'a>(p: &'a RProg, out: &mut Vec<&'a OdeSpec>) {
    match p {
        RProg::Ode(spec) => out.push(spec),
        RProg::Choice(a, b) | RProg::Seq(a, b) => {
            collect_odes(a, out);
            collect_odes(b, out);
        }
        RProg::Loop(body) => collect_odes(body, out),
        RProg::Assign(..) | RProg::Test(_) => {}
    }
}

fn endpoints_suffice(conjunct: &Formula, spec: &OdeSpec, assumptions: &[Formula]) -> bool {
    let flow_vars: VarSet = spec.flow.iter().map(|(y, _)| y.clone()).collect();
    // Recognize a one-sided bound on a single flow variable.
    let bound = |l: &Term, r: &Term, lower_on_left: bool| -> Option<(VarName, bool)> {
        match (l, r) {
            (Term::Var(y), e) if flow_vars.contains(y) && term_vars(e).is_disjoint(&flow_vars) => {
                Some((y.clone(), lower_on_left))
            }
            (e, Term::Var(y)) if flow_vars.contains(y) && term_vars(e).is_disjoint(&flow_vars) => {
                Some((y.clone(), !lower_on_left))
            }
            _ => None,
        }
    };
    let (y, lower) = match conjunct {
        Formula::Geq(l, r) | Formula::Gt(l, r) => match bound(l, r, true) {
            Some(b) => b,
            None => return false,
        },
        Formula::Leq(l, r) | Formula::Lt(l, r) => match bound(l, r, false) {
            Some(b) => b,
            None => return false,
        },
        _ => return false,
    };
    let Some(second) = second_derivative(spec, &y) else { return false };
    if !term_vars(&second).is_disjoint(&flow_vars) {
        return false;
    }
    let goal = if lower {
        Formula::Leq(second, Term::int(0))
    } else {
        Formula::Geq(second, Term::int(0))
    };
    matches!(
        decide_sequent(&Sequent::new(assumptions.to_vec(), vec![goal]), &ArithConfig { smt: None }),
        Ok(Verdict::Valid(_))
    )
}

/// d²y/dt² along the flow: differentiate y's right-hand side and replace
/// each primed variable by its flow equation (zero off the flow).
fn second_derivative(spec: &OdeSpec, y: &VarName) -> Option<Term> {
    let rhs = spec.flow.iter().find(|(z, _)| z == y).map(|(_, e)| e)?;
    let mut d = differential(rhs).ok()?;
    for (z, e) in &spec.flow {
        d = subst_term(&d, &VarName { base: z.base.clone(), primed: true }, e);
    }
    for v in term_vars(&d) {
        if v.primed {
            d = subst_term(&d, &v, &Term::int(0));
        }
    }
    Some(d.fold())
}

/// The loop body of a model whose problem has the shape `A -> [{body}*]B`,
/// with solution annotations attached.
pub fn loop_body(model: &ModelFile) -> Result<RProg, MonitorError> {
    match RProg::from_model(model) {
        Some(RProg::Loop(body)) => Ok(*body),
        _ => Err(MonitorError::NoLoopToMonitor),
    }
}

/// Assumption conjuncts that constrain only unwritten variables, so they
/// hold in every reachable state.
pub fn model_assumptions(model: &ModelFile, body: &RProg) -> Vec<Formula> {
    let written = written_vars(body);
    let Some((assume, _, _)) = model.implication_parts() else { return Vec::new() };
    assume
        .conjuncts()
        .into_iter()
        .filter(|f| free_vars(f).is_disjoint(&written))
        .cloned()
        .collect()
}

/// Literal values for declared constants pinned by assumption equations
/// like `1 = c`.
fn pinned_constants(model: &ModelFile, assumptions: &[Formula]) -> Substitution {
    let rational = |t: &Term| -> Option<BigRational> {
        match t {
            Term::Lit(q) => Some(q.clone()),
            Term::Neg(inner) => match inner.as_ref() {
                Term::Lit(q) => Some(-q.clone()),
                _ => None,
            },
            _ => None,
        }
    };
    let mut map = Substitution::new();
    for (name, binding) in &model.constants {
        if binding.is_some() {
            continue; // already substituted at parse time
        }
        let k = VarName::new(name.clone());
        for f in assumptions {
            let value = match f {
                Formula::Eq(l, r) if *l == Term::Var(k.clone()) => rational(r),
                Formula::Eq(l, r) if *r == Term::Var(k.clone()) => rational(l),
                _ => None,
            };
            if let Some(q) = value {
                map.insert(k.clone(), Term::from_rational(q));
                break;
            }
        }
    }
    map
}

fn subst_rprog(p: &RProg, map: &Substitution) -> RProg {
    let formula = |f: &Formula| substitute_many(f, map).expect("ground substitution").fold();
    match p {
        RProg::Assign(x, e) => RProg::Assign(x.clone(), subst_term_many(e, map).fold()),
        RProg::Test(q) => RProg::Test(formula(q)),
        RProg::Ode(spec) => {
            let mut spec = spec.clone();
            for (_, e) in &mut spec.flow {
                *e = subst_term_many(e, map).fold();
            }
            spec.domain = formula(&spec.domain);
            if let Some(sol) = &mut spec.solution {
                for (_, e) in &mut sol.per_var {
                    *e = subst_term_many(e, map).fold();
                }
            }
            RProg::Ode(spec)
        }
        RProg::Choice(a, b) => RProg::choice(subst_rprog(a, map), subst_rprog(b, map)),
        RProg::Seq(a, b) => RProg::seq(subst_rprog(a, map), subst_rprog(b, map)),
        RProg::Loop(body) => RProg::Loop(Box::new(subst_rprog(body, map))),
    }
}

/// The top-level sequence with every ODE-containing element dropped.
fn discrete_fragment(body: &RProg) -> RProg {
    fn chain<'a>(p: &'a RProg, out: &mut Vec<&'a RProg>) {
        match p {
            RProg::Seq(a, b) => {
                chain(a, out);
                chain(b, out);
            }
            other => out.push(other),
        }
    }
    fn has_ode(p: &RProg) -> bool {
        let mut specs = Vec::new();
        collect_odes(p, &mut specs);
        !specs.is_empty()
    }
    let mut elements = Vec::new();
    chain(body, &mut elements);
    elements
        .into_iter()
        .filter(|e| !has_ode(e))
        .cloned()
        .reduce(RProg::seq)
        .unwrap_or(RProg::Test(Formula::True))
}

fn note_program(p: &RProg, fresh: &mut FreshNames) {
    match p {
        RProg::Assign(x, e) => {
            fresh.reserve(x);
            fresh.note_term(e);
        }
        RProg::Test(q) => fresh.note_formula(q),
        RProg::Ode(spec) => {
            for (y, e) in &spec.flow {
                fresh.reserve(y);
                fresh.note_term(e);
            }
            fresh.note_formula(&spec.domain);
        }
        RProg::Choice(a, b) | RProg::Seq(a, b) => {
            note_program(a, fresh);
            note_program(b, fresh);
        }
        RProg::Loop(body) => note_program(body, fresh),
    }
}

/// Synthesizes a monitor straight from a model file.
pub fn monitor_for_model(
    model: &ModelFile,
    kind: MonitorKind,
) -> Result<MonitorFormula, MonitorError> {
    let body = loop_body(model)?;
    let assumptions = model_assumptions(model, &body);
    let pinned = pinned_constants(model, &assumptions);
    let body = subst_rprog(&body, &pinned);
    let assumptions: Vec<Formula> = assumptions
        .iter()
        .map(|f| substitute_many(f, &pinned).expect("ground substitution").fold())
        .filter(|f| *f != Formula::True)
        .collect();
    let all_vars = written_vars(&body);

    let mut fresh = FreshNames::new();
    note_program(&body, &mut fresh);
    for a in &assumptions {
        fresh.note_formula(a);
    }
    for x in &all_vars {
        fresh.reserve(&post_name(x));
    }

    match kind {
        MonitorKind::Controller => {
            let ctrl = discrete_fragment(&body);
            synth_controller_monitor(&ctrl, &all_vars, &assumptions, &mut fresh)
        }
        MonitorKind::Model => synth_model_monitor(&body, &all_vars, &assumptions, &mut fresh),
    }
}

/// A transition as a single state: prior variables plain, posterior ones
/// under their `_post` names (primed entries dropped).
pub fn transition_state(prior: &State, post: &State) -> State {
    let mut merged = prior.clone();
    for (x, v) in post.iter() {
        if !x.primed {
            merged.set(post_name(x), v.clone());
        }
    }
    merged
}

/// Evaluates a monitor on a concrete transition. `prior` supplies the plain
/// variables, `post` the `_post`-suffixed ones.
pub fn eval_monitor(
    m: &MonitorFormula,
    prior: &State,
    post: &State,
) -> Result<bool, EvalError> {
    holds_qf(&transition_state(prior, post), &m.formula)
}

/// A finite evaluation grid: sample values per variable, with an optional
/// context restricting which grid points count.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub axes: Vec<(VarName, Vec<BigRational>)>,
    pub context: Option<Formula>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Equivalence {
    /// Both formulas agreed on every in-context grid point.
    Equivalent { points: usize },
    /// The first state where the formulas disagree.
    Mismatch(State),
}

/// Exhaustively compares two formulas on a grid, restricted to points
/// satisfying the context.
pub fn monitor_equiv(a: &Formula, b: &Formula, grid: &GridSpec) -> Result<Equivalence, EvalError> {
    let mut index = vec![0usize; grid.axes.len()];
    let mut points = 0usize;
    loop {
        let state = State::exact(
            grid.axes
                .iter()
                .zip(&index)
                .map(|((x, vals), i)| (x.clone(), vals[*i].clone())),
        );
        let in_context = match &grid.context {
            Some(ctx) => holds_qf(&state, ctx)?,
            None => true,
        };
        if in_context {
            if holds_qf(&state, a)? != holds_qf(&state, b)? {
                return Ok(Equivalence::Mismatch(state));
            }
            points += 1;
        }
        // Odometer increment over the axes.
        let mut pos = 0;
        loop {
            if pos == grid.axes.len() {
                return Ok(Equivalence::Equivalent { points });
            }
            index[pos] += 1;
            if index[pos] < grid.axes[pos].1.len() {
                break;
            }
            index[pos] = 0;
            pos += 1;
        }
    }
}
