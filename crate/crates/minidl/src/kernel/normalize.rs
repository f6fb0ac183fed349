//! Propositional goal normalization.
//!
//! Every goal the checker creates is first brought into a propositional
//! normal form: implications in the succedent move their hypothesis into
//! the antecedent, conjunctions and disjunctions are split on the side
//! where splitting is invertible (branching the goal where necessary),
//! negations flip sides, `true`/`false` members are simplified away, and
//! goals whose antecedent and succedent share a formula close outright.
//! Universals in the succedent and existentials in the antecedent are
//! Skolemized with a fresh variable. Existentials in the succedent and
//! universals in the antecedent are left alone: they need an explicit
//! witness or instantiation step.
//!
//! All transformations are invertible sequent rules (reading Skolemization
//! as introducing a fresh constant), so normalizing never loses provability
//! and can safely run after every proof step.

use crate::syntax::ast::{Formula, Sequent, Term, VarName};
use crate::syntax::subst::substitute;
use crate::syntax::vars::VarSet;
use std::collections::BTreeSet;

/// Allocator for variable names that are fresh for the whole proof session.
#[derive(Debug, Default, Clone)]
pub struct FreshNames {
    used: BTreeSet<String>,
}

impl FreshNames {
    pub fn new() -> Self {
        FreshNames::default()
    }

    /// Marks every variable of the sequent (free, bound, or primed) as taken.
    pub fn note_sequent(&mut self, seq: &Sequent) {
        for f in seq.ante.iter().chain(&seq.succ) {
            self.note_formula(f);
        }
    }

    /// Marks every variable of the formula as taken.
    pub fn note_formula(&mut self, f: &Formula) {
        let mut names = VarSet::new();
        collect_formula(f, &mut names);
        for x in names {
            self.used.insert(x.to_unprimed().to_string());
        }
    }

    /// A name not seen before: `base` itself, or `base_1`, `base_2`, ...
    pub fn fresh(&mut self, base: &str) -> VarName {
        let base = base.trim_end_matches('\'');
        let mut candidate = base.to_string();
        let mut n = 0;
        while self.used.contains(&candidate) {
            n += 1;
            candidate = format!("{base}_{n}");
        }
        self.used.insert(candidate.clone());
        VarName::new(candidate)
    }

    /// Marks one name as taken.
    pub fn reserve(&mut self, name: &VarName) {
        self.used.insert(name.to_unprimed().to_string());
    }

    /// Marks every variable of the term as taken.
    pub fn note_term(&mut self, t: &Term) {
        for x in crate::syntax::vars::term_vars(t) {
            self.reserve(&x);
        }
    }
}

/// Collects every variable occurring anywhere in the formula, including
/// binders and program statements.
fn collect_formula(f: &Formula, out: &mut VarSet) {
    use crate::syntax::vars::{program_vars, term_vars};
    match f {
        Formula::True | Formula::False => {}
        Formula::Eq(a, b)
        | Formula::Geq(a, b)
        | Formula::Gt(a, b)
        | Formula::Leq(a, b)
        | Formula::Lt(a, b)
        | Formula::Neq(a, b) => {
            out.extend(term_vars(a));
            out.extend(term_vars(b));
        }
        Formula::Not(g) => collect_formula(g, out),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Imply(a, b) | Formula::Equiv(a, b) => {
            collect_formula(a, out);
            collect_formula(b, out);
        }
        Formula::Forall(x, g) | Formula::Exists(x, g) => {
            out.insert(x.clone());
            collect_formula(g, out);
        }
        Formula::Box_(p, g) | Formula::Diamond(p, g) => {
            out.extend(program_vars(p));
            collect_programs_tests(p, out);
            collect_formula(g, out);
        }
    }
}

fn collect_programs_tests(p: &crate::syntax::ast::HybridProgram, out: &mut VarSet) {
    use crate::syntax::ast::HybridProgram as HP;
    match p {
        HP::Assign(..) => {}
        HP::Test(f) => collect_formula(f, out),
        HP::Ode(_, dom) => collect_formula(dom, out),
        HP::Choice(a, b) | HP::Seq(a, b) => {
            collect_programs_tests(a, out);
            collect_programs_tests(b, out);
        }
        HP::Loop(a) => collect_programs_tests(a, out),
    }
}

/// Brings a sequent into propositional normal form.
///
/// Returns the list of residual goals; an empty list means the sequent
/// closed during normalization (by `true`/`false` or an identical formula
/// on both sides).
pub fn normalize(seq: &Sequent, fresh: &mut FreshNames) -> Vec<Sequent> {
    let mut out = Vec::new();
    let mut work = vec![seq.clone()];
    while let Some(mut seq) = work.pop() {
        match simplify(&mut seq, fresh) {
            Step::Closed => {}
            Step::Branch(a, b) => {
                // Push in reverse so the first branch is processed first.
                work.push(b);
                work.push(a);
            }
            Step::Done => out.push(seq),
        }
    }
    // The worklist pops from the back, so single-goal rewrites preserve
    // order; reverse nothing and keep discovery order deterministic.
    out
}

enum Step {
    /// Sequent closed during simplification.
    Closed,
    /// A branching rule split the sequent in two.
    Branch(Sequent, Sequent),
    /// No rule applies any more.
    Done,
}

/// Applies non-branching rules until none applies, then at most one
/// branching rule.
fn simplify(seq: &mut Sequent, fresh: &mut FreshNames) -> Step {
    'outer: loop {
        // Closure checks first.
        if seq.ante.iter().any(|f| matches!(f, Formula::False))
            || seq.succ.iter().any(|f| matches!(f, Formula::True))
        {
            return Step::Closed;
        }
        if seq.ante.iter().any(|f| seq.succ.contains(f)) {
            return Step::Closed;
        }
        seq.ante.retain(|f| !matches!(f, Formula::True));
        seq.succ.retain(|f| !matches!(f, Formula::False));

        // Non-branching antecedent rules.
        for i in 0..seq.ante.len() {
            match &seq.ante[i] {
                Formula::Not(a) => {
                    let a = (**a).clone();
                    seq.ante.remove(i);
                    seq.succ.push(a);
                    continue 'outer;
                }
                Formula::And(a, b) => {
                    let (a, b) = ((**a).clone(), (**b).clone());
                    seq.ante.splice(i..=i, [a, b]);
                    continue 'outer;
                }
                Formula::Exists(x, body) => {
                    let (x, body) = (x.clone(), (**body).clone());
                    let name = eigen_name(seq, true, i, &x, fresh);
                    seq.ante[i] = skolemize(&x, &body, name);
                    continue 'outer;
                }
                _ => {}
            }
        }

        // Non-branching succedent rules.
        for i in 0..seq.succ.len() {
            match &seq.succ[i] {
                Formula::Not(a) => {
                    let a = (**a).clone();
                    seq.succ.remove(i);
                    seq.ante.push(a);
                    continue 'outer;
                }
                Formula::Or(a, b) => {
                    let (a, b) = ((**a).clone(), (**b).clone());
                    seq.succ.splice(i..=i, [a, b]);
                    continue 'outer;
                }
                Formula::Imply(a, b) => {
                    let (a, b) = ((**a).clone(), (**b).clone());
                    seq.succ[i] = b;
                    seq.ante.push(a);
                    continue 'outer;
                }
                Formula::Forall(x, body) => {
                    let (x, body) = (x.clone(), (**body).clone());
                    let name = eigen_name(seq, false, i, &x, fresh);
                    seq.succ[i] = skolemize(&x, &body, name);
                    continue 'outer;
                }
                _ => {}
            }
        }

        // Branching rules: conjunction on the right, disjunction on the left.
        for i in 0..seq.succ.len() {
            if let Formula::And(a, b) = &seq.succ[i] {
                let (a, b) = ((**a).clone(), (**b).clone());
                let mut left = seq.clone();
                left.succ[i] = a;
                let mut right = seq.clone();
                right.succ[i] = b;
                return Step::Branch(left, right);
            }
        }
        for i in 0..seq.ante.len() {
            if let Formula::Or(a, b) = &seq.ante[i] {
                let (a, b) = ((**a).clone(), (**b).clone());
                let mut left = seq.clone();
                left.ante[i] = a;
                let mut right = seq.clone();
                right.ante[i] = b;
                return Step::Branch(left, right);
            }
        }

        return Step::Done;
    }
}

/// Picks the Skolem name for a binder at `(in_ante, index)`: the binder's own
/// name when no other member of the sequent mentions it, a fresh one
/// otherwise.
fn eigen_name(
    seq: &Sequent,
    in_ante: bool,
    index: usize,
    x: &VarName,
    fresh: &mut FreshNames,
) -> VarName {
    use crate::syntax::vars::free_vars;
    let mut elsewhere = VarSet::new();
    for (j, f) in seq.ante.iter().enumerate() {
        if !(in_ante && j == index) {
            elsewhere.extend(free_vars(f));
        }
    }
    for (j, f) in seq.succ.iter().enumerate() {
        if !(!in_ante && j == index) {
            elsewhere.extend(free_vars(f));
        }
    }
    let base = x.to_unprimed();
    if elsewhere.iter().any(|y| y.to_unprimed() == base) {
        fresh.fresh(&base.to_string())
    } else {
        fresh.reserve(x);
        x.clone()
    }
}

fn skolemize(x: &VarName, body: &Formula, name: VarName) -> Formula {
    substitute(body, x, &Term::Var(name)).expect("a fresh variable cannot be captured")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_formula, parse_sequent};

    fn norm(src: &str) -> Vec<String> {
        let seq = parse_sequent(src).unwrap();
        let mut fresh = FreshNames::new();
        fresh.note_sequent(&seq);
        normalize(&seq, &mut fresh).iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn implication_moves_hypothesis_left() {
        assert_eq!(norm("|- x>=0 -> x>=0"), Vec::<String>::new());
        assert_eq!(norm("|- x>=0 -> v=0"), vec!["x>=0 |- v=0"]);
    }

    #[test]
    fn conjunction_on_the_right_branches() {
        assert_eq!(norm("x=1 |- x>=0 & v=0"), vec!["x=1 |- x>=0", "x=1 |- v=0"]);
    }

    #[test]
    fn conjunction_on_the_left_splits_in_place() {
        assert_eq!(norm("x>=0 & v=0 |- x=1"), vec!["x>=0, v=0 |- x=1"]);
    }

    #[test]
    fn disjunction_branches_on_the_left_and_splits_on_the_right() {
        assert_eq!(norm("x=0 | v=0 |- x*v=0"), vec!["x=0 |- x*v=0", "v=0 |- x*v=0"]);
        assert_eq!(norm("|- x=0 | v=0"), vec!["|- x=0, v=0"]);
    }

    #[test]
    fn negations_flip_sides() {
        assert_eq!(norm("!(x=0) |- v=0"), vec!["|- v=0, x=0"]);
        assert_eq!(norm("|- !(x=0)"), vec!["x=0 |-"]);
    }

    #[test]
    fn truth_values_simplify() {
        assert_eq!(norm("false |- x=0"), Vec::<String>::new());
        assert_eq!(norm("x=0 |- true"), Vec::<String>::new());
        assert_eq!(norm("true |- x=0"), vec!["|- x=0"]);
        assert_eq!(norm("x=0 |- false"), vec!["x=0 |-"]);
    }

    #[test]
    fn identical_member_closes() {
        assert_eq!(norm("x>=0, v=0 |- v=0"), Vec::<String>::new());
    }

    #[test]
    fn universal_succedent_is_skolemized() {
        assert_eq!(norm("|- \\forall x x>=0"), vec!["|- x>=0"]);
    }

    #[test]
    fn skolem_name_avoids_the_context() {
        assert_eq!(norm("x>=1 |- \\forall x x>=0"), vec!["x>=1 |- x_1>=0"]);
    }

    #[test]
    fn existential_antecedent_is_skolemized() {
        assert_eq!(norm("\\exists e (x=e) |- x>=0"), vec!["x=e |- x>=0"]);
    }

    #[test]
    fn existential_succedent_is_left_for_a_witness() {
        assert_eq!(norm("|- \\exists e (x=e)"), vec!["|- \\exists e x=e"]);
    }

    #[test]
    fn universal_antecedent_is_left_for_instantiation() {
        assert_eq!(norm("\\forall s s>=0 |- x=1"), vec!["\\forall s s>=0 |- x=1"]);
    }

    #[test]
    fn modal_formulas_pass_through_untouched() {
        assert_eq!(norm("|- x=0 -> [x:=1] x>=0"), vec!["x=0 |- [x := 1]x>=0"]);
    }

    #[test]
    fn nested_propositional_structure_fully_unfolds() {
        let goals = norm("|- (x>=0 & v=0) -> (x>=0 & (v=0 | x=1))");
        assert_eq!(goals, Vec::<String>::new());
    }

    #[test]
    fn fresh_names_count_up() {
        let mut fresh = FreshNames::new();
        fresh.note_formula(&parse_formula("t>=0 & t_1>=0").unwrap());
        assert_eq!(fresh.fresh("t").to_string(), "t_2");
        assert_eq!(fresh.fresh("t").to_string(), "t_3");
        assert_eq!(fresh.fresh("s").to_string(), "s");
    }
}
