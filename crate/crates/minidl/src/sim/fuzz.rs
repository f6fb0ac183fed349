//! Differential testing of the proof calculus against executable semantics.
//!
//! Every axiom of the calculus is an equivalence (or implication) between
//! formulas. For quantifier-free postconditions and budget-discretized
//! programs both sides are decidable by brute force, and because both sides
//! are evaluated under one shared budget, equivalences are exact for the
//! discretized relation — any disagreement is a real soundness bug, not an
//! approximation artifact. Loop axioms compare an outer bound `n` against an
//! inner bound `n-1`, which makes the unwinding and induction equivalences
//! exact as well.
//!
//! Generated instances are small: discrete programs of bounded depth,
//! linear ODEs shipped with their closed-form solutions, and rational
//! states with single-digit numerators and denominators. A handful of
//! deliberately broken axiom variants ("mutants") demonstrates that the
//! harness has the power to catch unsound rewrites.

use super::eval::holds_qf;
use super::ode::OdeSpec;
use super::reach::{check_box, check_diamond, reachable_states, EnumBudget, RProg};
use super::state::State;
use crate::parser::SolutionAnnotation;
use crate::syntax::ast::{Formula, HybridProgram, Term, VarName};
use crate::syntax::subst::substitute;
use crate::syntax::vars::bound_vars;
use num_rational::BigRational;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::fmt;

/// The executable-checkable axioms and rules of the box calculus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxiomId {
    /// `[x:=e]P <-> P[x:=e]`
    AssignBox,
    /// `[?Q]P <-> (Q -> P)`
    TestBox,
    /// `[a++b]P <-> [a]P & [b]P`
    ChoiceBox,
    /// `[a;b]P <-> [a][b]P`
    SeqBox,
    /// `[a*]P <-> P & [a][a*]P`
    LoopUnwind,
    /// `[a](P->Q) -> ([a]P -> [a]Q)`
    K,
    /// `[a*]P <-> P & [a*](P -> [a]P)`
    I,
    /// `P -> [a]P` when `a` writes no free variable of `P`
    V,
    /// `[a]P` for tautological `P`
    G,
    /// `[a]P -> [a]Q` when `P -> Q`
    M,
    /// `<a>P <-> ![a]!P`
    DiamondDual,
}

pub const ALL_AXIOMS: [AxiomId; 11] = [
    AxiomId::AssignBox,
    AxiomId::TestBox,
    AxiomId::ChoiceBox,
    AxiomId::SeqBox,
    AxiomId::LoopUnwind,
    AxiomId::K,
    AxiomId::I,
    AxiomId::V,
    AxiomId::G,
    AxiomId::M,
    AxiomId::DiamondDual,
];

impl fmt::Display for AxiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AxiomId::AssignBox => "[:=]",
            AxiomId::TestBox => "[?]",
            AxiomId::ChoiceBox => "[++]",
            AxiomId::SeqBox => "[;]",
            AxiomId::LoopUnwind => "[*]",
            AxiomId::K => "K",
            AxiomId::I => "I",
            AxiomId::V => "V",
            AxiomId::G => "G",
            AxiomId::M => "M",
            AxiomId::DiamondDual => "<.>",
        })
    }
}

impl AxiomId {
    pub fn parse(s: &str) -> Option<AxiomId> {
        ALL_AXIOMS.into_iter().find(|a| a.to_string() == s)
    }
}

/// Deliberately unsound axiom variants used to validate the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutantId {
    /// `[a;b]P <-> [b][a]P` — composition order swapped.
    SeqSwapped,
    /// `[a++b]P <-> [a]P | [b]P` — conjunction weakened to disjunction.
    ChoiceAsOr,
    /// `P -> [a]P` with the free-variable side condition dropped.
    VWithoutSideCondition,
}

pub const ALL_MUTANTS: [MutantId; 3] =
    [MutantId::SeqSwapped, MutantId::ChoiceAsOr, MutantId::VWithoutSideCondition];

impl fmt::Display for MutantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MutantId::SeqSwapped => "seq-swapped",
            MutantId::ChoiceAsOr => "choice-as-or",
            MutantId::VWithoutSideCondition => "v-without-side-condition",
        })
    }
}

impl MutantId {
    pub fn parse(s: &str) -> Option<MutantId> {
        ALL_MUTANTS.into_iter().find(|m| m.to_string() == s)
    }
}

/// A case where the two sides of a law disagreed.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub case_index: usize,
    pub state: State,
    pub lhs: bool,
    pub rhs: bool,
    pub instance: String,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "case {}: lhs={} rhs={} at {} with {}",
            self.case_index, self.lhs, self.rhs, self.state, self.instance
        )
    }
}

const LOOP_BOUND: u32 = 2;

fn fuzz_budget() -> EnumBudget {
    let grid = vec![
        BigRational::from_integer(0.into()),
        BigRational::new(1.into(), 2.into()),
        BigRational::from_integer(1.into()),
    ];
    let mut b = EnumBudget::closed_form(LOOP_BOUND, grid);
    b.state_cap = 50_000;
    b
}

// ---- generators ------------------------------------------------------------

struct Gen {
    rng: StdRng,
    pool: Vec<VarName>,
}

impl Gen {
    fn new(seed: u64) -> Gen {
        Gen {
            rng: StdRng::seed_from_u64(seed),
            pool: ["x", "y", "z", "w"].into_iter().map(VarName::new).collect(),
        }
    }

    fn rat(&mut self) -> BigRational {
        let n = self.rng.gen_range(-10i64..=10);
        let d = self.rng.gen_range(1i64..=10);
        BigRational::new(n.into(), d.into())
    }

    fn var(&mut self) -> VarName {
        self.pool[self.rng.gen_range(0..self.pool.len())].clone()
    }

    fn var_from(&mut self, allowed: &[VarName]) -> Option<VarName> {
        if allowed.is_empty() {
            None
        } else {
            Some(allowed[self.rng.gen_range(0..allowed.len())].clone())
        }
    }

    fn state(&mut self) -> State {
        let pairs: Vec<(VarName, BigRational)> =
            self.pool.clone().into_iter().map(|x| (x, self.rat())).collect();
        State::exact(pairs)
    }

    fn term(&mut self, depth: u32) -> Term {
        self.term_over(depth, None)
    }

    fn term_over(&mut self, depth: u32, allowed: Option<&[VarName]>) -> Term {
        let leaf = |g: &mut Gen| {
            if g.rng.gen_bool(0.6) {
                match allowed {
                    Some(vs) => match g.var_from(vs) {
                        Some(x) => Term::Var(x),
                        None => Term::Lit(g.rat()),
                    },
                    None => Term::Var(g.var()),
                }
            } else {
                Term::Lit(g.rat())
            }
        };
        if depth == 0 {
            return leaf(self);
        }
        match self.rng.gen_range(0..10) {
            0..=2 => Term::plus(self.term_over(depth - 1, allowed), self.term_over(depth - 1, allowed)),
            3..=4 => Term::minus(self.term_over(depth - 1, allowed), self.term_over(depth - 1, allowed)),
            5..=6 => Term::times(self.term_over(depth - 1, allowed), leaf(self)),
            7 => Term::neg(self.term_over(depth - 1, allowed)),
            8 => Term::pow(leaf(self), 2),
            _ => leaf(self),
        }
    }

    fn formula(&mut self, depth: u32) -> Formula {
        self.formula_over(depth, None)
    }

    fn formula_over(&mut self, depth: u32, allowed: Option<&[VarName]>) -> Formula {
        if depth == 0 {
            let a = self.term_over(1, allowed);
            let b = self.term_over(1, allowed);
            return match self.rng.gen_range(0..6) {
                0 => Formula::Eq(a, b),
                1 => Formula::Neq(a, b),
                2 => Formula::Geq(a, b),
                3 => Formula::Gt(a, b),
                4 => Formula::Leq(a, b),
                _ => Formula::Lt(a, b),
            };
        }
        match self.rng.gen_range(0..8) {
            0..=1 => Formula::and(self.formula_over(depth - 1, allowed), self.formula_over(depth - 1, allowed)),
            2..=3 => Formula::or(self.formula_over(depth - 1, allowed), self.formula_over(depth - 1, allowed)),
            4 => Formula::not(self.formula_over(depth - 1, allowed)),
            5 => Formula::imply(self.formula_over(depth - 1, allowed), self.formula_over(depth - 1, allowed)),
            _ => self.formula_over(0, allowed),
        }
    }

    /// A linear ODE with its closed-form solution attached: either
    /// `a' = c` or the pair `a' = b, b' = c` with `c` a literal or an
    /// untouched pool variable.
    fn ode(&mut self) -> RProg {
        let time = VarName::new("t");
        let a = self.var();
        let c = if self.rng.gen_bool(0.5) {
            Term::Lit(self.rat())
        } else {
            Term::Var(self.pool[self.rng.gen_range(0..self.pool.len())].clone())
        };
        let domain = if self.rng.gen_bool(0.7) {
            Formula::True
        } else {
            Formula::Geq(Term::Var(a.clone()), Term::Lit(self.rat()))
        };
        let t = Term::Var(time.clone());
        if self.rng.gen_bool(0.5) {
            // a' = c  with  a(t) = a + c*t
            let sol_a = Term::plus(Term::Var(a.clone()), Term::times(c.clone(), t));
            RProg::Ode(OdeSpec {
                flow: vec![(a.clone(), c)],
                domain,
                solution: Some(SolutionAnnotation { time, per_var: vec![(a, sol_a)] }),
            })
        } else {
            // a' = b, b' = c  with  a(t) = a + b*t + (c/2)*t^2, b(t) = b + c*t
            let b = loop {
                let b = self.var();
                if b != a {
                    break b;
                }
            };
            // c must not be an evolving variable or the solution form breaks
            let c = match &c {
                Term::Var(v) if *v == a || *v == b => Term::Lit(self.rat()),
                other => other.clone(),
            };
            let half_c = Term::times(
                Term::Lit(BigRational::new(1.into(), 2.into())),
                c.clone(),
            );
            let sol_a = Term::plus(
                Term::Var(a.clone()),
                Term::plus(
                    Term::times(Term::Var(b.clone()), t.clone()),
                    Term::times(half_c, Term::pow(t.clone(), 2)),
                ),
            );
            let sol_b = Term::plus(Term::Var(b.clone()), Term::times(c.clone(), t.clone()));
            RProg::Ode(OdeSpec {
                flow: vec![(a.clone(), Term::Var(b.clone())), (b.clone(), c)],
                domain,
                solution: Some(SolutionAnnotation {
                    time,
                    per_var: vec![(a, sol_a), (b, sol_b)],
                }),
            })
        }
    }

    fn leaf_program(&mut self) -> RProg {
        match self.rng.gen_range(0..10) {
            0..=4 => RProg::Assign(self.var(), self.term(2)),
            5..=7 => RProg::Test(self.formula(1)),
            _ => self.ode(),
        }
    }

    fn program(&mut self, depth: u32) -> RProg {
        if depth == 0 {
            return self.leaf_program();
        }
        match self.rng.gen_range(0..10) {
            0..=2 => RProg::seq(self.program(depth - 1), self.program(depth - 1)),
            3..=5 => RProg::choice(self.program(depth - 1), self.program(depth - 1)),
            6 => RProg::Loop(Box::new(self.program(depth.saturating_sub(2)))),
            _ => self.leaf_program(),
        }
    }
}

/// Rebuilds plain syntax from a resolved program, for display and for
/// variable analyses.
pub fn to_program(p: &RProg) -> HybridProgram {
    match p {
        RProg::Assign(x, e) => HybridProgram::Assign(x.clone(), e.clone()),
        RProg::Test(q) => HybridProgram::Test(q.clone()),
        RProg::Ode(spec) => HybridProgram::Ode(spec.flow.clone(), spec.domain.clone()),
        RProg::Choice(a, b) => HybridProgram::choice(to_program(a), to_program(b)),
        RProg::Seq(a, b) => HybridProgram::seq(to_program(a), to_program(b)),
        RProg::Loop(body) => HybridProgram::Loop(Box::new(to_program(body))),
    }
}

// ---- the checks ------------------------------------------------------------

struct Discrepancy {
    lhs: bool,
    rhs: bool,
    instance: String,
}

/// Evaluates one random instance of the law; `Some` means the sides split.
fn check_case(axiom: AxiomId, g: &mut Gen) -> Option<(State, Discrepancy)> {
    let b = fuzz_budget();
    let s = g.state();
    let expect = "generated instances stay within budget";
    let d = match axiom {
        AxiomId::AssignBox => {
            let x = g.var();
            let e = g.term(2);
            let p = g.formula(2);
            let prog = RProg::Assign(x.clone(), e.clone());
            let lhs = check_box(&prog, &s, &p, &b).expect(expect);
            let rhs = holds_qf(&s, &substitute(&p, &x, &e).expect("no binders")).expect(expect);
            Discrepancy { lhs, rhs, instance: format!("x={x}, e={e}, P={p}") }
        }
        AxiomId::TestBox => {
            let q = g.formula(2);
            let p = g.formula(2);
            let lhs = check_box(&RProg::Test(q.clone()), &s, &p, &b).expect(expect);
            let rhs = holds_qf(&s, &Formula::imply(q.clone(), p.clone())).expect(expect);
            Discrepancy { lhs, rhs, instance: format!("Q={q}, P={p}") }
        }
        AxiomId::ChoiceBox => {
            let (a, c) = (g.program(2), g.program(2));
            let p = g.formula(2);
            let lhs = check_box(&RProg::choice(a.clone(), c.clone()), &s, &p, &b).expect(expect);
            let rhs = check_box(&a, &s, &p, &b).expect(expect)
                && check_box(&c, &s, &p, &b).expect(expect);
            Discrepancy {
                lhs,
                rhs,
                instance: format!("a={}, b={}, P={p}", to_program(&a), to_program(&c)),
            }
        }
        AxiomId::SeqBox => {
            let (a, c) = (g.program(2), g.program(2));
            let p = g.formula(2);
            let lhs = check_box(&RProg::seq(a.clone(), c.clone()), &s, &p, &b).expect(expect);
            let mut rhs = true;
            for m in reachable_states(&a, &s, &b).expect(expect) {
                if !check_box(&c, &m, &p, &b).expect(expect) {
                    rhs = false;
                    break;
                }
            }
            Discrepancy {
                lhs,
                rhs,
                instance: format!("a={}, b={}, P={p}", to_program(&a), to_program(&c)),
            }
        }
        AxiomId::LoopUnwind => {
            let a = g.program(2);
            let p = g.formula(2);
            let lhs = check_box(&RProg::Loop(Box::new(a.clone())), &s, &p, &b).expect(expect);
            // one unwinding consumes one iteration, so the inner loop gets
            // bound n-1; that makes the equivalence exact under the budget
            let mut inner = b.clone();
            inner.loop_bound = LOOP_BOUND - 1;
            let mut rhs = holds_qf(&s, &p).expect(expect);
            if rhs {
                for m in reachable_states(&a, &s, &b).expect(expect) {
                    if !check_box(&RProg::Loop(Box::new(a.clone())), &m, &p, &inner)
                        .expect(expect)
                    {
                        rhs = false;
                        break;
                    }
                }
            }
            Discrepancy { lhs, rhs, instance: format!("a={}, P={p}", to_program(&a)) }
        }
        AxiomId::K => {
            let a = g.program(2);
            let (p, q) = (g.formula(2), g.formula(2));
            let premise =
                check_box(&a, &s, &Formula::imply(p.clone(), q.clone()), &b).expect(expect);
            let lhs = premise && check_box(&a, &s, &p, &b).expect(expect);
            let rhs = !lhs || check_box(&a, &s, &q, &b).expect(expect);
            Discrepancy {
                lhs: true,
                rhs,
                instance: format!("a={}, P={p}, Q={q}", to_program(&a)),
            }
        }
        AxiomId::I => {
            let a = g.program(2);
            let p = g.formula(2);
            let lhs = check_box(&RProg::Loop(Box::new(a.clone())), &s, &p, &b).expect(expect);
            let mut inner = b.clone();
            inner.loop_bound = LOOP_BOUND - 1;
            let mut rhs = holds_qf(&s, &p).expect(expect);
            if rhs {
                for m in
                    reachable_states(&RProg::Loop(Box::new(a.clone())), &s, &inner).expect(expect)
                {
                    if holds_qf(&m, &p).expect(expect)
                        && !check_box(&a, &m, &p, &b).expect(expect)
                    {
                        rhs = false;
                        break;
                    }
                }
            }
            Discrepancy { lhs, rhs, instance: format!("a={}, P={p}", to_program(&a)) }
        }
        AxiomId::V => {
            let a = g.program(2);
            let bound = bound_vars(&to_program(&a));
            let allowed: Vec<VarName> =
                g.pool.iter().filter(|x| !bound.contains(*x)).cloned().collect();
            let p = g.formula_over(2, Some(&allowed));
            let lhs = holds_qf(&s, &p).expect(expect);
            let rhs = !lhs || check_box(&a, &s, &p, &b).expect(expect);
            Discrepancy { lhs: true, rhs, instance: format!("a={}, P={p}", to_program(&a)) }
        }
        AxiomId::G => {
            let a = g.program(2);
            let r = g.formula(2);
            let p = Formula::or(r.clone(), Formula::not(r.clone()));
            let rhs = check_box(&a, &s, &p, &b).expect(expect);
            Discrepancy { lhs: true, rhs, instance: format!("a={}, P={p}", to_program(&a)) }
        }
        AxiomId::M => {
            let a = g.program(2);
            let p = g.formula(2);
            let q = Formula::or(p.clone(), g.formula(1));
            let lhs = check_box(&a, &s, &p, &b).expect(expect);
            let rhs = !lhs || check_box(&a, &s, &q, &b).expect(expect);
            Discrepancy {
                lhs: true,
                rhs,
                instance: format!("a={}, P={p}, Q={q}", to_program(&a)),
            }
        }
        AxiomId::DiamondDual => {
            let a = g.program(2);
            let p = g.formula(2);
            let lhs = check_diamond(&a, &s, &p, &b).expect(expect);
            let rhs = !check_box(&a, &s, &Formula::not(p.clone()), &b).expect(expect);
            Discrepancy { lhs, rhs, instance: format!("a={}, P={p}", to_program(&a)) }
        }
    };
    if d.lhs == d.rhs {
        None
    } else {
        Some((s, d))
    }
}

fn check_mutant_case(mutant: MutantId, g: &mut Gen) -> Option<(State, Discrepancy)> {
    let b = fuzz_budget();
    let s = g.state();
    let expect = "generated instances stay within budget";
    let d = match mutant {
        MutantId::SeqSwapped => {
            let (a, c) = (g.program(2), g.program(2));
            let p = g.formula(2);
            let lhs = check_box(&RProg::seq(a.clone(), c.clone()), &s, &p, &b).expect(expect);
            let mut rhs = true;
            for m in reachable_states(&c, &s, &b).expect(expect) {
                if !check_box(&a, &m, &p, &b).expect(expect) {
                    rhs = false;
                    break;
                }
            }
            Discrepancy {
                lhs,
                rhs,
                instance: format!("a={}, b={}, P={p}", to_program(&a), to_program(&c)),
            }
        }
        MutantId::ChoiceAsOr => {
            let (a, c) = (g.program(2), g.program(2));
            let p = g.formula(2);
            let lhs = check_box(&RProg::choice(a.clone(), c.clone()), &s, &p, &b).expect(expect);
            let rhs = check_box(&a, &s, &p, &b).expect(expect)
                || check_box(&c, &s, &p, &b).expect(expect);
            Discrepancy {
                lhs,
                rhs,
                instance: format!("a={}, b={}, P={p}", to_program(&a), to_program(&c)),
            }
        }
        MutantId::VWithoutSideCondition => {
            let a = g.program(2);
            let p = g.formula(2);
            let lhs = holds_qf(&s, &p).expect(expect);
            let rhs = !lhs || check_box(&a, &s, &p, &b).expect(expect);
            Discrepancy { lhs: true, rhs, instance: format!("a={}, P={p}", to_program(&a)) }
        }
    };
    if d.lhs == d.rhs {
        None
    } else {
        Some((s, d))
    }
}

fn run<F>(n: usize, seed: u64, mut case: F) -> Option<Counterexample>
where
    F: FnMut(&mut Gen) -> Option<(State, Discrepancy)>,
{
    let mut g = Gen::new(seed);
    for i in 0..n {
        if let Some((state, d)) = case(&mut g) {
            return Some(Counterexample {
                case_index: i,
                state,
                lhs: d.lhs,
                rhs: d.rhs,
                instance: d.instance,
            });
        }
    }
    None
}

/// Fuzzes one axiom for `n` seeded cases; `None` means no discrepancy.
pub fn axiom_fuzz(axiom: AxiomId, n: usize, seed: u64) -> Option<Counterexample> {
    run(n, seed ^ fxhash(axiom as u64), |g| check_case(axiom, g))
}

/// Fuzzes a deliberately broken variant; a counterexample is the expected
/// outcome and demonstrates the harness's power.
pub fn mutant_fuzz(mutant: MutantId, n: usize, seed: u64) -> Option<Counterexample> {
    run(n, seed ^ fxhash(0x100 + mutant as u64), |g| check_mutant_case(mutant, g))
}

/// Cheap stable mixer so each law gets its own case stream per seed.
fn fxhash(x: u64) -> u64 {
    x.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axioms_survive_seeded_fuzzing() {
        for axiom in ALL_AXIOMS {
            let cex = axiom_fuzz(axiom, 150, 42);
            assert!(cex.is_none(), "{axiom}: {}", cex.unwrap());
        }
    }

    #[test]
    fn mutants_are_caught() {
        for mutant in ALL_MUTANTS {
            let cex = mutant_fuzz(mutant, 800, 42);
            assert!(cex.is_some(), "{mutant} survived fuzzing");
        }
    }

    #[test]
    fn fuzzing_is_deterministic_per_seed() {
        let a = mutant_fuzz(MutantId::SeqSwapped, 500, 7).map(|c| c.to_string());
        let b = mutant_fuzz(MutantId::SeqSwapped, 500, 7).map(|c| c.to_string());
        assert_eq!(a, b);
        assert!(a.is_some());
    }

    #[test]
    fn order_sensitive_sequences_refute_the_swapped_composition() {
        // hand-built instance: x:=1; x:=2 ends at 2, the swap ends at 1
        let a = RProg::Assign(VarName::new("x"), Term::int(1));
        let c = RProg::Assign(VarName::new("x"), Term::int(2));
        let p = crate::parser::parse_formula("x=2").unwrap();
        let s = State::exact([(VarName::new("x"), BigRational::from_integer(0.into()))]);
        let b = fuzz_budget();
        assert!(check_box(&RProg::seq(a.clone(), c.clone()), &s, &p, &b).unwrap());
        assert!(!check_box(&RProg::seq(c, a), &s, &p, &b).unwrap());
    }
}
