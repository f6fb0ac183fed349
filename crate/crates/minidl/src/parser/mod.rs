//! Recursive-descent parser for terms, formulas, hybrid programs, and model
//! files — the inverse of the `Display` implementations.
//!
//! Grammar, loosest to tightest. Formulas: `<->`, `->` (right-associative),
//! `|`, `&`, then the unary layer (`!`, quantifiers, modalities) over
//! comparisons. Programs: `++`, then `;` (right-associative), then atomic
//! statements; `*` is a postfix on braced groups only. Terms: `+ -`, `* /`,
//! unary `-`, `^`, atoms. Division requires a literal divisor and folds into
//! a rational coefficient at parse time, so terms stay polynomial.
//!
//! Annotation bookkeeping: `@solution` rides after an ODE's closing brace
//! and `@invariant` after a loop's `*`. Each is recorded against the brace
//! token that opens its construct; since a node's first token precedes those
//! of everything it dominates, sorting records by brace position recovers
//! the preorder numbering the model-file API exposes.

pub mod lexer;
pub mod model;

use crate::syntax::ast::{Formula, HybridProgram, Sequent, Term, VarName};
use crate::syntax::vars::term_vars;
use lexer::{Spanned, Tok};
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

pub use model::{parse_model_file, parse_model_source, ModelError, ModelFile, SolutionAnnotation};

/// Position-tagged parse failure with the token set that would have been
/// accepted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: u32,
    pub col: u32,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: expected {}, found {}",
            self.line,
            self.col,
            self.expected.join(" or "),
            self.found
        )
    }
}

impl std::error::Error for SyntaxError {}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("{line}:{col}: duplicate {kind} annotation")]
    DuplicateAnnotation { line: u32, col: u32, kind: &'static str },
    #[error("{line}:{col}: `{name}` is not an ODE variable, the time variable, or a declared constant")]
    UnknownConstant { line: u32, col: u32, name: String },
    #[error("cannot bind constant: {0}")]
    ConstantCapture(#[from] crate::syntax::subst::CaptureError),
}

type PResult<T> = Result<T, ParseError>;

/// Parses a term; the entire input must be consumed.
pub fn parse_term(src: &str) -> PResult<Term> {
    let mut p = Parser::new(src, false)?;
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parses a formula; the entire input must be consumed.
pub fn parse_formula(src: &str) -> PResult<Formula> {
    let mut p = Parser::new(src, false)?;
    let f = p.formula()?;
    p.expect_eof()?;
    Ok(f)
}

/// Parses a hybrid program; annotations are rejected outside model files.
pub fn parse_program(src: &str) -> PResult<HybridProgram> {
    let mut p = Parser::new(src, false)?;
    let prog = p.program()?;
    p.expect_eof()?;
    Ok(prog)
}

/// Parses `A1, ..., An |- S1, ..., Sm` (either side may be empty).
pub fn parse_sequent(src: &str) -> PResult<Sequent> {
    let (ante_src, succ_src) = src.split_once("|-").ok_or_else(|| SyntaxError {
        line: 1,
        col: 1,
        expected: vec!["`|-`".into()],
        found: "no turnstile".into(),
    })?;
    let side = |text: &str| -> PResult<Vec<Formula>> {
        if text.trim().is_empty() {
            return Ok(vec![]);
        }
        let mut p = Parser::new(text, false)?;
        let mut out = vec![p.formula()?];
        while p.eat(&Tok::Comma) {
            out.push(p.formula()?);
        }
        p.expect_eof()?;
        Ok(out)
    };
    Ok(Sequent::new(side(ante_src)?, side(succ_src)?))
}

pub(crate) struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    allow_annotations: bool,
    /// Declared constant names, for solution-annotation scope checks.
    pub(crate) constants: BTreeSet<String>,
    /// Per ODE in source order: opening-brace token index and annotation.
    pub(crate) ode_records: Vec<(usize, Option<SolutionAnnotation>)>,
    /// Per loop in source order of its `{`: token index and invariant.
    pub(crate) loop_records: Vec<(usize, Option<Formula>)>,
}

impl Parser {
    pub(crate) fn new(src: &str, allow_annotations: bool) -> PResult<Parser> {
        Ok(Parser {
            toks: lexer::lex(src)?,
            pos: 0,
            allow_annotations,
            constants: BTreeSet::new(),
            ode_records: Vec::new(),
            loop_records: Vec::new(),
        })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    pub(crate) fn span(&self) -> (u32, u32) {
        let s = &self.toks[self.pos];
        (s.line, s.col)
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn err(&self, expected: Vec<String>) -> ParseError {
        let (line, col) = self.span();
        SyntaxError { line, col, expected, found: self.peek().to_string() }.into()
    }

    pub(crate) fn expect(&mut self, t: Tok) -> PResult<()> {
        if self.peek() == &t {
            self.bump();
            Ok(())
        } else {
            Err(self.err(vec![t.to_string()]))
        }
    }

    pub(crate) fn expect_eof(&mut self) -> PResult<()> {
        self.expect(Tok::Eof)
    }

    pub(crate) fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Tok::Ident(x) => {
                let x = x.clone();
                self.bump();
                Ok(x)
            }
            _ => Err(self.err(vec![what.to_string()])),
        }
    }

    // ---- terms ----

    pub(crate) fn term(&mut self) -> PResult<Term> {
        let mut t = self.mult()?;
        loop {
            if self.eat(&Tok::Plus) {
                t = Term::plus(t, self.mult()?);
            } else if self.eat(&Tok::Minus) {
                t = Term::minus(t, self.mult()?);
            } else {
                return Ok(t);
            }
        }
    }

    fn mult(&mut self) -> PResult<Term> {
        let mut t = self.factor()?;
        loop {
            if self.eat(&Tok::Star) {
                t = Term::times(t, self.factor()?);
            } else if self.eat(&Tok::Slash) {
                let at = self.span();
                let divisor = self.factor()?;
                let q = divisor.as_literal().filter(|q| !q.is_zero()).ok_or(
                    SyntaxError {
                        line: at.0,
                        col: at.1,
                        expected: vec!["a nonzero literal divisor".into()],
                        found: format!("`{divisor}`"),
                    },
                )?;
                t = match t.as_literal() {
                    Some(left) => Term::from_rational(left / q),
                    None => Term::times(t, Term::from_rational(q.recip())),
                };
            } else {
                return Ok(t);
            }
        }
    }

    fn factor(&mut self) -> PResult<Term> {
        if self.eat(&Tok::Minus) {
            Ok(Term::neg(self.factor()?))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> PResult<Term> {
        let base = self.atom()?;
        if self.eat(&Tok::Caret) {
            let e = match self.peek() {
                Tok::Nat(n) => u32::try_from(n).map_err(|_| {
                    self.err(vec!["an exponent that fits in 32 bits".into()])
                })?,
                _ => return Err(self.err(vec!["a nonnegative integer exponent".into()])),
            };
            self.bump();
            Ok(Term::pow(base, e))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Nat(n) => {
                self.bump();
                Ok(Term::Lit(BigRational::from_integer(n)))
            }
            Tok::Ident(x) => {
                self.bump();
                if self.eat(&Tok::Prime) {
                    Ok(Term::Var(VarName::primed(x)))
                } else {
                    Ok(Term::Var(VarName::new(x)))
                }
            }
            Tok::LParen => {
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => Err(self.err(vec!["a term".into()])),
        }
    }

    // ---- formulas ----

    pub(crate) fn formula(&mut self) -> PResult<Formula> {
        let a = self.imply()?;
        if self.eat(&Tok::Iff) {
            Ok(Formula::equiv(a, self.formula()?))
        } else {
            Ok(a)
        }
    }

    fn imply(&mut self) -> PResult<Formula> {
        let a = self.or_formula()?;
        if self.eat(&Tok::Arrow) {
            Ok(Formula::imply(a, self.imply()?))
        } else {
            Ok(a)
        }
    }

    fn or_formula(&mut self) -> PResult<Formula> {
        let mut a = self.and_formula()?;
        while self.eat(&Tok::Bar) {
            a = Formula::or(a, self.and_formula()?);
        }
        Ok(a)
    }

    fn and_formula(&mut self) -> PResult<Formula> {
        let mut a = self.unary_formula()?;
        while self.eat(&Tok::Amp) {
            a = Formula::and(a, self.unary_formula()?);
        }
        Ok(a)
    }

    fn unary_formula(&mut self) -> PResult<Formula> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.unary_formula()?))
            }
            Tok::Forall => {
                self.bump();
                let x = self.ident("a quantified variable")?;
                Ok(Formula::forall(VarName::new(x), self.unary_formula()?))
            }
            Tok::Exists => {
                self.bump();
                let x = self.ident("a quantified variable")?;
                Ok(Formula::exists(VarName::new(x), self.unary_formula()?))
            }
            Tok::LBracket => {
                self.bump();
                let p = self.program()?;
                self.expect(Tok::RBracket)?;
                Ok(Formula::boxed(p, self.unary_formula()?))
            }
            Tok::Lt => {
                self.bump();
                let p = self.program()?;
                self.expect(Tok::Gt)?;
                Ok(Formula::diamond(p, self.unary_formula()?))
            }
            Tok::True => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::False => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::LParen => {
                // `(` opens either a parenthesized formula or the left term
                // of a comparison; try the comparison reading first and
                // backtrack, since terms cannot contain formulas.
                let save = self.pos;
                match self.comparison() {
                    Ok(f) => Ok(f),
                    Err(_) => {
                        self.pos = save;
                        self.bump();
                        let f = self.formula()?;
                        self.expect(Tok::RParen)?;
                        Ok(f)
                    }
                }
            }
            Tok::Ident(_) | Tok::Nat(_) | Tok::Minus => self.comparison(),
            _ => Err(self.err(vec!["a formula".into()])),
        }
    }

    fn comparison(&mut self) -> PResult<Formula> {
        let a = self.term()?;
        let mk = match self.peek() {
            Tok::Eq => Formula::Eq,
            Tok::Neq => Formula::Neq,
            Tok::Geq => Formula::Geq,
            Tok::Leq => Formula::Leq,
            Tok::Gt => Formula::Gt,
            Tok::Lt => Formula::Lt,
            _ => return Err(self.err(vec!["a comparison operator".into()])),
        };
        self.bump();
        Ok(mk(a, self.term()?))
    }

    // ---- programs ----

    pub(crate) fn program(&mut self) -> PResult<HybridProgram> {
        let a = self.seq_part()?;
        if self.eat(&Tok::PlusPlus) {
            Ok(HybridProgram::choice(a, self.program()?))
        } else {
            Ok(a)
        }
    }

    fn seq_part(&mut self) -> PResult<HybridProgram> {
        let a = self.primary_program()?;
        if self.eat(&Tok::Semi) {
            Ok(HybridProgram::seq(a, self.seq_part()?))
        } else {
            Ok(a)
        }
    }

    fn primary_program(&mut self) -> PResult<HybridProgram> {
        match self.peek() {
            Tok::Ident(_) => {
                let x = self.ident("a variable")?;
                self.expect(Tok::Assign)?;
                Ok(HybridProgram::assign(VarName::new(x), self.term()?))
            }
            Tok::Quest => {
                self.bump();
                Ok(HybridProgram::test(self.unary_formula()?))
            }
            Tok::LBrace => {
                let brace = self.pos;
                self.bump();
                let is_ode =
                    matches!(self.peek(), Tok::Ident(_)) && self.peek2() == &Tok::Prime;
                let body = if is_ode {
                    let ode = self.ode_tail()?;
                    let sol = self.maybe_solution(&ode)?;
                    self.ode_records.push((brace, sol));
                    ode
                } else {
                    let p = self.program()?;
                    self.expect(Tok::RBrace)?;
                    p
                };
                if self.eat(&Tok::Star) {
                    let inv = self.maybe_invariant()?;
                    self.loop_records.push((brace, inv));
                    Ok(HybridProgram::repeat(body))
                } else {
                    Ok(body)
                }
            }
            _ => Err(self.err(vec![
                "an assignment".into(),
                "a test `?`".into(),
                "`{`".into(),
            ])),
        }
    }

    /// Parses `x' = e, ... [& Q] }` after the opening brace.
    fn ode_tail(&mut self) -> PResult<HybridProgram> {
        let mut eqs = Vec::new();
        loop {
            let x = self.ident("an ODE variable")?;
            self.expect(Tok::Prime)?;
            self.expect(Tok::Eq)?;
            eqs.push((VarName::new(x), self.term()?));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        let dom = if self.eat(&Tok::Amp) { self.formula()? } else { Formula::True };
        self.expect(Tok::RBrace)?;
        Ok(HybridProgram::Ode(eqs, dom))
    }

    fn maybe_invariant(&mut self) -> PResult<Option<Formula>> {
        if !self.allow_annotations || self.peek() != &Tok::AtInvariant {
            return Ok(None);
        }
        self.bump();
        self.expect(Tok::LParen)?;
        let f = self.formula()?;
        self.expect(Tok::RParen)?;
        if self.peek() == &Tok::AtInvariant {
            let (line, col) = self.span();
            return Err(ParseError::DuplicateAnnotation { line, col, kind: "invariant" });
        }
        Ok(Some(f))
    }

    /// Parses `@solution(t; x=e, ...)` and checks its scope: solution terms
    /// may mention only the ODE variables, the time variable, and declared
    /// constants, and must cover exactly the ODE variables.
    fn maybe_solution(&mut self, ode: &HybridProgram) -> PResult<Option<SolutionAnnotation>> {
        if !self.allow_annotations || self.peek() != &Tok::AtSolution {
            return Ok(None);
        }
        let HybridProgram::Ode(eqs, _) = ode else { unreachable!("solution follows an ODE") };
        let ode_vars: BTreeSet<&VarName> = eqs.iter().map(|(x, _)| x).collect();
        self.bump();
        self.expect(Tok::LParen)?;
        let at_time = self.span();
        let time = VarName::new(self.ident("a time variable")?);
        if ode_vars.contains(&time) || self.constants.contains(&time.base) {
            return Err(SyntaxError {
                line: at_time.0,
                col: at_time.1,
                expected: vec!["a fresh time variable".into()],
                found: format!("`{time}`"),
            }
            .into());
        }
        self.expect(Tok::Semi)?;
        let mut per_var = Vec::new();
        loop {
            let at = self.span();
            let x = VarName::new(self.ident("an ODE variable")?);
            if !ode_vars.contains(&x) {
                return Err(SyntaxError {
                    line: at.0,
                    col: at.1,
                    expected: vec!["an ODE variable".into()],
                    found: format!("`{x}`"),
                }
                .into());
            }
            if per_var.iter().any(|(y, _)| y == &x) {
                return Err(ParseError::DuplicateAnnotation {
                    line: at.0,
                    col: at.1,
                    kind: "solution",
                });
            }
            self.expect(Tok::Eq)?;
            let rhs = self.term()?;
            for v in term_vars(&rhs) {
                let in_scope = ode_vars.contains(&v)
                    || v == time
                    || (!v.primed && self.constants.contains(&v.base));
                if !in_scope {
                    return Err(ParseError::UnknownConstant {
                        line: at.0,
                        col: at.1,
                        name: v.to_string(),
                    });
                }
            }
            per_var.push((x, rhs));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        if per_var.len() != ode_vars.len() {
            let (line, col) = self.span();
            return Err(SyntaxError {
                line,
                col,
                expected: vec!["a solution for every ODE variable".into()],
                found: format!("{} of {} bound", per_var.len(), ode_vars.len()),
            }
            .into());
        }
        if self.peek() == &Tok::AtSolution {
            let (line, col) = self.span();
            return Err(ParseError::DuplicateAnnotation { line, col, kind: "solution" });
        }
        Ok(Some(SolutionAnnotation { time, per_var }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bouncing_ball_program_shape() {
        let p = parse_program(
            "{{x'=v, v'=-g & x>=0}; {?x=0; v:=-c*v ++ ?x!=0}}*",
        )
        .unwrap();
        let HybridProgram::Loop(body) = &p else { panic!("loop: {p}") };
        let HybridProgram::Seq(plant, ctrl) = body.as_ref() else { panic!("seq") };
        let HybridProgram::Ode(eqs, dom) = plant.as_ref() else { panic!("ode") };
        assert_eq!(eqs.len(), 2);
        assert_eq!(eqs[0].0, VarName::new("x"));
        assert_eq!(eqs[1].1, Term::neg(Term::var("g")));
        assert_eq!(*dom, Formula::Geq(Term::var("x"), Term::int(0)));
        let HybridProgram::Choice(bounce, skip) = ctrl.as_ref() else { panic!("choice") };
        assert!(matches!(bounce.as_ref(), HybridProgram::Seq(..)));
        assert!(matches!(skip.as_ref(), HybridProgram::Test(_)));
    }

    #[test]
    fn unary_minus_binds_tighter_than_product() {
        assert_eq!(
            parse_term("-c*v").unwrap(),
            Term::times(Term::neg(Term::var("c")), Term::var("v"))
        );
        assert_eq!(parse_term("-(c*v)").unwrap(), Term::neg(Term::times(Term::var("c"), Term::var("v"))));
    }

    #[test]
    fn division_folds_into_rational_coefficients() {
        let half = Term::Lit(BigRational::new(1.into(), 2.into()));
        assert_eq!(parse_term("1/2").unwrap(), half.clone());
        assert_eq!(parse_term("g/2").unwrap(), Term::times(Term::var("g"), half));
        assert!(matches!(parse_term("x/y"), Err(ParseError::Syntax(_))));
        assert!(matches!(parse_term("x/0"), Err(ParseError::Syntax(_))));
    }

    #[test]
    fn exponents_are_nonnegative_literals() {
        assert_eq!(parse_term("x^2").unwrap(), Term::pow(Term::var("x"), 2));
        let e = parse_term("x^-1").unwrap_err();
        let ParseError::Syntax(s) = e else { panic!("syntax error") };
        assert!(s.expected[0].contains("nonnegative integer exponent"));
    }

    #[test]
    fn implication_is_right_associative_and_loose() {
        let f = parse_formula("x=0 -> y=0 -> x=0 & y=0").unwrap();
        let Formula::Imply(_, rest) = f else { panic!("imply") };
        assert!(matches!(*rest, Formula::Imply(..)));
    }

    #[test]
    fn parenthesized_comparison_backtracks() {
        let f = parse_formula("(x+1)>=0 & (x=0 | x>=1)").unwrap();
        let Formula::And(left, right) = f else { panic!("and") };
        assert!(matches!(*left, Formula::Geq(..)));
        assert!(matches!(*right, Formula::Or(..)));
    }

    #[test]
    fn modalities_parse_at_unary_level() {
        let f = parse_formula("[x:=1]x>=0 -> <{x:=x+1}*>x>=5").unwrap();
        let Formula::Imply(b, d) = f else { panic!("imply") };
        assert!(matches!(*b, Formula::Box_(..)));
        let Formula::Diamond(p, _) = *d else { panic!("diamond") };
        assert!(matches!(*p, HybridProgram::Loop(_)));
    }

    #[test]
    fn star_requires_braces() {
        assert!(parse_program("x:=1*").is_err());
        assert!(parse_program("{x:=1}*").is_ok());
    }

    #[test]
    fn annotations_rejected_outside_model_files() {
        let e = parse_program("{x:=1}* @invariant(x>=0)").unwrap_err();
        assert!(matches!(e, ParseError::Syntax(_)));
    }

    #[test]
    fn sequent_splits_on_turnstile() {
        let s = parse_sequent("x>=0, v=0 |- x>=0").unwrap();
        assert_eq!(s.ante.len(), 2);
        assert_eq!(s.succ.len(), 1);
        assert_eq!(parse_sequent("|- true").unwrap().ante.len(), 0);
    }

    #[test]
    fn error_carries_position() {
        let e = parse_formula("x >=\n& y").unwrap_err();
        let ParseError::Syntax(s) = e else { panic!() };
        assert_eq!((s.line, s.col), (2, 1));
    }

    #[test]
    fn prime_parses_in_term_position() {
        assert_eq!(parse_term("x'").unwrap(), Term::Var(VarName::primed("x")));
    }
}
