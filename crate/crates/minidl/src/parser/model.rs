//! Model files (`.dlm`): an optional `Constants.` section followed by a
//! `Problem.` formula, with proof annotations inline in the program text.
//!
//! Constants bound to literals are substituted into the problem and into
//! every annotation at parse time, and the results constant-folded, so a
//! fully bound model reaches the prover with ground coefficients only.
//! Annotations are keyed by construct occurrence: the `k`-th ODE (or loop)
//! in a preorder walk of the problem has index `k`.

use super::lexer::Tok;
use super::{ParseError, Parser, SyntaxError};
use crate::syntax::ast::{Formula, HybridProgram, Term, VarName};
use crate::syntax::subst::{subst_term_many, substitute_many, Substitution};
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Closed-form solution of one ODE: the time variable and one polynomial
/// per ODE variable giving its value at time `t` from the initial state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionAnnotation {
    pub time: VarName,
    pub per_var: Vec<(VarName, Term)>,
}

impl SolutionAnnotation {
    /// The solution term for one variable.
    pub fn for_var(&self, x: &VarName) -> Option<&Term> {
        self.per_var.iter().find(|(y, _)| y == x).map(|(_, t)| t)
    }
}

impl fmt::Display for SolutionAnnotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@solution({}", self.time)?;
        for (i, (x, t)) in self.per_var.iter().enumerate() {
            write!(f, "{} {x}={t}", if i == 0 { ";" } else { "," })?;
        }
        write!(f, ")")
    }
}

/// A parsed model file with constants already substituted.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub name: String,
    /// Declared constants in order, with their literal binding if any.
    pub constants: Vec<(String, Option<BigRational>)>,
    /// Loop invariant annotations by loop occurrence index.
    pub invariants: BTreeMap<usize, Formula>,
    /// ODE solution annotations by ODE occurrence index.
    pub solutions: BTreeMap<usize, SolutionAnnotation>,
    pub problem: Formula,
}

impl ModelFile {
    /// The substitution binding every literal-valued constant.
    pub fn bindings(&self) -> Substitution {
        self.constants
            .iter()
            .filter_map(|(n, v)| {
                v.clone().map(|q| (VarName::new(n.clone()), Term::from_rational(q)))
            })
            .collect()
    }

    /// Splits a problem of the shape `A -> [a]B` into its three parts.
    pub fn implication_parts(&self) -> Option<(&Formula, &HybridProgram, &Formula)> {
        if let Formula::Imply(a, rhs) = &self.problem {
            if let Formula::Box_(p, b) = rhs.as_ref() {
                return Some((a, p, b));
            }
        }
        None
    }

    /// The program of the first modality in the problem, if any.
    pub fn program(&self) -> Option<&HybridProgram> {
        fn scan(f: &Formula) -> Option<&HybridProgram> {
            match f {
                Formula::Box_(p, _) | Formula::Diamond(p, _) => Some(p),
                Formula::Not(g) | Formula::Forall(_, g) | Formula::Exists(_, g) => scan(g),
                Formula::And(a, b)
                | Formula::Or(a, b)
                | Formula::Imply(a, b)
                | Formula::Equiv(a, b) => scan(a).or_else(|| scan(b)),
                _ => None,
            }
        }
        scan(&self.problem)
    }

    /// The single loop invariant, when the model has exactly one.
    pub fn unique_invariant(&self) -> Option<&Formula> {
        (self.invariants.len() == 1).then(|| self.invariants.values().next().unwrap())
    }

    /// The single ODE solution, when the model has exactly one.
    pub fn unique_solution(&self) -> Option<&SolutionAnnotation> {
        (self.solutions.len() == 1).then(|| self.solutions.values().next().unwrap())
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read `{}`: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
}

pub fn parse_model_file(path: impl AsRef<Path>) -> Result<ModelFile, ModelError> {
    let path = path.as_ref();
    let src = std::fs::read_to_string(path)
        .map_err(|source| ModelError::Io { path: path.into(), source })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    parse_model_source(&name, &src)
        .map_err(|source| ModelError::Parse { path: path.into(), source })
}

pub fn parse_model_source(name: &str, src: &str) -> Result<ModelFile, ParseError> {
    let mut p = Parser::new(src, true)?;

    let mut constants: Vec<(String, Option<BigRational>)> = Vec::new();
    if at_section(&p, "Constants") {
        p.bump();
        p.bump();
        while !at_section(&p, "Problem") && p.peek() != &Tok::Eof {
            let at = p.span();
            let cname = p.ident("a constant name")?;
            if p.constants.contains(&cname) {
                return Err(SyntaxError {
                    line: at.0,
                    col: at.1,
                    expected: vec!["a fresh constant name".into()],
                    found: format!("duplicate `{cname}`"),
                }
                .into());
            }
            let value = if p.eat(&Tok::Eq) { Some(rational_literal(&mut p)?) } else { None };
            p.expect(Tok::Semi)?;
            p.constants.insert(cname.clone());
            constants.push((cname, value));
        }
    }

    if !at_section(&p, "Problem") {
        return Err(p.err(vec!["`Problem.`".into()]));
    }
    p.bump();
    p.bump();
    let problem = p.formula()?;
    p.expect_eof()?;

    // Recover preorder numbering: a construct's opening brace precedes every
    // token of its descendants, so brace order is preorder among ODEs and
    // among loops.
    let mut ode_records = std::mem::take(&mut p.ode_records);
    ode_records.sort_by_key(|(at, _)| *at);
    let solutions: BTreeMap<usize, SolutionAnnotation> = ode_records
        .into_iter()
        .enumerate()
        .filter_map(|(i, (_, ann))| ann.map(|a| (i, a)))
        .collect();
    let mut loop_records = std::mem::take(&mut p.loop_records);
    loop_records.sort_by_key(|(at, _)| *at);
    let invariants: BTreeMap<usize, Formula> = loop_records
        .into_iter()
        .enumerate()
        .filter_map(|(i, (_, inv))| inv.map(|f| (i, f)))
        .collect();

    let mut model =
        ModelFile { name: name.into(), constants, invariants, solutions, problem };

    let bindings = model.bindings();
    if !bindings.is_empty() {
        model.problem = substitute_many(&model.problem, &bindings)?.fold();
        for inv in model.invariants.values_mut() {
            *inv = substitute_many(inv, &bindings)?.fold();
        }
        for sol in model.solutions.values_mut() {
            for (_, t) in sol.per_var.iter_mut() {
                *t = subst_term_many(t, &bindings).fold();
            }
        }
    }
    Ok(model)
}

fn at_section(p: &Parser, name: &str) -> bool {
    matches!(p.peek(), Tok::Ident(x) if x == name) && p.peek2() == &Tok::Dot
}

fn rational_literal(p: &mut Parser) -> Result<BigRational, ParseError> {
    let neg = p.eat(&Tok::Minus);
    let Tok::Nat(n) = p.peek().clone() else {
        return Err(p.err(vec!["a rational literal".into()]));
    };
    p.bump();
    let mut q = BigRational::from_integer(n);
    if p.eat(&Tok::Slash) {
        let Tok::Nat(d) = p.peek().clone() else {
            return Err(p.err(vec!["a literal denominator".into()]));
        };
        if d.is_zero() {
            return Err(p.err(vec!["a nonzero denominator".into()]));
        }
        p.bump();
        q /= BigRational::from_integer(d);
    }
    Ok(if neg { -q } else { q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;

    const BALL: &str = r#"
/* bouncing ball with symbolic coefficients */
Constants.
  g;
  c;
Problem.
  0<=x & x=H & v=0 & g>0 & 1=c ->
  [
    {
      {x'=v, v'=-g & x>=0} @solution(t; x=x+v*t-g/2*t^2, v=v-g*t);
      {?x=0; v:=-c*v ++ ?x!=0}
    }* @invariant(2*g*x=2*g*H-v^2 & x>=0 & g>0 & c=1)
  ](0<=x & x<=H)
"#;

    #[test]
    fn bouncing_ball_file_round_trips_annotations() {
        let m = parse_model_source("ball", BALL).unwrap();
        assert_eq!(m.constants, vec![("g".into(), None), ("c".into(), None)]);
        let inv = m.unique_invariant().unwrap();
        assert_eq!(
            inv,
            &parse_formula("2*g*x=2*g*H-v^2 & x>=0 & g>0 & c=1").unwrap()
        );
        let sol = m.unique_solution().unwrap();
        assert_eq!(sol.time, VarName::new("t"));
        assert_eq!(sol.per_var.len(), 2);
        let (a, prog, b) = m.implication_parts().unwrap();
        assert_eq!(a.conjuncts().len(), 5);
        assert!(matches!(prog, HybridProgram::Loop(_)));
        assert_eq!(b, &parse_formula("0<=x & x<=H").unwrap());
    }

    #[test]
    fn literal_constants_substitute_and_fold() {
        let src = BALL.replace("g;\n  c;", "g = 2;\n  c = 1;");
        let m = parse_model_source("ball2", &src).unwrap();
        // g>0 and 1=c become ground truths and vanish from the assumptions
        let (a, _, _) = m.implication_parts().unwrap();
        assert_eq!(a, &parse_formula("0<=x & x=H & v=0").unwrap());
        let inv = m.unique_invariant().unwrap();
        assert_eq!(inv, &parse_formula("4*x=4*H-v^2 & x>=0").unwrap());
        let sol = m.unique_solution().unwrap();
        assert_eq!(sol.for_var(&VarName::new("v")).unwrap().to_string(), "v-2*t");
    }

    #[test]
    fn missing_problem_section_is_a_syntax_error() {
        let e = parse_model_source("m", "Constants. g = 2;").unwrap_err();
        let ParseError::Syntax(s) = e else { panic!("syntax: {e}") };
        assert!(s.expected[0].contains("Problem"));
    }

    #[test]
    fn duplicate_invariant_is_rejected() {
        let src = "Problem. [{x:=x}* @invariant(x=0) @invariant(x=1)]x=0";
        assert!(matches!(
            parse_model_source("m", src),
            Err(ParseError::DuplicateAnnotation { kind: "invariant", .. })
        ));
    }

    #[test]
    fn solution_scope_is_checked() {
        let src = "Problem. [{x'=v} @solution(t; x=x+w*t)]true";
        match parse_model_source("m", src) {
            Err(ParseError::UnknownConstant { name, .. }) => assert_eq!(name, "w"),
            other => panic!("expected UnknownConstant, got {other:?}"),
        }
    }

    #[test]
    fn solution_must_cover_every_ode_variable() {
        let src = "Problem. [{x'=v, v'=0} @solution(t; x=x+v*t)]true";
        assert!(matches!(parse_model_source("m", src), Err(ParseError::Syntax(_))));
    }

    #[test]
    fn annotation_indices_count_constructs_in_preorder() {
        let src = "Problem. [{{x:=x+1}* @invariant(x>=1); {{y:=y}* ; {y'=1} @solution(s; y=y+s)}* @invariant(y=y)}* @invariant(x>=0)]true";
        let m = parse_model_source("m", src).unwrap();
        // outer loop is 0, the x-loop is 1, the y-group loop is 2
        assert_eq!(m.invariants.len(), 3);
        assert_eq!(m.invariants[&0], parse_formula("x>=0").unwrap());
        assert_eq!(m.invariants[&1], parse_formula("x>=1").unwrap());
        assert_eq!(m.invariants[&2], parse_formula("y=y").unwrap());
        assert_eq!(m.solutions[&0].time, VarName::new("s"));
    }
}
