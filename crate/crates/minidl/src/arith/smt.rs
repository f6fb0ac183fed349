//! External SMT backend for quantifier-free nonlinear real arithmetic.
//!
//! The sequent's negation is rendered as an SMT-LIB 2 script over `QF_NRA`
//! (free variables become `declare-const`s, so the query is the negation of
//! the universal closure) and piped to a solver subprocess. `unsat` certifies
//! validity; `sat` yields a candidate model that is only reported as a
//! counterexample after it actually falsifies the sequent under exact
//! evaluation; `unknown`, timeouts, and unparseable models all degrade to an
//! Unknown verdict rather than an error.
//!
//! The solver is any command that reads a script on stdin and answers on
//! stdout, defaulting to the bundled Node harness under `tools/z3smt/`.

use super::decide::{Method, Verdict};
use super::fm::falsifies;
use crate::sim::state::State;
use crate::syntax::ast::{Formula, Sequent, Term, VarName};
use crate::syntax::vars::{free_vars, VarSet};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Duration;
use thiserror::Error;

/// How to reach the external solver.
#[derive(Debug, Clone)]
pub struct SmtConfig {
    /// Program and arguments; the script is written to its stdin.
    pub command: Vec<String>,
    /// Wall-clock budget for one query.
    pub timeout: Duration,
    /// When set, every emitted script is also dumped here for inspection.
    pub debug_dir: Option<PathBuf>,
}

impl SmtConfig {
    /// Command given explicitly, or `MINIDL_SMT_CMD`, or the bundled harness.
    pub fn resolve(explicit: Option<&str>) -> SmtConfig {
        let raw = explicit
            .map(str::to_owned)
            .or_else(|| std::env::var("MINIDL_SMT_CMD").ok())
            .unwrap_or_else(default_command);
        SmtConfig {
            command: raw.split_whitespace().map(str::to_owned).collect(),
            timeout: Duration::from_secs(30),
            debug_dir: std::env::var("MINIDL_SMT_DEBUG_DIR").ok().map(PathBuf::from),
        }
    }
}

/// Finds the bundled Node harness relative to likely working directories.
fn default_command() -> String {
    let candidates = [
        PathBuf::from("tools/z3smt/smt.js"),
        PathBuf::from("../../tools/z3smt/smt.js"),
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../tools/z3smt/smt.js"),
    ];
    for c in candidates {
        if c.exists() {
            return format!("node {}", c.display());
        }
    }
    "node tools/z3smt/smt.js".to_owned()
}

#[derive(Debug, Error)]
pub enum SmtError {
    #[error("solver `{command}` could not be started: {source}")]
    SolverUnavailable {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("solver protocol error: {0}")]
    ProtocolError(String),
}

static QUERY_COUNTER: AtomicUsize = AtomicUsize::new(0);

/// Decides a quantifier-free sequent by refuting its negation with an
/// external solver.
pub fn smt_decide(seq: &Sequent, cfg: &SmtConfig) -> Result<Verdict, SmtError> {
    if !seq.is_quantifier_free() {
        return Ok(Verdict::Unknown("goal is not quantifier-free".into()));
    }
    let vars: VarSet = seq.ante.iter().chain(&seq.succ).flat_map(free_vars).collect();
    let script = match render_script(seq, &vars) {
        Ok(s) => s,
        Err(reason) => return Ok(Verdict::Unknown(reason)),
    };
    if let Some(dir) = &cfg.debug_dir {
        let n = QUERY_COUNTER.fetch_add(1, Ordering::Relaxed);
        let _ = std::fs::create_dir_all(dir);
        let _ = std::fs::write(dir.join(format!("query_{n}.smt2")), &script);
    }
    let output = run_solver(cfg, &script)?;
    let Some(output) = output else {
        return Ok(Verdict::Unknown("solver timed out".into()));
    };
    match parse_status(&output) {
        Some(("unsat", _)) => Ok(Verdict::Valid(Method::Smt)),
        Some(("unknown", _)) => Ok(Verdict::Unknown("solver answered unknown".into())),
        Some(("sat", rest)) => {
            let Some(model) = parse_model(rest) else {
                return Ok(Verdict::Unknown("solver model could not be parsed".into()));
            };
            let mut env: BTreeMap<VarName, BigRational> = BTreeMap::new();
            for x in &vars {
                env.insert(x.clone(), model.get(x).cloned().unwrap_or_else(BigRational::zero));
            }
            let witness = State::exact(env);
            if falsifies(seq, &witness) {
                Ok(Verdict::Invalid(witness))
            } else {
                Ok(Verdict::Unknown("solver model failed exact confirmation".into()))
            }
        }
        _ => Err(SmtError::ProtocolError(format!(
            "no sat/unsat/unknown in solver output: {:?}",
            output.chars().take(200).collect::<String>()
        ))),
    }
}

/// Runs the solver with the script on stdin; `None` means timeout.
fn run_solver(cfg: &SmtConfig, script: &str) -> Result<Option<String>, SmtError> {
    let display = cfg.command.join(" ");
    let (program, args) = cfg
        .command
        .split_first()
        .ok_or_else(|| SmtError::ProtocolError("empty solver command".into()))?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|source| SmtError::SolverUnavailable { command: display.clone(), source })?;
    // The script is far below pipe capacity, so a synchronous write is safe.
    if let Some(mut stdin) = child.stdin.take() {
        let _ = stdin.write_all(script.as_bytes());
    }
    let stdout = child.stdout.take().ok_or_else(|| {
        let _ = child.kill();
        SmtError::ProtocolError("solver stdout unavailable".into())
    })?;
    let (tx, rx) = mpsc::channel();
    let reader = std::thread::spawn(move || {
        let mut buf = String::new();
        use std::io::Read;
        let mut stdout = stdout;
        let _ = stdout.read_to_string(&mut buf);
        let _ = tx.send(buf);
    });
    let result = rx.recv_timeout(cfg.timeout);
    if result.is_err() {
        let _ = child.kill();
    }
    let _ = child.wait();
    let _ = reader.join();
    Ok(result.ok())
}

/// Extracts the first status token and the text that follows it.
fn parse_status(output: &str) -> Option<(&'static str, &str)> {
    let mut rest = output;
    while !rest.is_empty() {
        let line_end = rest.find('\n').map(|i| i + 1).unwrap_or(rest.len());
        let (line, tail) = rest.split_at(line_end);
        match line.trim() {
            "sat" => return Some(("sat", tail)),
            "unsat" => return Some(("unsat", tail)),
            "unknown" => return Some(("unknown", tail)),
            _ => rest = tail,
        }
    }
    None
}

fn render_script(seq: &Sequent, vars: &VarSet) -> Result<String, String> {
    let mut negation = seq.ante.clone();
    negation.extend(seq.succ.iter().map(|f| Formula::not(f.clone())));
    let goal = Formula::conj(negation);
    let mut out = String::new();
    out.push_str("(set-option :produce-models true)\n(set-logic QF_NRA)\n");
    for x in vars {
        let _ = writeln!(out, "(declare-const {} Real)", smt_ident(x));
    }
    let _ = writeln!(out, "(assert {})", smt_formula(&goal)?);
    out.push_str("(check-sat)\n(get-model)\n");
    Ok(out)
}

fn smt_ident(x: &VarName) -> String {
    if x.primed {
        format!("|{}'|", x.base)
    } else {
        x.base.clone()
    }
}

fn smt_rational(q: &BigRational) -> String {
    let body = if q.is_integer() {
        format!("{}.0", q.numer().magnitude())
    } else {
        format!("(/ {}.0 {}.0)", q.numer().magnitude(), q.denom().magnitude())
    };
    if q.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

fn smt_term(t: &Term) -> Result<String, String> {
    Ok(match t {
        Term::Var(x) => smt_ident(x),
        Term::Lit(q) => smt_rational(q),
        Term::Neg(a) => format!("(- {})", smt_term(a)?),
        Term::Plus(a, b) => format!("(+ {} {})", smt_term(a)?, smt_term(b)?),
        Term::Minus(a, b) => format!("(- {} {})", smt_term(a)?, smt_term(b)?),
        Term::Times(a, b) => format!("(* {} {})", smt_term(a)?, smt_term(b)?),
        Term::Pow(a, n) => {
            if *n > 64 {
                return Err(format!("exponent {n} too large for solver rendering"));
            }
            match n {
                0 => "1.0".to_owned(),
                1 => smt_term(a)?,
                _ => {
                    let base = smt_term(a)?;
                    let mut s = String::from("(*");
                    for _ in 0..*n {
                        let _ = write!(s, " {base}");
                    }
                    s.push(')');
                    s
                }
            }
        }
    })
}

fn smt_formula(f: &Formula) -> Result<String, String> {
    Ok(match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Eq(a, b) => format!("(= {} {})", smt_term(a)?, smt_term(b)?),
        Formula::Neq(a, b) => format!("(not (= {} {}))", smt_term(a)?, smt_term(b)?),
        Formula::Geq(a, b) => format!("(>= {} {})", smt_term(a)?, smt_term(b)?),
        Formula::Gt(a, b) => format!("(> {} {})", smt_term(a)?, smt_term(b)?),
        Formula::Leq(a, b) => format!("(<= {} {})", smt_term(a)?, smt_term(b)?),
        Formula::Lt(a, b) => format!("(< {} {})", smt_term(a)?, smt_term(b)?),
        Formula::Not(g) => format!("(not {})", smt_formula(g)?),
        Formula::And(a, b) => format!("(and {} {})", smt_formula(a)?, smt_formula(b)?),
        Formula::Or(a, b) => format!("(or {} {})", smt_formula(a)?, smt_formula(b)?),
        Formula::Imply(a, b) => format!("(=> {} {})", smt_formula(a)?, smt_formula(b)?),
        Formula::Equiv(a, b) => format!("(= {} {})", smt_formula(a)?, smt_formula(b)?),
        Formula::Forall(..) | Formula::Exists(..) | Formula::Box_(..) | Formula::Diamond(..) => {
            return Err("quantifiers and modalities are not rendered".into())
        }
    })
}

// ---- model parsing -------------------------------------------------------

#[derive(Debug)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokenize(s: &str) -> Vec<String> {
    let mut toks = Vec::new();
    let mut cur = String::new();
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' | ')' => {
                if !cur.is_empty() {
                    toks.push(std::mem::take(&mut cur));
                }
                toks.push(c.to_string());
            }
            '|' => {
                // quoted symbol: read through the closing pipe
                for q in chars.by_ref() {
                    if q == '|' {
                        break;
                    }
                    cur.push(q);
                }
                toks.push(std::mem::take(&mut cur));
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    toks.push(std::mem::take(&mut cur));
                }
            }
            _ => cur.push(c),
        }
    }
    if !cur.is_empty() {
        toks.push(cur);
    }
    toks
}

fn parse_sexps(toks: &[String]) -> Vec<Sexp> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    for t in toks {
        match t.as_str() {
            "(" => stack.push(Vec::new()),
            ")" => {
                let done = stack.pop().unwrap_or_default();
                match stack.last_mut() {
                    Some(top) => top.push(Sexp::List(done)),
                    None => stack.push(vec![Sexp::List(done)]),
                }
            }
            _ => {
                if let Some(top) = stack.last_mut() {
                    top.push(Sexp::Atom(t.clone()));
                }
            }
        }
    }
    stack.pop().unwrap_or_default()
}

/// Pulls `(define-fun name () Real value)` bindings out of solver output.
fn parse_model(text: &str) -> Option<BTreeMap<VarName, BigRational>> {
    let sexps = parse_sexps(&tokenize(text));
    let mut out = BTreeMap::new();
    let mut found_any = false;
    let visit = |items: &[Sexp], out: &mut BTreeMap<VarName, BigRational>| -> Option<()> {
        if let [Sexp::Atom(kw), Sexp::Atom(name), Sexp::List(args), Sexp::Atom(sort), value] =
            items
        {
            if kw == "define-fun" && args.is_empty() && sort == "Real" {
                let var = match name.strip_suffix('\'') {
                    Some(base) => VarName::primed(base),
                    None => VarName::new(name.clone()),
                };
                out.insert(var, parse_value(value)?);
            }
        }
        Some(())
    };
    // Models arrive either as a single `(model ...)`/`(...)` wrapper or as a
    // bare sequence of define-funs.
    for s in &sexps {
        if let Sexp::List(items) = s {
            if matches!(items.first(), Some(Sexp::Atom(a)) if a == "define-fun") {
                found_any = true;
                visit(items, &mut out)?;
            } else {
                for inner in items {
                    if let Sexp::List(def) = inner {
                        if matches!(def.first(), Some(Sexp::Atom(a)) if a == "define-fun") {
                            found_any = true;
                            visit(def, &mut out)?;
                        }
                    }
                }
            }
        }
    }
    if found_any {
        Some(out)
    } else {
        None
    }
}

/// Numeric model values: decimals, integers, `(- v)`, and `(/ a b)`.
fn parse_value(s: &Sexp) -> Option<BigRational> {
    match s {
        Sexp::Atom(a) => parse_decimal(a),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(op), v] if op == "-" => Some(-parse_value(v)?),
            [Sexp::Atom(op), a, b] if op == "/" => {
                let d = parse_value(b)?;
                if d.is_zero() {
                    return None;
                }
                Some(parse_value(a)? / d)
            }
            _ => None,
        },
    }
}

fn parse_decimal(a: &str) -> Option<BigRational> {
    let (sign, digits) = match a.strip_prefix('-') {
        Some(rest) => (-BigRational::one(), rest),
        None => (BigRational::one(), a),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let mut all = String::from(int_part);
    all.push_str(frac_part);
    let numer: BigInt = all.parse().ok()?;
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    Some(sign * BigRational::new(numer, denom))
}
