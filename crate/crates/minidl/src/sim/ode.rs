//! Continuous evolution: sampled integration of ODE systems.
//!
//! Two modes. Closed-form mode evaluates a solution annotation's polynomials
//! at the requested sample times — exact in rational mode, which is what the
//! executable-semantics checks rely on. RK4 mode marches classical
//! fourth-order Runge–Kutta with a fixed step and needs no annotation.
//!
//! The evolution-domain formula is checked at every emitted sample,
//! including time zero: a run that starts outside the domain has no
//! transitions at all, and the first violating sample rejects that time and
//! everything after it. Emitted states carry primed variables with the
//! right-hand-side values at the sample; callers that leave the evolution
//! drop them again.
//!
//! Domain checking is sample-based: a violation strictly between samples
//! goes unnoticed. The bundled models put all crossings on grid times.

use super::eval::{eval_term, holds_qf, EvalError};
use super::state::{NumMode, State, Value};
use crate::parser::SolutionAnnotation;
use crate::syntax::ast::{Formula, Term, VarName};
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use std::fmt::Write as _;
use thiserror::Error;

/// An ODE with its evolution domain and optional closed-form solution.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSpec {
    pub flow: Vec<(VarName, Term)>,
    pub domain: Formula,
    pub solution: Option<SolutionAnnotation>,
}

/// How continuous dynamics are discretized.
#[derive(Debug, Clone, PartialEq)]
pub enum OdeMode {
    /// Evaluate the solution annotation at sample times; exact in rational
    /// mode.
    ClosedForm,
    /// Classical fixed-step fourth-order Runge–Kutta.
    Rk4 { step: f64 },
}

/// A time-stamped run: states at sample times plus tagged events.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub samples: Vec<(Value, State)>,
    pub events: Vec<(Value, String)>,
}

impl Trace {
    pub fn push_sample(&mut self, t: Value, s: State) {
        self.samples.push((t, s));
    }

    pub fn push_event(&mut self, t: Value, tag: impl Into<String>) {
        self.events.push((t, tag.into()));
    }

    /// Final sampled state, if any.
    pub fn last_state(&self) -> Option<&State> {
        self.samples.last().map(|(_, s)| s)
    }

    /// CSV rows `t,<var1>,...` followed by `# t=<t> <tag>` event comments.
    pub fn to_csv(&self) -> String {
        let mut vars: std::collections::BTreeSet<VarName> = Default::default();
        for (_, s) in &self.samples {
            vars.extend(s.vars());
        }
        let mut out = String::from("t");
        for v in &vars {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
        for (t, s) in &self.samples {
            let _ = write!(out, "{t}");
            for v in &vars {
                match s.get(v) {
                    Some(val) => {
                        let _ = write!(out, ",{val}");
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        for (t, tag) in &self.events {
            let _ = writeln!(out, "# t={t} {tag}");
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("evolution domain violated at t={time}")]
    DomainViolation { time: Value },
    #[error("closed-form integration needs a solution annotation")]
    MissingSolution,
    #[error("negative duration {0}")]
    NegativeDuration(BigRational),
    #[error("state enumeration exceeded the budget cap of {cap}")]
    BudgetExceeded { cap: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Integrates `ode` from `s` for `duration`, sampling per mode: closed-form
/// emits `{0} ∪ (grid ∩ [0,duration]) ∪ {duration}`, RK4 emits every step.
pub fn integrate_ode(
    s: &State,
    ode: &OdeSpec,
    duration: &BigRational,
    mode: &OdeMode,
    grid: &[BigRational],
) -> Result<Trace, SimError> {
    if duration.is_negative() {
        return Err(SimError::NegativeDuration(duration.clone()));
    }
    match mode {
        OdeMode::ClosedForm => {
            let sol = ode.solution.as_ref().ok_or(SimError::MissingSolution)?;
            let mut times: Vec<BigRational> = vec![BigRational::zero(), duration.clone()];
            times.extend(grid.iter().filter(|t| !t.is_negative() && *t < duration).cloned());
            times.sort();
            times.dedup();
            closed_form_trace(s, ode, sol, &times)
        }
        OdeMode::Rk4 { step } => rk4_trace(s, ode, duration, *step),
    }
}

/// The state reached at time `t` along the annotated solution: ODE variables
/// from the solution polynomials, primes from the flow, everything else
/// carried over.
pub fn closed_form_at(
    s: &State,
    ode: &OdeSpec,
    sol: &SolutionAnnotation,
    t: &BigRational,
) -> Result<State, SimError> {
    // The env holds initial values plus the evolution time; the time
    // variable is fresh for the ODE, so it never collides with the flow.
    let mut env = s.clone();
    let time_value = match s.mode {
        NumMode::Exact => Value::Exact(t.clone()),
        NumMode::Float => Value::Float(t.to_f64().unwrap_or(f64::NAN)),
    };
    env.set(sol.time.clone(), time_value);
    let mut out = s.clone();
    for (x, term) in &sol.per_var {
        out.set(x.clone(), eval_term(&env, term)?);
    }
    set_primes(&mut out, ode)?;
    Ok(out)
}

/// Materializes `x'` with the flow's right-hand side values at this sample.
fn set_primes(state: &mut State, ode: &OdeSpec) -> Result<(), SimError> {
    let base = state.clone();
    for (x, rhs) in &ode.flow {
        state.set(x.to_primed(), eval_term(&base, rhs)?);
    }
    Ok(())
}

fn check_domain(state: &State, ode: &OdeSpec, time: &Value) -> Result<(), SimError> {
    if holds_qf(state, &ode.domain)? {
        Ok(())
    } else {
        Err(SimError::DomainViolation { time: time.clone() })
    }
}

fn closed_form_trace(
    s: &State,
    ode: &OdeSpec,
    sol: &SolutionAnnotation,
    times: &[BigRational],
) -> Result<Trace, SimError> {
    let mut trace = Trace::default();
    for t in times {
        let state = closed_form_at(s, ode, sol, t)?;
        let time = match s.mode {
            NumMode::Exact => Value::Exact(t.clone()),
            NumMode::Float => Value::Float(t.to_f64().unwrap_or(f64::NAN)),
        };
        check_domain(&state, ode, &time)?;
        trace.push_sample(time, state);
    }
    Ok(trace)
}

/// Step cap so a tiny step over a long duration fails fast instead of
/// spinning.
const MAX_STEPS: usize = 2_000_000;

fn rk4_trace(
    s: &State,
    ode: &OdeSpec,
    duration: &BigRational,
    step: f64,
) -> Result<Trace, SimError> {
    if !(step > 0.0) {
        return Err(SimError::NegativeDuration(BigRational::zero()));
    }
    let step_rat = BigRational::from_f64(step)
        .filter(|h| h.is_positive())
        .ok_or(SimError::NegativeDuration(BigRational::zero()))?;
    let whole = (duration / &step_rat).floor();
    let n_whole = whole
        .to_integer()
        .to_usize()
        .filter(|n| *n <= MAX_STEPS)
        .ok_or(SimError::BudgetExceeded { cap: MAX_STEPS })?;
    let tail = duration - &whole * &step_rat;

    let mut trace = Trace::default();
    let mut current = s.clone();
    let mut t = BigRational::zero();
    let emit =
        |trace: &mut Trace, state: &State, t: &BigRational| -> Result<(), SimError> {
            let mut sampled = state.clone();
            set_primes(&mut sampled, ode)?;
            let time = match s.mode {
                NumMode::Exact => Value::Exact(t.clone()),
                NumMode::Float => Value::Float(t.to_f64().unwrap_or(f64::NAN)),
            };
            check_domain(&sampled, ode, &time)?;
            trace.push_sample(time, sampled);
            Ok(())
        };
    emit(&mut trace, &current, &t)?;
    for _ in 0..n_whole {
        current = rk4_step(&current, ode, step, &step_rat)?;
        t += &step_rat;
        emit(&mut trace, &current, &t)?;
    }
    if tail.is_positive() {
        let tail_f = tail.to_f64().unwrap_or(0.0);
        current = rk4_step(&current, ode, tail_f, &tail)?;
        t += &tail;
        emit(&mut trace, &current, &t)?;
    }
    Ok(trace)
}

/// One classical RK4 step; the combination divides by six last, which keeps
/// dyadic systems exact in both numeric modes.
fn rk4_step(
    s: &State,
    ode: &OdeSpec,
    step_f: f64,
    step_rat: &BigRational,
) -> Result<State, SimError> {
    let vars: Vec<&VarName> = ode.flow.iter().map(|(x, _)| x).collect();
    let eval_flow = |at: &State| -> Result<Vec<Value>, SimError> {
        ode.flow.iter().map(|(_, rhs)| Ok(eval_term(at, rhs)?)).collect()
    };
    let offset = |base: &State, k: &[Value], scale_num: f64, scale_rat: &BigRational| -> State {
        let mut out = base.clone();
        for (x, ki) in vars.iter().zip(k) {
            let cur = base.get(x).expect("flow variable present");
            let moved = match (cur, ki) {
                (Value::Float(y), Value::Float(kv)) => Value::Float(y + scale_num * kv),
                (Value::Exact(y), Value::Exact(kv)) => Value::Exact(y + scale_rat * kv),
                _ => Value::Float(f64::NAN),
            };
            out.set((*x).clone(), moved);
        }
        out
    };
    let half_f = step_f / 2.0;
    let half_rat = step_rat / BigRational::from_integer(2.into());
    let k1 = eval_flow(s)?;
    let k2 = eval_flow(&offset(s, &k1, half_f, &half_rat))?;
    let k3 = eval_flow(&offset(s, &k2, half_f, &half_rat))?;
    let k4 = eval_flow(&offset(s, &k3, step_f, step_rat))?;
    let mut out = s.clone();
    for (i, x) in vars.iter().enumerate() {
        let cur = s.get(x).expect("flow variable present");
        let next = match (cur, &k1[i], &k2[i], &k3[i], &k4[i]) {
            (Value::Float(y), Value::Float(a), Value::Float(b), Value::Float(c), Value::Float(d)) => {
                Value::Float(y + step_f * (a + 2.0 * b + 2.0 * c + d) / 6.0)
            }
            (Value::Exact(y), Value::Exact(a), Value::Exact(b), Value::Exact(c), Value::Exact(d)) => {
                let two = BigRational::from_integer(2.into());
                let six = BigRational::from_integer(6.into());
                Value::Exact(y + step_rat * (a + &two * b + &two * c + d) / six)
            }
            _ => Value::Float(f64::NAN),
        };
        out.set((*x).clone(), next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_formula, parse_term};
    use num_traits::One;

    fn ball_ode(domain: &str) -> OdeSpec {
        OdeSpec {
            flow: vec![
                (VarName::new("x"), parse_term("v").unwrap()),
                (VarName::new("v"), parse_term("-g").unwrap()),
            ],
            domain: parse_formula(domain).unwrap(),
            solution: Some(SolutionAnnotation {
                time: VarName::new("t"),
                per_var: vec![
                    (VarName::new("x"), parse_term("x+v*t-g/2*t^2").unwrap()),
                    (VarName::new("v"), parse_term("v-g*t").unwrap()),
                ],
            }),
        }
    }

    fn drop_state() -> State {
        State::exact([
            (VarName::new("x"), BigRational::one()),
            (VarName::new("v"), BigRational::zero()),
            (VarName::new("g"), BigRational::from_integer(2.into())),
        ])
    }

    #[test]
    fn closed_form_is_exact_on_grid_times() {
        let ode = ball_ode("x>=0");
        let half = BigRational::new(1.into(), 2.into());
        let trace =
            integrate_ode(&drop_state(), &ode, &BigRational::one(), &OdeMode::ClosedForm, &[half])
                .unwrap();
        assert_eq!(trace.samples.len(), 3);
        let (t_end, end) = trace.samples.last().unwrap();
        assert_eq!(*t_end, Value::Exact(BigRational::one()));
        assert_eq!(end.get(&VarName::new("x")).unwrap().as_exact().unwrap(), BigRational::zero());
        assert_eq!(
            end.get(&VarName::new("v")).unwrap().as_exact().unwrap(),
            BigRational::from_integer((-2).into())
        );
        // primes carry the flow values at the sample
        assert_eq!(
            end.get(&VarName::primed("x")).unwrap().as_exact().unwrap(),
            BigRational::from_integer((-2).into())
        );
        assert_eq!(
            end.get(&VarName::primed("v")).unwrap().as_exact().unwrap(),
            BigRational::from_integer((-2).into())
        );
    }

    #[test]
    fn rk4_matches_polynomial_dynamics_within_tolerance() {
        let ode = ball_ode("true");
        let s = State::float([
            (VarName::new("x"), 1.0),
            (VarName::new("v"), 0.0),
            (VarName::new("g"), 2.0),
        ]);
        let trace = integrate_ode(
            &s,
            &ode,
            &BigRational::one(),
            &OdeMode::Rk4 { step: 1e-3 },
            &[],
        )
        .unwrap();
        let end = trace.last_state().unwrap();
        let x = end.get(&VarName::new("x")).unwrap().as_f64();
        let v = end.get(&VarName::new("v")).unwrap().as_f64();
        assert!(x.abs() <= 1e-6, "x={x}");
        assert!((v + 2.0).abs() <= 1e-6, "v={v}");
    }

    #[test]
    fn domain_violation_reports_first_bad_sample() {
        let ode = ball_ode("x>=0");
        let s = State::float([
            (VarName::new("x"), 1.0),
            (VarName::new("v"), 0.0),
            (VarName::new("g"), 2.0),
        ]);
        let err = integrate_ode(
            &s,
            &ode,
            &BigRational::from_integer(2.into()),
            &OdeMode::Rk4 { step: 1e-3 },
            &[],
        )
        .unwrap_err();
        match err {
            SimError::DomainViolation { time } => {
                let t = time.as_f64();
                assert!((t - 1.0).abs() < 2e-3, "t={t}");
            }
            other => panic!("expected domain violation, got {other:?}"),
        }
    }

    #[test]
    fn domain_must_hold_at_time_zero() {
        let ode = ball_ode("x>=0");
        let mut s = drop_state();
        s.set(VarName::new("x"), Value::Exact(-BigRational::one()));
        let err =
            integrate_ode(&s, &ode, &BigRational::zero(), &OdeMode::ClosedForm, &[]).unwrap_err();
        assert!(matches!(err, SimError::DomainViolation { time } if time == Value::Exact(BigRational::zero())));
    }

    #[test]
    fn zero_duration_yields_single_sample() {
        let ode = ball_ode("x>=0");
        let trace =
            integrate_ode(&drop_state(), &ode, &BigRational::zero(), &OdeMode::ClosedForm, &[])
                .unwrap();
        assert_eq!(trace.samples.len(), 1);
        assert_eq!(
            trace.samples[0].1.get(&VarName::new("x")).unwrap().as_exact().unwrap(),
            BigRational::one()
        );
    }

    #[test]
    fn dyadic_rk4_stays_on_the_float_lattice() {
        // g=2, step 1/64: every state is a dyadic rational, so float RK4 is
        // exact and the half-period endpoint is hit with no roundoff at all
        let ode = ball_ode("x>=0");
        let s = State::float([
            (VarName::new("x"), 1.0),
            (VarName::new("v"), 0.0),
            (VarName::new("g"), 2.0),
        ]);
        let half = BigRational::new(1.into(), 2.into());
        let trace =
            integrate_ode(&s, &ode, &half, &OdeMode::Rk4 { step: 1.0 / 64.0 }, &[]).unwrap();
        let end = trace.last_state().unwrap();
        assert_eq!(end.get(&VarName::new("x")).unwrap().as_f64(), 0.75);
        assert_eq!(end.get(&VarName::new("v")).unwrap().as_f64(), -1.0);
    }

    #[test]
    fn csv_lists_time_then_variables_and_event_comments() {
        let ode = ball_ode("x>=0");
        let half = BigRational::new(1.into(), 2.into());
        let mut trace =
            integrate_ode(&drop_state(), &ode, &half, &OdeMode::ClosedForm, &[]).unwrap();
        trace.push_event(Value::Exact(half), "stopped");
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,g,v,v',x,x'"));
        assert_eq!(lines.next(), Some("0,2,0,-2,1,0"));
        assert_eq!(lines.next(), Some("1/2,2,-1,-2,3/4,-1"));
        assert_eq!(lines.next(), Some("# t=1/2 stopped"));
    }
}
