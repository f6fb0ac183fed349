//! The sandbox cycle: propose, monitor, actuate or fall back, fly, check.
//!
//! Each control cycle sends the plant state to an untrusted external
//! controller and runs the controller monitor on its proposal. A passing
//! proposal is actuated as-is; anything else — veto, malformed reply,
//! timeout — is replaced by the verified fallback action. The plant then
//! evolves for one period (numerically, so the model's idealization is not
//! baked into the simulation), and the model monitor compares the observed
//! transition against the model. A failing model monitor does not stop the
//! run by default: it flags that the real plant has left the verified
//! envelope, which is precisely the event the monitors exist to detect.
//!
//! Both override programs — the fallback and the optional plant
//! disturbance — are validated up front to be loop-free, ODE-free, and
//! deterministic (their guard conditions must be mutually exclusive and
//! exhaustive under the model's assumptions), so at runtime they execute to
//! exactly one successor state.

use super::config::SandboxConfig;
use super::wire;
use crate::arith::{decide_sequent, ArithConfig, Verdict};
use crate::kernel::{normalize, FreshNames};
use crate::modelplex::compile::{self, run, Instr, RunError};
use crate::modelplex::monitor::{loop_body, model_assumptions, transition_state, MonitorError};
use crate::modelplex::symexec::symexec;
use crate::parser::{parse_model_file, parse_program, ModelError, ParseError};
use crate::sim::{
    integrate_ode, reachable_states, EnumBudget, OdeMode, OdeSpec, RProg, SimError, State, Value,
};
use crate::syntax::ast::{Formula, Sequent, VarName};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde_json::json;
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc;
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SandboxError {
    #[error(transparent)]
    Config(#[from] super::config::ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Synthesis(#[from] MonitorError),
    #[error("cannot read `{}`: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("`{}`: {source}", path.display())]
    Artifact {
        path: PathBuf,
        #[source]
        source: compile::ParseError,
    },
    #[error("in the {role} program: {source}")]
    BadProgram {
        role: &'static str,
        #[source]
        source: ParseError,
    },
    #[error("the {role} program must be discrete and deterministic: {reason}")]
    NotDeterministic { role: &'static str, reason: String },
    #[error("the model's loop body must contain exactly one differential equation, found {0}")]
    OdeCount(usize),
    #[error("cannot start the controller: {0}")]
    Spawn(#[source] std::io::Error),
    #[error("cycle {cycle}: monitor execution failed: {source}")]
    MonitorRun {
        cycle: u32,
        #[source]
        source: RunError,
    },
    #[error("cycle {cycle}: the fallback action itself fails the controller monitor")]
    FallbackRejected { cycle: u32 },
    #[error("cycle {cycle}: the {role} program produced {count} states instead of one")]
    OverrideExecution { cycle: u32, role: &'static str, count: usize },
    #[error("plant integration failed: {0}")]
    Plant(#[from] SimError),
}

/// A loaded, validated sandbox ready to run.
pub struct Sandbox {
    /// The model's loop body (used for reference and validation context).
    pub body: RProg,
    /// The one differential equation the plant simulates.
    pub ode: OdeSpec,
    /// Model assumptions; the determinism checks may rely on them.
    pub assumptions: Vec<Formula>,
    ctrl_code: Vec<Instr>,
    model_code: Vec<Instr>,
    fallback: RProg,
    plant_override: Option<RProg>,
    pub init: State,
    period: BigRational,
    step: BigRational,
    max_cycles: u32,
    pub timeout: Duration,
    controller_writes: Vec<VarName>,
    halt_on_violation: bool,
}

/// Reads every artifact a config points at and validates the overrides.
pub fn load_sandbox(cfg: &SandboxConfig) -> Result<Sandbox, SandboxError> {
    let model = parse_model_file(&cfg.model)?;
    let body = loop_body(&model)?;
    let assumptions = model_assumptions(&model, &body);

    let odes = collect_odes(&body);
    if odes.len() != 1 {
        return Err(SandboxError::OdeCount(odes.len()));
    }
    let ode = odes[0].clone();

    let ctrl_code = load_instructions(&cfg.controller_monitor)?;
    let model_code = load_instructions(&cfg.model_monitor)?;

    let fallback = load_override(&cfg.fallback, "fallback", &assumptions)?;
    let plant_override = match &cfg.plant_override {
        Some(src) => Some(load_override(src, "plant override", &assumptions)?),
        None => None,
    };

    Ok(Sandbox {
        body,
        ode,
        assumptions,
        ctrl_code,
        model_code,
        fallback,
        plant_override,
        init: State::exact(cfg.init.iter().cloned()),
        period: cfg.period.clone(),
        step: cfg.step.clone(),
        max_cycles: cfg.max_cycles,
        timeout: Duration::from_millis(cfg.timeout_ms),
        controller_writes: cfg.controller_writes.clone(),
        halt_on_violation: cfg.halt_on_violation,
    })
}

fn load_instructions(path: &PathBuf) -> Result<Vec<Instr>, SandboxError> {
    let src = std::fs::read_to_string(path)
        .map_err(|source| SandboxError::Io { path: path.clone(), source })?;
    compile::parse_instructions(&src)
        .map_err(|source| SandboxError::Artifact { path: path.clone(), source })
}

fn load_override(
    src: &str,
    role: &'static str,
    assumptions: &[Formula],
) -> Result<RProg, SandboxError> {
    let program = parse_program(src).map_err(|source| SandboxError::BadProgram { role, source })?;
    let program = RProg::from_program(&program);
    validate_deterministic(&program, role, assumptions)?;
    Ok(program)
}

fn collect_odes(p: &RProg) -> Vec<&OdeSpec> {
    match p {
        RProg::Ode(spec) => vec![spec],
        RProg::Assign(..) | RProg::Test(_) => Vec::new(),
        RProg::Choice(a, b) | RProg::Seq(a, b) => {
            let mut out = collect_odes(a);
            out.extend(collect_odes(b));
            out
        }
        RProg::Loop(body) => collect_odes(body),
    }
}

/// Checks that an override program is loop-free, ODE-free, and that its
/// execution paths have mutually exclusive and jointly exhaustive guards.
fn validate_deterministic(
    p: &RProg,
    role: &'static str,
    assumptions: &[Formula],
) -> Result<(), SandboxError> {
    let fail = |reason: String| SandboxError::NotDeterministic { role, reason };
    let mut fresh = FreshNames::new();
    let paths = symexec(p, &mut fresh).map_err(|e| fail(e.to_string()))?;
    if paths.iter().any(|p| !p.durations.is_empty()) {
        return Err(fail("it contains a differential equation".to_string()));
    }
    let guards: Vec<Formula> =
        paths.iter().map(|p| Formula::conj(p.path_condition.clone())).collect();
    for (i, gi) in guards.iter().enumerate() {
        for gj in &guards[i + 1..] {
            let mut ante = assumptions.to_vec();
            ante.push(gi.clone());
            ante.push(gj.clone());
            if !entailed(Sequent::new(ante, Vec::new())) {
                return Err(fail(format!(
                    "the guards `{gi}` and `{gj}` can both be taken"
                )));
            }
        }
    }
    let any_guard = guards
        .iter()
        .cloned()
        .reduce(|a, b| Formula::Or(Box::new(a), Box::new(b)))
        .unwrap_or(Formula::False);
    if !entailed(Sequent::new(assumptions.to_vec(), vec![any_guard])) {
        return Err(fail("its guards do not cover every state".to_string()));
    }
    Ok(())
}

/// Validity of a sequent by normalization plus the non-SMT decision chain.
fn entailed(seq: Sequent) -> bool {
    let mut fresh = FreshNames::new();
    fresh.note_sequent(&seq);
    let cfg = ArithConfig { smt: None };
    normalize(&seq, &mut fresh)
        .iter()
        .all(|leaf| matches!(decide_sequent(leaf, &cfg), Ok(Verdict::Valid(_))))
}

/// One request/reply exchange with the external controller.
pub trait Transport {
    /// Sends a request line; returns the reply line or a failure reason.
    /// A failure is not fatal — the sandbox falls back.
    fn exchange(&mut self, request: &str) -> Result<String, String>;
}

/// Talks to a controller subprocess over stdin/stdout, one line each way
/// per cycle, with a reply deadline.
pub struct SubprocessTransport {
    child: Child,
    stdin: ChildStdin,
    lines: mpsc::Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl SubprocessTransport {
    pub fn spawn(argv: &[String], timeout: Duration) -> Result<Self, SandboxError> {
        let (head, rest) = argv.split_first().expect("config rejects empty command lines");
        let mut child = Command::new(head)
            .args(rest)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(SandboxError::Spawn)?;
        let stdin = child.stdin.take().expect("stdin was piped");
        let stdout = child.stdout.take().expect("stdout was piped");
        let (tx, rx) = mpsc::channel();
        // The reader thread parks on the pipe; it exits when the child's
        // stdout closes or the receiver is dropped.
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(SubprocessTransport { child, stdin, lines: rx, timeout })
    }
}

impl Transport for SubprocessTransport {
    fn exchange(&mut self, request: &str) -> Result<String, String> {
        writeln!(self.stdin, "{request}")
            .and_then(|_| self.stdin.flush())
            .map_err(|e| format!("controller stdin closed: {e}"))?;
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(format!("controller read failed: {e}")),
            Err(mpsc::RecvTimeoutError::Timeout) => {
                Err(format!("controller reply timed out after {:?}", self.timeout))
            }
            Err(mpsc::RecvTimeoutError::Disconnected) => {
                Err("controller closed its output".to_string())
            }
        }
    }
}

impl Drop for SubprocessTransport {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A canned reply sequence, for tests; records every request it saw.
pub struct ScriptedTransport {
    pub requests: Vec<String>,
    replies: std::collections::VecDeque<String>,
}

impl ScriptedTransport {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedTransport {
            requests: Vec::new(),
            replies: replies.into_iter().map(Into::into).collect(),
        }
    }
}

impl Transport for ScriptedTransport {
    fn exchange(&mut self, request: &str) -> Result<String, String> {
        self.requests.push(request.to_string());
        self.replies.pop_front().ok_or_else(|| "no reply scripted".to_string())
    }
}

/// How the cycle's actuation was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Proposal,
    Fallback,
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Action::Proposal => write!(f, "proposal"),
            Action::Fallback => write!(f, "fallback"),
        }
    }
}

/// Everything observable about one control cycle.
#[derive(Debug, Clone)]
pub struct CycleRecord {
    pub cycle: u32,
    pub prior: State,
    /// The parsed proposal, if one arrived and parsed.
    pub proposal: Option<BTreeMap<VarName, BigRational>>,
    /// Why there was no usable proposal.
    pub note: Option<String>,
    pub ctrl_verdict: bool,
    pub action: Action,
    pub posterior: State,
    pub model_verdict: bool,
}

fn state_json(s: &State) -> serde_json::Value {
    let map: serde_json::Map<String, serde_json::Value> = s
        .iter()
        .filter(|(x, _)| !x.primed)
        .filter_map(|(x, v)| {
            v.as_exact().map(|q| (x.to_string(), serde_json::Value::String(q.to_string())))
        })
        .collect();
    serde_json::Value::Object(map)
}

impl CycleRecord {
    /// One log line; numbers are exact rational strings so a replay can
    /// reproduce the run bit for bit.
    pub fn to_json_line(&self) -> String {
        let proposal = self.proposal.as_ref().map(|set| {
            set.iter()
                .map(|(x, q)| (x.to_string(), serde_json::Value::String(q.to_string())))
                .collect::<serde_json::Map<_, _>>()
        });
        json!({
            "cycle": self.cycle,
            "prior": state_json(&self.prior),
            "proposal": proposal,
            "note": self.note,
            "ctrl_verdict": self.ctrl_verdict,
            "action": self.action.to_string(),
            "posterior": state_json(&self.posterior),
            "model_verdict": self.model_verdict,
        })
        .to_string()
    }
}

/// Run totals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    /// Cycles completed (posterior recorded).
    pub cycles: u32,
    pub vetoes: u32,
    pub violations: u32,
    /// Latched true by the first model-monitor violation.
    pub violation_flag: bool,
    /// Why the run stopped early, if it did.
    pub halt: Option<String>,
}

impl Summary {
    pub fn to_json_line(&self) -> String {
        json!({
            "cycles": self.cycles,
            "vetoes": self.vetoes,
            "violations": self.violations,
            "violation_flag": self.violation_flag,
            "halt": self.halt,
        })
        .to_string()
    }
}

pub struct RunOutcome {
    pub records: Vec<CycleRecord>,
    pub summary: Summary,
}

/// Executes a validated override on a concrete state; determinism makes the
/// reachable set a singleton.
fn execute_override(
    p: &RProg,
    s: &State,
    role: &'static str,
    cycle: u32,
) -> Result<State, SandboxError> {
    let budget = EnumBudget::closed_form(0, Vec::new());
    let out = reachable_states(p, s, &budget)?;
    if out.len() != 1 {
        return Err(SandboxError::OverrideExecution { cycle, role, count: out.len() });
    }
    Ok(out.into_iter().next().expect("len checked"))
}

/// Drives the full run; `sink` sees each cycle record as it completes.
pub fn run_sandbox(
    sandbox: &Sandbox,
    transport: &mut dyn Transport,
    mut sink: impl FnMut(&CycleRecord),
) -> Result<RunOutcome, SandboxError> {
    let step = sandbox
        .step
        .to_f64()
        .filter(|h| *h > 0.0)
        .ok_or(SimError::NegativeDuration(BigRational::from_integer(0.into())))?;
    let mode = OdeMode::Rk4 { step };
    let monitor_run = |code: &[Instr], s: &State, cycle: u32| {
        run(code, s).map_err(|source| SandboxError::MonitorRun { cycle, source })
    };

    let mut summary =
        Summary { cycles: 0, vetoes: 0, violations: 0, violation_flag: false, halt: None };
    let mut records = Vec::new();
    let mut prior = sandbox.init.clone();

    for cycle in 1..=sandbox.max_cycles {
        // 1. Ask the controller.
        let (proposal, note) = match wire::state_request(cycle, &prior) {
            Ok(request) => match transport.exchange(&request) {
                Ok(reply) => match wire::parse_proposal(&reply, &sandbox.controller_writes) {
                    Ok(set) => (Some(set), None),
                    Err(reason) => (None, Some(reason)),
                },
                Err(reason) => (None, Some(reason)),
            },
            Err(x) => (None, Some(format!("state variable `{x}` has no wire form"))),
        };

        // 2. Monitor the proposal. No proposal is an automatic veto.
        let mut proposal_state = prior.clone();
        if let Some(set) = &proposal {
            for (x, q) in set {
                proposal_state.set(x.clone(), Value::Exact(q.clone()));
            }
        }
        let ctrl_verdict = match &proposal {
            Some(_) => {
                monitor_run(&sandbox.ctrl_code, &transition_state(&prior, &proposal_state), cycle)?
            }
            None => false,
        };

        // 3. Actuate the proposal, or the fallback on a veto.
        let (action, actuated) = if ctrl_verdict {
            (Action::Proposal, proposal_state)
        } else {
            summary.vetoes += 1;
            let fallback_state = execute_override(&sandbox.fallback, &prior, "fallback", cycle)?;
            // The safety argument rests on the fallback passing its own
            // monitor; a failure here is a configuration bug, not a veto.
            if !monitor_run(&sandbox.ctrl_code, &transition_state(&prior, &fallback_state), cycle)?
            {
                return Err(SandboxError::FallbackRejected { cycle });
            }
            (Action::Fallback, fallback_state)
        };

        // 4. Let reality (the disturbed plant) run for one period.
        let disturbed = match &sandbox.plant_override {
            Some(p) => execute_override(p, &actuated, "plant override", cycle)?,
            None => actuated,
        };
        let trace = match integrate_ode(&disturbed, &sandbox.ode, &sandbox.period, &mode, &[]) {
            Ok(trace) => trace,
            Err(SimError::DomainViolation { time }) => {
                summary.halt =
                    Some(format!("cycle {cycle}: evolution domain violated at t={time}"));
                break;
            }
            Err(e) => return Err(e.into()),
        };
        let posterior = trace.last_state().expect("trace has samples").without_primes();

        // 5. Compare the observed transition against the model.
        let model_verdict =
            monitor_run(&sandbox.model_code, &transition_state(&prior, &posterior), cycle)?;
        if !model_verdict {
            summary.violations += 1;
            summary.violation_flag = true;
        }

        let record = CycleRecord {
            cycle,
            prior,
            proposal,
            note,
            ctrl_verdict,
            action,
            posterior: posterior.clone(),
            model_verdict,
        };
        sink(&record);
        records.push(record);
        summary.cycles = cycle;
        prior = posterior;

        if !model_verdict && sandbox.halt_on_violation {
            summary.halt = Some(format!("cycle {cycle}: model monitor violated"));
            break;
        }
    }

    Ok(RunOutcome { records, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::str::FromStr;

    fn q(s: &str) -> BigRational {
        BigRational::from_str(s).unwrap()
    }

    fn ball_state(x: &str, v: &str) -> State {
        State::exact([(VarName::new("x"), q(x)), (VarName::new("v"), q(v))])
    }

    fn prog(src: &str) -> RProg {
        RProg::from_program(&parse_program(src).unwrap())
    }

    #[test]
    fn the_ball_fallback_is_deterministic() {
        let fallback = prog("?x=0; v := -v ++ ?x!=0");
        validate_deterministic(&fallback, "fallback", &[]).unwrap();

        let bounced = execute_override(&fallback, &ball_state("0", "-2"), "fallback", 1).unwrap();
        assert_eq!(bounced, ball_state("0", "2"));
        let coasting = execute_override(&fallback, &ball_state("3", "1"), "fallback", 1).unwrap();
        assert_eq!(coasting, ball_state("3", "1"));
    }

    #[test]
    fn overlapping_guards_are_rejected() {
        let err = validate_deterministic(&prog("v := 1 ++ v := 2"), "fallback", &[]).unwrap_err();
        assert!(matches!(err, SandboxError::NotDeterministic { role: "fallback", .. }), "{err}");
    }

    #[test]
    fn non_exhaustive_guards_are_rejected() {
        let err = validate_deterministic(&prog("?x>0; v := -v"), "fallback", &[]).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("cover every state"), "{text}");
    }

    #[test]
    fn loops_and_odes_are_rejected() {
        let err = validate_deterministic(&prog("{v := v}*"), "fallback", &[]).unwrap_err();
        assert!(err.to_string().contains("loop"), "{err}");
        let err =
            validate_deterministic(&prog("{x' = v & true}"), "fallback", &[]).unwrap_err();
        assert!(err.to_string().contains("ODE"), "{err}");
    }

    #[test]
    fn assumptions_can_make_guards_exhaustive() {
        // Guards `?c=1; ...` and `?c=0; ...` only cover everything when the
        // assumptions pin c.
        let p = prog("?c=1; v := -v ++ ?c=0; v := v");
        assert!(validate_deterministic(&p, "fallback", &[]).is_err());
        let pinned = crate::parser::parse_formula("c=1").unwrap();
        validate_deterministic(&p, "fallback", &[pinned]).unwrap();
    }

    #[test]
    fn scripted_transport_replies_in_order_and_records_requests() {
        let mut t = ScriptedTransport::new(["{\"set\":{}}"]);
        assert_eq!(t.exchange("req-1").unwrap(), "{\"set\":{}}");
        assert!(t.exchange("req-2").is_err());
        assert_eq!(t.requests, vec!["req-1", "req-2"]);
    }

    #[test]
    fn records_and_summaries_serialize_to_stable_json() {
        let record = CycleRecord {
            cycle: 3,
            prior: ball_state("0", "-2"),
            proposal: Some(BTreeMap::from([(VarName::new("v"), q("2"))])),
            note: None,
            ctrl_verdict: true,
            action: Action::Proposal,
            posterior: ball_state("3/4", "1"),
            model_verdict: true,
        };
        assert_eq!(
            record.to_json_line(),
            "{\"action\":\"proposal\",\"ctrl_verdict\":true,\"cycle\":3,\
             \"model_verdict\":true,\"note\":null,\"posterior\":{\"v\":\"1\",\"x\":\"3/4\"},\
             \"prior\":{\"v\":\"-2\",\"x\":\"0\"},\"proposal\":{\"v\":\"2\"}}"
        );
        let summary =
            Summary { cycles: 50, vetoes: 12, violations: 0, violation_flag: false, halt: None };
        assert_eq!(
            summary.to_json_line(),
            "{\"cycles\":50,\"halt\":null,\"vetoes\":12,\"violation_flag\":false,\
             \"violations\":0}"
        );
    }
}
