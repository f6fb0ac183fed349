//! Deterministic proof replay.
//!
//! The checker builds a goal tree rooted at the model's problem formula and
//! replays a script against it. Every goal a rule creates is immediately
//! normalized (see [`super::normalize`]), so scripts only ever deal with
//! propositionally irreducible goals. Replay is deterministic: goal ids are
//! assigned in creation order, and running the same script against the same
//! model always produces the same tree.
//!
//! `close` hands a program-free goal to the arithmetic backend. Quantified
//! members are weakened away first (sound, since dropping assumptions or
//! proof obligations only makes the goal harder); because of that, a
//! counterexample against the weakened goal refutes the proof only when
//! nothing was dropped.

use super::normalize::{normalize, FreshNames};
use super::rules::{
    apply_box_step, contains_modality, rule_di, rule_g, rule_inst, rule_k, rule_loop, rule_m,
    rule_solve_ode, rule_v, rule_witness, RuleError, Target,
};
use super::script::{parse_script, ProofStep, ScriptError};
use crate::arith::{decide_sequent, ArithConfig, Method, SmtError, Verdict};
use crate::parser::model::ModelFile;
use crate::parser::{parse_formula, parse_term};
use crate::sim::State;
use crate::syntax::ast::{Formula, Sequent};
use serde_json::json;
use std::fmt::Write as _;
use thiserror::Error;

/// How `close` treats arithmetic the backend cannot decide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Undecided leaves stay open.
    Strict,
    /// Undecided leaves are recorded as assumed and the proof may still be
    /// reported as finished, listing every assumption.
    Permissive,
}

/// One node of the goal tree.
#[derive(Debug, Clone)]
pub struct GoalNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub sequent: Sequent,
    pub status: GoalStatus,
    /// The rule that expanded this goal, if any (`normalize` for nodes the
    /// normalizer rewrote).
    pub expanded_by: Option<String>,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GoalStatus {
    Open,
    Expanded,
    /// Closed during normalization: truth-value simplification or an
    /// identical formula on both sides.
    ClosedByNormalize,
    ClosedByArith(Method),
    /// Left undecided by the backend but accepted under the permissive
    /// policy; the string is the backend's reason.
    AssumedByOracle(String),
}

/// Outcome of a full replay.
#[derive(Debug, Clone, PartialEq)]
pub enum ProofResult {
    /// Every goal closed.
    Closed,
    /// Some goals remain open (ids into the goal tree).
    OpenGoals(Vec<usize>),
    /// All goals closed, but these were closed by assumption only.
    OracleAssumed(Vec<usize>),
}

/// Replay result: the verdict plus the full goal tree for inspection.
#[derive(Debug, Clone)]
pub struct ProofReport {
    pub result: ProofResult,
    /// Number of script steps applied.
    pub steps: usize,
    /// Which arithmetic method closed each leaf, in goal order.
    pub arith_methods: Vec<(usize, Method)>,
    pub goals: Vec<GoalNode>,
}

#[derive(Debug, Error)]
pub enum ProofError {
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("script line {line}: unknown rule `{name}`")]
    UnknownRule { line: usize, name: String },
    #[error("script line {line}: no goal {id}")]
    UnknownGoal { line: usize, id: usize },
    #[error("script line {line}: goal {id} is not open")]
    GoalNotOpen { line: usize, id: usize },
    #[error("script line {line}: goal {id} has {what}")]
    NoTarget { line: usize, id: usize, what: &'static str },
    #[error("script line {line}: the {rule} rule needs `with {{{key}: ...}}`")]
    MissingArgument { line: usize, rule: &'static str, key: &'static str },
    #[error("script line {line}: bad argument: {msg}")]
    BadArgument { line: usize, msg: String },
    #[error("script line {line}: {rule} on goal {goal}: {source}")]
    Rule { line: usize, goal: usize, rule: String, source: RuleError },
    #[error("goal {goal} is falsified by {state}: {sequent}")]
    Refuted { goal: usize, sequent: Sequent, state: State },
    #[error(transparent)]
    Smt(#[from] SmtError),
}

/// The evolving goal tree.
#[derive(Debug, Clone)]
pub struct Session {
    pub goals: Vec<GoalNode>,
    fresh: FreshNames,
}

impl Session {
    /// Starts a session on `|- root`.
    pub fn new(root: Sequent) -> Session {
        let mut fresh = FreshNames::new();
        fresh.note_sequent(&root);
        let mut session = Session { goals: Vec::new(), fresh };
        let id = session.push_node(None, root);
        session.normalize_node(id);
        session
    }

    pub fn from_model(model: &ModelFile) -> Session {
        Session::new(Sequent::concluding(model.problem.clone()))
    }

    fn push_node(&mut self, parent: Option<usize>, sequent: Sequent) -> usize {
        let id = self.goals.len();
        self.goals.push(GoalNode {
            id,
            parent,
            sequent,
            status: GoalStatus::Open,
            expanded_by: None,
            children: Vec::new(),
        });
        if let Some(p) = parent {
            self.goals[p].children.push(id);
        }
        id
    }

    /// Runs the normalizer on an open node, attaching residual goals as
    /// children (unless normalization is a no-op).
    fn normalize_node(&mut self, id: usize) {
        let seq = self.goals[id].sequent.clone();
        let residual = normalize(&seq, &mut self.fresh);
        if residual.is_empty() {
            self.goals[id].status = GoalStatus::ClosedByNormalize;
        } else if residual.as_slice() == std::slice::from_ref(&seq) {
            // Already normal; stays open without extra nodes.
        } else {
            self.goals[id].status = GoalStatus::Expanded;
            self.goals[id].expanded_by = Some("normalize".to_string());
            for sub in residual {
                self.push_node(Some(id), sub);
            }
        }
    }

    /// Ids of goals that still need work, in creation order.
    pub fn open_goals(&self) -> Vec<usize> {
        self.goals
            .iter()
            .filter(|g| g.status == GoalStatus::Open)
            .map(|g| g.id)
            .collect()
    }

    /// Applies one script step.
    pub fn apply(
        &mut self,
        step: &ProofStep,
        model: &ModelFile,
        policy: Policy,
        arith: &ArithConfig,
    ) -> Result<(), ProofError> {
        let id = step.goal;
        if id >= self.goals.len() {
            return Err(ProofError::UnknownGoal { line: step.line, id });
        }
        if self.goals[id].status != GoalStatus::Open {
            return Err(ProofError::GoalNotOpen { line: step.line, id });
        }
        if step.rule == "close" {
            return self.close_goal(step, policy, arith);
        }

        let seq = self.goals[id].sequent.clone();
        let target = self.resolve_target(step, &seq)?;
        let rule_err = |source| ProofError::Rule {
            line: step.line,
            goal: id,
            rule: step.rule.clone(),
            source,
        };
        let premises = match step.rule.as_str() {
            "step" => {
                self.no_argument(step)?;
                apply_box_step(&seq, target).map_err(rule_err)?
            }
            "loop" => {
                let inv = match self.formula_arg(step, "inv")? {
                    Some(f) => Some(f),
                    None => model.unique_invariant().cloned(),
                };
                if let Some(f) = &inv {
                    self.fresh.note_formula(f);
                }
                rule_loop(&seq, target, inv.as_ref()).map_err(rule_err)?
            }
            "solve" => {
                self.no_argument(step)?;
                let sol = model.unique_solution().ok_or(ProofError::MissingArgument {
                    line: step.line,
                    rule: "solve",
                    key: "solution (annotate the model's ODE)",
                })?;
                rule_solve_ode(&seq, target, sol, &mut self.fresh).map_err(rule_err)?
            }
            "dI" => {
                self.no_argument(step)?;
                rule_di(&seq, target).map_err(rule_err)?
            }
            "M" => {
                let mid = self.required_formula_arg(step, "M", "mid")?;
                self.fresh.note_formula(&mid);
                rule_m(&seq, target, &mid).map_err(rule_err)?
            }
            "K" => {
                let mid = self.required_formula_arg(step, "K", "mid")?;
                self.fresh.note_formula(&mid);
                rule_k(&seq, target, &mid).map_err(rule_err)?
            }
            "G" => {
                self.no_argument(step)?;
                rule_g(&seq, target).map_err(rule_err)?
            }
            "V" => {
                self.no_argument(step)?;
                rule_v(&seq, target).map_err(rule_err)?
            }
            "witness" => {
                let e = self.required_term_arg(step, "witness", "witness")?;
                rule_witness(&seq, target, &e).map_err(rule_err)?
            }
            "inst" => {
                let e = self.required_term_arg(step, "inst", "term")?;
                rule_inst(&seq, target, &e).map_err(rule_err)?
            }
            other => {
                return Err(ProofError::UnknownRule { line: step.line, name: other.to_string() })
            }
        };

        self.goals[id].status = GoalStatus::Expanded;
        self.goals[id].expanded_by = Some(step.rule.clone());
        for premise in premises {
            let pid = self.push_node(Some(id), premise);
            self.normalize_node(pid);
        }
        Ok(())
    }

    fn close_goal(
        &mut self,
        step: &ProofStep,
        policy: Policy,
        arith: &ArithConfig,
    ) -> Result<(), ProofError> {
        self.no_argument(step)?;
        let id = step.goal;
        let seq = self.goals[id].sequent.clone();
        if seq.ante.iter().chain(&seq.succ).any(contains_modality) {
            return Err(ProofError::Rule {
                line: step.line,
                goal: id,
                rule: "close".to_string(),
                source: RuleError::ContainsModality,
            });
        }
        if seq.ante.iter().any(|f| seq.succ.contains(f)) {
            self.goals[id].status = GoalStatus::ClosedByNormalize;
            return Ok(());
        }
        // Weaken quantified members away; only polynomial arithmetic goes to
        // the backend.
        let qf = Sequent::new(
            seq.ante.iter().filter(|f| f.is_quantifier_free()).cloned().collect(),
            seq.succ.iter().filter(|f| f.is_quantifier_free()).cloned().collect(),
        );
        let weakened = qf.ante.len() != seq.ante.len() || qf.succ.len() != seq.succ.len();
        match decide_sequent(&qf, arith)? {
            Verdict::Valid(method) => {
                self.goals[id].status = GoalStatus::ClosedByArith(method);
            }
            Verdict::Invalid(state) => {
                if !weakened {
                    return Err(ProofError::Refuted { goal: id, sequent: seq, state });
                }
                // The counterexample may rely on a dropped assumption; the
                // goal merely stays open.
            }
            Verdict::Unknown(reason) => {
                if policy == Policy::Permissive {
                    self.goals[id].status = GoalStatus::AssumedByOracle(reason);
                }
            }
        }
        Ok(())
    }

    fn resolve_target(&self, step: &ProofStep, seq: &Sequent) -> Result<Target, ProofError> {
        if let Some((side, index)) = step.at {
            return Ok(Target { side, index });
        }
        let found = match step.rule.as_str() {
            "inst" => seq
                .ante
                .iter()
                .position(|f| matches!(f, Formula::Forall(..)))
                .map(Target::ante)
                .ok_or("no universal assumption to instantiate"),
            "witness" => seq
                .succ
                .iter()
                .position(|f| matches!(f, Formula::Exists(..)))
                .map(Target::succ)
                .ok_or("no existential claim to witness"),
            _ => seq
                .succ
                .iter()
                .position(|f| matches!(f, Formula::Box_(..) | Formula::Diamond(..)))
                .map(Target::succ)
                .ok_or("no modal formula in the succedent"),
        };
        found.map_err(|what| ProofError::NoTarget { line: step.line, id: step.goal, what })
    }

    fn no_argument(&self, step: &ProofStep) -> Result<(), ProofError> {
        match &step.arg {
            None => Ok(()),
            Some((key, _)) => Err(ProofError::BadArgument {
                line: step.line,
                msg: format!("the {} rule takes no `{key}` argument", step.rule),
            }),
        }
    }

    fn formula_arg(&self, step: &ProofStep, key: &str) -> Result<Option<Formula>, ProofError> {
        match &step.arg {
            None => Ok(None),
            Some((k, raw)) if k == key => match parse_formula(raw) {
                Ok(f) => Ok(Some(f)),
                Err(e) => Err(ProofError::BadArgument { line: step.line, msg: e.to_string() }),
            },
            Some((k, _)) => Err(ProofError::BadArgument {
                line: step.line,
                msg: format!("expected `{key}`, got `{k}`"),
            }),
        }
    }

    fn required_formula_arg(
        &self,
        step: &ProofStep,
        rule: &'static str,
        key: &'static str,
    ) -> Result<Formula, ProofError> {
        self.formula_arg(step, key)?.ok_or(ProofError::MissingArgument {
            line: step.line,
            rule,
            key,
        })
    }

    fn required_term_arg(
        &mut self,
        step: &ProofStep,
        rule: &'static str,
        key: &'static str,
    ) -> Result<crate::syntax::ast::Term, ProofError> {
        match &step.arg {
            Some((k, raw)) if k == key => match parse_term(raw) {
                Ok(t) => {
                    self.fresh.note_term(&t);
                    Ok(t)
                }
                Err(e) => Err(ProofError::BadArgument { line: step.line, msg: e.to_string() }),
            },
            Some((k, _)) => Err(ProofError::BadArgument {
                line: step.line,
                msg: format!("expected `{key}`, got `{k}`"),
            }),
            None => Err(ProofError::MissingArgument { line: step.line, rule, key }),
        }
    }

    /// Renders the tree with indentation, statuses, and rule labels.
    pub fn render_tree(&self) -> String {
        render_goal_tree(&self.goals)
    }

    fn into_report(self, steps: usize) -> ProofReport {
        let mut open = Vec::new();
        let mut oracle = Vec::new();
        let mut arith_methods = Vec::new();
        for g in &self.goals {
            match &g.status {
                GoalStatus::Open => open.push(g.id),
                GoalStatus::AssumedByOracle(_) => oracle.push(g.id),
                GoalStatus::ClosedByArith(m) => arith_methods.push((g.id, m.clone())),
                _ => {}
            }
        }
        let result = if !open.is_empty() {
            ProofResult::OpenGoals(open)
        } else if !oracle.is_empty() {
            ProofResult::OracleAssumed(oracle)
        } else {
            ProofResult::Closed
        };
        ProofReport { result, steps, arith_methods, goals: self.goals }
    }
}

/// Replays a script against a model's problem formula.
pub fn check_proof(
    model: &ModelFile,
    script_src: &str,
    policy: Policy,
    arith: &ArithConfig,
) -> Result<ProofReport, ProofError> {
    let steps = parse_script(script_src)?;
    let mut session = Session::from_model(model);
    let mut applied = 0;
    for step in &steps {
        session.apply(step, model, policy, arith)?;
        applied += 1;
    }
    Ok(session.into_report(applied))
}

fn render_goal_tree(goals: &[GoalNode]) -> String {
    fn render_node(goals: &[GoalNode], id: usize, depth: usize, out: &mut String) {
        let node = &goals[id];
        let status = match &node.status {
            GoalStatus::Open => "open".to_string(),
            GoalStatus::Expanded => {
                format!("by {}", node.expanded_by.as_deref().unwrap_or("?"))
            }
            GoalStatus::ClosedByNormalize => "closed".to_string(),
            GoalStatus::ClosedByArith(m) => format!("closed ({m})"),
            GoalStatus::AssumedByOracle(_) => "assumed".to_string(),
        };
        let _ = writeln!(out, "{}#{} [{}] {}", "  ".repeat(depth), id, status, node.sequent);
        for child in &node.children {
            render_node(goals, *child, depth + 1, out);
        }
    }
    let mut out = String::new();
    if !goals.is_empty() {
        render_node(goals, 0, 0, &mut out);
    }
    out
}

impl ProofReport {
    /// The goal tree as rendered text, for inspection and traces.
    pub fn render_tree(&self) -> String {
        render_goal_tree(&self.goals)
    }

    /// The goals listed by the result (open or assumed), rendered.
    pub fn listed_sequents(&self) -> Vec<String> {
        let ids = match &self.result {
            ProofResult::Closed => &[][..],
            ProofResult::OpenGoals(ids) | ProofResult::OracleAssumed(ids) => ids,
        };
        ids.iter().map(|id| self.goals[*id].sequent.to_string()).collect()
    }

    /// One-line machine-readable summary.
    pub fn to_json_line(&self) -> String {
        let result = match &self.result {
            ProofResult::Closed => "closed",
            ProofResult::OpenGoals(_) => "open",
            ProofResult::OracleAssumed(_) => "oracle-assumed",
        };
        let methods: Vec<serde_json::Value> = self
            .arith_methods
            .iter()
            .map(|(goal, method)| json!({ "goal": goal, "method": method.to_string() }))
            .collect();
        json!({
            "result": result,
            "open_goals": self.listed_sequents(),
            "steps": self.steps,
            "arith_methods": methods,
        })
        .to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::model::parse_model_source;

    fn model(src: &str) -> ModelFile {
        parse_model_source("test", src).unwrap()
    }

    fn strict() -> (Policy, ArithConfig) {
        (Policy::Strict, ArithConfig::default())
    }

    #[test]
    fn a_two_step_proof_closes() {
        let m = model("Problem. x=1 -> [x := x+1] x=2");
        let (policy, arith) = strict();
        let report = check_proof(&m, "goal 1 : step\ngoal 2 : close", policy, &arith).unwrap();
        assert_eq!(report.result, ProofResult::Closed);
        assert_eq!(report.steps, 2);
        assert_eq!(report.arith_methods.len(), 1);
    }

    #[test]
    fn the_goal_tree_is_deterministic() {
        let m = model("Problem. x=1 -> [x := x+1] x=2");
        let (policy, arith) = strict();
        let a = check_proof(&m, "goal 1 : step", policy, &arith).unwrap();
        let b = check_proof(&m, "goal 1 : step", policy, &arith).unwrap();
        let render = |r: &ProofReport| {
            r.goals.iter().map(|g| g.sequent.to_string()).collect::<Vec<_>>()
        };
        assert_eq!(render(&a), render(&b));
        assert_eq!(a.result, ProofResult::OpenGoals(vec![2]));
    }

    #[test]
    fn loop_invariant_falls_back_to_the_annotation() {
        let m = model("Problem. x=2 -> [{x := x+1}* @invariant(x>=1)] x>=0");
        let (policy, arith) = strict();
        let script = "
            goal 1 : loop     # three premises: init 2, preservation 3, use 4
            goal 2 : close
            goal 3 : step
            goal 5 : close
            goal 4 : close
        ";
        let report = check_proof(&m, script, policy, &arith).unwrap();
        assert_eq!(report.result, ProofResult::Closed, "{}", report.to_json_line());
    }

    #[test]
    fn unproved_goals_are_reported_open() {
        let m = model("Problem. x=1 -> [x := x+1] x=2");
        let (policy, arith) = strict();
        let report = check_proof(&m, "goal 1 : step", policy, &arith).unwrap();
        assert_eq!(report.result, ProofResult::OpenGoals(vec![2]));
        assert_eq!(report.listed_sequents(), vec!["x=1 |- x+1=2"]);
    }

    #[test]
    fn undecided_arithmetic_stays_open_under_strict_policy() {
        let m = model("Constants. g; Problem. g>0 & x>=0 -> g*x*x >= 0");
        let (_, arith) = strict();
        let report = check_proof(&m, "goal 1 : close", Policy::Strict, &arith).unwrap();
        assert!(matches!(report.result, ProofResult::OpenGoals(_)));
    }

    #[test]
    fn undecided_arithmetic_is_assumed_under_permissive_policy() {
        let m = model("Constants. g; Problem. g>0 & x>=0 -> g*x*x >= 0");
        let (_, arith) = strict();
        let report = check_proof(&m, "goal 1 : close", Policy::Permissive, &arith).unwrap();
        match &report.result {
            ProofResult::OracleAssumed(ids) => assert_eq!(ids.len(), 1),
            other => panic!("expected an assumption, got {other:?}"),
        }
        assert_eq!(report.listed_sequents(), vec!["g>0, x>=0 |- g*x*x>=0"]);
    }

    #[test]
    fn false_leaves_refute_the_proof() {
        let m = model("Problem. x>=0 -> x>=1");
        let (policy, arith) = strict();
        let err = check_proof(&m, "goal 1 : close", policy, &arith).unwrap_err();
        match err {
            ProofError::Refuted { goal, state, .. } => {
                assert_eq!(goal, 1);
                assert!(!state.to_string().is_empty());
            }
            other => panic!("expected refutation, got {other}"),
        }
    }

    #[test]
    fn close_refuses_modal_goals() {
        let m = model("Problem. x=1 -> [x := x+1] x=2");
        let (policy, arith) = strict();
        let err = check_proof(&m, "goal 1 : close", policy, &arith).unwrap_err();
        assert!(matches!(
            err,
            ProofError::Rule { source: RuleError::ContainsModality, .. }
        ));
    }

    #[test]
    fn quantified_members_are_weakened_not_refuted() {
        // The weakened goal `t>=0 |- x+2*t>=1` has counterexamples, but the
        // dropped universal could have saved it, so the goal just stays open.
        let m = model("Problem. \\forall s (s>=0 -> x+2*s>=1) & t>=0 -> x+2*t>=1");
        let (policy, arith) = strict();
        let report = check_proof(&m, "goal 1 : close", policy, &arith).unwrap();
        assert!(matches!(report.result, ProofResult::OpenGoals(_)));
    }

    #[test]
    fn instantiation_recovers_weakened_universals() {
        let m = model("Problem. \\forall s (s>=0 -> x+2*s>=1) & t>=0 -> x+2*t>=1");
        let (policy, arith) = strict();
        let script = "
            goal 1 : inst with {term: t}
            goal 2 : close
        ";
        let report = check_proof(&m, script, policy, &arith).unwrap();
        assert_eq!(report.result, ProofResult::Closed, "{}", report.to_json_line());
    }

    #[test]
    fn script_errors_name_the_line() {
        let m = model("Problem. x=1 -> [x := x+1] x=2");
        let (policy, arith) = strict();
        let err = check_proof(&m, "goal 1 : shrink", policy, &arith).unwrap_err();
        assert_eq!(err.to_string(), "script line 1: unknown rule `shrink`");
        let err = check_proof(&m, "goal 9 : close", policy, &arith).unwrap_err();
        assert!(matches!(err, ProofError::UnknownGoal { id: 9, .. }));
        let err =
            check_proof(&m, "goal 1 : step\ngoal 1 : step", policy, &arith).unwrap_err();
        assert!(matches!(err, ProofError::GoalNotOpen { id: 1, line: 2 }));
    }

    #[test]
    fn rule_failures_halt_at_the_failing_step() {
        let m = model("Problem. x=1 -> [x := x+1] x=2");
        let (policy, arith) = strict();
        let err = check_proof(&m, "goal 1 : dI", policy, &arith).unwrap_err();
        match err {
            ProofError::Rule { line, goal, rule, source } => {
                assert_eq!((line, goal, rule.as_str()), (1, 1, "dI"));
                assert_eq!(source, RuleError::NotAnOde);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_arguments_are_reported() {
        let m = model("Problem. x=1 -> [x := x+1] x=2");
        let (policy, arith) = strict();
        let err = check_proof(&m, "goal 1 : M", policy, &arith).unwrap_err();
        assert!(matches!(err, ProofError::MissingArgument { rule: "M", .. }));
        let err = check_proof(&m, "goal 1 : step with {inv: x=0}", policy, &arith).unwrap_err();
        assert!(matches!(err, ProofError::BadArgument { .. }));
    }

    #[test]
    fn json_line_is_stable() {
        let m = model("Problem. x=1 -> [x := x+1] x=2");
        let (policy, arith) = strict();
        let report =
            check_proof(&m, "goal 1 : step\ngoal 2 : close", policy, &arith).unwrap();
        assert_eq!(
            report.to_json_line(),
            r#"{"arith_methods":[{"goal":2,"method":"fm"}],"open_goals":[],"result":"closed","steps":2}"#
        );
    }
}
