//! End-to-end checks of monitor synthesis against the bouncing-ball corpus:
//! grid equivalence with the hand-written reference monitors, soundness on
//! exactly simulated transitions, rejection of energy-violating posteriors,
//! and agreement between a compiled monitor and its source formula.

use minidl::modelplex::monitor::loop_body;
use minidl::modelplex::{
    compile, eval_monitor, monitor_equiv, monitor_for_model, post_name, run, Equivalence,
    GridSpec, MonitorKind,
};
use minidl::parser::{parse_formula, parse_model_file, ModelFile};
use minidl::sim::{reachable_states, EnumBudget, State, Value};
use minidl::syntax::VarName;
use num_rational::BigRational;
use num_traits::Zero;

fn corpus(name: &str) -> String {
    format!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/{}"), name)
}

fn ball_model() -> ModelFile {
    parse_model_file(&corpus("bouncing_ball.dlm")).unwrap()
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn axis(name: &str, points: &[(i64, i64)]) -> (VarName, Vec<BigRational>) {
    (VarName::new(name), points.iter().map(|(n, d)| q(*n, *d)).collect())
}

/// The five-points-per-variable grid shared by both equivalence checks.
fn ball_grid() -> GridSpec {
    GridSpec {
        axes: vec![
            axis("x", &[(0, 1), (1, 4), (1, 2), (1, 1), (2, 1)]),
            axis("v", &[(-2, 1), (-1, 1), (0, 1), (1, 1), (2, 1)]),
            axis("c", &[(-1, 1), (0, 1), (1, 2), (1, 1), (2, 1)]),
            axis("g", &[(1, 2), (1, 1), (2, 1), (3, 1), (5, 1)]),
            axis("x_post", &[(0, 1), (1, 4), (1, 2), (1, 1), (2, 1)]),
            axis("v_post", &[(-2, 1), (-1, 1), (0, 1), (1, 1), (2, 1)]),
        ],
        context: Some(parse_formula("x>=0 & x_post>=0 & g>0 & c=1").unwrap()),
    }
}

#[test]
fn synthesized_monitors_match_the_reference_monitors_on_a_grid() {
    let model = ball_model();
    let grid = ball_grid();

    let ctrl = monitor_for_model(&model, MonitorKind::Controller).unwrap();
    let ctrl_reference =
        parse_formula("(x=0 & v_post=-v | x>0 & v_post=v) & x_post=x").unwrap();
    match monitor_equiv(&ctrl.formula, &ctrl_reference, &grid).unwrap() {
        Equivalence::Equivalent { points } => assert_eq!(points, 3125),
        Equivalence::Mismatch(s) => panic!("controller monitors disagree at {s:?}"),
    }

    let model_mon = monitor_for_model(&model, MonitorKind::Model).unwrap();
    let model_reference = parse_formula(
        "2*g*(x_post-x)=v^2-v_post^2 & x>=0 & (x_post>0 & v_post<=v | x_post=0 & v_post>=-v)",
    )
    .unwrap();
    match monitor_equiv(&model_mon.formula, &model_reference, &grid).unwrap() {
        Equivalence::Equivalent { points } => assert_eq!(points, 3125),
        Equivalence::Mismatch(s) => panic!("model monitors disagree at {s:?}"),
    }
}

/// Exact transitions of the loop body from a spread of prior states, via
/// closed-form ODE enumeration; `g=2`, `c=1`.
fn ball_transitions() -> Vec<(State, State)> {
    let model = ball_model();
    let body = loop_body(&model).unwrap();
    let times: Vec<BigRational> = [
        (0, 1),
        (1, 8),
        (1, 4),
        (3, 8),
        (1, 2),
        (5, 8),
        (3, 4),
        (1, 1),
        (5, 4),
        (3, 2),
        (7, 4),
        (2, 1),
    ]
    .iter()
    .map(|(n, d)| q(*n, *d))
    .collect();
    let budget = EnumBudget::closed_form(1, times);

    let xs = [(0, 1), (1, 4), (1, 2), (3, 4), (1, 1), (3, 2), (2, 1), (3, 1), (4, 1), (9, 2), (5, 1), (6, 1)];
    let vs = [(-3, 1), (-5, 2), (-2, 1), (-3, 2), (-1, 1), (-1, 2), (0, 1), (1, 2), (1, 1), (3, 2), (2, 1), (3, 1)];
    let mut pairs = Vec::new();
    for (xn, xd) in xs {
        for (vn, vd) in vs {
            let prior = State::exact([
                (VarName::new("x"), q(xn, xd)),
                (VarName::new("v"), q(vn, vd)),
                (VarName::new("g"), q(2, 1)),
                (VarName::new("c"), q(1, 1)),
            ]);
            for post in reachable_states(&body, &prior, &budget).unwrap() {
                pairs.push((prior.clone(), post));
            }
        }
    }
    pairs
}

#[test]
fn every_simulated_transition_satisfies_the_model_monitor() {
    let monitor = monitor_for_model(&ball_model(), MonitorKind::Model).unwrap();
    let pairs = ball_transitions();
    assert!(pairs.len() >= 1000, "only {} transitions enumerated", pairs.len());
    for (prior, post) in &pairs {
        assert!(
            eval_monitor(&monitor, prior, post).unwrap(),
            "monitor rejected a real transition: {prior:?} -> {post:?}"
        );
    }
}

#[test]
fn energy_violating_perturbations_are_rejected() {
    let monitor = monitor_for_model(&ball_model(), MonitorKind::Model).unwrap();
    let x = VarName::new("x");
    let v = VarName::new("v");
    let offsets = [q(1, 3), q(-1, 3), q(1, 7), q(-1, 1)];
    let mut rejected = 0usize;
    for (prior, post) in ball_transitions() {
        let energy_residual = |post: &State| {
            let val = |s: &State, n: &VarName| s.get(n).unwrap().as_exact().unwrap();
            let sq = |r: BigRational| r.clone() * r;
            // 2g(x_post - x) - (v^2 - v_post^2), zero on the true dynamics.
            q(4, 1) * (val(post, &x) - val(&prior, &x))
                - (sq(val(&prior, &v)) - sq(val(post, &v)))
        };
        for delta in &offsets {
            for target in [&x, &v] {
                let mut bad = post.clone();
                let shifted = bad.get(target).unwrap().as_exact().unwrap() + delta;
                bad.set(target.clone(), Value::Exact(shifted));
                if !energy_residual(&bad).is_zero() {
                    assert!(
                        !eval_monitor(&monitor, &prior, &bad).unwrap(),
                        "monitor accepted an energy violation: {prior:?} -> {bad:?}"
                    );
                    rejected += 1;
                }
            }
        }
    }
    assert!(rejected >= 1000, "only {rejected} perturbations had nonzero residual");
}

#[test]
fn the_sandbox_model_ships_ground_monitors() {
    let model = parse_model_file(&corpus("bouncing_ball_sandbox.dlm")).unwrap();
    let ctrl = monitor_for_model(&model, MonitorKind::Controller).unwrap();
    assert_eq!(
        ctrl.formula.to_string(),
        "x_post=x & (x=0 & v_post=-v | x!=0 & v_post=v)"
    );
    let mon = monitor_for_model(&model, MonitorKind::Model).unwrap();
    assert_eq!(
        mon.formula.to_string(),
        "x>=0 & v^2+4*x>=v_post^2 & v_post^2+4*x_post=v^2+4*x & \
         (x=0 & v+v_post<=0 | x!=0 & v>=v_post)"
    );
    assert!(mon.warnings.is_empty(), "unexpected warnings: {:?}", mon.warnings);

    // One bounce period of the canonical drop from rest at x=1.
    let prior = State::exact([(VarName::new("x"), q(0, 1)), (VarName::new("v"), q(-2, 1))]);
    let post = State::exact([(VarName::new("x"), q(3, 4)), (VarName::new("v"), q(1, 1))]);
    assert!(eval_monitor(&mon, &prior, &post).unwrap());
}

#[test]
fn compiled_monitors_agree_with_the_formulas_they_came_from() {
    let monitor = monitor_for_model(&ball_model(), MonitorKind::Model).unwrap();
    let code = compile(&monitor.formula).unwrap();
    let merged = |prior: &State, post: &State| {
        let mut s = prior.clone();
        for (name, value) in post.iter() {
            if !name.primed {
                s.set(post_name(name), value.clone());
            }
        }
        s
    };
    for (prior, post) in ball_transitions().into_iter().take(300) {
        let state = merged(&prior, &post);
        assert_eq!(
            run(&code, &state).unwrap(),
            eval_monitor(&monitor, &prior, &post).unwrap()
        );
    }
}
