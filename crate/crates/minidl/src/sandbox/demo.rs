//! Built-in demonstration controllers for the bouncing ball.
//!
//! They speak the sandbox wire protocol on stdin/stdout, so scenario configs
//! can point `controller = $SELF demo-controller <mode>` at the very binary
//! running the sandbox. The compliant controller flips the velocity on
//! ground contact, exactly what the model's control step does; the
//! adversarial one never acts, which forces a veto whenever the ball is on
//! the ground and action is required.

use super::wire;
use num_traits::Zero;
use std::io::{BufRead, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoMode {
    /// Mirrors the model's controller: on the ground, reverse the velocity.
    Compliant,
    /// Never proposes anything; relies on the sandbox veto to stay safe.
    Adversarial,
}

impl std::str::FromStr for DemoMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "compliant" => Ok(DemoMode::Compliant),
            "adversarial" => Ok(DemoMode::Adversarial),
            other => Err(format!("unknown demo controller mode `{other}`")),
        }
    }
}

/// Serves requests until stdin closes. Malformed requests get an empty
/// proposal: the sandbox treats whatever we send as untrusted anyway.
pub fn run_demo_controller(mode: DemoMode) -> std::io::Result<()> {
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout();
    for line in stdin.lock().lines() {
        let line = line?;
        let reply = respond(mode, &line);
        writeln!(stdout, "{reply}")?;
        stdout.flush()?;
    }
    Ok(())
}

fn respond(mode: DemoMode, request: &str) -> String {
    const NO_ACTION: &str = "{\"set\":{}}";
    if mode == DemoMode::Adversarial {
        return NO_ACTION.to_string();
    }
    let Some((_, bindings)) = wire::parse_request(request) else {
        return NO_ACTION.to_string();
    };
    let get = |name: &str| bindings.iter().find(|(n, _)| n == name).map(|(_, q)| q);
    match (get("x"), get("v")) {
        (Some(x), Some(v)) if x.is_zero() => match wire::to_decimal(&-v.clone()) {
            Some(flipped) => format!("{{\"set\":{{\"v\":{flipped}}}}}"),
            None => NO_ACTION.to_string(),
        },
        _ => NO_ACTION.to_string(),
    }
}
