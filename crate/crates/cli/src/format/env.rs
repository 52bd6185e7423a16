//! Environment files.
//!
//! ```text
//! agents:
//!   1: a b
//! states: s0 s1
//! init: s0
//! props: p q
//! labels:
//!   s0: p
//!   s1: q
//! obs:
//!   1 * o
//! trans:
//!   s0 a -> s0
//!   s0 b -> s1
//!   s1 * -> s1
//! ```
//!
//! Section headers start in the first column; indented lines always
//! belong to the current section, so a state named like a section can
//! still be labelled. Section contents are applied in a fixed order
//! (agents, states, init, props, labels, transitions, observations)
//! whatever the file order, so an observation wildcard `*` covers every
//! state the file mentions.

use esl_core::env::{EnvironmentBuilder, StateId};
use esl_core::Environment;

use super::{content_lines, split_arrow, FormatError};

const SECTIONS: [&str; 7] = ["agents", "states", "init", "props", "labels", "obs", "trans"];

type Lines<'a> = Vec<(usize, &'a str)>;

#[derive(Default)]
struct Sections<'a> {
    by_name: [Lines<'a>; 7],
}

impl<'a> Sections<'a> {
    fn get(&self, name: &str) -> &Lines<'a> {
        &self.by_name[SECTIONS.iter().position(|s| *s == name).expect("known section")]
    }
}

fn header(line: &str) -> Option<(usize, &str)> {
    let (head, rest) = line.split_once(':')?;
    let k = SECTIONS.iter().position(|s| *s == head.trim())?;
    Some((k, rest.trim()))
}

fn split_sections(text: &str) -> Result<Sections<'_>, FormatError> {
    let mut out = Sections::default();
    let mut current = None;
    let raw: Vec<&str> = text.lines().collect();
    for (n, line) in content_lines(text) {
        let indented = raw[n - 1].starts_with(char::is_whitespace);
        if let Some((k, rest)) = header(line).filter(|_| !indented) {
            current = Some(k);
            if !rest.is_empty() {
                out.by_name[k].push((n, rest));
            }
            continue;
        }
        match current {
            Some(k) => out.by_name[k].push((n, line)),
            None => return Err(FormatError::new(n, "content before the first section header")),
        }
    }
    Ok(out)
}

fn at(line: usize) -> impl Fn(esl_core::env::EnvError) -> FormatError {
    move |e| FormatError::new(line, e.to_string())
}

fn words(s: &str) -> impl Iterator<Item = &str> {
    s.split_whitespace()
}

/// Parses an environment. Invariants such as seriality are not checked
/// here; see [`Environment::validate`].
pub fn parse_env(text: &str) -> Result<Environment, FormatError> {
    let sec = split_sections(text)?;
    let mut b = Environment::builder();
    for &(n, line) in sec.get("agents") {
        let (agent, acts) = line
            .split_once(':')
            .ok_or_else(|| FormatError::new(n, "expected `<agent>: <actions>`"))?;
        let agent = agent.trim();
        b.agent(agent).map_err(at(n))?;
        for a in words(acts) {
            b.action(agent, a).map_err(at(n))?;
        }
    }
    for &(n, line) in sec.get("states") {
        for s in words(line) {
            check_name(n, s)?;
            b.state(s);
        }
    }
    for &(_, line) in sec.get("init") {
        for s in words(line) {
            b.initial(s);
        }
    }
    for &(_, line) in sec.get("props") {
        for p in words(line) {
            b.prop(p);
        }
    }
    for &(n, line) in sec.get("labels") {
        let (s, props) = line
            .split_once(':')
            .ok_or_else(|| FormatError::new(n, "expected `<state>: <props>`"))?;
        let s = s.trim();
        check_name(n, s)?;
        b.state(s);
        for p in words(props) {
            b.label(s, p);
        }
    }
    for &(n, line) in sec.get("trans") {
        transition(&mut b, n, line)?;
    }
    let all_states: Vec<String> = b.state_names().map(String::from).collect();
    for &(n, line) in sec.get("obs") {
        let parts: Vec<&str> = words(line).collect();
        let [agent, state, value] = parts[..] else {
            return Err(FormatError::new(n, "expected `<agent> <state|*> <value>`"));
        };
        if state == "*" {
            for s in &all_states {
                b.observe(agent, s, value).map_err(at(n))?;
            }
        } else {
            b.observe(agent, state, value).map_err(at(n))?;
        }
    }
    Ok(b.build())
}

fn check_name(n: usize, s: &str) -> Result<(), FormatError> {
    if s == "*" || s == "->" {
        return Err(FormatError::new(n, format!("`{s}` is not a state name")));
    }
    Ok(())
}

fn transition(b: &mut EnvironmentBuilder, n: usize, line: &str) -> Result<(), FormatError> {
    let (lhs, rhs) = split_arrow(n, line)?;
    let targets: Vec<&str> = words(rhs).collect();
    if targets.is_empty() {
        return Err(FormatError::new(n, "transition has no target"));
    }
    let lhs: Vec<&str> = words(lhs).collect();
    if let ["turn", from, agent, action] = lhs[..] {
        for t in targets {
            b.turn(from, agent, action, t).map_err(at(n))?;
        }
        return Ok(());
    }
    let Some((from, acts)) = lhs.split_first() else {
        return Err(FormatError::new(n, "transition has no source state"));
    };
    let joint: Vec<Option<&str>> = acts.iter().map(|&a| (a != "*").then_some(a)).collect();
    for t in targets {
        b.transition(from, &joint, t).map_err(at(n))?;
    }
    Ok(())
}

/// Renders in the canonical layout: every state in `states:`, all
/// propositions in `props:`, observations grouped by value, and one
/// transition line per (state, joint action), collapsed to `*` when the
/// state ignores the joint action.
pub fn render_env(env: &Environment) -> String {
    let mut out = String::from("agents:\n");
    for i in 0..env.num_agents() as u32 {
        let acts: Vec<&str> = env.actions(i).names().collect();
        out.push_str(&format!("  {}: {}\n", env.agent_name(i), acts.join(" ")));
    }
    let states: Vec<&str> = env.states().names().collect();
    out.push_str(&format!("states: {}\n", states.join(" ")));
    let init: Vec<&str> = env.initial().iter().map(|&s| env.state_name(s)).collect();
    out.push_str(&format!("init: {}\n", init.join(" ")));
    let props: Vec<&str> = env.props().names().collect();
    if !props.is_empty() {
        out.push_str(&format!("props: {}\n", props.join(" ")));
    }
    out.push_str("labels:\n");
    for s in 0..env.num_states() as StateId {
        let labels: Vec<&str> = env.labels(s).iter().map(|&p| env.props().name(p)).collect();
        if !labels.is_empty() {
            out.push_str(&format!("  {}: {}\n", env.state_name(s), labels.join(" ")));
        }
    }
    out.push_str("obs:\n");
    for i in 0..env.num_agents() as u32 {
        let values = env.observation_values(i);
        for o in 0..values.len() as u32 {
            let holders: Vec<StateId> = (0..env.num_states() as StateId)
                .filter(|&s| env.observation(i, s) == o)
                .collect();
            if holders.len() == env.num_states() {
                out.push_str(&format!("  {} * {}\n", env.agent_name(i), values.name(o)));
                continue;
            }
            for s in holders {
                out.push_str(&format!("  {} {} {}\n", env.agent_name(i), env.state_name(s), values.name(o)));
            }
        }
    }
    out.push_str("trans:\n");
    let n_joint = env.num_joint_actions();
    for s in 0..env.num_states() as StateId {
        let name = env.state_name(s);
        let target_text = |j: usize| {
            let t: Vec<&str> = env.post(s, j).iter().map(|&t| env.state_name(t)).collect();
            t.join(" ")
        };
        let uniform = n_joint > 0 && (1..n_joint).all(|j| env.post(s, j) == env.post(s, 0));
        if uniform {
            if !env.post(s, 0).is_empty() {
                let stars = vec!["*"; env.num_agents()].join(" ");
                out.push_str(&format!("  {name} {stars} -> {}\n", target_text(0)));
            }
            continue;
        }
        for j in 0..n_joint {
            if env.post(s, j).is_empty() {
                continue;
            }
            let acts: Vec<&str> = env
                .decode_joint(j)
                .iter()
                .enumerate()
                .map(|(i, &a)| env.actions(i as u32).name(a))
                .collect();
            out.push_str(&format!("  {name} {} -> {}\n", acts.join(" "), target_text(j)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const E1: &str = "\
agents:
  1: a b
states: s0 s1
init: s0
labels:
  s0: p
  s1: q
obs:
  1 * o   # agent 1 is blind
trans:
  s0 a -> s0
  s0 b -> s1
  s1 * -> s1
";

    #[test]
    fn parses_the_two_state_example() {
        let env = parse_env(E1).unwrap();
        assert_eq!(env.num_states(), 2);
        assert!(env.validate().is_empty());
        assert_eq!(env.post(0, 0), &[0]);
        assert_eq!(env.post(0, 1), &[1]);
        assert_eq!(env.post(1, 0), &[1]);
        assert_eq!(parse_env(&render_env(&env)).unwrap(), env);
    }

    #[test]
    fn turn_lines_ignore_other_agents() {
        let text = "agents:\n 1: a\n 2: x y\nstates: s t\ninit: s\nobs:\n 1 * o\n 2 * o\ntrans:\n turn s 1 a -> t\n t * * -> t\n";
        let env = parse_env(text).unwrap();
        assert!(env.validate().is_empty());
        assert_eq!(env.post(0, 1), &[1]);
    }

    #[test]
    fn indented_lines_are_never_headers() {
        let text = "agents:\n 1: a\nstates: init\ninit: init\nlabels:\n  init: init\nobs:\n 1 * o\ntrans:\n init * -> init\n";
        let env = parse_env(text).unwrap();
        assert_eq!(env.num_states(), 1);
        assert!(env.has_prop(0, env.props().get("init").unwrap()));
        assert_eq!(parse_env(&render_env(&env)).unwrap(), env);
    }

    #[test]
    fn errors_name_the_line() {
        let err = parse_env("agents:\n 1: a\ntrans:\n s0 c -> s0\n").unwrap_err();
        assert_eq!(err.line, 4);
        assert!(err.msg.contains("unknown action"));
        assert_eq!(parse_env("s0 a -> s1\n").unwrap_err().line, 1);
        assert_eq!(parse_env("agents:\n 1: a\nobs:\n 1 s0\n").unwrap_err().line, 4);
        assert_eq!(parse_env("agents:\n 1: a\ntrans:\n s0 a s1\n").unwrap_err().line, 4);
    }
}
