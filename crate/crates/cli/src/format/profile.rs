//! Strategy tables: one line per `agent <name>: <key> -> {<actions>}`,
//! where the key is a state, `obs:<value>` (every state with that
//! observation) or `*`. Later lines override earlier ones, and every
//! agent must end up with a nonempty set at every state.
//!
//! ```text
//! agent 1: * -> {a, b}
//! agent 1: s1 -> {b}
//! agent 2: obs:far -> {x}
//! agent 2: obs:near -> {y}
//! ```

use esl_core::env::StateId;
use esl_core::{ActionSet, Environment, Strategy, StrategyProfile};

use super::{content_lines, split_arrow, FormatError};

fn action_set(env: &Environment, agent: u32, line: usize, text: &str) -> Result<ActionSet, FormatError> {
    let inner = text
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| FormatError::new(line, "expected `{a, b, ...}`"))?;
    let mut set = ActionSet(0);
    for name in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let a = env.actions(agent).get(name).ok_or_else(|| {
            FormatError::new(line, format!("unknown action `{name}` for agent `{}`", env.agent_name(agent)))
        })?;
        set.insert(a);
    }
    if set.is_empty() {
        return Err(FormatError::new(line, "a strategy must enable at least one action"));
    }
    Ok(set)
}

pub fn parse_profile(text: &str, env: &Environment) -> Result<StrategyProfile, FormatError> {
    let n = env.num_states();
    let mut table: Vec<Vec<Option<ActionSet>>> = vec![vec![None; n]; env.num_agents()];
    for (line, content) in content_lines(text) {
        let rest = content
            .strip_prefix("agent ")
            .ok_or_else(|| FormatError::new(line, "expected `agent <name>: ...`"))?;
        let (name, entry) = rest
            .split_once(':')
            .ok_or_else(|| FormatError::new(line, "expected `:` after the agent name"))?;
        let agent = env
            .agent_id(name.trim())
            .ok_or_else(|| FormatError::new(line, format!("unknown agent `{}`", name.trim())))?;
        let (key, set) = split_arrow(line, entry)?;
        let set = action_set(env, agent, line, set)?;
        let states: Vec<StateId> = if key == "*" {
            (0..n as StateId).collect()
        } else if let Some(v) = key.strip_prefix("obs:") {
            let o = env.observation_values(agent).get(v).ok_or_else(|| {
                FormatError::new(line, format!("agent `{}` has no observation `{v}`", env.agent_name(agent)))
            })?;
            (0..n as StateId).filter(|&s| env.observation(agent, s) == o).collect()
        } else {
            vec![env
                .state_id(key)
                .ok_or_else(|| FormatError::new(line, format!("unknown state `{key}`")))?]
        };
        for s in states {
            table[agent as usize][s as usize] = Some(set);
        }
    }
    let mut profile = Vec::with_capacity(env.num_agents());
    for (i, row) in table.into_iter().enumerate() {
        let mut strategy = Vec::with_capacity(n);
        for (s, set) in row.into_iter().enumerate() {
            strategy.push(set.ok_or_else(|| {
                FormatError::new(
                    0,
                    format!(
                        "agent `{}` has no entry for state `{}`",
                        env.agent_name(i as u32),
                        env.state_name(s as StateId)
                    ),
                )
            })?);
        }
        profile.push(Strategy(strategy));
    }
    Ok(StrategyProfile(profile))
}

fn set_text(env: &Environment, agent: u32, set: ActionSet) -> String {
    let names: Vec<&str> = set.iter().map(|a| env.actions(agent).name(a)).collect();
    format!("{{{}}}", names.join(", "))
}

/// One table per agent: `*` for a constant strategy, observation keys for
/// a uniform one, state keys otherwise.
pub fn render_profile(env: &Environment, profile: &StrategyProfile) -> String {
    let mut out = String::new();
    for (i, strategy) in profile.0.iter().enumerate() {
        let agent = i as u32;
        let name = env.agent_name(agent);
        if strategy.iter().all(|&set| set == strategy[0]) && !strategy.is_empty() {
            out.push_str(&format!("agent {name}: * -> {}\n", set_text(env, agent, strategy[0])));
        } else if strategy.is_uniform(env, agent) {
            let values = env.observation_values(agent);
            for o in 0..values.len() as u32 {
                if let Some(s) = (0..env.num_states() as StateId).find(|&s| env.observation(agent, s) == o) {
                    let set = set_text(env, agent, strategy.enabled(s));
                    out.push_str(&format!("agent {name}: obs:{} -> {set}\n", values.name(o)));
                }
            }
        } else {
            for s in 0..env.num_states() as StateId {
                let set = set_text(env, agent, strategy.enabled(s));
                out.push_str(&format!("agent {name}: {} -> {set}\n", env.state_name(s)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_env;

    fn env() -> Environment {
        parse_env(
            "agents:\n 1: a b\n 2: x\nstates: s0 s1 s2\ninit: s0\nobs:\n 1 s0 lo\n 1 s1 lo\n 1 s2 hi\n 2 * o\ntrans:\n s0 * * -> s1\n s1 * * -> s2\n s2 * * -> s0\n",
        )
        .unwrap()
    }

    #[test]
    fn overrides_and_observation_keys() {
        let env = env();
        let p = parse_profile("agent 1: * -> {a, b}\nagent 1: obs:hi -> {b}\nagent 2: * -> {x}\n", &env).unwrap();
        assert_eq!(p.0[0].0, vec![ActionSet(0b11), ActionSet(0b11), ActionSet(0b10)]);
        assert!(p.is_uniform(&env));
        let text = render_profile(&env, &p);
        assert!(text.contains("obs:hi"));
        assert_eq!(parse_profile(&text, &env).unwrap(), p);
        let q = parse_profile("agent 1: * -> {a}\nagent 1: s1 -> {b}\nagent 2: * -> {x}\n", &env).unwrap();
        assert_eq!(parse_profile(&render_profile(&env, &q), &env).unwrap(), q);
    }

    #[test]
    fn rejects_gaps_and_unknown_names() {
        let env = env();
        assert!(parse_profile("agent 1: * -> {a}\n", &env).unwrap_err().msg.contains("agent `2`"));
        assert_eq!(parse_profile("agent 1: * -> {c}\n", &env).unwrap_err().line, 1);
        assert_eq!(parse_profile("agent 1: * -> {}\n", &env).unwrap_err().line, 1);
        assert_eq!(parse_profile("\nagent 3: * -> {a}\n", &env).unwrap_err().line, 2);
    }
}
