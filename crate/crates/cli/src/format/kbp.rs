//! Knowledge-based programs, one `do … od` block per agent:
//!
//! ```text
//! agent 1: do K[1] A F q -> a
//!          [] otherwise -> b od
//! ```
//!
//! Clauses are separated by `[]`; a `[]` directly after a letter or digit
//! belongs to an operator such as `D[]`. The last `->` of a clause
//! separates the guard from the action.

use esl_core::formula::{parse_formula, render_formula};
use esl_core::kbp::{Guard, Program};

use super::{content_lines, split_arrow, FormatError};

fn split_clauses(body: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let bytes = body.as_bytes();
    let mut k = 0;
    while k + 1 < bytes.len() {
        let operator = k > 0 && bytes[k - 1].is_ascii_alphanumeric();
        if bytes[k] == b'[' && bytes[k + 1] == b']' && !operator {
            out.push(&body[start..k]);
            start = k + 2;
            k += 2;
        } else {
            k += 1;
        }
    }
    out.push(&body[start..]);
    out
}

fn parse_block(program: Program, line: usize, block: &str) -> Result<Program, FormatError> {
    let rest = block.strip_prefix("agent ").expect("block starts with `agent`");
    let (agent, body) = rest
        .split_once(':')
        .ok_or_else(|| FormatError::new(line, "expected `agent <name>: do ... od`"))?;
    let body = body
        .trim()
        .strip_prefix("do")
        .and_then(|b| b.strip_suffix("od"))
        .ok_or_else(|| FormatError::new(line, "program body must be `do ... od`"))?;
    let agent = agent.trim();
    let mut program = program;
    for clause in split_clauses(body) {
        let (guard, action) = split_arrow(line, clause)?;
        if action.is_empty() || action.contains(char::is_whitespace) {
            return Err(FormatError::new(line, format!("`{action}` is not an action name")));
        }
        let guard = if guard == "otherwise" {
            Guard::Otherwise
        } else {
            Guard::Formula(parse_formula(guard).map_err(|e| FormatError::new(line, format!("guard `{guard}`: {e}")))?)
        };
        program = program.clause(agent, guard, action);
    }
    Ok(program)
}

/// Parses a program. Agents and actions are checked later against an
/// environment by `Program::validate`.
pub fn parse_program(text: &str) -> Result<Program, FormatError> {
    let mut program = Program::new();
    let mut open: Option<(usize, String)> = None;
    for (line, content) in content_lines(text) {
        let (start, block) = match open.take() {
            Some((start, mut block)) => {
                block.push(' ');
                block.push_str(content);
                (start, block)
            }
            None if content.starts_with("agent ") => (line, content.to_string()),
            None => return Err(FormatError::new(line, "expected `agent <name>: do ...`")),
        };
        if block.split_whitespace().last() == Some("od") {
            if let Some(agent) = block.split(':').next() {
                let name = agent.trim_start_matches("agent ").trim();
                if program.agents.iter().any(|p| p.agent == name) {
                    return Err(FormatError::new(start, format!("second program block for agent `{name}`")));
                }
            }
            program = parse_block(program, start, &block)?;
        } else {
            open = Some((start, block));
        }
    }
    if let Some((start, _)) = open {
        return Err(FormatError::new(start, "program block is missing `od`"));
    }
    Ok(program)
}

pub fn render_program(program: &Program) -> String {
    let mut out = String::new();
    for p in &program.agents {
        let clauses: Vec<String> = p
            .clauses
            .iter()
            .map(|c| {
                let guard = match &c.guard {
                    Guard::Formula(f) => render_formula(f),
                    Guard::Otherwise => "otherwise".into(),
                };
                format!("{guard} -> {}", c.action)
            })
            .collect();
        out.push_str(&format!("agent {}: do {} od\n", p.agent, clauses.join(" [] ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operators_with_empty_groups_are_not_separators() {
        let p = parse_program("agent 1: do K[1] D[] p -> a [] K[1] (p -> q) -> b [] otherwise -> c od\n").unwrap();
        let clauses = &p.agents[0].clauses;
        assert_eq!(clauses.len(), 3);
        assert_eq!(clauses[0].guard, Guard::Formula(parse_formula("K[1] D[] p").unwrap()));
        assert_eq!(clauses[1].action, "b");
        assert_eq!(clauses[2].guard, Guard::Otherwise);
        assert_eq!(parse_program(&render_program(&p)).unwrap(), p);
    }

    #[test]
    fn blocks_span_lines() {
        let p = parse_program("agent 1: do K[1] p -> a\n  [] otherwise -> b\nod\nagent 2: do K[2] q -> x od\n").unwrap();
        assert_eq!(p.agents.len(), 2);
        assert_eq!(p.num_clauses(), 3);
    }

    #[test]
    fn reports_the_block_line() {
        assert_eq!(parse_program("\nagent 1: do K[1] p -> a [] od").unwrap_err().line, 2);
        assert_eq!(parse_program("agent 1: do K[1] p -> a").unwrap_err().line, 1);
        assert_eq!(parse_program("agent 1: K[1] p -> a od").unwrap_err().line, 1);
        assert!(parse_program("agent 1: do K[1] (p -> a od").is_err());
        assert!(parse_program("agent 1: do otherwise -> a od\nagent 1: do otherwise -> b od").is_err());
    }
}
