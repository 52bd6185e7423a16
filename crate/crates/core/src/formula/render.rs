use alloc::string::String;
use alloc::vec::Vec;

use super::parse::{is_word_char, KEYWORDS};
use super::{Formula, TagSet};
use crate::space::AgentTag;

pub(crate) fn atom_text(p: &str) -> String {
    let bare = !p.is_empty()
        && !KEYWORDS.contains(&p)
        && p != "."
        && !p.starts_with('.')
        && p.chars().all(|c| is_word_char(c) || c == '-')
        && !p.contains("->")
        && !p.ends_with('-');
    if bare {
        p.into()
    } else {
        let mut s = String::from("\"");
        for c in p.chars() {
            if c == '"' || c == '\\' {
                s.push('\\');
            }
            s.push(c);
        }
        s.push('"');
        s
    }
}

fn tags_text(tags: &TagSet) -> String {
    let parts: Vec<String> = tags.iter().map(|t| alloc::format!("{t}")).collect();
    parts.join(",")
}

fn tag_text(t: &AgentTag) -> String {
    alloc::format!("{t}")
}

/// Renders a formula in the concrete grammar. Binary connectives are always
/// parenthesized, so the output parses back to the same tree.
pub fn render_formula(f: &Formula) -> String {
    let mut out = String::new();
    go(f, &mut out);
    out
}

fn go(f: &Formula, out: &mut String) {
    use Formula::*;
    let bin = |out: &mut String, a: &Formula, op: &str, b: &Formula| {
        out.push('(');
        go(a, out);
        out.push(' ');
        out.push_str(op);
        out.push(' ');
        go(b, out);
        out.push(')');
    };
    let pre = |out: &mut String, op: &str, a: &Formula| {
        out.push_str(op);
        go(a, out);
    };
    match f {
        Atom(p) => out.push_str(&atom_text(p)),
        True => out.push_str("true"),
        False => out.push_str("false"),
        Not(a) => pre(out, "!", a),
        And(a, b) => bin(out, a, "&", b),
        Or(a, b) => bin(out, a, "|", b),
        Implies(a, b) => bin(out, a, "->", b),
        Iff(a, b) => bin(out, a, "<->", b),
        Until(a, b) => bin(out, a, "U", b),
        PathAll(a) => pre(out, "A ", a),
        PathExists(a) => pre(out, "E ", a),
        Next(a) => pre(out, "X ", a),
        Finally(a) => pre(out, "F ", a),
        Globally(a) => pre(out, "G ", a),
        Exists(x, a) => pre(out, &alloc::format!("exists {x} . "), a),
        Forall(x, a) => pre(out, &alloc::format!("forall {x} . "), a),
        Loc(t, x) => {
            out.push_str(&alloc::format!("loc({},{x})", tag_text(t)));
        }
        Dist(g, a) => pre(out, &alloc::format!("D[{}] ", tags_text(g)), a),
        Common(g, a) => pre(out, &alloc::format!("C[{}] ", tags_text(g)), a),
        Everyone(g, a) => pre(out, &alloc::format!("E[{}] ", tags_text(g)), a),
        Know(t, a) => pre(out, &alloc::format!("K[{}]", tag_text(t)), a),
    }
}
