//! Formulas of epistemic strategy logic: syntax tree, concrete grammar,
//! desugaring and fragment classification.

mod fragment;
mod parse;
pub(crate) mod render;
mod transform;

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

pub use fragment::{classify_fragment, is_state_formula, Fragment};
pub use parse::{parse_atel, parse_formula, parse_formula_for, ParseError};
pub use render::render_formula;
pub use transform::{desugar, free_vars, rewrite_dg_via_exists, validate_formula, FormulaError};

use crate::space::AgentTag;

pub type TagSet = BTreeSet<AgentTag>;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Formula {
    Atom(String),
    True,
    False,
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    /// `A φ`: φ holds on every path.
    PathAll(Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    /// `exists x . φ`
    Exists(String, Box<Formula>),
    /// `loc(t, x)`: tag `t` has the same local value here as in the state bound to `x`.
    Loc(AgentTag, String),
    Dist(TagSet, Box<Formula>),
    Common(TagSet, Box<Formula>),

    // surface sugar, removed by `desugar`
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Know(AgentTag, Box<Formula>),
    Everyone(TagSet, Box<Formula>),
    Finally(Box<Formula>),
    Globally(Box<Formula>),
    PathExists(Box<Formula>),
    Forall(String, Box<Formula>),
}

/// Terse constructors, mostly for encoders and tests.
pub mod build {
    use super::*;

    pub fn atom(p: &str) -> Formula {
        Formula::Atom(p.to_string())
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn all(f: Formula) -> Formula {
        Formula::PathAll(Box::new(f))
    }

    pub fn next(f: Formula) -> Formula {
        Formula::Next(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn exists(x: &str, f: Formula) -> Formula {
        Formula::Exists(x.to_string(), Box::new(f))
    }

    pub fn loc(t: AgentTag, x: &str) -> Formula {
        Formula::Loc(t, x.to_string())
    }

    pub fn dist(tags: impl IntoIterator<Item = AgentTag>, f: Formula) -> Formula {
        Formula::Dist(tags.into_iter().collect(), Box::new(f))
    }

    pub fn common(tags: impl IntoIterator<Item = AgentTag>, f: Formula) -> Formula {
        Formula::Common(tags.into_iter().collect(), Box::new(f))
    }

    pub fn know(t: AgentTag, f: Formula) -> Formula {
        Formula::Know(t, Box::new(f))
    }

    /// `¬D[]¬φ`: φ holds at some admissible point.
    pub fn somewhere(f: Formula) -> Formula {
        not(dist([], not(f)))
    }

    /// `E X φ` spelled `¬A¬X φ`.
    pub fn ex(f: Formula) -> Formula {
        not(all(not(next(f))))
    }

    /// Conjunction of a list; `true` when empty.
    pub fn conj(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut it = items.into_iter();
        match it.next() {
            None => Formula::True,
            Some(first) => it.fold(first, and),
        }
    }

    /// Disjunction of a list; `false` when empty.
    pub fn disj(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut it = items.into_iter();
        match it.next() {
            None => Formula::False,
            Some(first) => it.fold(first, or),
        }
    }
}

impl Formula {
    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Nesting depth; atoms, constants and `loc` have depth 1.
    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn children(&self) -> Vec<&Formula> {
        use Formula::*;
        match self {
            Atom(_) | True | False | Loc(..) => Vec::new(),
            Not(a) | PathAll(a) | Next(a) | Exists(_, a) | Dist(_, a) | Common(_, a) | Know(_, a)
            | Everyone(_, a) | Finally(a) | Globally(a) | PathExists(a) | Forall(_, a) => {
                alloc::vec![&**a]
            }
            And(a, b) | Or(a, b) | Until(a, b) | Implies(a, b) | Iff(a, b) => alloc::vec![&**a, &**b],
        }
    }

    /// Visits every node, parents before children.
    pub fn walk(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// All agent tags mentioned anywhere in the formula.
    pub fn tags(&self) -> BTreeSet<AgentTag> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| match f {
            Formula::Loc(t, _) | Formula::Know(t, _) => {
                out.insert(t.clone());
            }
            Formula::Dist(g, _) | Formula::Common(g, _) | Formula::Everyone(g, _) => {
                out.extend(g.iter().cloned());
            }
            _ => {}
        });
        out
    }

    /// All atom names in the formula.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| {
            if let Formula::Atom(p) = f {
                out.insert(p.clone());
            }
        });
        out
    }
}

impl core::fmt::Display for Formula {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&render_formula(self))
    }
}
