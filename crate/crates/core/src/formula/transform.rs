use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::build::*;
use super::Formula;
use crate::env::Environment;
use crate::space::AgentTag;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormulaError {
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("unknown proposition `{0}`")]
    UnknownAtom(String),
}

/// Checks that every agent and atom is known to `env`.
pub fn validate_formula(f: &Formula, env: &Environment) -> Result<(), FormulaError> {
    for tag in f.tags() {
        match tag {
            AgentTag::Env => {}
            AgentTag::Base(a) | AgentTag::Strategic(a) => {
                if env.agent_id(&a).is_none() {
                    return Err(FormulaError::UnknownAgent(a));
                }
            }
        }
    }
    for p in f.atoms() {
        if env.props().get(&p).is_none() && !env.strategy_atoms().contains_key(&p) {
            return Err(FormulaError::UnknownAtom(p));
        }
    }
    Ok(())
}

/// Removes all surface sugar, leaving only the core node kinds.
pub fn desugar(f: &Formula) -> Formula {
    use Formula::*;
    let d = |x: &Formula| Box::new(desugar(x));
    match f {
        Atom(_) | True | False | Loc(..) => f.clone(),
        Not(a) => Not(d(a)),
        And(a, b) => And(d(a), d(b)),
        Or(a, b) => Or(d(a), d(b)),
        PathAll(a) => PathAll(d(a)),
        Next(a) => Next(d(a)),
        Until(a, b) => Until(d(a), d(b)),
        Exists(x, a) => Exists(x.clone(), d(a)),
        Dist(g, a) => Dist(g.clone(), d(a)),
        Common(g, a) => Common(g.clone(), d(a)),
        Implies(a, b) => Or(Box::new(Not(d(a))), d(b)),
        Iff(a, b) => {
            let (a, b) = (desugar(a), desugar(b));
            and(
                or(not(a.clone()), b.clone()),
                or(not(b), a),
            )
        }
        Know(t, a) => Dist([t.clone()].into_iter().collect(), d(a)),
        Everyone(g, a) => {
            let body = desugar(a);
            conj(g.iter().map(|t| dist([t.clone()], body.clone())))
        }
        Finally(a) => Until(Box::new(True), d(a)),
        Globally(a) => not(until(True, not(desugar(a)))),
        PathExists(a) => not(all(not(desugar(a)))),
        Forall(x, a) => not(exists(x, not(desugar(a)))),
    }
}

/// Variables occurring free; `exists` and `forall` are the binders.
pub fn free_vars(f: &Formula) -> BTreeSet<String> {
    match f {
        Formula::Loc(_, x) => [x.clone()].into_iter().collect(),
        Formula::Exists(x, a) | Formula::Forall(x, a) => {
            let mut v = free_vars(a);
            v.remove(x);
            v
        }
        _ => f.children().into_iter().flat_map(free_vars).collect(),
    }
}

fn all_vars(f: &Formula, out: &mut BTreeSet<String>) {
    f.walk(&mut |g| match g {
        Formula::Loc(_, x) | Formula::Exists(x, _) | Formula::Forall(x, _) => {
            out.insert(x.clone());
        }
        _ => {}
    });
}

/// Replaces every `D[G] φ` with nonempty `G` by
/// `exists x . (loc(G,x) & D[] (loc(G,x) -> φ))` for a fresh `x`.
pub fn rewrite_dg_via_exists(f: &Formula) -> Formula {
    let mut used = BTreeSet::new();
    all_vars(f, &mut used);
    let mut counter = 0usize;
    rewrite(f, &used, &mut counter)
}

fn fresh(used: &BTreeSet<String>, counter: &mut usize) -> String {
    loop {
        let name = format!("d{counter}_");
        *counter += 1;
        if !used.contains(&name) {
            return name;
        }
    }
}

fn rewrite(f: &Formula, used: &BTreeSet<String>, counter: &mut usize) -> Formula {
    use Formula::*;
    let mut r = |x: &Formula| Box::new(rewrite(x, used, counter));
    match f {
        Atom(_) | True | False | Loc(..) => f.clone(),
        Not(a) => Not(r(a)),
        And(a, b) => {
            let a = r(a);
            And(a, r(b))
        }
        Or(a, b) => {
            let a = r(a);
            Or(a, r(b))
        }
        Implies(a, b) => {
            let a = r(a);
            Implies(a, r(b))
        }
        Iff(a, b) => {
            let a = r(a);
            Iff(a, r(b))
        }
        Until(a, b) => {
            let a = r(a);
            Until(a, r(b))
        }
        PathAll(a) => PathAll(r(a)),
        Next(a) => Next(r(a)),
        Finally(a) => Finally(r(a)),
        Globally(a) => Globally(r(a)),
        PathExists(a) => PathExists(r(a)),
        Exists(x, a) => Exists(x.clone(), r(a)),
        Forall(x, a) => Forall(x.clone(), r(a)),
        Common(g, a) => Common(g.clone(), r(a)),
        Everyone(g, a) => Everyone(g.clone(), r(a)),
        Know(t, a) => {
            let body = *r(a);
            eliminate(std::slice::from_ref(t), body, used, counter)
        }
        Dist(g, a) if g.is_empty() => Dist(g.clone(), r(a)),
        Dist(g, a) => {
            let body = *r(a);
            let tags: Vec<AgentTag> = g.iter().cloned().collect();
            eliminate(&tags, body, used, counter)
        }
    }
}

fn eliminate(tags: &[AgentTag], body: Formula, used: &BTreeSet<String>, counter: &mut usize) -> Formula {
    let x = fresh(used, counter);
    let locs = || conj(tags.iter().map(|t| loc(t.clone(), &x)));
    exists(&x, and(locs(), dist([], implies(locs(), body))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn p(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn desugar_examples() {
        assert_eq!(desugar(&p("F p")), p("(true U p)"));
        assert_eq!(desugar(&p("K[1] p")), p("D[1] p"));
        assert_eq!(desugar(&p("E[1,2] p")), p("D[1] p & D[2] p"));
        assert_eq!(desugar(&p("G p")), p("!(true U !p)"));
        assert_eq!(desugar(&p("E X p")), p("!A !X p"));
        assert_eq!(desugar(&p("p -> q")), p("!p | q"));
        assert_eq!(desugar(&p("forall x . loc(1,x)")), p("!exists x . !loc(1,x)"));
    }

    #[test]
    fn desugar_is_idempotent() {
        let f = p("K[1] (p -> F q) <-> E[1,sig(2)] G !p");
        let once = desugar(&f);
        assert_eq!(desugar(&once), once);
    }

    #[test]
    fn free_var_examples() {
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        assert_eq!(free_vars(&p("loc(1,x)")), set(&["x"]));
        assert_eq!(free_vars(&p("exists x . loc(1,x)")), set(&[]));
        assert_eq!(free_vars(&p("exists x . (loc(1,x) & loc(2,y))")), set(&["y"]));
    }

    #[test]
    fn dg_rewrite_examples() {
        assert_eq!(
            rewrite_dg_via_exists(&p("D[1] p")),
            p("exists d0_ . (loc(1,d0_) & D[] (loc(1,d0_) -> p))")
        );
        assert_eq!(rewrite_dg_via_exists(&p("D[] p")), p("D[] p"));
        let nested = rewrite_dg_via_exists(&p("D[1] D[2] p"));
        assert_eq!(
            nested,
            p("exists d1_ . (loc(1,d1_) & D[] (loc(1,d1_) -> exists d0_ . (loc(2,d0_) & D[] (loc(2,d0_) -> p))))")
        );
        // a variable already named d0_ is avoided
        let avoid = rewrite_dg_via_exists(&p("exists d0_ . D[1] loc(1,d0_)"));
        assert!(!free_vars(&avoid).contains("d0_"));
        assert_eq!(
            avoid,
            p("exists d0_ . exists d1_ . (loc(1,d1_) & D[] (loc(1,d1_) -> loc(1,d0_)))")
        );
    }
}
