//! Random instance generators, a handcrafted corpus of knowledge-based
//! programs, and an independent path oracle, shared by the property tests
//! and the acceptance suite.
//!
//! Formula depth for the CTL-shaped generators counts a path quantifier
//! together with its temporal operator (`A X`, `E (_ U _)`, `A G`, ...) as
//! one level; atoms are depth 1.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::atel::{AtelFormula, Group};
use crate::check::ltl::{Graph, Lasso, Ltl, LtlNode};
use crate::env::Environment;
use crate::formula::build::*;
use crate::formula::Formula;
use crate::game::NormalFormGame;
use crate::kbp::{Guard, Program};
use crate::formula::parse_formula;
use crate::qbf::{QbfInstance, Quant};
use crate::space::AgentTag;

pub const AGENTS: [&str; 2] = ["1", "2"];
pub const ATOMS: [&str; 2] = ["p", "q"];

/// A serial environment with two agents `1` and `2`, at most `max_states`
/// states `s0..`, one or two actions per agent, two observation values per
/// agent and random labels over `p`, `q`. `s0` is always initial.
pub fn random_env<R: Rng + ?Sized>(rng: &mut R, max_states: usize) -> Environment {
    let n = rng.gen_range(1..=max_states.max(1));
    let mut b = Environment::builder();
    let mut actions: Vec<Vec<&str>> = Vec::new();
    for i in AGENTS {
        b.agent(i).expect("fresh agent");
        let k = rng.gen_range(1..=2);
        let names = &["a", "b"][..k];
        for a in names {
            b.action(i, a).expect("fresh action");
        }
        actions.push(names.to_vec());
    }
    let name = |s: usize| format!("s{s}");
    b.initial("s0");
    for s in 1..n {
        b.state(&name(s));
        if rng.gen_bool(0.25) {
            b.initial(&name(s));
        }
    }
    for p in ATOMS {
        b.prop(p);
    }
    for s in 0..n {
        for i in AGENTS {
            let o = if rng.gen_bool(0.5) { "0" } else { "1" };
            b.observe(i, &name(s), o).expect("declared agent");
        }
        for p in ATOMS {
            if rng.gen_bool(0.5) {
                b.label(&name(s), p);
            }
        }
    }
    for s in 0..n {
        for &a1 in &actions[0] {
            for &a2 in &actions[1] {
                let targets = rng.gen_range(1..=2);
                for _ in 0..targets {
                    let t = rng.gen_range(0..n);
                    b.transition(&name(s), &[Some(a1), Some(a2)], &name(t)).expect("declared actions");
                }
            }
        }
    }
    b.build()
}

fn random_tag<R: Rng + ?Sized>(rng: &mut R) -> AgentTag {
    match rng.gen_range(0..5) {
        0 => AgentTag::Env,
        1 | 2 => AgentTag::base(AGENTS[rng.gen_range(0..2)]),
        _ => AgentTag::strategic(AGENTS[rng.gen_range(0..2)]),
    }
}

/// A group of tags; empty only when `allow_empty`.
fn random_group<R: Rng + ?Sized>(rng: &mut R, allow_empty: bool) -> Vec<AgentTag> {
    let lo = if allow_empty { 0 } else { 1 };
    let k = rng.gen_range(lo..=2);
    (0..k).map(|_| random_tag(rng)).collect()
}

fn random_atom<R: Rng + ?Sized>(rng: &mut R) -> Formula {
    match rng.gen_range(0..10) {
        0 => Formula::True,
        1 => Formula::False,
        k => atom(ATOMS[k % 2]),
    }
}

/// Knobs for the state-formula generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FormulaShape {
    /// Allow `exists x .` and `loc(t, x)`.
    pub quantifiers: bool,
    /// Allow `C[G]`.
    pub common: bool,
}

impl FormulaShape {
    pub const CTLK: FormulaShape = FormulaShape {
        quantifiers: false,
        common: true,
    };
    pub const ESL_MINUS: FormulaShape = FormulaShape {
        quantifiers: true,
        common: true,
    };
}

struct StateGen<'a, R: Rng + ?Sized> {
    rng: &'a mut R,
    shape: FormulaShape,
    bound: Vec<String>,
    next_var: usize,
}

impl<R: Rng + ?Sized> StateGen<'_, R> {
    fn leaf(&mut self) -> Formula {
        if self.shape.quantifiers && !self.bound.is_empty() && self.rng.gen_bool(0.3) {
            let x = self.bound.choose(self.rng).expect("nonempty").clone();
            let t = random_tag(self.rng);
            return loc(t, &x);
        }
        random_atom(self.rng)
    }

    fn state(&mut self, depth: usize) -> Formula {
        if depth <= 1 || self.rng.gen_bool(0.2) {
            return self.leaf();
        }
        let d = depth - 1;
        let options = if self.shape.quantifiers { 14 } else { 13 };
        match self.rng.gen_range(0..options) {
            0 => not(self.state(d)),
            1 => and(self.state(d), self.state(d)),
            2 => or(self.state(d), self.state(d)),
            3 => know(AgentTag::base(AGENTS[self.rng.gen_range(0..2)]), self.state(d)),
            4 => {
                let g = random_group(self.rng, true);
                dist(g, self.state(d))
            }
            5 if self.shape.common => {
                let g = random_group(self.rng, false);
                common(g, self.state(d))
            }
            5 | 6 => all(next(self.state(d))),
            7 => ex(self.state(d)),
            8 => all(until(self.state(d), self.state(d))),
            9 => Formula::PathExists(Box::new(until(self.state(d), self.state(d)))),
            10 => all(Formula::Globally(Box::new(self.state(d)))),
            11 => Formula::PathExists(Box::new(Formula::Finally(Box::new(self.state(d))))),
            12 => implies(self.state(d), self.state(d)),
            _ => {
                let x = format!("x{}", self.next_var);
                self.next_var += 1;
                self.bound.push(x.clone());
                let body = self.state(d);
                self.bound.pop();
                exists(&x, body)
            }
        }
    }
}

/// A CTL-shaped state formula over `p`, `q` and the tags of agents `1`, `2`.
pub fn random_state_formula<R: Rng + ?Sized>(rng: &mut R, shape: FormulaShape, depth: usize) -> Formula {
    StateGen {
        rng,
        shape,
        bound: Vec::new(),
        next_var: 0,
    }
    .state(depth)
}

/// A path formula: LTL over CTLK state formulas of depth at most 2.
pub fn random_path_formula<R: Rng + ?Sized>(rng: &mut R, depth: usize) -> Formula {
    if depth <= 1 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.7) {
            random_atom(rng)
        } else {
            random_state_formula(rng, FormulaShape::CTLK, 2)
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..7) {
        0 => not(random_path_formula(rng, d)),
        1 => and(random_path_formula(rng, d), random_path_formula(rng, d)),
        2 => or(random_path_formula(rng, d), random_path_formula(rng, d)),
        3 => next(random_path_formula(rng, d)),
        4 => until(random_path_formula(rng, d), random_path_formula(rng, d)),
        5 => Formula::Finally(Box::new(random_path_formula(rng, d))),
        _ => Formula::Globally(Box::new(random_path_formula(rng, d))),
    }
}

/// A CTL*K state formula: knowledge and path quantifiers over arbitrary
/// path formulas.
pub fn random_ctlstark_formula<R: Rng + ?Sized>(rng: &mut R, depth: usize) -> Formula {
    if depth <= 1 {
        return random_atom(rng);
    }
    let d = depth - 1;
    match rng.gen_range(0..6) {
        0 => not(random_ctlstark_formula(rng, d)),
        1 => and(random_ctlstark_formula(rng, d), random_ctlstark_formula(rng, d)),
        2 => all(random_path_formula(rng, d)),
        3 => Formula::PathExists(Box::new(random_path_formula(rng, d))),
        4 => {
            let g = random_group(rng, true);
            dist(g, random_path_formula(rng, d))
        }
        _ => know(AgentTag::base(AGENTS[rng.gen_range(0..2)]), random_path_formula(rng, d)),
    }
}

fn random_coalition<R: Rng + ?Sized>(rng: &mut R) -> Group {
    AGENTS.iter().filter(|_| rng.gen_bool(0.5)).map(|a| a.to_string()).collect()
}

/// An ATEL formula over agents `1`, `2` and atoms `p`, `q`.
pub fn random_atel<R: Rng + ?Sized>(rng: &mut R, depth: usize) -> AtelFormula {
    use AtelFormula as A;
    if depth <= 1 || rng.gen_bool(0.15) {
        return match rng.gen_range(0..6) {
            0 => A::True,
            k => A::Atom(ATOMS[k % 2].to_string()),
        };
    }
    let d = depth - 1;
    let sub = |rng: &mut R| Box::new(random_atel(rng, d));
    match rng.gen_range(0..9) {
        0 => A::Not(sub(rng)),
        1 => A::And(sub(rng), sub(rng)),
        2 => A::Or(sub(rng), sub(rng)),
        3 => A::Next(random_coalition(rng), sub(rng)),
        4 => A::Globally(random_coalition(rng), sub(rng)),
        5 => A::Until(random_coalition(rng), sub(rng), sub(rng)),
        6 => A::Know(AGENTS[rng.gen_range(0..2)].to_string(), sub(rng)),
        7 => {
            let g = random_coalition(rng);
            A::Dist(g, sub(rng))
        }
        _ => {
            let mut g = random_coalition(rng);
            if g.is_empty() {
                g.insert(AGENTS[0].to_string());
            }
            A::Common(g, sub(rng))
        }
    }
}

/// A 2×2 or 3×3 game with integer payoffs in `-3..=3`.
pub fn random_game<R: Rng + ?Sized>(rng: &mut R) -> NormalFormGame {
    let n = if rng.gen_bool(0.5) { 2 } else { 3 };
    let matrix = |rng: &mut R| -> Vec<Vec<i64>> {
        (0..n).map(|_| (0..n).map(|_| rng.gen_range(-3..=3)).collect()).collect()
    };
    let p0 = matrix(rng);
    let p1 = matrix(rng);
    NormalFormGame::from_integers(&p0, &p1).expect("square matrices")
}

/// A propositional matrix over `vars` built from `!`, `&`, `|`, with a
/// variable at depth 1.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, vars: &[&str], depth: usize) -> Formula {
    if depth <= 1 || rng.gen_bool(0.2) {
        return atom(vars.choose(rng).expect("some variable"));
    }
    let d = depth - 1;
    match rng.gen_range(0..3) {
        0 => not(random_matrix(rng, vars, d)),
        1 => and(random_matrix(rng, vars, d), random_matrix(rng, vars, d)),
        _ => or(random_matrix(rng, vars, d), random_matrix(rng, vars, d)),
    }
}

/// `exists x1 forall x2 exists x3 forall x4 . γ` with a random matrix of
/// depth at most 5.
pub fn random_qbf4<R: Rng + ?Sized>(rng: &mut R) -> QbfInstance {
    let vars = ["x1", "x2", "x3", "x4"];
    let prefix = vars
        .iter()
        .enumerate()
        .map(|(k, x)| (if k % 2 == 0 { Quant::Exists } else { Quant::Forall }, x.to_string()))
        .collect();
    QbfInstance::new(prefix, random_matrix(rng, &vars, 5)).expect("closed propositional matrix")
}

/// Every matrix over `x1`, `x2` of depth at most `depth` built from `!`,
/// `&`, `|`, with a variable at depth 1. There are 302 of depth 3.
pub fn all_matrices(depth: usize) -> Vec<Formula> {
    let mut level: Vec<Formula> = vec![atom("x1"), atom("x2")];
    for _ in 1..depth {
        let mut next_level = level.clone();
        next_level.extend(level.iter().map(|a| not(a.clone())));
        for a in &level {
            for b in &level {
                next_level.push(and(a.clone(), b.clone()));
                next_level.push(or(a.clone(), b.clone()));
            }
        }
        // leaves of the previous level are already present
        let mut seen = alloc::collections::BTreeSet::new();
        next_level.retain(|f| seen.insert(f.clone()));
        level = next_level;
    }
    level
}

/// All two-variable alternating instances `exists x1 forall x2 . γ` and
/// `forall x1 exists x2 . γ` with matrices of depth at most 3.
pub fn two_variable_family() -> Vec<QbfInstance> {
    let mut out = Vec::new();
    for m in all_matrices(3) {
        for (q1, q2) in [(Quant::Exists, Quant::Forall), (Quant::Forall, Quant::Exists)] {
            let prefix = vec![(q1, "x1".to_string()), (q2, "x2".to_string())];
            out.push(QbfInstance::new(prefix, m.clone()).expect("closed matrix"));
        }
    }
    out
}

/// A named environment with a program over it.
#[derive(Clone, Debug)]
pub struct KbpCase {
    pub name: &'static str,
    pub env: Environment,
    pub program: Program,
}

fn guard(text: &str) -> Guard {
    Guard::Formula(parse_formula(text).expect("corpus guard parses"))
}

/// Agent `1` sees nothing; `a` moves `s0` to the absorbing `q`-state `s1`,
/// `b` stays.
pub fn blind_switch() -> Environment {
    let mut b = Environment::builder();
    b.agent("1").expect("fresh agent");
    b.action("1", "a").expect("fresh action");
    b.action("1", "b").expect("fresh action");
    b.initial("s0");
    b.state("s1");
    b.transition("s0", &[Some("a")], "s1").expect("declared");
    b.transition("s0", &[Some("b")], "s0").expect("declared");
    b.transition("s1", &[None], "s1").expect("declared");
    b.observe("1", "s0", "o").expect("declared");
    b.observe("1", "s1", "o").expect("declared");
    b.prop("p");
    b.label("s1", "q");
    b.build()
}

/// As [`blind_switch`], but agent `1` sees the state.
fn seeing_switch() -> Environment {
    let mut b = Environment::builder();
    b.agent("1").expect("fresh agent");
    b.action("1", "a").expect("fresh action");
    b.action("1", "b").expect("fresh action");
    b.initial("s0");
    b.transition("s0", &[Some("a")], "s1").expect("declared");
    b.transition("s0", &[Some("b")], "s0").expect("declared");
    b.transition("s1", &[Some("a")], "s1").expect("declared");
    b.transition("s1", &[Some("b")], "s0").expect("declared");
    b.observe("1", "s0", "0").expect("declared");
    b.observe("1", "s1", "1").expect("declared");
    b.prop("p");
    b.label("s1", "q");
    b.build()
}

/// Two agents over three states. From `s0` agent `1` picks the next state
/// (`a` to `s1`, `b` to `s2`); agent `2`'s choice is ignored there. At
/// `s1` and `s2` agent `2`'s `a` returns to `s0`, `b` stays. Agent `1`
/// sees everything, agent `2` only tells `s0` apart.
fn relay() -> Environment {
    let mut b = Environment::builder();
    for i in AGENTS {
        b.agent(i).expect("fresh agent");
        b.action(i, "a").expect("fresh action");
        b.action(i, "b").expect("fresh action");
    }
    b.initial("s0");
    b.transition("s0", &[Some("a"), None], "s1").expect("declared");
    b.transition("s0", &[Some("b"), None], "s2").expect("declared");
    for s in ["s1", "s2"] {
        b.transition(s, &[None, Some("a")], "s0").expect("declared");
        b.transition(s, &[None, Some("b")], s).expect("declared");
    }
    for (s, o1, o2) in [("s0", "0", "0"), ("s1", "1", "x"), ("s2", "2", "x")] {
        b.observe("1", s, o1).expect("declared");
        b.observe("2", s, o2).expect("declared");
    }
    b.label("s1", "p");
    b.label("s2", "q");
    b.build()
}

/// The corpus: at least five environment/program pairs with at most three
/// states each, covering self-reference, paradox, lack of coverage,
/// `otherwise`, several agents and common knowledge.
pub fn kbp_corpus() -> Vec<KbpCase> {
    vec![
        KbpCase {
            name: "self-fulfilling",
            env: blind_switch(),
            program: Program::new()
                .clause("1", guard("K[1] A F q"), "a")
                .clause("1", Guard::Otherwise, "b"),
        },
        KbpCase {
            name: "paradox",
            env: blind_switch(),
            program: Program::new()
                .clause("1", guard("K[1] A G !q"), "a")
                .clause("1", Guard::Otherwise, "b"),
        },
        KbpCase {
            name: "uncovered",
            env: blind_switch(),
            program: Program::new().clause("1", guard("K[1] p"), "a"),
        },
        KbpCase {
            name: "reactive",
            env: seeing_switch(),
            program: Program::new()
                .clause("1", guard("K[1] !q"), "a")
                .clause("1", guard("K[1] q"), "b"),
        },
        KbpCase {
            name: "overlapping guards",
            env: seeing_switch(),
            program: Program::new()
                .clause("1", guard("K[1] E X q"), "a")
                .clause("1", guard("K[1] true"), "b"),
        },
        KbpCase {
            name: "relay",
            env: relay(),
            program: Program::new()
                .clause("1", guard("K[1] true"), "a")
                .clause("2", guard("K[2] (p | q)"), "a")
                .clause("2", Guard::Otherwise, "b"),
        },
        KbpCase {
            name: "relay with nested knowledge",
            env: relay(),
            program: Program::new()
                .clause("1", guard("K[1] !K[2] A X (p | q)"), "a")
                .clause("1", Guard::Otherwise, "b")
                .clause("2", guard("K[2] A F p"), "a")
                .clause("2", Guard::Otherwise, "b"),
        },
        KbpCase {
            name: "common knowledge",
            env: relay(),
            program: Program::new()
                .clause("1", guard("K[1] C[1,2] E F p"), "a")
                .clause("1", Guard::Otherwise, "b")
                .clause("2", guard("K[2] true"), "a"),
        },
    ]
}

/// Evaluates a path formula on the ultimately periodic word that visits
/// `prefix` once and then repeats `cycle`, reading leaf `k` at vertex `v`
/// from `leaves[k][v]`.
pub fn eval_on_lasso(f: &Ltl, root: u32, leaves: &[&[bool]], prefix: &[u32], cycle: &[u32]) -> bool {
    let word: Vec<u32> = prefix.iter().chain(cycle).copied().collect();
    let n = word.len();
    let succ = |i: usize| if i + 1 < n { i + 1 } else { prefix.len() };
    let mut value: Vec<Vec<bool>> = Vec::with_capacity(f.len());
    for node in f.nodes() {
        let row: Vec<bool> = match *node {
            LtlNode::Leaf(k) => word.iter().map(|&v| leaves[k as usize][v as usize]).collect(),
            LtlNode::True => vec![true; n],
            LtlNode::False => vec![false; n],
            LtlNode::Not(a) => value[a as usize].iter().map(|b| !b).collect(),
            LtlNode::And(a, b) => (0..n).map(|i| value[a as usize][i] && value[b as usize][i]).collect(),
            LtlNode::Or(a, b) => (0..n).map(|i| value[a as usize][i] || value[b as usize][i]).collect(),
            LtlNode::Next(a) => (0..n).map(|i| value[a as usize][succ(i)]).collect(),
            LtlNode::Until(a, b) => {
                // least fixpoint of u = b ∨ (a ∧ X u)
                let (va, vb) = (&value[a as usize], &value[b as usize]);
                let mut u = vec![false; n];
                loop {
                    let mut changed = false;
                    for i in (0..n).rev() {
                        let new = vb[i] || (va[i] && u[succ(i)]);
                        if new != u[i] {
                            u[i] = new;
                            changed = true;
                        }
                    }
                    if !changed {
                        break u;
                    }
                }
            }
        };
        value.push(row);
    }
    value[root as usize][0]
}

/// Every lasso from `start` whose prefix and cycle together have at most
/// `max_len` vertices (vertices may repeat).
pub fn enumerate_lassos<G: Graph>(graph: &G, start: u32, max_len: usize) -> Vec<Lasso> {
    fn go<G: Graph>(graph: &G, path: &mut Vec<u32>, max_len: usize, out: &mut Vec<Lasso>) {
        let last = *path.last().expect("nonempty path");
        for &w in graph.successors(last) {
            for (j, &v) in path.iter().enumerate() {
                if v == w {
                    out.push(Lasso {
                        prefix: path[..j].to_vec(),
                        cycle: path[j..].to_vec(),
                    });
                }
            }
            if path.len() < max_len {
                path.push(w);
                go(graph, path, max_len, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    if max_len > 0 {
        go(graph, &mut vec![start], max_len, &mut out);
    }
    out
}

/// True when `lasso` is a path of `graph` from `start`.
pub fn is_lasso_of<G: Graph>(graph: &G, start: u32, lasso: &Lasso) -> bool {
    let word: Vec<u32> = lasso.prefix.iter().chain(&lasso.cycle).copied().collect();
    let Some(&first) = word.first() else {
        return false;
    };
    let Some(&back) = lasso.cycle.first() else {
        return false;
    };
    let edge = |u: u32, v: u32| graph.successors(u).contains(&v);
    first == start
        && word.windows(2).all(|w| edge(w[0], w[1]))
        && edge(*word.last().expect("nonempty"), back)
}

/// A serial graph on `1..=max_vertices` vertices with `n_leaves` random
/// valuations.
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R, max_vertices: usize, n_leaves: usize) -> (Vec<Vec<u32>>, Vec<Vec<bool>>) {
    let n = rng.gen_range(1..=max_vertices.max(1));
    let graph = (0..n)
        .map(|_| {
            let mut succ: Vec<u32> = (0..n as u32).filter(|_| rng.gen_bool(0.4)).collect();
            if succ.is_empty() {
                succ.push(rng.gen_range(0..n as u32));
            }
            succ
        })
        .collect();
    let leaves = (0..n_leaves).map(|_| (0..n).map(|_| rng.gen_bool(0.5)).collect()).collect();
    (graph, leaves)
}

/// A random path formula DAG over `n_leaves` leaves; returns its root.
pub fn random_ltl<R: Rng + ?Sized>(rng: &mut R, f: &mut Ltl, n_leaves: u32, depth: usize) -> u32 {
    if depth <= 1 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..8) {
            0 => f.add(LtlNode::True),
            1 => f.add(LtlNode::False),
            _ => f.add(LtlNode::Leaf(rng.gen_range(0..n_leaves))),
        };
    }
    let d = depth - 1;
    let node = match rng.gen_range(0..5) {
        0 => LtlNode::Not(random_ltl(rng, f, n_leaves, d)),
        1 => LtlNode::And(random_ltl(rng, f, n_leaves, d), random_ltl(rng, f, n_leaves, d)),
        2 => LtlNode::Or(random_ltl(rng, f, n_leaves, d), random_ltl(rng, f, n_leaves, d)),
        3 => LtlNode::Next(random_ltl(rng, f, n_leaves, d)),
        _ => LtlNode::Until(random_ltl(rng, f, n_leaves, d), random_ltl(rng, f, n_leaves, d)),
    };
    f.add(node)
}
