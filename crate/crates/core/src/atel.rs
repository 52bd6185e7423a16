//! Alternating-time temporal epistemic logic: direct semantics over
//! environment states, the translation into the strategy-space logic, and
//! the related encodings of strategic knowledge, constructive knowledge in
//! normal form, and commitment to named strategies.

use alloc::boxed::Box;
use alloc::collections::{BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::check::{CheckError, CheckOptions, Checker, Context, Engine};
use crate::env::{AgentId, EnvError, Environment, StateId};
use crate::formula::build::*;
use crate::formula::{Formula, TagSet};
use crate::space::{successors, AgentTag};
use crate::strategy::{agent_strategies, Strategy, StrategyClass, StrategyProfile};

pub type Group = BTreeSet<String>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AtelFormula {
    Atom(String),
    True,
    Not(Box<AtelFormula>),
    And(Box<AtelFormula>, Box<AtelFormula>),
    Or(Box<AtelFormula>, Box<AtelFormula>),
    /// `<<G>> X φ`
    Next(Group, Box<AtelFormula>),
    /// `<<G>> G φ`
    Globally(Group, Box<AtelFormula>),
    /// `<<G>> (φ U ψ)`
    Until(Group, Box<AtelFormula>, Box<AtelFormula>),
    Know(String, Box<AtelFormula>),
    Dist(Group, Box<AtelFormula>),
    Common(Group, Box<AtelFormula>),
}

impl AtelFormula {
    pub fn not(f: AtelFormula) -> Self {
        AtelFormula::Not(Box::new(f))
    }

    pub fn implies(a: AtelFormula, b: AtelFormula) -> Self {
        AtelFormula::Or(Box::new(Self::not(a)), Box::new(b))
    }

    pub fn iff(a: AtelFormula, b: AtelFormula) -> Self {
        AtelFormula::And(
            Box::new(Self::implies(a.clone(), b.clone())),
            Box::new(Self::implies(b, a)),
        )
    }

    /// `E_G φ` as the conjunction of `K_i φ`; `true` for the empty group.
    pub fn everyone(group: &Group, f: AtelFormula) -> Self {
        let mut it = group.iter().map(|i| AtelFormula::Know(i.clone(), Box::new(f.clone())));
        match it.next() {
            None => AtelFormula::True,
            Some(first) => it.fold(first, |a, b| AtelFormula::And(Box::new(a), Box::new(b))),
        }
    }

    pub fn children(&self) -> Vec<&AtelFormula> {
        use AtelFormula::*;
        match self {
            Atom(_) | True => vec![],
            Not(a) | Next(_, a) | Globally(_, a) | Know(_, a) | Dist(_, a) | Common(_, a) => vec![a],
            And(a, b) | Or(a, b) | Until(_, a, b) => vec![a, b],
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children().into_iter().map(AtelFormula::depth).max().unwrap_or(0)
    }

    fn walk(&self, f: &mut impl FnMut(&AtelFormula)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }
}

fn group_text(g: &Group) -> String {
    g.iter().cloned().collect::<Vec<_>>().join(",")
}

impl fmt::Display for AtelFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use AtelFormula::*;
        match self {
            Atom(p) => f.write_str(&crate::formula::render::atom_text(p)),
            True => f.write_str("true"),
            Not(a) => write!(f, "!{a}"),
            And(a, b) => write!(f, "({a} & {b})"),
            Or(a, b) => write!(f, "({a} | {b})"),
            Next(g, a) => write!(f, "<<{}>> X {a}", group_text(g)),
            Globally(g, a) => write!(f, "<<{}>> G {a}", group_text(g)),
            Until(g, a, b) => write!(f, "<<{}>> ({a} U {b})", group_text(g)),
            Know(i, a) => write!(f, "K[{i}]{a}"),
            Dist(g, a) => write!(f, "D[{}] {a}", group_text(g)),
            Common(g, a) => write!(f, "C[{}] {a}", group_text(g)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AtelError {
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("unknown proposition `{0}`")]
    UnknownAtom(String),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("strategy `{name}` belongs to agent `{owner}`, not `{agent}`")]
    WrongOwner {
        name: String,
        owner: String,
        agent: String,
    },
    #[error("group strategy set is not {0}")]
    NotClosed(&'static str),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Check(#[from] CheckError),
}

/// The group strategy sets with built-in support: every member plays a
/// deterministic strategy, or a locally uniform deterministic one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtelKind {
    Deterministic,
    UniformDeterministic,
}

impl AtelKind {
    pub fn base_class(self) -> StrategyClass {
        match self {
            AtelKind::Deterministic => StrategyClass::Deterministic,
            AtelKind::UniformDeterministic => StrategyClass::LocallyUniformDeterministic,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AtelKind::Deterministic => "det",
            AtelKind::UniformDeterministic => "unif-det",
        }
    }
}

/// A set of group strategies: for each group, the product of its members'
/// individual strategy sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupStrategySet {
    pub kind: AtelKind,
}

impl GroupStrategySet {
    pub fn new(kind: AtelKind) -> Self {
        GroupStrategySet { kind }
    }

    /// All group strategies for `group` (ascending agent ids), one
    /// strategy per member.
    pub fn strategies(&self, env: &Environment, group: &[AgentId]) -> Vec<Vec<Strategy>> {
        let per_agent: Vec<Vec<Strategy>> = group
            .iter()
            .map(|&i| agent_strategies(env, i, &self.kind.base_class()).expect("built-in classes enumerate"))
            .collect();
        let mut out = vec![Vec::new()];
        for list in per_agent {
            let mut next = Vec::with_capacity(out.len() * list.len());
            for prefix in &out {
                for s in &list {
                    let mut v = prefix.clone();
                    v.push(s.clone());
                    next.push(v);
                }
            }
            out = next;
        }
        out
    }

    pub fn contains(&self, env: &Environment, group: &[AgentId], strategy: &[Strategy]) -> bool {
        group.len() == strategy.len()
            && group.iter().zip(strategy).all(|(&i, s)| {
                s.is_deterministic()
                    && (self.kind == AtelKind::Deterministic || s.is_uniform(env, i))
                    && s.len() == env.num_states()
            })
    }

    /// Every restriction of a member to a subgroup is a member.
    pub fn is_restrictable(&self, env: &Environment) -> bool {
        subsets(env.num_agents()).iter().all(|g| {
            self.strategies(env, g).iter().all(|sigma| {
                subsets_of(g).iter().all(|sub| {
                    let restricted: Vec<Strategy> = sub
                        .iter()
                        .map(|i| sigma[g.iter().position(|j| j == i).unwrap()].clone())
                        .collect();
                    self.contains(env, sub, &restricted)
                })
            })
        })
    }

    /// Every member for a subgroup extends to a member for the group.
    pub fn is_extendable(&self, env: &Environment) -> bool {
        subsets(env.num_agents()).iter().all(|g| {
            let full = self.strategies(env, g);
            subsets_of(g).iter().all(|sub| {
                self.strategies(env, sub).iter().all(|sigma| {
                    full.iter().any(|ext| {
                        sub.iter()
                            .zip(sigma)
                            .all(|(i, s)| ext[g.iter().position(|j| j == i).unwrap()] == *s)
                    })
                })
            })
        })
    }
}

fn subsets(n: usize) -> Vec<Vec<AgentId>> {
    subsets_of(&(0..n as AgentId).collect::<Vec<_>>())
}

fn subsets_of(g: &[AgentId]) -> Vec<Vec<AgentId>> {
    (0..1usize << g.len())
        .map(|mask| {
            g.iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &i)| i)
                .collect()
        })
        .collect()
}

pub fn validate_atel(f: &AtelFormula, env: &Environment) -> Result<(), AtelError> {
    let mut out = Ok(());
    f.walk(&mut |g| {
        if out.is_err() {
            return;
        }
        let agents: Vec<&String> = match g {
            AtelFormula::Next(gr, _)
            | AtelFormula::Globally(gr, _)
            | AtelFormula::Until(gr, _, _)
            | AtelFormula::Dist(gr, _)
            | AtelFormula::Common(gr, _) => gr.iter().collect(),
            AtelFormula::Know(i, _) => vec![i],
            AtelFormula::Atom(p) => {
                if env.props().get(p).is_none() && !env.strategy_atoms().contains_key(p) {
                    out = Err(AtelError::UnknownAtom(p.clone()));
                }
                vec![]
            }
            _ => vec![],
        };
        if let Some(a) = agents.into_iter().find(|a| env.agent_id(a).is_none()) {
            out = Err(AtelError::UnknownAgent(a.clone()));
        }
    });
    out
}

fn resolve_group(env: &Environment, g: &Group) -> Vec<AgentId> {
    g.iter().map(|a| env.agent_id(a).expect("validated")).collect()
}

/// Direct semantics: the set of states satisfying `f` under the group
/// strategy set `kind`.
pub fn atel_labels(env: &Environment, kind: AtelKind, f: &AtelFormula) -> Result<Vec<bool>, AtelError> {
    validate_atel(f, env)?;
    Ok(Labels {
        env,
        set: GroupStrategySet::new(kind),
    }
    .sat(f))
}

/// `E, s ⊨^Σ φ`.
pub fn eval_atel(env: &Environment, kind: AtelKind, s: StateId, f: &AtelFormula) -> Result<bool, AtelError> {
    Ok(atel_labels(env, kind, f)?[s as usize])
}

struct Labels<'e> {
    env: &'e Environment,
    set: GroupStrategySet,
}

impl Labels<'_> {
    fn n(&self) -> usize {
        self.env.num_states()
    }

    fn sat(&self, f: &AtelFormula) -> Vec<bool> {
        use AtelFormula::*;
        let n = self.n();
        match f {
            Atom(p) => match self.env.props().get(p) {
                Some(id) => (0..n as StateId).map(|s| self.env.has_prop(s, id)).collect(),
                // strategy atoms have no meaning at a bare state
                None => vec![false; n],
            },
            True => vec![true; n],
            Not(a) => self.sat(a).into_iter().map(|v| !v).collect(),
            And(a, b) => zip(&self.sat(a), &self.sat(b), |x, y| x && y),
            Or(a, b) => zip(&self.sat(a), &self.sat(b), |x, y| x || y),
            Next(g, a) => {
                let target = self.sat(a);
                self.coalition(g, |succ| {
                    (0..n).map(|s| succ[s].iter().all(|&t| target[t as usize])).collect()
                })
            }
            Globally(g, a) => {
                let target = self.sat(a);
                self.coalition(g, |succ| greatest_invariant(&target, succ))
            }
            Until(g, a, b) => {
                let (lhs, rhs) = (self.sat(a), self.sat(b));
                self.coalition(g, |succ| inevitable_until(&lhs, &rhs, succ))
            }
            Know(i, a) => {
                let g: Group = [i.clone()].into_iter().collect();
                self.dist(&g, &self.sat(a))
            }
            Dist(g, a) => self.dist(g, &self.sat(a)),
            Common(g, a) => {
                let inner = self.sat(a);
                let agents = resolve_group(self.env, g);
                let mut out = vec![false; n];
                let mut done = vec![false; n];
                for s in 0..n {
                    if done[s] {
                        continue;
                    }
                    // connected component of s under the union of the ~_i
                    let mut comp = vec![s];
                    let mut seen = vec![false; n];
                    seen[s] = true;
                    let mut queue = VecDeque::from([s]);
                    while let Some(u) = queue.pop_front() {
                        for v in 0..n {
                            let linked = agents.iter().any(|&i| {
                                self.env.observation(i, u as StateId) == self.env.observation(i, v as StateId)
                            });
                            if !seen[v] && linked {
                                seen[v] = true;
                                comp.push(v);
                                queue.push_back(v);
                            }
                        }
                    }
                    let value = comp.iter().all(|&t| inner[t]);
                    for t in comp {
                        out[t] = value;
                        done[t] = true;
                    }
                }
                out
            }
        }
    }

    fn dist(&self, g: &Group, inner: &[bool]) -> Vec<bool> {
        let agents = resolve_group(self.env, g);
        let n = self.n();
        (0..n)
            .map(|s| {
                (0..n).all(|t| {
                    !agents.iter().all(|&i| {
                        self.env.observation(i, s as StateId) == self.env.observation(i, t as StateId)
                    }) || inner[t]
                })
            })
            .collect()
    }

    /// Disjunction over the group strategies of `per_strategy` applied to
    /// the successor relation of paths consistent with that strategy.
    fn coalition(&self, g: &Group, per_strategy: impl Fn(&[Vec<StateId>]) -> Vec<bool>) -> Vec<bool> {
        let members = resolve_group(self.env, g);
        let mut out = vec![false; self.n()];
        for sigma in self.set.strategies(self.env, &members) {
            let mut profile = StrategyProfile::random(self.env);
            for (&i, s) in members.iter().zip(sigma) {
                profile.0[i as usize] = s;
            }
            let succ: Vec<Vec<StateId>> = (0..self.n() as StateId)
                .map(|s| successors(self.env, s, &profile))
                .collect();
            for (o, v) in out.iter_mut().zip(per_strategy(&succ)) {
                *o |= v;
            }
            if out.iter().all(|&v| v) {
                break;
            }
        }
        out
    }
}

fn zip(a: &[bool], b: &[bool], f: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

/// States all of whose paths stay inside `target`.
fn greatest_invariant(target: &[bool], succ: &[Vec<StateId>]) -> Vec<bool> {
    let mut z = target.to_vec();
    loop {
        let mut changed = false;
        for s in 0..z.len() {
            if z[s] && !succ[s].iter().all(|&t| z[t as usize]) {
                z[s] = false;
                changed = true;
            }
        }
        if !changed {
            return z;
        }
    }
}

/// States all of whose paths satisfy `lhs U rhs`.
fn inevitable_until(lhs: &[bool], rhs: &[bool], succ: &[Vec<StateId>]) -> Vec<bool> {
    let mut z = rhs.to_vec();
    loop {
        let mut changed = false;
        for s in 0..z.len() {
            if !z[s] && lhs[s] && succ[s].iter().all(|&t| z[t as usize]) {
                z[s] = true;
                changed = true;
            }
        }
        if !changed {
            return z;
        }
    }
}

fn strategic(g: &Group) -> impl Iterator<Item = AgentTag> + '_ {
    g.iter().map(|i| AgentTag::strategic(i))
}

fn base(g: &Group) -> impl Iterator<Item = AgentTag> + '_ {
    g.iter().map(|i| AgentTag::base(i))
}

/// `¬K_e¬ φ`: some point at the same environment state satisfies `φ`.
fn switch_strategies(f: Formula) -> Formula {
    not(know(AgentTag::Env, not(f)))
}

/// `φ*`: coalition operators become `¬K[e]¬ D[{e} ∪ σ(G)]` over the
/// matching path formula; everything else is homomorphic.
pub fn translate_atel(f: &AtelFormula) -> Formula {
    use AtelFormula::*;
    let coalition = |g: &Group, path: Formula| {
        let tags = core::iter::once(AgentTag::Env).chain(strategic(g));
        switch_strategies(dist(tags, path))
    };
    match f {
        Atom(p) => atom(p),
        True => Formula::True,
        Not(a) => not(translate_atel(a)),
        And(a, b) => and(translate_atel(a), translate_atel(b)),
        Or(a, b) => or(translate_atel(a), translate_atel(b)),
        Next(g, a) => coalition(g, next(translate_atel(a))),
        Globally(g, a) => coalition(g, Formula::Globally(Box::new(translate_atel(a)))),
        Until(g, a, b) => coalition(g, until(translate_atel(a), translate_atel(b))),
        Know(i, a) => know(AgentTag::base(i), translate_atel(a)),
        Dist(g, a) => dist(base(g), translate_atel(a)),
        Common(g, a) => common(base(g), translate_atel(a)),
    }
}

/// `(E[S/I], comp(Σ))`, after checking that `Σ` is restrictable and extendable.
pub fn prepare_atel_instance(env: &Environment, kind: AtelKind) -> Result<(Environment, StrategyClass), AtelError> {
    let set = GroupStrategySet::new(kind);
    if !set.is_restrictable(env) {
        return Err(AtelError::NotClosed("restrictable"));
    }
    if !set.is_extendable(env) {
        return Err(AtelError::NotClosed("extendable"));
    }
    Ok((env.make_all_initial(), StrategyClass::atel_completion(kind.base_class())))
}

/// Verdict of the translated formula at the points of the prepared system,
/// per environment state: `(all points satisfy, some point satisfies)`.
pub fn translated_at_states(
    env: &Environment,
    kind: AtelKind,
    f: &AtelFormula,
    engine: Engine,
) -> Result<Vec<(bool, bool)>, AtelError> {
    validate_atel(f, env)?;
    let (prepared, class) = prepare_atel_instance(env, kind)?;
    let checker = Checker::new(&prepared, &class, CheckOptions::with_engine(engine))?;
    let values = checker.evaluate(&translate_atel(f), &Context::new(), engine)?;
    let mut out = vec![(true, false); env.num_states()];
    let space = checker.space();
    for (g, &v) in values.iter().enumerate() {
        let s = space.state(g as u32) as usize;
        out[s].0 &= v;
        out[s].1 |= v;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnowledgeKind {
    Dist,
    Everyone,
    Common,
}

fn formula_vars(f: &Formula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    f.walk(&mut |g| {
        if let Formula::Exists(x, _) | Formula::Forall(x, _) | Formula::Loc(_, x) = g {
            out.insert(x.clone());
        }
    });
    out
}

pub(crate) fn fresh_var(f: &Formula) -> String {
    let used = formula_vars(f);
    (0..)
        .map(|k| if k == 0 { String::from("x") } else { format!("x{k}") })
        .find(|x| !used.contains(x))
        .unwrap()
}

fn locs(tags: impl IntoIterator<Item = AgentTag>, x: &str) -> Formula {
    conj(tags.into_iter().map(|t| loc(t, x)))
}

/// Group `G` has a uniform strategy that group `H` knows (in the sense of
/// `kind`) achieves `φ`.
pub fn translate_strategic_knowledge(kind: KnowledgeKind, knowers: &Group, strategizers: &Group, f: Formula) -> Formula {
    match kind {
        KnowledgeKind::Dist => switch_strategies(dist(base(knowers).chain(strategic(strategizers)), f)),
        KnowledgeKind::Everyone => switch_strategies(conj(knowers.iter().map(|i| {
            dist(
                core::iter::once(AgentTag::base(i)).chain(strategic(strategizers)),
                f.clone(),
            )
        }))),
        KnowledgeKind::Common => {
            let x = fresh_var(&f);
            let pin = locs(strategic(strategizers), &x);
            switch_strategies(exists(
                &x,
                and(pin.clone(), common(base(knowers), implies(pin, f))),
            ))
        }
    }
}

/// `K_{G1} … K_{Gn} <<H>> φ` with constructive knowledge operators, as
/// `∃x K_{G1} … K_{Gn} (loc(σ(H), x) → φ)` with standard ones.
pub fn translate_csl_normal_form(chain: &[(KnowledgeKind, Group)], strategizers: &Group, f: Formula) -> Formula {
    assert!(!chain.is_empty(), "normal form needs at least one knowledge operator");
    let x = fresh_var(&f);
    let mut body = if strategizers.is_empty() {
        f
    } else {
        implies(locs(strategic(strategizers), &x), f)
    };
    for (kind, g) in chain.iter().rev() {
        body = match kind {
            KnowledgeKind::Dist => dist(base(g), body),
            KnowledgeKind::Everyone => Formula::Everyone(base(g).collect(), Box::new(body)),
            KnowledgeKind::Common => common(base(g), body),
        };
    }
    exists(&x, body)
}

/// Name of the atom that holds where `agent` plays the strategy named `c`.
pub fn catl_atom(agent: &str, c: &str) -> String {
    format!("plays_{agent}={c}")
}

/// `C_i(c, φ)`: `D[{e} ∪ σ(Ags∖{i})](p_{i,c} → φ^{+σ(i)})`, where every
/// knowledge operator of `φ*` also holds `σ(i)` fixed. The returned
/// environment registers `p_{i,c}`.
pub fn translate_catl(
    agent: &str,
    c: &str,
    f: &AtelFormula,
    env: &Environment,
) -> Result<(Environment, Formula), AtelError> {
    let i = env.agent_id(agent).ok_or_else(|| AtelError::UnknownAgent(agent.into()))?;
    let (owner, strategy) = env
        .named_strategy(c)
        .ok_or_else(|| AtelError::UnknownStrategy(c.into()))?
        .clone();
    if owner != i {
        return Err(AtelError::WrongOwner {
            name: c.into(),
            owner: env.agent_name(owner).into(),
            agent: agent.into(),
        });
    }
    let p = catl_atom(agent, c);
    let augmented = env.clone().with_strategy_atom(&p, i, strategy)?;
    validate_atel(f, &augmented)?;
    let body = add_strategic(&translate_atel(f), agent);
    let others = env.agents().names().filter(|a| *a != agent).map(AgentTag::strategic);
    let outer: TagSet = core::iter::once(AgentTag::Env).chain(others).collect();
    Ok((augmented, Formula::Dist(outer, Box::new(implies(atom(&p), body)))))
}

/// `φ^{+σ(i)}`: `σ(i)` joins every distributed-knowledge group. Common
/// knowledge cannot take `σ(i)` as a group member (the relation is a union),
/// so it pins the strategy with a variable instead.
fn add_strategic(f: &Formula, agent: &str) -> Formula {
    use Formula::*;
    let r = |x: &Formula| Box::new(add_strategic(x, agent));
    let sig = AgentTag::strategic(agent);
    match f {
        Atom(_) | True | False | Loc(..) => f.clone(),
        Not(a) => Not(r(a)),
        And(a, b) => And(r(a), r(b)),
        Or(a, b) => Or(r(a), r(b)),
        Implies(a, b) => Implies(r(a), r(b)),
        Iff(a, b) => Iff(r(a), r(b)),
        PathAll(a) => PathAll(r(a)),
        PathExists(a) => PathExists(r(a)),
        Next(a) => Next(r(a)),
        Finally(a) => Finally(r(a)),
        Globally(a) => Globally(r(a)),
        Until(a, b) => Until(r(a), r(b)),
        Exists(x, a) => Exists(x.clone(), r(a)),
        Forall(x, a) => Forall(x.clone(), r(a)),
        Know(t, a) => Dist([t.clone(), sig].into_iter().collect(), r(a)),
        Dist(g, a) => {
            let mut g = g.clone();
            g.insert(sig);
            Dist(g, r(a))
        }
        Everyone(g, a) => conj(g.iter().map(|t| Dist([t.clone(), sig.clone()].into_iter().collect(), r(a)))),
        Common(g, a) => {
            let inner = add_strategic(a, agent);
            let x = fresh_var(&inner);
            let pin = loc(sig, &x);
            exists(&x, and(pin.clone(), Common(g.clone(), Box::new(implies(pin, inner)))))
        }
    }
}

#[cfg(test)]
mod tests;
