//! Knowledge-based programs: implementations by the fixed-point definition,
//! and the encoding of implementations as a formula over the uniform
//! strategy space of an action-recording environment.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::atel::fresh_var;
use crate::check::{CheckError, CheckOptions, Checker, Context, Engine, Verdict};
use crate::env::{AgentId, EnvError, Environment, StateId};
use crate::formula::build::*;
use crate::formula::{render_formula, Formula, TagSet};
use crate::space::{AgentTag, GlobalState};
use crate::strategy::{enumerate_profiles, ActionSet, ClassError, Strategy, StrategyClass, StrategyProfile};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KbpError {
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("agent `{agent}` has no action `{action}`")]
    UnknownAction { agent: String, action: String },
    #[error("action `{action}` appears in more than one clause of agent `{agent}`")]
    DuplicateAction { agent: String, action: String },
    #[error("agent `{0}` has more than one program")]
    DuplicateAgent(String),
    #[error("agent `{0}` has more than one `otherwise` clause")]
    DuplicateOtherwise(String),
    #[error("guard `{guard}` of agent `{agent}`: {reason}")]
    BadGuard {
        agent: String,
        guard: String,
        reason: &'static str,
    },
    #[error("formula mentions strategic agent `{0}`")]
    StrategicTag(String),
    #[error("formula uses quantifiers or loc, which have no meaning inside a program")]
    Quantifier,
    #[error("no clause of agent `{agent}` is enabled at reachable state `{state}`")]
    Coverage { agent: String, state: String },
    #[error("profile does not fit the environment")]
    BadProfile,
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Class(#[from] ClassError),
    #[error(transparent)]
    Check(#[from] CheckError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Guard {
    Formula(Formula),
    /// `K_i ¬(φ_1 ∨ … ∨ φ_k)` over the agent's other guards.
    Otherwise,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub guard: Guard,
    pub action: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentProgram {
    pub agent: String,
    pub clauses: Vec<Clause>,
}

/// A joint program: one `do φ_1 -> a_1 [] … od` block per agent. Agents
/// without a block are not constrained.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub agents: Vec<AgentProgram>,
}

impl Program {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clause(mut self, agent: &str, guard: Guard, action: &str) -> Self {
        let clause = Clause {
            guard,
            action: action.to_string(),
        };
        match self.agents.iter_mut().find(|p| p.agent == agent) {
            Some(p) => p.clauses.push(clause),
            None => self.agents.push(AgentProgram {
                agent: agent.to_string(),
                clauses: vec![clause],
            }),
        }
        self
    }

    pub fn num_clauses(&self) -> usize {
        self.agents.iter().map(|p| p.clauses.len()).sum()
    }

    /// Checks agents, actions and guard shapes against `env`.
    pub fn validate(&self, env: &Environment) -> Result<(), KbpError> {
        let mut seen_agents = BTreeSet::new();
        for p in &self.agents {
            let i = env
                .agent_id(&p.agent)
                .ok_or_else(|| KbpError::UnknownAgent(p.agent.clone()))?;
            if !seen_agents.insert(i) {
                return Err(KbpError::DuplicateAgent(p.agent.clone()));
            }
            let mut actions = BTreeSet::new();
            let mut otherwise = false;
            for c in &p.clauses {
                if env.actions(i).get(&c.action).is_none() {
                    return Err(KbpError::UnknownAction {
                        agent: p.agent.clone(),
                        action: c.action.clone(),
                    });
                }
                if !actions.insert(c.action.as_str()) {
                    return Err(KbpError::DuplicateAction {
                        agent: p.agent.clone(),
                        action: c.action.clone(),
                    });
                }
                match &c.guard {
                    Guard::Otherwise if otherwise => return Err(KbpError::DuplicateOtherwise(p.agent.clone())),
                    Guard::Otherwise => otherwise = true,
                    Guard::Formula(f) => check_guard(env, &p.agent, f)?,
                }
            }
        }
        Ok(())
    }

    /// Guards with `otherwise` expanded, as `(agent, guard, action)`. An
    /// action of a programmed agent that no clause mentions gets the guard
    /// `K[i] false`, so that it is never enabled.
    pub fn expanded(&self, env: &Environment) -> Vec<(String, Formula, String)> {
        let mut out = Vec::new();
        for p in &self.agents {
            let others: Vec<Formula> = p
                .clauses
                .iter()
                .filter_map(|c| match &c.guard {
                    Guard::Formula(f) => Some(f.clone()),
                    Guard::Otherwise => None,
                })
                .collect();
            for c in &p.clauses {
                let guard = match &c.guard {
                    Guard::Formula(f) => f.clone(),
                    Guard::Otherwise => know(AgentTag::base(&p.agent), not(disj(others.clone()))),
                };
                out.push((p.agent.clone(), guard, c.action.clone()));
            }
            if let Some(i) = env.agent_id(&p.agent) {
                for a in env.actions(i).names() {
                    if !p.clauses.iter().any(|c| c.action == a) {
                        out.push((p.agent.clone(), know(AgentTag::base(&p.agent), Formula::False), a.to_string()));
                    }
                }
            }
        }
        out
    }
}

fn check_guard(env: &Environment, agent: &str, f: &Formula) -> Result<(), KbpError> {
    let bad = |reason| KbpError::BadGuard {
        agent: agent.to_string(),
        guard: render_formula(f),
        reason,
    };
    let body = match f {
        Formula::Know(AgentTag::Base(i), body) if i == agent => body,
        Formula::Dist(g, body) if g.len() == 1 && g.contains(&AgentTag::base(agent)) => body,
        _ => return Err(bad("guards must have the form K[i] ψ for the program's agent")),
    };
    base_only(body)?;
    for t in body.tags() {
        if let AgentTag::Base(a) = &t {
            if env.agent_id(a).is_none() {
                return Err(KbpError::UnknownAgent(a.clone()));
            }
        }
    }
    Ok(())
}

/// Rejects strategic tags, quantifiers and `loc`.
fn base_only(f: &Formula) -> Result<(), KbpError> {
    let mut err = None;
    f.walk(&mut |g| {
        if err.is_some() {
            return;
        }
        match g {
            Formula::Exists(..) | Formula::Forall(..) | Formula::Loc(..) => err = Some(KbpError::Quantifier),
            _ => {}
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    for t in f.tags() {
        if let AgentTag::Strategic(a) = t {
            return Err(KbpError::StrategicTag(a));
        }
    }
    Ok(())
}

/// Name of the proposition recording that `agent` last performed `action`.
pub fn did_atom(agent: &str, action: &str) -> String {
    format!("did_{agent}({action})")
}

/// An environment whose states remember the last joint action, with the
/// origin of every state.
#[derive(Debug, Clone)]
pub struct ActionRecording {
    pub env: Environment,
    /// `(source state, last joint action)`; `None` at initial states.
    pub origin: Vec<(StateId, Option<usize>)>,
}

impl ActionRecording {
    /// Lifts a profile of the source environment through the first component.
    pub fn lift(&self, profile: &StrategyProfile) -> StrategyProfile {
        StrategyProfile(
            profile
                .0
                .iter()
                .map(|st| Strategy(self.origin.iter().map(|&(s, _)| st.enabled(s)).collect()))
                .collect(),
        )
    }

    /// Projects a profile of the recording environment back to the source.
    /// Source states with no copy are unreachable under every profile and
    /// get the full action set.
    pub fn project(&self, source: &Environment, profile: &StrategyProfile) -> StrategyProfile {
        StrategyProfile(
            (0..source.num_agents() as AgentId)
                .map(|i| {
                    let full = ActionSet::full(source.num_actions(i));
                    let mut sets = vec![full; source.num_states()];
                    let mut set_here = vec![false; source.num_states()];
                    for (k, &(s, _)) in self.origin.iter().enumerate() {
                        if !set_here[s as usize] {
                            sets[s as usize] = profile.0[i as usize].enabled(k as StateId);
                            set_here[s as usize] = true;
                        }
                    }
                    Strategy(sets)
                })
                .collect(),
        )
    }
}

fn joint_name(env: &Environment, joint: &[u32]) -> String {
    joint
        .iter()
        .enumerate()
        .map(|(i, &a)| env.actions(i as AgentId).name(a))
        .collect::<Vec<_>>()
        .join("+")
}

/// Adds a recorder component holding the last joint action. States are
/// `s` for an initial `s`, and `t@a1+…+an` after a joint action reaching `t`.
/// Agents observe only the original state.
pub fn make_action_recording(env: &Environment) -> Result<ActionRecording, KbpError> {
    let mut b = Environment::builder();
    for i in 0..env.num_agents() as AgentId {
        let name = env.agent_name(i);
        b.agent(name)?;
        for a in env.actions(i).names() {
            b.action(name, a)?;
        }
    }
    let mut origin: Vec<(StateId, Option<usize>)> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for &s in env.initial() {
        origin.push((s, None));
        names.push(env.state_name(s).to_string());
    }
    let mut seen = BTreeSet::new();
    for s in 0..env.num_states() as StateId {
        for j in 0..env.num_joint_actions() {
            for &t in env.post(s, j) {
                if seen.insert((t, j)) {
                    origin.push((t, Some(j)));
                    names.push(format!("{}@{}", env.state_name(t), joint_name(env, &env.decode_joint(j))));
                }
            }
        }
    }
    // declare states in origin order so handles match `origin`
    for (k, name) in names.iter().enumerate() {
        if env.is_initial(origin[k].0) && origin[k].1.is_none() {
            b.initial(name);
        } else {
            b.state(name);
        }
    }
    for p in env.props().names() {
        b.prop(p);
    }
    for i in 0..env.num_agents() as AgentId {
        for a in env.actions(i).names() {
            b.prop(&did_atom(env.agent_name(i), a));
        }
    }
    for (k, &(s, last)) in origin.iter().enumerate() {
        let name = &names[k];
        for &p in env.labels(s) {
            b.label(name, env.props().name(p));
        }
        if let Some(j) = last {
            for (i, &a) in env.decode_joint(j).iter().enumerate() {
                let i = i as AgentId;
                b.label(name, &did_atom(env.agent_name(i), env.actions(i).name(a)));
            }
        }
        for i in 0..env.num_agents() as AgentId {
            let o = env.observation(i, s);
            b.observe(env.agent_name(i), name, env.observation_values(i).name(o))?;
        }
        for j in 0..env.num_joint_actions() {
            let joint = env.decode_joint(j);
            let acts: Vec<Option<&str>> = joint
                .iter()
                .enumerate()
                .map(|(i, &a)| Some(env.actions(i as AgentId).name(a)))
                .collect();
            for &t in env.post(s, j) {
                let to = format!("{}@{}", env.state_name(t), joint_name(env, &joint));
                b.transition(name, &acts, &to)?;
            }
        }
    }
    Ok(ActionRecording { env: b.build(), origin })
}

fn sigma_all(env: &Environment) -> impl Iterator<Item = AgentTag> + '_ {
    env.agents().names().map(AgentTag::strategic)
}

/// `φ^$`: every knowledge operator also holds the joint strategy fixed.
pub fn dollar_transform(f: &Formula, env: &Environment) -> Result<Formula, KbpError> {
    base_only(f)?;
    Ok(dollar(f, env))
}

fn dollar(f: &Formula, env: &Environment) -> Formula {
    use Formula::*;
    let r = |x: &Formula| Box::new(dollar(x, env));
    let with_sigma = |g: &TagSet| -> TagSet { g.iter().cloned().chain(sigma_all(env)).collect() };
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
        Know(t, a) => Dist(with_sigma(&[t.clone()].into_iter().collect()), r(a)),
        Dist(g, a) => Dist(with_sigma(g), r(a)),
        Everyone(g, a) => conj(g.iter().map(|t| Dist(with_sigma(&[t.clone()].into_iter().collect()), r(a)))),
        Common(g, a) => {
            let inner = dollar(a, env);
            let x = fresh_var(&inner);
            let pin = conj(sigma_all(env).map(|t| loc(t, &x)));
            exists(&x, and(pin.clone(), Common(g.clone(), Box::new(implies(pin, inner)))))
        }
    }
}

/// `imp(P) = D[σ(Ags)] ⋀ ((φ^i_j)^$ <-> EX did_i(a^i_j))`, over the atoms
/// of an action-recording environment.
pub fn imp_formula(program: &Program, rec: &ActionRecording) -> Result<Formula, KbpError> {
    program.validate(&rec.env)?;
    let mut parts = Vec::new();
    for (agent, guard, action) in program.expanded(&rec.env) {
        parts.push(iff(dollar_transform(&guard, &rec.env)?, ex(atom(&did_atom(&agent, &action)))));
    }
    Ok(dist(sigma_all(&rec.env), conj(parts)))
}

/// Guard values at every environment state reachable under `profile`,
/// evaluated in the system generated by that profile alone. Unreachable
/// states read `None`.
fn guard_table(
    env: &Environment,
    profile: &StrategyProfile,
    guards: &[Formula],
) -> Result<Vec<Vec<Option<bool>>>, KbpError> {
    let class = StrategyClass::Explicit(vec![profile.clone()]);
    let checker = Checker::new(env, &class, CheckOptions::default())?;
    let space = checker.space();
    let mut out = Vec::with_capacity(guards.len());
    for g in guards {
        let values = checker.evaluate(g, &Context::new(), Engine::Auto)?;
        let mut row = vec![None; env.num_states()];
        for (gid, v) in values.into_iter().enumerate() {
            row[space.state(gid as u32) as usize] = Some(v);
        }
        out.push(row);
    }
    Ok(out)
}

/// `α` implements `P` iff at every α-reachable state each agent enables
/// exactly the actions whose guards hold there, with guards evaluated in
/// `I(E, {α})`.
pub fn is_implementation_direct(env: &Environment, profile: &StrategyProfile, program: &Program) -> Result<bool, KbpError> {
    if !profile.fits(env) {
        return Err(KbpError::BadProfile);
    }
    program.validate(env)?;
    let expanded = program.expanded(env);
    let guards: Vec<Formula> = expanded.iter().map(|(_, g, _)| g.clone()).collect();
    let table = guard_table(env, profile, &guards)?;
    let mut ok = true;
    for p in &program.agents {
        let i = env.agent_id(&p.agent).expect("validated");
        for s in 0..env.num_states() {
            let mut enabled = ActionSet::EMPTY;
            let mut reachable = false;
            for (k, (agent, _, action)) in expanded.iter().enumerate() {
                if *agent != p.agent {
                    continue;
                }
                match table[k][s] {
                    None => {}
                    Some(v) => {
                        reachable = true;
                        if v {
                            enabled.insert(env.actions(i).get(action).expect("validated"));
                        }
                    }
                }
            }
            if !reachable {
                continue;
            }
            if enabled.is_empty() {
                return Err(KbpError::Coverage {
                    agent: p.agent.clone(),
                    state: env.state_name(s as StateId).to_string(),
                });
            }
            ok &= profile.0[i as usize].enabled(s as StateId) == enabled;
        }
    }
    Ok(ok)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KbpQuery {
    /// Some locally uniform profile implements the program.
    Exists,
    /// Every implementation satisfies the formula at all of its points.
    AllSatisfy(Formula),
}

#[derive(Debug, Clone)]
pub struct KbpVerdict {
    pub holds: bool,
    /// An implementation, for a successful `Exists` query.
    pub witness: Option<StrategyProfile>,
    pub formula: Formula,
    pub verdict: Verdict,
}

/// Decides a query through the encoding over `I^unif` of the
/// action-recording environment.
pub fn check_kbp(
    env: &Environment,
    program: &Program,
    query: &KbpQuery,
    options: CheckOptions,
) -> Result<KbpVerdict, KbpError> {
    let rec = make_action_recording(env)?;
    let imp = imp_formula(program, &rec)?;
    let formula = match query {
        KbpQuery::Exists => somewhere(imp),
        KbpQuery::AllSatisfy(phi) => dist([], implies(imp, dollar_transform(phi, &rec.env)?)),
    };
    let checker = Checker::new(&rec.env, &StrategyClass::LocallyUniform, options)?;
    let verdict = checker.check(&formula, &Context::new())?;
    let witness = match (&verdict.witness, query) {
        (Some(GlobalState { profile, .. }), KbpQuery::Exists) => Some(rec.project(env, profile)),
        _ => None,
    };
    Ok(KbpVerdict {
        holds: verdict.holds,
        witness,
        formula,
        verdict,
    })
}

/// Every profile of `class` that implements the program, in canonical
/// order. Profiles whose guards leave some reachable state uncovered are
/// not implementations.
pub fn find_implementations(
    env: &Environment,
    program: &Program,
    class: &StrategyClass,
) -> Result<Vec<StrategyProfile>, KbpError> {
    program.validate(env)?;
    let candidates = enumerate_profiles(env, class)?;
    let test = |p: &StrategyProfile| match is_implementation_direct(env, p, program) {
        Ok(v) => Ok(v),
        Err(KbpError::Coverage { .. }) => Ok(false),
        Err(e) => Err(e),
    };
    #[cfg(feature = "parallel")]
    let flags: Vec<Result<bool, KbpError>> = {
        use rayon::prelude::*;
        candidates.par_iter().map(test).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let flags: Vec<Result<bool, KbpError>> = candidates.iter().map(test).collect();
    let mut out = Vec::new();
    for (p, flag) in candidates.into_iter().zip(flags) {
        if flag? {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}
