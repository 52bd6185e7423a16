//! Finite multi-agent environments.
//!
//! An [`Environment`] is the finite input to every checker: states, initial
//! states, per-agent actions and observations, a joint-action transition
//! relation and a propositional labelling. Identifiers are interned strings;
//! everything downstream works with the integer handles.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::strategy::{ActionSet, Strategy};

pub type StateId = u32;
pub type AgentId = u32;
pub type ActionId = u32;
pub type ObsId = u32;
pub type PropId = u32;

/// Largest per-agent action set; action sets are stored as `u64` bitmasks.
pub const MAX_ACTIONS: usize = 64;

const MISSING: u32 = u32::MAX;

/// Bidirectional map between names and dense integer handles.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Interner {
    names: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.names.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnvError {
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("unknown action `{action}` for agent `{agent}`")]
    UnknownAction { agent: String, action: String },
    #[error("agent `{0}` declared twice")]
    DuplicateAgent(String),
    #[error("agent name `{0}` is reserved")]
    ReservedAgent(String),
    #[error("agent `{agent}` has {count} actions, more than the supported {MAX_ACTIONS}")]
    TooManyActions { agent: String, count: usize },
    #[error("joint action has {got} components, expected {expected}")]
    JointArity { expected: usize, got: usize },
    #[error("actions for agent `{0}` declared after transitions were added")]
    LateActions(String),
    #[error("strategy for agent `{agent}` does not fit the environment: {reason}")]
    BadStrategy { agent: String, reason: String },
}

/// One failed environment invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// No successor for `state` under the joint action (action names, agent order).
    NotSerial { state: String, joint: Vec<String> },
    EmptyActions { agent: String },
    NoInitialState,
    MissingObservation { agent: String, state: String },
    NoStates,
    NoAgents,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotSerial { state, joint } => {
                write!(f, "state `{state}` has no successor under ({})", joint.join(","))
            }
            Violation::EmptyActions { agent } => write!(f, "agent `{agent}` has no actions"),
            Violation::NoInitialState => write!(f, "no initial state"),
            Violation::MissingObservation { agent, state } => {
                write!(f, "agent `{agent}` has no observation at state `{state}`")
            }
            Violation::NoStates => write!(f, "environment has no states"),
            Violation::NoAgents => write!(f, "environment has no agents"),
        }
    }
}

/// A finite environment for a set of agents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Environment {
    states: Interner,
    initial: Vec<StateId>,
    agents: Interner,
    actions: Vec<Interner>,
    /// `[state][joint action index]` -> sorted successor list.
    transitions: Vec<Vec<Vec<StateId>>>,
    obs_values: Vec<Interner>,
    /// `[agent][state]`, `MISSING` when undeclared.
    observations: Vec<Vec<ObsId>>,
    props: Interner,
    /// `[state]` -> sorted proposition list.
    labels: Vec<Vec<PropId>>,
    named_strategies: BTreeMap<String, (AgentId, Strategy)>,
    strategy_atoms: BTreeMap<String, (AgentId, Strategy)>,
}

impl Environment {
    pub fn builder() -> EnvironmentBuilder {
        EnvironmentBuilder::default()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn states(&self) -> &Interner {
        &self.states
    }

    pub fn agents(&self) -> &Interner {
        &self.agents
    }

    pub fn props(&self) -> &Interner {
        &self.props
    }

    pub fn actions(&self, agent: AgentId) -> &Interner {
        &self.actions[agent as usize]
    }

    pub fn num_actions(&self, agent: AgentId) -> usize {
        self.actions[agent as usize].len()
    }

    pub fn observation_values(&self, agent: AgentId) -> &Interner {
        &self.obs_values[agent as usize]
    }

    pub fn initial(&self) -> &[StateId] {
        &self.initial
    }

    pub fn is_initial(&self, s: StateId) -> bool {
        self.initial.binary_search(&s).is_ok()
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.get(name)
    }

    pub fn agent_id(&self, name: &str) -> Option<AgentId> {
        self.agents.get(name)
    }

    pub fn state_name(&self, s: StateId) -> &str {
        self.states.name(s)
    }

    pub fn agent_name(&self, a: AgentId) -> &str {
        self.agents.name(a)
    }

    /// `O_i(s)`.
    pub fn observation(&self, agent: AgentId, s: StateId) -> ObsId {
        self.observations[agent as usize][s as usize]
    }

    pub fn labels(&self, s: StateId) -> &[PropId] {
        &self.labels[s as usize]
    }

    pub fn has_prop(&self, s: StateId, p: PropId) -> bool {
        self.labels[s as usize].binary_search(&p).is_ok()
    }

    pub fn num_joint_actions(&self) -> usize {
        self.actions.iter().map(Interner::len).product()
    }

    /// Decodes a joint-action index into per-agent actions (agent 0 most significant).
    pub fn decode_joint(&self, mut index: usize) -> Vec<ActionId> {
        let mut out = vec![0; self.actions.len()];
        for agent in (0..self.actions.len()).rev() {
            let k = self.actions[agent].len().max(1);
            out[agent] = (index % k) as ActionId;
            index /= k;
        }
        out
    }

    pub fn encode_joint(&self, joint: &[ActionId]) -> usize {
        joint
            .iter()
            .zip(&self.actions)
            .fold(0, |acc, (&a, acts)| acc * acts.len() + a as usize)
    }

    /// Successors of `s` under the joint action with the given index.
    pub fn post(&self, s: StateId, joint_index: usize) -> &[StateId] {
        &self.transitions[s as usize][joint_index]
    }

    /// Number of explicit `(s, a, t)` triples.
    pub fn num_transitions(&self) -> usize {
        self.transitions.iter().flatten().map(Vec::len).sum()
    }

    pub fn named_strategy(&self, name: &str) -> Option<&(AgentId, Strategy)> {
        self.named_strategies.get(name)
    }

    pub fn named_strategies(&self) -> &BTreeMap<String, (AgentId, Strategy)> {
        &self.named_strategies
    }

    /// Registers a named individual strategy for `agent`.
    pub fn with_named_strategy(
        mut self,
        name: &str,
        agent: AgentId,
        strategy: Strategy,
    ) -> Result<Self, EnvError> {
        self.check_strategy(agent, &strategy)?;
        self.named_strategies.insert(name.to_string(), (agent, strategy));
        Ok(self)
    }

    /// Atoms that hold at a global state iff `agent` plays exactly `strategy`.
    pub fn strategy_atoms(&self) -> &BTreeMap<String, (AgentId, Strategy)> {
        &self.strategy_atoms
    }

    pub fn with_strategy_atom(
        mut self,
        atom: &str,
        agent: AgentId,
        strategy: Strategy,
    ) -> Result<Self, EnvError> {
        self.check_strategy(agent, &strategy)?;
        self.strategy_atoms.insert(atom.to_string(), (agent, strategy));
        Ok(self)
    }

    fn check_strategy(&self, agent: AgentId, strategy: &Strategy) -> Result<(), EnvError> {
        let name = || {
            self.agents
                .names()
                .nth(agent as usize)
                .unwrap_or("?")
                .to_string()
        };
        if agent as usize >= self.num_agents() {
            return Err(EnvError::UnknownAgent(format!("#{agent}")));
        }
        if strategy.len() != self.num_states() {
            return Err(EnvError::BadStrategy {
                agent: name(),
                reason: format!("{} states, expected {}", strategy.len(), self.num_states()),
            });
        }
        let full = ActionSet::full(self.num_actions(agent));
        if strategy.iter().any(|set| set.is_empty() || !set.is_subset(full)) {
            return Err(EnvError::BadStrategy {
                agent: name(),
                reason: "empty or out-of-range action set".into(),
            });
        }
        Ok(())
    }

    /// Checks every environment invariant; an empty report means the
    /// environment is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut report = Vec::new();
        if self.states.is_empty() {
            report.push(Violation::NoStates);
        }
        if self.agents.is_empty() {
            report.push(Violation::NoAgents);
        }
        if self.initial.is_empty() {
            report.push(Violation::NoInitialState);
        }
        for (agent, acts) in self.actions.iter().enumerate() {
            if acts.is_empty() {
                report.push(Violation::EmptyActions {
                    agent: self.agents.name(agent as u32).to_string(),
                });
            }
        }
        for (agent, obs) in self.observations.iter().enumerate() {
            for (s, &o) in obs.iter().enumerate() {
                if o == MISSING {
                    report.push(Violation::MissingObservation {
                        agent: self.agents.name(agent as u32).to_string(),
                        state: self.states.name(s as u32).to_string(),
                    });
                }
            }
        }
        if self.actions.iter().all(|a| !a.is_empty()) {
            for s in 0..self.num_states() {
                for j in 0..self.num_joint_actions() {
                    if self.transitions[s][j].is_empty() {
                        let joint = self
                            .decode_joint(j)
                            .iter()
                            .enumerate()
                            .map(|(i, &a)| self.actions[i].name(a).to_string())
                            .collect();
                        report.push(Violation::NotSerial {
                            state: self.states.name(s as u32).to_string(),
                            joint,
                        });
                    }
                }
            }
        }
        report
    }

    /// `E[S/I]`: the same environment with every state initial.
    pub fn make_all_initial(&self) -> Environment {
        let mut out = self.clone();
        out.initial = (0..self.num_states() as StateId).collect();
        out
    }

    /// Rebuilds the environment with a different initial set.
    pub fn with_initial(&self, initial: &[StateId]) -> Environment {
        let mut out = self.clone();
        let mut init = initial.to_vec();
        init.sort_unstable();
        init.dedup();
        out.initial = init;
        out
    }
}

/// Incremental construction of an [`Environment`].
///
/// Declare agents and their actions first; transitions, observations and
/// labels may then be added in any order. Missing pieces are reported by
/// [`Environment::validate`] rather than rejected here.
#[derive(Clone, Debug, Default)]
pub struct EnvironmentBuilder {
    states: Interner,
    initial: Vec<StateId>,
    agents: Interner,
    actions: Vec<Interner>,
    triples: Vec<(StateId, Vec<Option<ActionId>>, StateId)>,
    turn_based: Vec<(StateId, AgentId, ActionId, StateId)>,
    obs_values: Vec<Interner>,
    observations: Vec<BTreeMap<StateId, ObsId>>,
    props: Interner,
    labels: BTreeMap<StateId, Vec<PropId>>,
    frozen_actions: bool,
}

impl EnvironmentBuilder {
    /// States mentioned so far, in id order.
    pub fn state_names(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.states.names()
    }

    pub fn agent(&mut self, name: &str) -> Result<AgentId, EnvError> {
        if name == "e" {
            return Err(EnvError::ReservedAgent(name.to_string()));
        }
        if self.agents.get(name).is_some() {
            return Err(EnvError::DuplicateAgent(name.to_string()));
        }
        let id = self.agents.intern(name);
        self.actions.push(Interner::new());
        self.obs_values.push(Interner::new());
        self.observations.push(BTreeMap::new());
        Ok(id)
    }

    pub fn action(&mut self, agent: &str, action: &str) -> Result<ActionId, EnvError> {
        let a = self.agent_handle(agent)?;
        if self.frozen_actions && self.actions[a as usize].get(action).is_none() {
            return Err(EnvError::LateActions(agent.to_string()));
        }
        let id = self.actions[a as usize].intern(action);
        if self.actions[a as usize].len() > MAX_ACTIONS {
            return Err(EnvError::TooManyActions {
                agent: agent.to_string(),
                count: self.actions[a as usize].len(),
            });
        }
        Ok(id)
    }

    pub fn state(&mut self, name: &str) -> StateId {
        self.states.intern(name)
    }

    pub fn initial(&mut self, name: &str) -> StateId {
        let s = self.state(name);
        if !self.initial.contains(&s) {
            self.initial.push(s);
        }
        s
    }

    pub fn label(&mut self, state: &str, prop: &str) -> PropId {
        let s = self.state(state);
        let p = self.props.intern(prop);
        let entry = self.labels.entry(s).or_default();
        if !entry.contains(&p) {
            entry.push(p);
        }
        p
    }

    /// Declares a proposition without attaching it to any state.
    pub fn prop(&mut self, prop: &str) -> PropId {
        self.props.intern(prop)
    }

    pub fn observe(&mut self, agent: &str, state: &str, value: &str) -> Result<(), EnvError> {
        let a = self.agent_handle(agent)?;
        let s = self.state(state);
        let o = self.obs_values[a as usize].intern(value);
        self.observations[a as usize].insert(s, o);
        Ok(())
    }

    /// Adds `(from, joint, to)`; `None` components are wildcards over that
    /// agent's actions.
    pub fn transition(
        &mut self,
        from: &str,
        joint: &[Option<&str>],
        to: &str,
    ) -> Result<(), EnvError> {
        if joint.len() != self.agents.len() {
            return Err(EnvError::JointArity {
                expected: self.agents.len(),
                got: joint.len(),
            });
        }
        let mut resolved = Vec::with_capacity(joint.len());
        for (agent, act) in joint.iter().enumerate() {
            resolved.push(match act {
                None => None,
                Some(name) => Some(self.action_handle(agent as AgentId, name)?),
            });
        }
        self.frozen_actions = true;
        let f = self.state(from);
        let t = self.state(to);
        self.triples.push((f, resolved, t));
        Ok(())
    }

    /// Turn-based sugar: at `from`, agent `agent` choosing `action` may lead
    /// to `to`, whatever the others do.
    pub fn turn(&mut self, from: &str, agent: &str, action: &str, to: &str) -> Result<(), EnvError> {
        let a = self.agent_handle(agent)?;
        let act = self.action_handle(a, action)?;
        self.frozen_actions = true;
        let f = self.state(from);
        let t = self.state(to);
        self.turn_based.push((f, a, act, t));
        Ok(())
    }

    fn agent_handle(&self, agent: &str) -> Result<AgentId, EnvError> {
        self.agents
            .get(agent)
            .ok_or_else(|| EnvError::UnknownAgent(agent.to_string()))
    }

    fn action_handle(&self, agent: AgentId, action: &str) -> Result<ActionId, EnvError> {
        self.actions[agent as usize]
            .get(action)
            .ok_or_else(|| EnvError::UnknownAction {
                agent: self.agents.name(agent).to_string(),
                action: action.to_string(),
            })
    }

    pub fn build(self) -> Environment {
        let n_states = self.states.len();
        let n_joint: usize = self.actions.iter().map(Interner::len).product();
        let mut transitions = vec![vec![Vec::new(); n_joint]; n_states];
        let radix: Vec<usize> = self.actions.iter().map(Interner::len).collect();
        let encode = |joint: &[ActionId]| -> usize {
            joint
                .iter()
                .zip(&radix)
                .fold(0, |acc, (&a, &k)| acc * k + a as usize)
        };
        if n_joint > 0 {
            for (from, pattern, to) in &self.triples {
                for joint in expand_pattern(pattern, &radix) {
                    transitions[*from as usize][encode(&joint)].push(*to);
                }
            }
            for &(from, agent, action, to) in &self.turn_based {
                let mut pattern = vec![None; radix.len()];
                pattern[agent as usize] = Some(action);
                for joint in expand_pattern(&pattern, &radix) {
                    transitions[from as usize][encode(&joint)].push(to);
                }
            }
        }
        for row in &mut transitions {
            for succ in row.iter_mut() {
                succ.sort_unstable();
                succ.dedup();
            }
        }
        let observations = self
            .observations
            .iter()
            .map(|m| {
                (0..n_states as StateId)
                    .map(|s| m.get(&s).copied().unwrap_or(MISSING))
                    .collect()
            })
            .collect();
        let labels = (0..n_states as StateId)
            .map(|s| {
                let mut l = self.labels.get(&s).cloned().unwrap_or_default();
                l.sort_unstable();
                l
            })
            .collect();
        let mut initial = self.initial;
        initial.sort_unstable();
        Environment {
            states: self.states,
            initial,
            agents: self.agents,
            actions: self.actions,
            transitions,
            obs_values: self.obs_values,
            observations,
            props: self.props,
            labels,
            named_strategies: BTreeMap::new(),
            strategy_atoms: BTreeMap::new(),
        }
    }
}

fn expand_pattern(pattern: &[Option<ActionId>], radix: &[usize]) -> Vec<Vec<ActionId>> {
    let mut out: Vec<Vec<ActionId>> = vec![Vec::new()];
    for (slot, &k) in pattern.iter().zip(radix) {
        let choices: Vec<ActionId> = match slot {
            Some(a) => vec![*a],
            None => (0..k as ActionId).collect(),
        };
        out = out
            .into_iter()
            .flat_map(|prefix| {
                choices.iter().map(move |&c| {
                    let mut p = prefix.clone();
                    p.push(c);
                    p
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Two states, one agent with actions a, b; `a` loops at s0, `b` moves
    /// to the absorbing s1. p holds at s0, q at s1.
    pub(crate) fn e1() -> Environment {
        let mut b = Environment::builder();
        b.agent("1").unwrap();
        b.action("1", "a").unwrap();
        b.action("1", "b").unwrap();
        b.initial("s0");
        b.state("s1");
        b.transition("s0", &[Some("a")], "s0").unwrap();
        b.transition("s0", &[Some("b")], "s1").unwrap();
        b.transition("s1", &[None], "s1").unwrap();
        b.observe("1", "s0", "0").unwrap();
        b.observe("1", "s1", "1").unwrap();
        b.label("s0", "p");
        b.label("s1", "q");
        b.build()
    }

    #[test]
    fn e1_is_valid() {
        assert!(e1().validate().is_empty());
    }

    #[test]
    fn missing_successor_is_reported() {
        let mut b = Environment::builder();
        b.agent("1").unwrap();
        b.agent("2").unwrap();
        b.action("1", "a").unwrap();
        b.action("2", "a").unwrap();
        b.initial("s0");
        b.observe("1", "s0", "0").unwrap();
        b.observe("2", "s0", "0").unwrap();
        let env = b.build();
        let report = env.validate();
        assert_eq!(
            report,
            vec![Violation::NotSerial {
                state: "s0".into(),
                joint: vec!["a".into(), "a".into()]
            }]
        );
    }

    #[test]
    fn turn_based_expansion_is_serial_iff_total() {
        let make = |total: bool| {
            let mut b = Environment::builder();
            b.agent("1").unwrap();
            b.agent("2").unwrap();
            for a in ["x", "y"] {
                b.action("1", a).unwrap();
                b.action("2", a).unwrap();
            }
            b.initial("s");
            b.state("t");
            b.turn("s", "1", "x", "t").unwrap();
            if total {
                b.turn("s", "1", "y", "s").unwrap();
            }
            b.turn("t", "2", "x", "t").unwrap();
            b.turn("t", "2", "y", "s").unwrap();
            for s in ["s", "t"] {
                b.observe("1", s, "o").unwrap();
                b.observe("2", s, "o").unwrap();
            }
            b.build()
        };
        assert!(make(true).validate().is_empty());
        let partial = make(false);
        let report = partial.validate();
        assert_eq!(report.len(), 2);
        // successors from s depend only on agent 1's action
        let env = make(true);
        let s = env.state_id("s").unwrap();
        for j in 0..env.num_joint_actions() {
            let joint = env.decode_joint(j);
            let other = env.encode_joint(&[joint[0], 1 - joint[1]]);
            assert_eq!(env.post(s, j), env.post(s, other));
        }
    }

    #[test]
    fn missing_observation_and_empty_actions() {
        let mut b = Environment::builder();
        b.agent("1").unwrap();
        b.initial("s0");
        let env = b.build();
        let report = env.validate();
        assert!(report.contains(&Violation::EmptyActions { agent: "1".into() }));
        assert!(report.contains(&Violation::MissingObservation {
            agent: "1".into(),
            state: "s0".into()
        }));
    }

    #[test]
    fn make_all_initial_is_idempotent() {
        let env = e1();
        let once = env.make_all_initial();
        assert_eq!(once.initial(), &[0, 1]);
        assert_eq!(once.make_all_initial(), once);
    }

    #[test]
    fn agent_e_is_reserved() {
        let mut b = Environment::builder();
        assert_eq!(b.agent("e"), Err(EnvError::ReservedAgent("e".into())));
    }

    #[test]
    fn joint_encoding_roundtrips() {
        let mut b = Environment::builder();
        for (agent, n) in [("1", 2), ("2", 3), ("3", 1)] {
            b.agent(agent).unwrap();
            for k in 0..n {
                b.action(agent, &format!("a{k}")).unwrap();
            }
        }
        b.initial("s");
        let env = b.build();
        assert_eq!(env.num_joint_actions(), 6);
        for j in 0..6 {
            assert_eq!(env.encode_joint(&env.decode_joint(j)), j);
        }
    }
}
