//! Memoryless strategies, joint profiles and strategy classes.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Deref;

use crate::env::{ActionId, AgentId, Environment, StateId};

/// A set of actions of one agent, as a bitmask over action handles.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ActionSet(pub u64);

impl ActionSet {
    pub const EMPTY: ActionSet = ActionSet(0);

    pub fn full(n: usize) -> Self {
        if n >= 64 {
            ActionSet(u64::MAX)
        } else {
            ActionSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(a: ActionId) -> Self {
        ActionSet(1u64 << a)
    }

    pub fn contains(self, a: ActionId) -> bool {
        self.0 >> a & 1 == 1
    }

    pub fn insert(&mut self, a: ActionId) {
        self.0 |= 1u64 << a;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: ActionSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = ActionId> {
        let bits = self.0;
        (0..64).filter(move |a| bits >> a & 1 == 1)
    }
}

impl fmt::Debug for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// `α_i`: enabled action set per state (indexed by state handle).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Strategy(pub Vec<ActionSet>);

impl Strategy {
    /// Enables every action at every state.
    pub fn random(env: &Environment, agent: AgentId) -> Self {
        Strategy(vec![ActionSet::full(env.num_actions(agent)); env.num_states()])
    }

    pub fn constant(n_states: usize, set: ActionSet) -> Self {
        Strategy(vec![set; n_states])
    }

    pub fn enabled(&self, s: StateId) -> ActionSet {
        self.0[s as usize]
    }

    pub fn is_deterministic(&self) -> bool {
        self.0.iter().all(|set| set.len() == 1)
    }

    pub fn is_uniform(&self, env: &Environment, agent: AgentId) -> bool {
        let n = self.0.len();
        (0..n).all(|s| {
            (s + 1..n).all(|t| {
                env.observation(agent, s as StateId) != env.observation(agent, t as StateId)
                    || self.0[s] == self.0[t]
            })
        })
    }
}

impl Deref for Strategy {
    type Target = [ActionSet];

    fn deref(&self) -> &[ActionSet] {
        &self.0
    }
}

/// One strategy per agent, in agent order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct StrategyProfile(pub Vec<Strategy>);

impl StrategyProfile {
    pub fn random(env: &Environment) -> Self {
        StrategyProfile(
            (0..env.num_agents() as AgentId)
                .map(|i| Strategy::random(env, i))
                .collect(),
        )
    }

    pub fn agent(&self, i: AgentId) -> &Strategy {
        &self.0[i as usize]
    }

    pub fn is_deterministic(&self) -> bool {
        self.0.iter().all(Strategy::is_deterministic)
    }

    pub fn is_uniform(&self, env: &Environment) -> bool {
        self.0
            .iter()
            .enumerate()
            .all(|(i, s)| s.is_uniform(env, i as AgentId))
    }

    /// Checks the shape: one strategy per agent, one nonempty in-range set per state.
    pub fn fits(&self, env: &Environment) -> bool {
        self.0.len() == env.num_agents()
            && self.0.iter().enumerate().all(|(i, strat)| {
                let full = ActionSet::full(env.num_actions(i as AgentId));
                strat.len() == env.num_states()
                    && strat.iter().all(|set| !set.is_empty() && set.is_subset(full))
            })
    }
}

/// Membership predicate for [`StrategyClass::Custom`] and [`StrategyClass::Filtered`].
#[derive(Clone)]
pub struct Predicate(pub Arc<dyn Fn(&Environment, &StrategyProfile) -> bool + Send + Sync>);

impl Predicate {
    pub fn new(f: impl Fn(&Environment, &StrategyProfile) -> bool + Send + Sync + 'static) -> Self {
        Predicate(Arc::new(f))
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Predicate(..)")
    }
}

#[derive(Clone, Debug)]
pub enum StrategyClass {
    All,
    Deterministic,
    LocallyUniform,
    LocallyUniformDeterministic,
    /// Each agent plays either an inner-class strategy or the random one.
    AtelCompletion(alloc::boxed::Box<StrategyClass>),
    /// A fixed list of profiles.
    Explicit(Vec<StrategyProfile>),
    /// The members of `base` accepted by `predicate`.
    Filtered {
        base: alloc::boxed::Box<StrategyClass>,
        predicate: Predicate,
    },
    /// Membership test only; cannot be enumerated.
    Custom(Predicate),
}

impl StrategyClass {
    pub fn atel_completion(inner: StrategyClass) -> Self {
        StrategyClass::AtelCompletion(alloc::boxed::Box::new(inner))
    }

    pub fn filtered(base: StrategyClass, predicate: Predicate) -> Self {
        StrategyClass::Filtered {
            base: alloc::boxed::Box::new(base),
            predicate,
        }
    }

    /// True when the class is a product of per-agent strategy sets.
    pub fn is_product(&self) -> bool {
        match self {
            StrategyClass::All
            | StrategyClass::Deterministic
            | StrategyClass::LocallyUniform
            | StrategyClass::LocallyUniformDeterministic => true,
            StrategyClass::AtelCompletion(inner) => inner.is_product(),
            _ => false,
        }
    }

    /// Short name for reports.
    pub fn name(&self) -> String {
        match self {
            StrategyClass::All => "all".into(),
            StrategyClass::Deterministic => "det".into(),
            StrategyClass::LocallyUniform => "unif".into(),
            StrategyClass::LocallyUniformDeterministic => "unif-det".into(),
            StrategyClass::AtelCompletion(inner) => format!("atel-{}", inner.name()),
            StrategyClass::Explicit(list) => format!("explicit({})", list.len()),
            StrategyClass::Filtered { base, .. } => format!("filtered({})", base.name()),
            StrategyClass::Custom(_) => "custom".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassError {
    #[error("a custom strategy class can only filter an enumerable base class")]
    NotEnumerable,
    #[error("strategy class is empty for this environment")]
    Empty,
    #[error("profile does not fit the environment")]
    BadProfile,
    #[error("unknown agent `{0}` in group")]
    UnknownAgent(String),
}

fn nonempty_subsets(n: usize) -> Vec<ActionSet> {
    (1..=ActionSet::full(n).0).map(ActionSet).collect()
}

/// Per-agent strategy lists for product classes, in canonical order.
pub fn agent_strategies(
    env: &Environment,
    agent: AgentId,
    class: &StrategyClass,
) -> Result<Vec<Strategy>, ClassError> {
    let n_states = env.num_states();
    let n_act = env.num_actions(agent);
    let alphabet = match class {
        StrategyClass::All | StrategyClass::LocallyUniform => nonempty_subsets(n_act),
        StrategyClass::Deterministic | StrategyClass::LocallyUniformDeterministic => {
            (0..n_act as ActionId).map(ActionSet::singleton).collect()
        }
        StrategyClass::AtelCompletion(inner) => {
            let mut list = agent_strategies(env, agent, inner)?;
            let random = Strategy::random(env, agent);
            if !list.contains(&random) {
                list.push(random);
            }
            return Ok(list);
        }
        _ => return Err(ClassError::NotEnumerable),
    };
    let uniform = matches!(
        class,
        StrategyClass::LocallyUniform | StrategyClass::LocallyUniformDeterministic
    );
    // slot of each state: the state itself, or its observation class
    let mut slots: Vec<usize> = Vec::with_capacity(n_states);
    let mut n_slots = 0;
    if uniform {
        let mut seen: Vec<u32> = Vec::new();
        for s in 0..n_states as StateId {
            let o = env.observation(agent, s);
            match seen.iter().position(|&x| x == o) {
                Some(k) => slots.push(k),
                None => {
                    seen.push(o);
                    slots.push(n_slots);
                    n_slots += 1;
                }
            }
        }
    } else {
        slots.extend(0..n_states);
        n_slots = n_states;
    }
    let k = alphabet.len();
    let total = k.checked_pow(n_slots as u32).unwrap_or(usize::MAX);
    let mut out = Vec::with_capacity(total.min(1 << 20));
    let mut digits = vec![0usize; n_slots];
    loop {
        out.push(Strategy(slots.iter().map(|&sl| alphabet[digits[sl]]).collect()));
        // odometer, last slot fastest
        let mut pos = n_slots;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < k {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Number of profiles of a class computed without enumerating them; an
/// upper bound for `Filtered`, exact otherwise. Saturates at `usize::MAX`.
pub fn profile_count_bound(env: &Environment, class: &StrategyClass) -> Result<usize, ClassError> {
    match class {
        StrategyClass::Explicit(list) => Ok(list.len()),
        StrategyClass::Filtered { base, .. } => profile_count_bound(env, base),
        StrategyClass::Custom(_) => Err(ClassError::NotEnumerable),
        _ => (0..env.num_agents() as AgentId).try_fold(1usize, |acc, i| {
            Ok(acc.saturating_mul(agent_strategy_count(env, i, class)?))
        }),
    }
}

fn agent_strategy_count(env: &Environment, agent: AgentId, class: &StrategyClass) -> Result<usize, ClassError> {
    let n_act = env.num_actions(agent);
    let (k, uniform) = match class {
        StrategyClass::All => ((1usize << n_act) - 1, false),
        StrategyClass::LocallyUniform => ((1usize << n_act) - 1, true),
        StrategyClass::Deterministic => (n_act, false),
        StrategyClass::LocallyUniformDeterministic => (n_act, true),
        StrategyClass::AtelCompletion(inner) => {
            let base = agent_strategy_count(env, agent, inner)?;
            // the random strategy is already present unless the inner class is deterministic
            let has_random = match &**inner {
                StrategyClass::Deterministic | StrategyClass::LocallyUniformDeterministic => n_act == 1,
                _ => true,
            };
            return Ok(base.saturating_add(usize::from(!has_random)));
        }
        _ => return Err(ClassError::NotEnumerable),
    };
    let slots = if uniform {
        let mut seen: Vec<u32> = (0..env.num_states() as StateId)
            .map(|s| env.observation(agent, s))
            .collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    } else {
        env.num_states()
    };
    Ok(k.checked_pow(slots as u32).unwrap_or(usize::MAX))
}

/// All profiles of a class, without duplicates, agent 0 most significant.
pub fn enumerate_profiles(
    env: &Environment,
    class: &StrategyClass,
) -> Result<Vec<StrategyProfile>, ClassError> {
    let out = match class {
        StrategyClass::Explicit(list) => {
            let mut out: Vec<StrategyProfile> = Vec::new();
            for p in list {
                if !p.fits(env) {
                    return Err(ClassError::BadProfile);
                }
                if !out.contains(p) {
                    out.push(p.clone());
                }
            }
            out
        }
        StrategyClass::Filtered { base, predicate } => enumerate_profiles(env, base)?
            .into_iter()
            .filter(|p| (predicate.0)(env, p))
            .collect(),
        StrategyClass::Custom(_) => return Err(ClassError::NotEnumerable),
        _ => {
            let per_agent = (0..env.num_agents() as AgentId)
                .map(|i| agent_strategies(env, i, class))
                .collect::<Result<Vec<_>, _>>()?;
            product(&per_agent)
        }
    };
    Ok(out)
}

fn product(per_agent: &[Vec<Strategy>]) -> Vec<StrategyProfile> {
    let mut out = vec![StrategyProfile(Vec::new())];
    for list in per_agent {
        let mut next = Vec::with_capacity(out.len() * list.len());
        for prefix in &out {
            for s in list {
                let mut p = prefix.0.clone();
                p.push(s.clone());
                next.push(StrategyProfile(p));
            }
        }
        out = next;
    }
    out
}

/// Membership test for a single profile.
pub fn profile_in_class(env: &Environment, profile: &StrategyProfile, class: &StrategyClass) -> bool {
    if !profile.fits(env) {
        return false;
    }
    match class {
        StrategyClass::All => true,
        StrategyClass::Deterministic => profile.is_deterministic(),
        StrategyClass::LocallyUniform => profile.is_uniform(env),
        StrategyClass::LocallyUniformDeterministic => {
            profile.is_deterministic() && profile.is_uniform(env)
        }
        StrategyClass::AtelCompletion(inner) => {
            profile.0.iter().enumerate().all(|(i, strat)| {
                let i = i as AgentId;
                *strat == Strategy::random(env, i) || strategy_in_class(env, i, strat, inner)
            })
        }
        StrategyClass::Explicit(list) => list.contains(profile),
        StrategyClass::Filtered { base, predicate } => {
            profile_in_class(env, profile, base) && (predicate.0)(env, profile)
        }
        StrategyClass::Custom(predicate) => (predicate.0)(env, profile),
    }
}

/// Per-agent membership for product classes (and their completions).
fn strategy_in_class(env: &Environment, agent: AgentId, strat: &Strategy, class: &StrategyClass) -> bool {
    match class {
        StrategyClass::All => true,
        StrategyClass::Deterministic => strat.is_deterministic(),
        StrategyClass::LocallyUniform => strat.is_uniform(env, agent),
        StrategyClass::LocallyUniformDeterministic => {
            strat.is_deterministic() && strat.is_uniform(env, agent)
        }
        StrategyClass::AtelCompletion(inner) => {
            *strat == Strategy::random(env, agent) || strategy_in_class(env, agent, strat, inner)
        }
        _ => false,
    }
}

/// `comp(σ_G)`: the group strategy extended with the random strategy for
/// every agent outside the group.
pub fn complete_group_strategy(
    env: &Environment,
    group: &[(AgentId, Strategy)],
) -> Result<StrategyProfile, ClassError> {
    let mut profile = StrategyProfile::random(env);
    for (agent, strat) in group {
        if *agent as usize >= env.num_agents() {
            return Err(ClassError::UnknownAgent(format!("#{agent}")));
        }
        profile.0[*agent as usize] = strat.clone();
    }
    if !profile.fits(env) {
        return Err(ClassError::BadProfile);
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::tests::e1;

    fn one_agent(states: &[(&str, &str)]) -> Environment {
        let mut b = Environment::builder();
        b.agent("1").unwrap();
        b.action("1", "a").unwrap();
        b.action("1", "b").unwrap();
        for (i, (s, o)) in states.iter().enumerate() {
            if i == 0 {
                b.initial(s);
            }
            b.observe("1", s, o).unwrap();
            b.transition(s, &[None], s).unwrap();
        }
        b.build()
    }

    #[test]
    fn lud_counts_follow_observation_classes() {
        let distinct = one_agent(&[("s", "0"), ("t", "1")]);
        let shared = one_agent(&[("s", "0"), ("t", "0")]);
        let lud = StrategyClass::LocallyUniformDeterministic;
        assert_eq!(enumerate_profiles(&distinct, &lud).unwrap().len(), 4);
        assert_eq!(enumerate_profiles(&shared, &lud).unwrap().len(), 2);
    }

    #[test]
    fn all_on_single_state_is_nonempty_subsets() {
        let env = one_agent(&[("s", "0")]);
        let profiles = enumerate_profiles(&env, &StrategyClass::All).unwrap();
        let sets: Vec<u64> = profiles.iter().map(|p| p.0[0].0[0].0).collect();
        assert_eq!(sets, vec![0b01, 0b10, 0b11]);
    }

    #[test]
    fn e1_class_sizes() {
        let env = e1();
        assert_eq!(enumerate_profiles(&env, &StrategyClass::All).unwrap().len(), 9);
        assert_eq!(enumerate_profiles(&env, &StrategyClass::Deterministic).unwrap().len(), 4);
        let comp = StrategyClass::atel_completion(StrategyClass::Deterministic);
        assert_eq!(enumerate_profiles(&env, &comp).unwrap().len(), 5);
    }

    #[test]
    fn membership_examples() {
        let env = one_agent(&[("s", "0"), ("t", "0")]);
        let random = StrategyProfile::random(&env);
        let comp = StrategyClass::atel_completion(StrategyClass::LocallyUniformDeterministic);
        assert!(profile_in_class(&env, &random, &comp));
        let split = StrategyProfile(vec![Strategy(vec![ActionSet::singleton(0), ActionSet::singleton(1)])]);
        assert!(!profile_in_class(&env, &split, &StrategyClass::LocallyUniform));
        let det_unif = StrategyProfile(vec![Strategy::constant(2, ActionSet::singleton(0))]);
        assert!(profile_in_class(&env, &det_unif, &StrategyClass::All));
        assert!(profile_in_class(&env, &det_unif, &comp));
    }

    #[test]
    fn custom_is_not_enumerable() {
        let env = e1();
        let custom = StrategyClass::Custom(Predicate::new(|_, _| true));
        assert_eq!(enumerate_profiles(&env, &custom), Err(ClassError::NotEnumerable));
        let filtered = StrategyClass::filtered(
            StrategyClass::All,
            Predicate::new(|_, p: &StrategyProfile| p.is_deterministic()),
        );
        assert_eq!(enumerate_profiles(&env, &filtered).unwrap().len(), 4);
    }

    #[test]
    fn completion_examples() {
        let env = e1();
        assert_eq!(complete_group_strategy(&env, &[]).unwrap(), StrategyProfile::random(&env));
        let s = Strategy::constant(2, ActionSet::singleton(1));
        let full = complete_group_strategy(&env, &[(0, s.clone())]).unwrap();
        assert_eq!(full, StrategyProfile(vec![s]));
        let comp = StrategyClass::atel_completion(StrategyClass::LocallyUniformDeterministic);
        assert!(profile_in_class(&env, &full, &comp));
    }

    #[test]
    fn enumeration_matches_membership() {
        let env = e1();
        let all = enumerate_profiles(&env, &StrategyClass::All).unwrap();
        for class in [
            StrategyClass::All,
            StrategyClass::Deterministic,
            StrategyClass::LocallyUniform,
            StrategyClass::LocallyUniformDeterministic,
            StrategyClass::atel_completion(StrategyClass::Deterministic),
        ] {
            let members = enumerate_profiles(&env, &class).unwrap();
            let expected: Vec<_> = all.iter().filter(|p| profile_in_class(&env, p, &class)).collect();
            assert_eq!(members.len(), expected.len(), "{}", class.name());
            for p in expected {
                assert_eq!(members.iter().filter(|m| *m == p).count(), 1);
            }
        }
    }
}
