//! The strategy space: global states `(s, α)`, their successors, local
//! values per agent tag and the indistinguishability relations.
//!
//! [`Space`] is the indexed form every engine works on. Each admissible
//! global state gets a dense handle (`gid`); the free functions at the top
//! of the module are the value-level API over [`GlobalState`].

use alloc::collections::{BTreeSet, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashMap;

use crate::env::{AgentId, Environment, ObsId, StateId};
use crate::strategy::{enumerate_profiles, ClassError, Strategy, StrategyClass, StrategyProfile};

const MISSING: u32 = u32::MAX;

/// Prefix of the per-state atoms of a space with an external numbering:
/// `<prefix><k>` holds exactly at the global state numbered `k`.
pub const OWN_ATOM_PREFIX: &str = "ets#";

/// An agent tag as written in formulas: `e`, `i` or `sig(i)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum AgentTag {
    Env,
    Base(String),
    Strategic(String),
}

impl AgentTag {
    pub fn base(name: &str) -> Self {
        AgentTag::Base(name.to_string())
    }

    pub fn strategic(name: &str) -> Self {
        AgentTag::Strategic(name.to_string())
    }
}

impl fmt::Display for AgentTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentTag::Env => f.write_str("e"),
            AgentTag::Base(a) => f.write_str(a),
            AgentTag::Strategic(a) => write!(f, "sig({a})"),
        }
    }
}

/// Resolved agent tag over agent handles.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Tag {
    Env,
    Base(AgentId),
    Strat(AgentId),
}

impl Tag {
    pub fn resolve(env: &Environment, tag: &AgentTag) -> Result<Tag, SpaceError> {
        let agent = |name: &str| {
            env.agent_id(name)
                .ok_or_else(|| SpaceError::UnknownAgent(name.to_string()))
        };
        Ok(match tag {
            AgentTag::Env => Tag::Env,
            AgentTag::Base(a) => Tag::Base(agent(a)?),
            AgentTag::Strategic(a) => Tag::Strat(agent(a)?),
        })
    }

    pub fn to_agent_tag(self, env: &Environment) -> AgentTag {
        match self {
            Tag::Env => AgentTag::Env,
            Tag::Base(i) => AgentTag::base(env.agent_name(i)),
            Tag::Strat(i) => AgentTag::strategic(env.agent_name(i)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpaceError {
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error(transparent)]
    Class(#[from] ClassError),
    #[error("global state is not admissible")]
    NotAdmissible,
}

/// A global state of the strategy space.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct GlobalState {
    pub state: StateId,
    pub profile: StrategyProfile,
}

/// The component of a global state seen through one tag.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum LocalValue<'a> {
    State(StateId),
    Observation(ObsId),
    Strategy(&'a Strategy),
}

/// States reachable in one step from `s` when every agent plays within `profile`.
pub fn successors(env: &Environment, s: StateId, profile: &StrategyProfile) -> Vec<StateId> {
    let mut out: Vec<StateId> = Vec::new();
    for j in 0..env.num_joint_actions() {
        let joint = env.decode_joint(j);
        let enabled = joint
            .iter()
            .enumerate()
            .all(|(i, &a)| profile.0[i].enabled(s).contains(a));
        if enabled {
            out.extend_from_slice(env.post(s, j));
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// States reachable from an initial state under `profile`, sorted.
pub fn reach(env: &Environment, profile: &StrategyProfile) -> Vec<StateId> {
    let mut seen = vec![false; env.num_states()];
    let mut queue: VecDeque<StateId> = VecDeque::new();
    for &s in env.initial() {
        if !seen[s as usize] {
            seen[s as usize] = true;
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        for t in successors(env, s, profile) {
            if !seen[t as usize] {
                seen[t as usize] = true;
                queue.push_back(t);
            }
        }
    }
    (0..env.num_states() as StateId)
        .filter(|&s| seen[s as usize])
        .collect()
}

/// Every admissible global state of `I(E, Σ)`.
pub fn global_states(env: &Environment, class: &StrategyClass) -> Result<Vec<GlobalState>, SpaceError> {
    let mut out = Vec::new();
    for profile in enumerate_profiles(env, class)? {
        for s in reach(env, &profile) {
            out.push(GlobalState {
                state: s,
                profile: profile.clone(),
            });
        }
    }
    Ok(out)
}

pub fn local_value<'g>(
    env: &Environment,
    g: &'g GlobalState,
    tag: &AgentTag,
) -> Result<LocalValue<'g>, SpaceError> {
    Ok(match Tag::resolve(env, tag)? {
        Tag::Env => LocalValue::State(g.state),
        Tag::Base(i) => LocalValue::Observation(env.observation(i, g.state)),
        Tag::Strat(i) => LocalValue::Strategy(g.profile.agent(i)),
    })
}

/// `g ~_G h`: equal local values for every tag in `tags`.
pub fn indist(
    env: &Environment,
    g: &GlobalState,
    h: &GlobalState,
    tags: &[AgentTag],
) -> Result<bool, SpaceError> {
    for t in tags {
        if local_value(env, g, t)? != local_value(env, h, t)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Admissible global states reachable from `g` through the union of the
/// relations of `tags`. Uses the case analysis for product classes.
pub fn common_reachable(
    env: &Environment,
    class: &StrategyClass,
    g: &GlobalState,
    tags: &[AgentTag],
) -> Result<Vec<GlobalState>, SpaceError> {
    let space = Space::build(env, class)?;
    let gid = space.gid_of(g).ok_or(SpaceError::NotAdmissible)?;
    let tags = tags
        .iter()
        .map(|t| Tag::resolve(env, t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(space
        .common_closure_shortcut(gid, &tags)
        .into_iter()
        .map(|h| space.global_state(h))
        .collect())
}

/// Equivalence classes of admissible global states.
#[derive(Clone, Debug)]
pub struct Partition {
    pub group_of: Vec<u32>,
    pub groups: Vec<Vec<u32>>,
}

impl Partition {
    pub fn members_with(&self, g: u32) -> &[u32] {
        &self.groups[self.group_of[g as usize] as usize]
    }
}

/// Indexed strategy space over the admissible global states.
#[derive(Clone)]
pub struct Space<'e> {
    env: &'e Environment,
    profiles: Vec<StrategyProfile>,
    n_agents: usize,
    /// `[profile * n_agents + agent]` -> per-agent strategy id.
    strat_ids: Vec<u32>,
    state_of: Vec<StateId>,
    profile_of: Vec<u32>,
    /// `[profile * n_states + state]` -> gid.
    slot: Vec<u32>,
    succ_off: Vec<u32>,
    succ: Vec<u32>,
    initial: Vec<u32>,
    product: bool,
    profile_index: HashMap<StrategyProfile, u32>,
    /// Optional external numbering of the global states (used by the reduction).
    external: Option<Vec<u32>>,
}

impl fmt::Debug for Space<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Space")
            .field("profiles", &self.profiles.len())
            .field("states", &self.state_of.len())
            .field("product", &self.product)
            .finish()
    }
}

impl<'e> Space<'e> {
    /// Builds the admissible part of `I(E, Σ)`.
    pub fn build(env: &'e Environment, class: &StrategyClass) -> Result<Self, SpaceError> {
        let profiles = enumerate_profiles(env, class)?;
        if profiles.is_empty() {
            return Err(ClassError::Empty.into());
        }
        let mut cells = Vec::new();
        let mut edges = Vec::new();
        for (p, profile) in profiles.iter().enumerate() {
            let states = reach(env, profile);
            for &s in &states {
                cells.push((s, p as u32));
                edges.push(successors(env, s, profile));
            }
        }
        let initial_cells = cells
            .iter()
            .enumerate()
            .filter(|(_, (s, _))| env.is_initial(*s))
            .map(|(k, _)| k as u32)
            .collect();
        Ok(Self::from_parts(
            env,
            profiles,
            class.is_product(),
            cells,
            |k, _| edges[k].clone(),
            initial_cells,
            None,
        ))
    }

    /// Assembles a space from explicit cells `(state, profile index)`. The
    /// successor callback receives the cell index and returns successor env
    /// states (within the same profile); every successor must be a cell.
    pub fn from_parts(
        env: &'e Environment,
        profiles: Vec<StrategyProfile>,
        product: bool,
        cells: Vec<(StateId, u32)>,
        mut succ_states: impl FnMut(usize, &(StateId, u32)) -> Vec<StateId>,
        initial: Vec<u32>,
        external: Option<Vec<u32>>,
    ) -> Self {
        let n_states = env.num_states();
        let n_agents = env.num_agents();
        let mut slot = vec![MISSING; profiles.len() * n_states];
        for (k, &(s, p)) in cells.iter().enumerate() {
            slot[p as usize * n_states + s as usize] = k as u32;
        }
        let mut succ_off = Vec::with_capacity(cells.len() + 1);
        let mut succ = Vec::new();
        succ_off.push(0);
        for (k, cell) in cells.iter().enumerate() {
            for t in succ_states(k, cell) {
                let h = slot[cell.1 as usize * n_states + t as usize];
                debug_assert_ne!(h, MISSING, "successor outside the space");
                succ.push(h);
            }
            succ_off.push(succ.len() as u32);
        }
        let mut strat_ids = vec![0; profiles.len() * n_agents];
        for agent in 0..n_agents {
            let mut ids: HashMap<&Strategy, u32> = HashMap::new();
            for (p, profile) in profiles.iter().enumerate() {
                let next = ids.len() as u32;
                let id = *ids.entry(&profile.0[agent]).or_insert(next);
                strat_ids[p * n_agents + agent] = id;
            }
        }
        let profile_index = profiles
            .iter()
            .enumerate()
            .map(|(p, profile)| (profile.clone(), p as u32))
            .collect();
        Space {
            env,
            profiles,
            n_agents,
            strat_ids,
            state_of: cells.iter().map(|c| c.0).collect(),
            profile_of: cells.iter().map(|c| c.1).collect(),
            slot,
            succ_off,
            succ,
            initial,
            product,
            profile_index,
            external,
        }
    }

    pub fn env(&self) -> &'e Environment {
        self.env
    }

    /// Number of admissible global states.
    pub fn len(&self) -> usize {
        self.state_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state_of.is_empty()
    }

    pub fn profiles(&self) -> &[StrategyProfile] {
        &self.profiles
    }

    pub fn is_product(&self) -> bool {
        self.product
    }

    pub fn initial(&self) -> &[u32] {
        &self.initial
    }

    pub fn state(&self, g: u32) -> StateId {
        self.state_of[g as usize]
    }

    pub fn profile_id(&self, g: u32) -> u32 {
        self.profile_of[g as usize]
    }

    pub fn profile(&self, g: u32) -> &StrategyProfile {
        &self.profiles[self.profile_of[g as usize] as usize]
    }

    pub fn external_id(&self, g: u32) -> Option<u32> {
        self.external.as_ref().map(|ext| ext[g as usize])
    }

    pub fn successors(&self, g: u32) -> &[u32] {
        let lo = self.succ_off[g as usize] as usize;
        let hi = self.succ_off[g as usize + 1] as usize;
        &self.succ[lo..hi]
    }

    pub fn num_edges(&self) -> usize {
        self.succ.len()
    }

    pub fn global_state(&self, g: u32) -> GlobalState {
        GlobalState {
            state: self.state(g),
            profile: self.profile(g).clone(),
        }
    }

    pub fn profile_index(&self, profile: &StrategyProfile) -> Option<u32> {
        self.profile_index.get(profile).copied()
    }

    pub fn gid(&self, state: StateId, profile: u32) -> Option<u32> {
        let k = self.slot[profile as usize * self.env.num_states() + state as usize];
        (k != MISSING).then_some(k)
    }

    pub fn gid_of(&self, g: &GlobalState) -> Option<u32> {
        let p = self.profile_index(&g.profile)?;
        if g.state as usize >= self.env.num_states() {
            return None;
        }
        self.gid(g.state, p)
    }

    /// Per-agent strategy id of `g` (equal ids iff equal strategies).
    pub fn strategy_id(&self, g: u32, agent: AgentId) -> u32 {
        self.strat_ids[self.profile_of[g as usize] as usize * self.n_agents + agent as usize]
    }

    pub fn tag_value(&self, g: u32, tag: Tag) -> u32 {
        match tag {
            Tag::Env => self.state(g),
            Tag::Base(i) => self.env.observation(i, self.state(g)),
            Tag::Strat(i) => self.strategy_id(g, i),
        }
    }

    /// Truth value of an atom at every global state: environment
    /// propositions, registered strategy atoms, then per-state atoms.
    pub fn atom_valuation(&self, name: &str) -> Option<Vec<bool>> {
        let all = 0..self.len() as u32;
        if let Some(p) = self.env.props().get(name) {
            return Some(all.map(|g| self.env.has_prop(self.state(g), p)).collect());
        }
        if let Some((agent, strat)) = self.env.strategy_atoms().get(name) {
            return Some(all.map(|g| self.profile(g).agent(*agent) == strat).collect());
        }
        let ext = self.external.as_ref()?;
        let k: u32 = name.strip_prefix(OWN_ATOM_PREFIX)?.parse().ok()?;
        Some(ext.iter().map(|&e| e == k).collect())
    }

    pub fn indist(&self, g: u32, h: u32, tags: &[Tag]) -> bool {
        tags.iter().all(|&t| self.tag_value(g, t) == self.tag_value(h, t))
    }

    /// Groups admissible global states by their local values on `tags`.
    pub fn partition(&self, tags: &[Tag]) -> Partition {
        let mut index: HashMap<Vec<u32>, u32> = HashMap::new();
        let mut group_of = Vec::with_capacity(self.len());
        let mut groups: Vec<Vec<u32>> = Vec::new();
        for g in 0..self.len() as u32 {
            let key: Vec<u32> = tags.iter().map(|&t| self.tag_value(g, t)).collect();
            let next = groups.len() as u32;
            let id = *index.entry(key).or_insert(next);
            if id == next {
                groups.push(Vec::new());
            }
            groups[id as usize].push(g);
            group_of.push(id);
        }
        Partition { group_of, groups }
    }

    /// Connected components of `∪_{t ∈ tags} ~_t`; identity when `tags` is empty.
    pub fn components(&self, tags: &[Tag]) -> Partition {
        let n = self.len();
        let mut uf = UnionFind::new(n);
        for &t in tags {
            for group in self.partition(&[t]).groups {
                for w in group.windows(2) {
                    uf.union(w[0], w[1]);
                }
            }
        }
        let mut index: HashMap<u32, u32> = HashMap::new();
        let mut group_of = Vec::with_capacity(n);
        let mut groups: Vec<Vec<u32>> = Vec::new();
        for g in 0..n as u32 {
            let root = uf.find(g);
            let next = groups.len() as u32;
            let id = *index.entry(root).or_insert(next);
            if id == next {
                groups.push(Vec::new());
            }
            groups[id as usize].push(g);
            group_of.push(id);
        }
        Partition { group_of, groups }
    }

    /// Plain breadth-first closure under the union of the tag relations,
    /// checking indistinguishability pairwise.
    pub fn common_closure_bfs(&self, g: u32, tags: &[Tag]) -> Vec<u32> {
        let mut seen = vec![false; self.len()];
        seen[g as usize] = true;
        let mut queue = VecDeque::from([g]);
        while let Some(u) = queue.pop_front() {
            for v in 0..self.len() as u32 {
                if !seen[v as usize] && tags.iter().any(|&t| self.indist(u, v, &[t])) {
                    seen[v as usize] = true;
                    queue.push_back(v);
                }
            }
        }
        (0..self.len() as u32).filter(|&v| seen[v as usize]).collect()
    }

    /// Common-knowledge closure by case analysis on the tag set; falls back
    /// to BFS for classes that are not per-agent products.
    pub fn common_closure_shortcut(&self, g: u32, tags: &[Tag]) -> Vec<u32> {
        let tags: BTreeSet<Tag> = tags.iter().copied().collect();
        if tags.is_empty() {
            return vec![g];
        }
        let strategic: Vec<AgentId> = tags
            .iter()
            .filter_map(|t| match t {
                Tag::Strat(i) => Some(*i),
                _ => None,
            })
            .collect();
        let state_tags: Vec<Tag> = tags
            .iter()
            .copied()
            .filter(|t| !matches!(t, Tag::Strat(_)))
            .collect();
        match (state_tags.is_empty(), strategic.len()) {
            // only state-dependent tags: search over environment states
            (false, 0) => {
                let mut occupied = vec![false; self.env.num_states()];
                for h in 0..self.len() as u32 {
                    occupied[self.state(h) as usize] = true;
                }
                let mut seen = vec![false; self.env.num_states()];
                let start = self.state(g);
                seen[start as usize] = true;
                let mut queue = VecDeque::from([start]);
                while let Some(u) = queue.pop_front() {
                    for v in 0..self.env.num_states() as StateId {
                        if occupied[v as usize]
                            && !seen[v as usize]
                            && state_tags.iter().any(|&t| self.state_tag(u, t) == self.state_tag(v, t))
                        {
                            seen[v as usize] = true;
                            queue.push_back(v);
                        }
                    }
                }
                (0..self.len() as u32)
                    .filter(|&h| seen[self.state(h) as usize])
                    .collect()
            }
            // one strategic tag: its relation is already an equivalence
            (true, 1) => {
                let t = Tag::Strat(strategic[0]);
                let v = self.tag_value(g, t);
                (0..self.len() as u32)
                    .filter(|&h| self.tag_value(h, t) == v)
                    .collect()
            }
            _ if self.product => (0..self.len() as u32).collect(),
            _ => self.common_closure_bfs(g, &tags.into_iter().collect::<Vec<_>>()),
        }
    }

    fn state_tag(&self, s: StateId, t: Tag) -> u32 {
        match t {
            Tag::Env => s,
            Tag::Base(i) => self.env.observation(i, s),
            Tag::Strat(_) => unreachable!("strategic tag has no state value"),
        }
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let up = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = up;
            x = up;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb) as usize] = ra.min(rb);
        }
    }
}
