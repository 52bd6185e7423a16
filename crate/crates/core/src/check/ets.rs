//! Reduction of strategy-space checking to an epistemic transition system
//! over `S × Σ`, with quantifiers and `loc` atoms compiled away into
//! disjunctions of per-state propositions.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::CheckError;
use crate::env::{Environment, StateId};
use crate::formula::Formula;
use crate::space::{AgentTag, Space, Tag, OWN_ATOM_PREFIX};
use crate::strategy::StrategyProfile;

/// Epistemic transition system: states `(s, α)` for every environment state
/// and every profile of the class, numbered `p * |S| + s`.
pub struct Ets<'e> {
    env: &'e Environment,
    profiles: Vec<StrategyProfile>,
    succ: Vec<Vec<u32>>,
    initial: Vec<u32>,
}

impl<'e> Ets<'e> {
    pub fn build(env: &'e Environment, profiles: Vec<StrategyProfile>, budget: usize) -> Result<Self, CheckError> {
        let n_states = env.num_states();
        let total = n_states.saturating_mul(profiles.len());
        if total > budget {
            return Err(CheckError::BudgetExceeded {
                what: "ETS states",
                limit: budget,
                needed: total,
            });
        }
        let mut succ = Vec::with_capacity(total);
        for profile in &profiles {
            for s in 0..n_states as StateId {
                // (s, α) -> (t, α) for every joint action enabled by α at s
                let mut out: Vec<u32> = Vec::new();
                for j in 0..env.num_joint_actions() {
                    let joint = env.decode_joint(j);
                    if joint
                        .iter()
                        .enumerate()
                        .all(|(i, &a)| profile.0[i].0[s as usize].contains(a))
                    {
                        out.extend(env.post(s, j).iter().copied());
                    }
                }
                out.sort_unstable();
                out.dedup();
                succ.push(out);
            }
        }
        let mut initial = Vec::new();
        for p in 0..profiles.len() {
            for &s in env.initial() {
                initial.push((p * n_states) as u32 + s);
            }
        }
        Ok(Ets {
            env,
            profiles,
            succ,
            initial,
        })
    }

    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    pub fn num_env_states(&self) -> usize {
        self.env.num_states()
    }

    pub fn num_transitions(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn profiles(&self) -> &[StrategyProfile] {
        &self.profiles
    }

    fn split(&self, k: u32) -> (StateId, u32) {
        let n = self.env.num_states() as u32;
        (k % n, k / n)
    }

    pub fn index_of(&self, s: StateId, profile: u32) -> u32 {
        profile * self.env.num_states() as u32 + s
    }

    /// ETS states reachable from the initial ones, ascending.
    pub fn reachable(&self) -> Vec<u32> {
        let mut seen = vec![false; self.len()];
        let mut queue: VecDeque<u32> = VecDeque::new();
        for &k in &self.initial {
            seen[k as usize] = true;
            queue.push_back(k);
        }
        while let Some(k) = queue.pop_front() {
            let (_, p) = self.split(k);
            for &t in &self.succ[k as usize] {
                let m = self.index_of(t, p);
                if !seen[m as usize] {
                    seen[m as usize] = true;
                    queue.push_back(m);
                }
            }
        }
        (0..self.len() as u32).filter(|&k| seen[k as usize]).collect()
    }

    /// Observation of a tag at an ETS state: the environment state for `e`,
    /// `O_i(s)` for an agent, and the strategy itself for `σ(i)`.
    fn same_local(&self, a: u32, b: u32, tag: Tag) -> bool {
        let ((sa, pa), (sb, pb)) = (self.split(a), self.split(b));
        match tag {
            Tag::Env => sa == sb,
            Tag::Base(i) => self.env.observation(i, sa) == self.env.observation(i, sb),
            Tag::Strat(i) => {
                self.profiles[pa as usize].0[i as usize] == self.profiles[pb as usize].0[i as usize]
            }
        }
    }

    /// The interpreted system generated by the ETS: its reachable states,
    /// each carrying its own proposition `ets#k`.
    pub fn to_space(&self) -> Space<'e> {
        let cells: Vec<(StateId, u32)> = self.reachable().into_iter().map(|k| self.split(k)).collect();
        let external = cells.iter().map(|&(s, p)| self.index_of(s, p)).collect();
        let initial = cells
            .iter()
            .enumerate()
            .filter(|(_, (s, _))| self.env.is_initial(*s))
            .map(|(g, _)| g as u32)
            .collect();
        Space::from_parts(
            self.env,
            self.profiles.clone(),
            false,
            cells,
            |_, &(s, p)| self.succ[self.index_of(s, p) as usize].clone(),
            initial,
            Some(external),
        )
    }

    /// `φ^Γ`: replaces `loc(t,x)` by the disjunction of the propositions of
    /// reachable states agreeing with `Γ(x)` on `t`, and `exists x . φ` by the
    /// disjunction of `φ^{Γ[k/x]}` over reachable states `k`.
    pub fn transform(
        &self,
        f: &Formula,
        gamma: &BTreeMap<alloc::string::String, u32>,
        node_budget: usize,
    ) -> Result<Formula, CheckError> {
        let reachable = self.reachable();
        let mut t = Transformer {
            ets: self,
            reachable: &reachable,
            gamma: gamma.clone(),
            nodes: 0,
            budget: node_budget,
        };
        t.go(f)
    }
}

struct Transformer<'a, 'e> {
    ets: &'a Ets<'e>,
    reachable: &'a [u32],
    gamma: BTreeMap<alloc::string::String, u32>,
    nodes: usize,
    budget: usize,
}

impl Transformer<'_, '_> {
    fn count(&mut self, n: usize) -> Result<(), CheckError> {
        self.nodes += n;
        if self.nodes > self.budget {
            return Err(CheckError::BudgetExceeded {
                what: "formula nodes",
                limit: self.budget,
                needed: self.nodes,
            });
        }
        Ok(())
    }

    fn disjunction(&mut self, items: Vec<Formula>) -> Result<Formula, CheckError> {
        self.count(items.len().saturating_sub(1).max(1))?;
        let mut it = items.into_iter();
        Ok(match it.next() {
            None => Formula::False,
            Some(first) => it.fold(first, |a, b| Formula::Or(Box::new(a), Box::new(b))),
        })
    }

    fn go(&mut self, f: &Formula) -> Result<Formula, CheckError> {
        use Formula::*;
        let b = |x: Formula| Box::new(x);
        Ok(match f {
            Loc(tag, x) => {
                let bound = *self
                    .gamma
                    .get(x)
                    .ok_or_else(|| CheckError::Unbound(x.clone()))?;
                let tag = Tag::resolve(self.ets.env, tag)?;
                let atoms: Vec<Formula> = self
                    .reachable
                    .iter()
                    .filter(|&&k| self.ets.same_local(k, bound, tag))
                    .map(|&k| Atom(format!("{OWN_ATOM_PREFIX}{k}")))
                    .collect();
                self.count(atoms.len())?;
                self.disjunction(atoms)?
            }
            Exists(x, body) => {
                let saved = self.gamma.get(x).copied();
                let mut parts = Vec::with_capacity(self.reachable.len());
                for k in self.reachable.iter().copied() {
                    self.gamma.insert(x.clone(), k);
                    parts.push(self.go(body)?);
                }
                match saved {
                    Some(v) => self.gamma.insert(x.clone(), v),
                    None => self.gamma.remove(x),
                };
                self.disjunction(parts)?
            }
            Atom(_) | True | False => {
                self.count(1)?;
                f.clone()
            }
            Not(a) => {
                self.count(1)?;
                Not(b(self.go(a)?))
            }
            And(l, r) => {
                self.count(1)?;
                And(b(self.go(l)?), b(self.go(r)?))
            }
            Or(l, r) => {
                self.count(1)?;
                Or(b(self.go(l)?), b(self.go(r)?))
            }
            Until(l, r) => {
                self.count(1)?;
                Until(b(self.go(l)?), b(self.go(r)?))
            }
            PathAll(a) => {
                self.count(1)?;
                PathAll(b(self.go(a)?))
            }
            Next(a) => {
                self.count(1)?;
                Next(b(self.go(a)?))
            }
            Dist(g, a) => {
                self.count(1)?;
                Dist(g.clone(), b(self.go(a)?))
            }
            Common(g, a) => {
                self.count(1)?;
                Common(g.clone(), b(self.go(a)?))
            }
            _ => return Err(CheckError::NotDesugared),
        })
    }
}

/// Tag set helper for callers that want the ETS view of `A`.
pub fn path_tags(env: &Environment) -> Vec<AgentTag> {
    let mut tags = vec![AgentTag::Env];
    tags.extend(env.agents().names().map(AgentTag::strategic));
    tags
}
