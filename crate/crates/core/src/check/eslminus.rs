//! The ESL⁻ engine: recursive evaluation per global state with
//! memoization, least fixpoints for the `U` patterns and group-wise
//! evaluation of the knowledge operators.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use super::compile::{Compiled, Node, NodeId};
use super::{Bindings, Stats};
use crate::space::{Partition, Space};

pub(crate) struct EslMinus<'a, 'e> {
    space: &'a Space<'e>,
    c: &'a Compiled,
    memo: HashMap<(NodeId, u32, u32), bool>,
    bind: Bindings,
    partitions: HashMap<u32, Partition>,
    components: HashMap<u32, Partition>,
    pub stats: Stats,
}

enum PathShape {
    Next { arg: NodeId, negated: bool },
    Until { lhs: NodeId, rhs: NodeId, negated: bool },
    State(NodeId),
}

impl<'a, 'e> EslMinus<'a, 'e> {
    pub fn new(space: &'a Space<'e>, c: &'a Compiled, bind: Bindings) -> Self {
        EslMinus {
            space,
            c,
            memo: HashMap::new(),
            bind,
            partitions: HashMap::new(),
            components: HashMap::new(),
            stats: Stats::default(),
        }
    }

    pub fn bindings_mut(&mut self) -> &mut Bindings {
        &mut self.bind
    }

    fn shape(&self, body: NodeId) -> PathShape {
        let mut n = body;
        let mut negated = false;
        while let Node::Not(inner) = self.c.nodes[n as usize] {
            n = inner;
            negated = !negated;
        }
        match self.c.nodes[n as usize] {
            Node::Next(arg) => PathShape::Next { arg, negated },
            Node::Until(lhs, rhs) => PathShape::Until { lhs, rhs, negated },
            _ => PathShape::State(body),
        }
    }

    pub fn eval(&mut self, n: NodeId, g: u32) -> bool {
        match self.c.nodes[n as usize] {
            Node::Atom(a) => return self.c.atoms[a as usize][g as usize],
            Node::True => return true,
            Node::False => return false,
            Node::Not(a) => return !self.eval(a, g),
            Node::And(a, b) => return self.eval(a, g) && self.eval(b, g),
            Node::Or(a, b) => return self.eval(a, g) || self.eval(b, g),
            Node::Loc(t, x) => {
                let h = self.bind.get(x);
                return self.space.tag_value(g, t) == self.space.tag_value(h, t);
            }
            _ => {}
        }
        let ctx = self.bind.key(self.c, n);
        if let Some(&v) = self.memo.get(&(n, ctx, g)) {
            self.stats.memo_hits += 1;
            return v;
        }
        let value = match self.c.nodes[n as usize] {
            Node::Exists(x, body) => {
                let saved = self.bind.get(x);
                let mut found = false;
                for h in 0..self.space.len() as u32 {
                    self.bind.set(x, h);
                    if self.eval(body, g) {
                        found = true;
                        break;
                    }
                }
                self.bind.set(x, saved);
                found
            }
            Node::Dist(ts, body) => {
                if !self.partitions.contains_key(&ts) {
                    let p = self.space.partition(&self.c.tagsets[ts as usize]);
                    self.partitions.insert(ts, p);
                }
                let group = self.partitions[&ts].members_with(g).to_vec();
                self.for_group(n, ctx, body, &group)
            }
            Node::Common(ts, body) => {
                if !self.components.contains_key(&ts) {
                    let p = self.space.components(&self.c.tagsets[ts as usize]);
                    self.components.insert(ts, p);
                }
                let group = self.components[&ts].members_with(g).to_vec();
                self.for_group(n, ctx, body, &group)
            }
            Node::All(body) => match self.shape(body) {
                PathShape::State(s) => self.eval(s, g),
                PathShape::Next { arg, negated } => {
                    let succ = self.space.successors(g).to_vec();
                    succ.into_iter().all(|h| self.eval(arg, h) != negated)
                }
                PathShape::Until { lhs, rhs, negated } => {
                    self.until(n, ctx, g, lhs, rhs, negated);
                    self.memo[&(n, ctx, g)]
                }
            },
            Node::Next(_) | Node::Until(..) => {
                unreachable!("temporal operator outside a path quantifier")
            }
            _ => unreachable!(),
        };
        self.memo.insert((n, ctx, g), value);
        value
    }

    /// Evaluates `body` over a whole group and stores the shared verdict
    /// for every member.
    fn for_group(&mut self, n: NodeId, ctx: u32, body: NodeId, group: &[u32]) -> bool {
        let mut value = true;
        for &h in group {
            if !self.eval(body, h) {
                value = false;
                break;
            }
        }
        for &h in group {
            self.memo.insert((n, ctx, h), value);
        }
        value
    }

    /// `A(lhs U rhs)`, or `¬E(lhs U rhs)` when `negated`, on every state
    /// reachable from `g` (all share the strategy profile of `g`).
    fn until(&mut self, n: NodeId, ctx: u32, g: u32, lhs: NodeId, rhs: NodeId, negated: bool) {
        let mut closure = vec![g];
        let mut index: HashMap<u32, usize> = HashMap::new();
        index.insert(g, 0);
        let mut queue = VecDeque::from([g]);
        while let Some(u) = queue.pop_front() {
            for &v in self.space.successors(u) {
                if !index.contains_key(&v) {
                    index.insert(v, closure.len());
                    closure.push(v);
                    queue.push_back(v);
                }
            }
        }
        let a: Vec<bool> = closure.iter().map(|&u| self.eval(lhs, u)).collect();
        let b: Vec<bool> = closure.iter().map(|&u| self.eval(rhs, u)).collect();
        let succ: Vec<Vec<usize>> = closure
            .iter()
            .map(|&u| self.space.successors(u).iter().map(|v| index[v]).collect())
            .collect();
        // least fixpoint: A-until when not negated, E-until otherwise
        let mut sat = b.clone();
        loop {
            let mut changed = false;
            for k in 0..closure.len() {
                if sat[k] || !a[k] {
                    continue;
                }
                let step = if negated {
                    succ[k].iter().any(|&j| sat[j])
                } else {
                    succ[k].iter().all(|&j| sat[j])
                };
                if step {
                    sat[k] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for (k, &u) in closure.iter().enumerate() {
            self.memo.insert((n, ctx, u), sat[k] != negated);
        }
    }
}
