//! The labelling engine for CTL*K and full ESL.
//!
//! State subformulas are labelled over all admissible global states at once.
//! Path quantification is handled as knowledge: `A ψ` is `D[{e} ∪ σ(Ags)] ψ`,
//! whose groups are single global states, and a knowledge operator over a
//! path body asks for `ψ` on every path from every member of the group. Path
//! bodies go to the LTL checker with the maximal state subformulas as leaves.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use super::compile::{Compiled, Node, NodeId};
use super::ltl::{exists_path_from_each, Ltl, LtlNode};
use super::{Bindings, Stats};
use crate::space::{Partition, Space, Tag};

pub(crate) struct Labeller<'a, 'e> {
    space: &'a Space<'e>,
    c: &'a Compiled,
    labels: HashMap<(NodeId, u32), Arc<Vec<bool>>>,
    paths: HashMap<(NodeId, u32), Arc<Vec<bool>>>,
    bind: Bindings,
    partitions: HashMap<u32, Partition>,
    components: HashMap<u32, Partition>,
    /// Tags of the path quantifier viewed as a knowledge operator.
    path_tags: Vec<Tag>,
    pub stats: Stats,
}

impl<'a, 'e> Labeller<'a, 'e> {
    pub fn new(space: &'a Space<'e>, c: &'a Compiled, bind: Bindings) -> Self {
        let mut path_tags = vec![Tag::Env];
        path_tags.extend((0..space.env().num_agents() as u32).map(Tag::Strat));
        Labeller {
            space,
            c,
            labels: HashMap::new(),
            paths: HashMap::new(),
            bind,
            partitions: HashMap::new(),
            components: HashMap::new(),
            path_tags,
            stats: Stats::default(),
        }
    }

    pub fn bindings_mut(&mut self) -> &mut Bindings {
        &mut self.bind
    }

    /// Truth value of a state node at every global state.
    pub fn label(&mut self, n: NodeId) -> Arc<Vec<bool>> {
        debug_assert!(self.c.state[n as usize]);
        let ctx = self.bind.key(self.c, n);
        if let Some(v) = self.labels.get(&(n, ctx)) {
            self.stats.memo_hits += 1;
            return v.clone();
        }
        let len = self.space.len();
        let out: Vec<bool> = match self.c.nodes[n as usize] {
            Node::Atom(a) => self.c.atoms[a as usize].clone(),
            Node::True => vec![true; len],
            Node::False => vec![false; len],
            Node::Not(a) => self.label(a).iter().map(|v| !v).collect(),
            Node::And(a, b) => {
                let (x, y) = (self.label(a), self.label(b));
                x.iter().zip(y.iter()).map(|(p, q)| *p && *q).collect()
            }
            Node::Or(a, b) => {
                let (x, y) = (self.label(a), self.label(b));
                x.iter().zip(y.iter()).map(|(p, q)| *p || *q).collect()
            }
            Node::Loc(t, x) => {
                let h = self.bind.get(x);
                let v = self.space.tag_value(h, t);
                (0..len as u32).map(|g| self.space.tag_value(g, t) == v).collect()
            }
            Node::Exists(x, body) => {
                let saved = self.bind.get(x);
                let mut acc = vec![false; len];
                for h in 0..len as u32 {
                    self.bind.set(x, h);
                    let l = self.label(body);
                    for (a, b) in acc.iter_mut().zip(l.iter()) {
                        *a |= *b;
                    }
                    if acc.iter().all(|&v| v) {
                        break;
                    }
                }
                self.bind.set(x, saved);
                acc
            }
            Node::Dist(ts, body) => {
                if !self.partitions.contains_key(&ts) {
                    let p = self.space.partition(&self.c.tagsets[ts as usize]);
                    self.partitions.insert(ts, p);
                }
                let inner = self.body_values(body);
                group_all(&self.partitions[&ts], &inner)
            }
            Node::Common(ts, body) => {
                if !self.components.contains_key(&ts) {
                    let p = self.space.components(&self.c.tagsets[ts as usize]);
                    self.components.insert(ts, p);
                }
                let inner = self.body_values(body);
                group_all(&self.components[&ts], &inner)
            }
            Node::All(body) => {
                let tags = self.path_tags.clone();
                let p = self.space.partition(&tags);
                let inner = self.body_values(body);
                group_all(&p, &inner)
            }
            Node::Next(_) | Node::Until(..) => unreachable!("path node labelled as state node"),
        };
        let out = Arc::new(out);
        self.labels.insert((n, ctx), out.clone());
        out
    }

    /// Per global state: the body holds (state body) or holds on every
    /// path from there (path body).
    fn body_values(&mut self, body: NodeId) -> Arc<Vec<bool>> {
        if self.c.state[body as usize] {
            self.label(body)
        } else {
            self.forall_paths(body)
        }
    }

    fn forall_paths(&mut self, p: NodeId) -> Arc<Vec<bool>> {
        let ctx = self.bind.key(self.c, p);
        if let Some(v) = self.paths.get(&(p, ctx)) {
            self.stats.memo_hits += 1;
            return v.clone();
        }
        let mut ltl = Ltl::new();
        let mut leaves: Vec<Arc<Vec<bool>>> = Vec::new();
        let mut leaf_index: HashMap<(NodeId, u32), u32> = HashMap::new();
        let root = self.translate(p, &mut ltl, &mut leaves, &mut leaf_index);
        let neg = ltl.add(LtlNode::Not(root));
        let slices: Vec<&[bool]> = leaves.iter().map(|l| l.as_slice()).collect();
        let starts: Vec<u32> = (0..self.space.len() as u32).collect();
        let counterexample = exists_path_from_each(self.space, &starts, &ltl, neg, &slices);
        let out = Arc::new(counterexample.into_iter().map(|b| !b).collect::<Vec<bool>>());
        self.paths.insert((p, ctx), out.clone());
        out
    }

    fn translate(
        &mut self,
        n: NodeId,
        ltl: &mut Ltl,
        leaves: &mut Vec<Arc<Vec<bool>>>,
        leaf_index: &mut HashMap<(NodeId, u32), u32>,
    ) -> u32 {
        if self.c.state[n as usize] {
            let ctx = self.bind.key(self.c, n);
            let k = match leaf_index.get(&(n, ctx)) {
                Some(&k) => k,
                None => {
                    leaves.push(self.label(n));
                    let k = (leaves.len() - 1) as u32;
                    leaf_index.insert((n, ctx), k);
                    k
                }
            };
            return ltl.add(LtlNode::Leaf(k));
        }
        match self.c.nodes[n as usize] {
            Node::Not(a) => {
                let a = self.translate(a, ltl, leaves, leaf_index);
                ltl.add(LtlNode::Not(a))
            }
            Node::And(a, b) => {
                let a = self.translate(a, ltl, leaves, leaf_index);
                let b = self.translate(b, ltl, leaves, leaf_index);
                ltl.add(LtlNode::And(a, b))
            }
            Node::Or(a, b) => {
                let a = self.translate(a, ltl, leaves, leaf_index);
                let b = self.translate(b, ltl, leaves, leaf_index);
                ltl.add(LtlNode::Or(a, b))
            }
            Node::Next(a) => {
                let a = self.translate(a, ltl, leaves, leaf_index);
                ltl.add(LtlNode::Next(a))
            }
            Node::Until(a, b) => {
                let a = self.translate(a, ltl, leaves, leaf_index);
                let b = self.translate(b, ltl, leaves, leaf_index);
                ltl.add(LtlNode::Until(a, b))
            }
            // a quantifier over a path body: one disjunct per binding
            Node::Exists(x, body) => {
                let saved = self.bind.get(x);
                let mut acc = ltl.add(LtlNode::False);
                for h in 0..self.space.len() as u32 {
                    self.bind.set(x, h);
                    let d = self.translate(body, ltl, leaves, leaf_index);
                    acc = ltl.add(LtlNode::Or(acc, d));
                }
                self.bind.set(x, saved);
                acc
            }
            _ => unreachable!("state node handled above"),
        }
    }
}

fn group_all(p: &Partition, inner: &[bool]) -> Vec<bool> {
    let verdict: Vec<bool> = p
        .groups
        .iter()
        .map(|members| members.iter().all(|&h| inner[h as usize]))
        .collect();
    p.group_of.iter().map(|&k| verdict[k as usize]).collect()
}
