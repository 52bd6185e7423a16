//! Hash-consed formula arena shared by the engines.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use super::CheckError;
use crate::formula::Formula;
use crate::space::{Space, Tag};

pub(crate) type NodeId = u32;
pub(crate) type VarId = u32;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub(crate) enum Node {
    Atom(u32),
    True,
    False,
    Not(NodeId),
    And(NodeId, NodeId),
    Or(NodeId, NodeId),
    All(NodeId),
    Next(NodeId),
    Until(NodeId, NodeId),
    Exists(VarId, NodeId),
    Loc(Tag, VarId),
    Dist(u32, NodeId),
    Common(u32, NodeId),
}

/// A desugared formula compiled against one space.
pub(crate) struct Compiled {
    pub nodes: Vec<Node>,
    /// Sorted free variables per node.
    pub free: Vec<Vec<VarId>>,
    /// Node depends only on the current global state.
    pub state: Vec<bool>,
    pub tagsets: Vec<Vec<Tag>>,
    /// Valuation of each atom over the global states of the space.
    pub atoms: Vec<Vec<bool>>,
    pub vars: Vec<String>,
    pub root: NodeId,
}

struct Builder<'s, 'e> {
    space: &'s Space<'e>,
    nodes: Vec<Node>,
    index: HashMap<Node, NodeId>,
    free: Vec<Vec<VarId>>,
    state: Vec<bool>,
    tagsets: Vec<Vec<Tag>>,
    tagset_index: HashMap<Vec<Tag>, u32>,
    atoms: Vec<Vec<bool>>,
    atom_index: HashMap<String, u32>,
    vars: Vec<String>,
}

impl Compiled {
    /// Compiles a desugared formula. `Common` over the empty group is the
    /// identity relation and compiles to its body.
    pub fn new(space: &Space<'_>, f: &Formula) -> Result<Self, CheckError> {
        let mut b = Builder {
            space,
            nodes: Vec::new(),
            index: HashMap::new(),
            free: Vec::new(),
            state: Vec::new(),
            tagsets: Vec::new(),
            tagset_index: HashMap::new(),
            atoms: Vec::new(),
            atom_index: HashMap::new(),
            vars: Vec::new(),
        };
        let root = b.go(f)?;
        Ok(Compiled {
            nodes: b.nodes,
            free: b.free,
            state: b.state,
            tagsets: b.tagsets,
            atoms: b.atoms,
            vars: b.vars,
            root,
        })
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v == name).map(|k| k as VarId)
    }
}

impl Builder<'_, '_> {
    fn var(&mut self, name: &str) -> VarId {
        match self.vars.iter().position(|v| v == name) {
            Some(k) => k as VarId,
            None => {
                self.vars.push(name.to_string());
                (self.vars.len() - 1) as VarId
            }
        }
    }

    fn tagset(&mut self, tags: &crate::formula::TagSet) -> Result<u32, CheckError> {
        let mut resolved = tags
            .iter()
            .map(|t| Tag::resolve(self.space.env(), t))
            .collect::<Result<Vec<_>, _>>()?;
        resolved.sort_unstable();
        resolved.dedup();
        let next = self.tagsets.len() as u32;
        let id = *self.tagset_index.entry(resolved.clone()).or_insert(next);
        if id == next {
            self.tagsets.push(resolved);
        }
        Ok(id)
    }

    fn atom(&mut self, name: &str) -> Result<u32, CheckError> {
        if let Some(&k) = self.atom_index.get(name) {
            return Ok(k);
        }
        let vals = self
            .space
            .atom_valuation(name)
            .ok_or_else(|| CheckError::UnknownAtom(name.to_string()))?;
        self.atoms.push(vals);
        let k = (self.atoms.len() - 1) as u32;
        self.atom_index.insert(name.to_string(), k);
        Ok(k)
    }

    fn intern(&mut self, node: Node) -> NodeId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let child_free = |b: &Self, n: NodeId| b.free[n as usize].clone();
        let (free, state) = match node {
            Node::Atom(_) | Node::True | Node::False => (Vec::new(), true),
            Node::Loc(_, x) => (vec![x], true),
            Node::Not(a) => (child_free(self, a), self.state[a as usize]),
            Node::And(a, b) | Node::Or(a, b) => {
                let mut f = child_free(self, a);
                f.extend(child_free(self, b));
                f.sort_unstable();
                f.dedup();
                (f, self.state[a as usize] && self.state[b as usize])
            }
            Node::Until(a, b) => {
                let mut f = child_free(self, a);
                f.extend(child_free(self, b));
                f.sort_unstable();
                f.dedup();
                (f, false)
            }
            Node::Next(a) => (child_free(self, a), false),
            Node::All(a) | Node::Dist(_, a) | Node::Common(_, a) => (child_free(self, a), true),
            Node::Exists(x, a) => {
                let mut f = child_free(self, a);
                f.retain(|&v| v != x);
                (f, self.state[a as usize])
            }
        };
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node);
        self.free.push(free);
        self.state.push(state);
        self.index.insert(node, id);
        id
    }

    fn go(&mut self, f: &Formula) -> Result<NodeId, CheckError> {
        use Formula::*;
        let node = match f {
            Atom(p) => Node::Atom(self.atom(p)?),
            True => Node::True,
            False => Node::False,
            Not(a) => Node::Not(self.go(a)?),
            And(a, b) => {
                let a = self.go(a)?;
                Node::And(a, self.go(b)?)
            }
            Or(a, b) => {
                let a = self.go(a)?;
                Node::Or(a, self.go(b)?)
            }
            PathAll(a) => Node::All(self.go(a)?),
            Next(a) => Node::Next(self.go(a)?),
            Until(a, b) => {
                let a = self.go(a)?;
                Node::Until(a, self.go(b)?)
            }
            Exists(x, a) => {
                let v = self.var(x);
                Node::Exists(v, self.go(a)?)
            }
            Loc(t, x) => {
                let t = Tag::resolve(self.space.env(), t)?;
                Node::Loc(t, self.var(x))
            }
            Dist(g, a) => {
                let g = self.tagset(g)?;
                Node::Dist(g, self.go(a)?)
            }
            Common(g, a) if g.is_empty() => return self.go(a),
            Common(g, a) => {
                let g = self.tagset(g)?;
                Node::Common(g, self.go(a)?)
            }
            _ => return Err(CheckError::NotDesugared),
        };
        Ok(self.intern(node))
    }
}
