//! Path checking for LTL over a graph whose vertices carry leaf valuations.
//!
//! `exists_path` explores the product of the graph with a tableau for the
//! formula in negation normal form. A tableau state is the set of
//! obligations for the next position; expanding it at a vertex branches on
//! disjunctions and on whether each until is met now or postponed, and
//! drops branches the vertex valuation refutes. A path is accepted when it
//! cycles through a strongly connected component in which every until is
//! met at some state.

use alloc::vec;
use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};

/// Graph over `u32` vertices.
pub trait Graph {
    fn successors(&self, v: u32) -> &[u32];
}

impl Graph for crate::space::Space<'_> {
    fn successors(&self, v: u32) -> &[u32] {
        crate::space::Space::successors(self, v)
    }
}

/// Adjacency lists indexed by vertex.
impl Graph for Vec<Vec<u32>> {
    fn successors(&self, v: u32) -> &[u32] {
        &self[v as usize]
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum LtlNode {
    /// Index into the leaf valuation table.
    Leaf(u32),
    True,
    False,
    Not(u32),
    And(u32, u32),
    Or(u32, u32),
    Next(u32),
    Until(u32, u32),
}

/// A path formula as a DAG; children precede parents.
#[derive(Clone, Debug, Default)]
pub struct Ltl {
    nodes: Vec<LtlNode>,
    index: HashMap<LtlNode, u32>,
}

impl Ltl {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, node: LtlNode) -> u32 {
        if let Some(&k) = self.index.get(&node) {
            return k;
        }
        let k = self.nodes.len() as u32;
        self.nodes.push(node);
        self.index.insert(node, k);
        k
    }

    pub fn nodes(&self) -> &[LtlNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Accepting run witness: `prefix` leads from the start vertex to the first
/// vertex of `cycle`, and `cycle` repeats forever.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lasso {
    pub prefix: Vec<u32>,
    pub cycle: Vec<u32>,
}

/// Negation normal form of the path formula, with `R` as the dual of `U`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Nnf {
    True,
    False,
    Lit(u32, bool),
    And(u32, u32),
    Or(u32, u32),
    Next(u32),
    Until(u32, u32),
    Release(u32, u32),
}

#[derive(Default)]
struct NnfDag {
    nodes: Vec<Nnf>,
    index: HashMap<Nnf, u32>,
    memo: HashMap<(u32, bool), u32>,
    /// Until nodes, one acceptance condition each.
    untils: Vec<u32>,
}

impl NnfDag {
    fn add(&mut self, node: Nnf) -> u32 {
        if let Some(&k) = self.index.get(&node) {
            return k;
        }
        let k = self.nodes.len() as u32;
        self.nodes.push(node);
        self.index.insert(node, k);
        if matches!(node, Nnf::Until(..)) {
            self.untils.push(k);
        }
        k
    }

    fn convert(&mut self, f: &Ltl, k: u32, positive: bool) -> u32 {
        if let Some(&n) = self.memo.get(&(k, positive)) {
            return n;
        }
        let node = match (f.nodes[k as usize], positive) {
            (LtlNode::Leaf(l), pol) => Nnf::Lit(l, pol),
            (LtlNode::True, true) | (LtlNode::False, false) => Nnf::True,
            (LtlNode::True, false) | (LtlNode::False, true) => Nnf::False,
            (LtlNode::Not(a), pol) => {
                let n = self.convert(f, a, !pol);
                self.memo.insert((k, positive), n);
                return n;
            }
            (LtlNode::And(a, b), true) => Nnf::And(self.convert(f, a, true), self.convert(f, b, true)),
            (LtlNode::And(a, b), false) => Nnf::Or(self.convert(f, a, false), self.convert(f, b, false)),
            (LtlNode::Or(a, b), true) => Nnf::Or(self.convert(f, a, true), self.convert(f, b, true)),
            (LtlNode::Or(a, b), false) => Nnf::And(self.convert(f, a, false), self.convert(f, b, false)),
            (LtlNode::Next(a), pol) => Nnf::Next(self.convert(f, a, pol)),
            (LtlNode::Until(a, b), true) => Nnf::Until(self.convert(f, a, true), self.convert(f, b, true)),
            (LtlNode::Until(a, b), false) => Nnf::Release(self.convert(f, a, false), self.convert(f, b, false)),
        };
        let n = self.add(node);
        self.memo.insert((k, positive), n);
        n
    }
}

/// A product state: the graph vertex, the obligations carried to the next
/// position, and the untils postponed at this position.
#[derive(Clone, PartialEq, Eq, Hash)]
struct PState {
    v: u32,
    next: Vec<u32>,
    pending: Vec<u32>,
}

/// On-the-fly product of the graph with a tableau whose states are sets of
/// obligations. Expansion reads the vertex valuation, so branches that
/// contradict it are never built.
struct Product<'a, G: Graph> {
    graph: &'a G,
    dag: NnfDag,
    leaves: &'a [&'a [bool]],
    states: Vec<PState>,
    ids: HashMap<PState, u32>,
    succ: Vec<Vec<u32>>,
    expansions: HashMap<(u32, Vec<u32>), Vec<(Vec<u32>, Vec<u32>)>>,
}

#[derive(Clone, Default)]
struct Branch {
    todo: Vec<u32>,
    done: HashSet<u32>,
    next: Vec<u32>,
    pending: Vec<u32>,
}

impl<'a, G: Graph> Product<'a, G> {
    fn new(graph: &'a G, f: &Ltl, root: u32, leaves: &'a [&'a [bool]]) -> (Self, u32) {
        let mut dag = NnfDag::default();
        let r = dag.convert(f, root, true);
        let p = Product {
            graph,
            dag,
            leaves,
            states: Vec::new(),
            ids: HashMap::new(),
            succ: Vec::new(),
            expansions: HashMap::new(),
        };
        (p, r)
    }

    /// The ways to meet `obligations` at `v`: `(next, pending)` pairs.
    fn expand(&mut self, v: u32, obligations: &[u32]) -> Vec<(Vec<u32>, Vec<u32>)> {
        let key = (v, obligations.to_vec());
        if let Some(e) = self.expansions.get(&key) {
            return e.clone();
        }
        let mut out: HashSet<(Vec<u32>, Vec<u32>)> = HashSet::new();
        let mut work = vec![Branch {
            todo: obligations.to_vec(),
            ..Branch::default()
        }];
        'branches: while let Some(mut b) = work.pop() {
            while let Some(k) = b.todo.pop() {
                if !b.done.insert(k) {
                    continue;
                }
                match self.dag.nodes[k as usize] {
                    Nnf::True => {}
                    Nnf::False => continue 'branches,
                    Nnf::Lit(l, pol) => {
                        if self.leaves[l as usize][v as usize] != pol {
                            continue 'branches;
                        }
                    }
                    Nnf::And(x, y) => b.todo.extend([x, y]),
                    Nnf::Or(x, y) => {
                        let mut other = b.clone();
                        other.todo.push(y);
                        work.push(other);
                        b.todo.push(x);
                    }
                    Nnf::Next(x) => b.next.push(x),
                    Nnf::Until(x, y) => {
                        let mut later = b.clone();
                        later.todo.push(x);
                        later.next.push(k);
                        later.pending.push(k);
                        work.push(later);
                        b.todo.push(y);
                    }
                    Nnf::Release(x, y) => {
                        let mut later = b.clone();
                        later.todo.push(y);
                        later.next.push(k);
                        work.push(later);
                        b.todo.extend([x, y]);
                    }
                }
            }
            b.next.sort_unstable();
            b.next.dedup();
            b.pending.sort_unstable();
            b.pending.dedup();
            out.insert((b.next, b.pending));
        }
        let mut out: Vec<_> = out.into_iter().collect();
        out.sort();
        self.expansions.insert(key, out.clone());
        out
    }

    fn intern(&mut self, s: PState) -> (u32, bool) {
        if let Some(&id) = self.ids.get(&s) {
            return (id, false);
        }
        let id = self.states.len() as u32;
        self.ids.insert(s.clone(), id);
        self.states.push(s);
        self.succ.push(Vec::new());
        (id, true)
    }

    fn initial(&mut self, start: u32, root: u32) -> Vec<u32> {
        let mut out = Vec::new();
        for (next, pending) in self.expand(start, &[root]) {
            out.push(self.intern(PState { v: start, next, pending }).0);
        }
        out
    }

    /// Builds every product state reachable from `roots`.
    fn explore(&mut self, roots: &[u32]) {
        let mut stack: Vec<u32> = roots.to_vec();
        let mut expanded: HashSet<u32> = HashSet::new();
        while let Some(s) = stack.pop() {
            if !expanded.insert(s) {
                continue;
            }
            let PState { v, next, .. } = self.states[s as usize].clone();
            let mut list = Vec::new();
            for &w in self.graph.successors(v) {
                for (n2, p2) in self.expand(w, &next) {
                    let (id, _) = self.intern(PState {
                        v: w,
                        next: n2,
                        pending: p2,
                    });
                    list.push(id);
                    stack.push(id);
                }
            }
            list.sort_unstable();
            list.dedup();
            self.succ[s as usize] = list;
        }
    }

    /// Strongly connected components (iterative Tarjan), as a component
    /// index per state.
    fn components(&self) -> (Vec<u32>, u32) {
        let n = self.states.len();
        const NONE: u32 = u32::MAX;
        let mut index = vec![NONE; n];
        let mut low = vec![0u32; n];
        let mut on_stack = vec![false; n];
        let mut comp = vec![NONE; n];
        let mut stack: Vec<u32> = Vec::new();
        let mut counter = 0u32;
        let mut n_comp = 0u32;
        for root in 0..n as u32 {
            if index[root as usize] != NONE {
                continue;
            }
            let mut call: Vec<(u32, usize)> = vec![(root, 0)];
            index[root as usize] = counter;
            low[root as usize] = counter;
            counter += 1;
            stack.push(root);
            on_stack[root as usize] = true;
            while let Some(&mut (v, ref mut i)) = call.last_mut() {
                if let Some(&w) = self.succ[v as usize].get(*i) {
                    *i += 1;
                    if index[w as usize] == NONE {
                        index[w as usize] = counter;
                        low[w as usize] = counter;
                        counter += 1;
                        stack.push(w);
                        on_stack[w as usize] = true;
                        call.push((w, 0));
                    } else if on_stack[w as usize] {
                        low[v as usize] = low[v as usize].min(index[w as usize]);
                    }
                    continue;
                }
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent as usize] = low[parent as usize].min(low[v as usize]);
                }
                if low[v as usize] == index[v as usize] {
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w as usize] = false;
                        comp[w as usize] = n_comp;
                        if w == v {
                            break;
                        }
                    }
                    n_comp += 1;
                }
            }
        }
        (comp, n_comp)
    }

    /// Per product state: an accepting cycle is reachable. Also returns the
    /// components that contain one.
    fn accepting(&self) -> (Vec<bool>, Vec<u32>, Vec<bool>) {
        let (comp, n_comp) = self.components();
        let m = self.dag.untils.len();
        let mut nontrivial = vec![false; n_comp as usize];
        let mut seen: Vec<Vec<bool>> = vec![vec![false; m]; n_comp as usize];
        for (s, list) in self.succ.iter().enumerate() {
            let c = comp[s] as usize;
            if list.iter().any(|&w| comp[w as usize] as usize == c) {
                nontrivial[c] = true;
            }
            for (j, &u) in self.dag.untils.iter().enumerate() {
                if !self.states[s].pending.contains(&u) {
                    seen[c][j] = true;
                }
            }
        }
        let good: Vec<bool> = (0..n_comp as usize).map(|c| nontrivial[c] && seen[c].iter().all(|&b| b)).collect();
        // backward closure over reversed edges
        let n = self.states.len();
        let mut pred: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (s, list) in self.succ.iter().enumerate() {
            for &w in list {
                pred[w as usize].push(s as u32);
            }
        }
        let mut ok = vec![false; n];
        let mut stack: Vec<u32> = (0..n as u32).filter(|&s| good[comp[s as usize] as usize]).collect();
        for &s in &stack {
            ok[s as usize] = true;
        }
        while let Some(s) = stack.pop() {
            for &p in &pred[s as usize] {
                if !ok[p as usize] {
                    ok[p as usize] = true;
                    stack.push(p);
                }
            }
        }
        (ok, comp, good)
    }

    /// Shortest path from `from` to a state satisfying `target`, moving only
    /// through states allowed by `within`; the path includes both ends.
    fn path(&self, from: u32, target: impl Fn(u32) -> bool, within: impl Fn(u32) -> bool) -> Option<Vec<u32>> {
        let mut parent: HashMap<u32, u32> = HashMap::new();
        let mut queue = alloc::collections::VecDeque::from([from]);
        parent.insert(from, from);
        while let Some(s) = queue.pop_front() {
            if target(s) {
                let mut out = vec![s];
                let mut cur = s;
                while cur != from {
                    cur = parent[&cur];
                    out.push(cur);
                }
                out.reverse();
                return Some(out);
            }
            for &w in &self.succ[s as usize] {
                if within(w) && !parent.contains_key(&w) {
                    parent.insert(w, s);
                    queue.push_back(w);
                }
            }
        }
        None
    }

    /// A lasso through an accepting component reachable from `init`.
    fn lasso(&self, init: u32, comp: &[u32], good: &[bool]) -> Option<Lasso> {
        let stem = self.path(init, |s| good[comp[s as usize] as usize], |_| true)?;
        let entry = *stem.last().expect("nonempty path");
        let c = comp[entry as usize];
        let inside = |s: u32| comp[s as usize] == c;
        // visit a non-pending state for every until, then return to entry
        let mut cycle = vec![entry];
        let mut cur = entry;
        for &u in &self.dag.untils {
            let hop = self.path(cur, |s| !self.states[s as usize].pending.contains(&u), inside)?;
            cycle.extend_from_slice(&hop[1..]);
            cur = *cycle.last().expect("nonempty cycle");
        }
        // close the loop with at least one edge
        let back = self
            .succ[cur as usize]
            .iter()
            .filter(|&&w| inside(w))
            .find_map(|&w| {
                self.path(w, |s| s == entry, inside).map(|mut p| {
                    p.insert(0, cur);
                    p
                })
            })?;
        cycle.extend_from_slice(&back[1..]);
        cycle.pop();
        let vertex = |s: &u32| self.states[*s as usize].v;
        Some(Lasso {
            prefix: stem[..stem.len() - 1].iter().map(vertex).collect(),
            cycle: cycle.iter().map(vertex).collect(),
        })
    }
}

/// Searches for an infinite path from `start` satisfying the formula rooted
/// at `root`; returns a lasso when one exists.
pub fn exists_path<G: Graph>(
    graph: &G,
    start: u32,
    f: &Ltl,
    root: u32,
    leaves: &[&[bool]],
) -> Option<Lasso> {
    let (mut p, r) = Product::new(graph, f, root, leaves);
    let inits = p.initial(start, r);
    p.explore(&inits);
    let (ok, comp, good) = p.accepting();
    let init = inits.into_iter().find(|&s| ok[s as usize])?;
    Some(p.lasso(init, &comp, &good).expect("accepting component is reachable"))
}

/// For every vertex in `starts`: some infinite path from it satisfies the
/// formula. One product serves all starts.
pub fn exists_path_from_each<G: Graph>(graph: &G, starts: &[u32], f: &Ltl, root: u32, leaves: &[&[bool]]) -> Vec<bool> {
    let (mut p, r) = Product::new(graph, f, root, leaves);
    let inits: Vec<Vec<u32>> = starts.iter().map(|&v| p.initial(v, r)).collect();
    let all: Vec<u32> = inits.iter().flatten().copied().collect();
    p.explore(&all);
    let (ok, _, _) = p.accepting();
    inits.iter().map(|list| list.iter().any(|&s| ok[s as usize])).collect()
}

/// Every infinite path from `start` satisfies the formula at `root`.
pub fn forall_paths<G: Graph>(graph: &G, start: u32, f: &mut Ltl, root: u32, leaves: &[&[bool]]) -> bool {
    let neg = f.add(LtlNode::Not(root));
    exists_path(graph, start, f, neg, leaves).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(edges: &[&[u32]]) -> Vec<Vec<u32>> {
        edges.iter().map(|e| e.to_vec()).collect()
    }

    #[test]
    fn absorbing_p_state_satisfies_g_p() {
        let g = graph(&[&[0]]);
        let p = [true];
        let mut f = Ltl::new();
        let leaf = f.add(LtlNode::Leaf(0));
        let t = f.add(LtlNode::True);
        let np = f.add(LtlNode::Not(leaf));
        let fnp = f.add(LtlNode::Until(t, np));
        let gp = f.add(LtlNode::Not(fnp));
        assert!(forall_paths(&g, 0, &mut f, gp, &[&p]));
    }

    #[test]
    fn exit_to_not_p_refutes_g_p() {
        let g = graph(&[&[0, 1], &[1]]);
        let p = [true, false];
        let mut f = Ltl::new();
        let leaf = f.add(LtlNode::Leaf(0));
        let t = f.add(LtlNode::True);
        let np = f.add(LtlNode::Not(leaf));
        let fnp = f.add(LtlNode::Until(t, np));
        let gp = f.add(LtlNode::Not(fnp));
        assert!(!forall_paths(&g, 0, &mut f, gp, &[&p]));
        let lasso = exists_path(&g, 0, &f, fnp, &[&p]).unwrap();
        assert_eq!(lasso.cycle, vec![1]);
    }

    #[test]
    fn cycle_avoiding_p_refutes_eventually_p() {
        let g = graph(&[&[1], &[0]]);
        let p = [false, false];
        let mut f = Ltl::new();
        let leaf = f.add(LtlNode::Leaf(0));
        let t = f.add(LtlNode::True);
        let ev = f.add(LtlNode::Until(t, leaf));
        assert!(!forall_paths(&g, 0, &mut f, ev, &[&p]));
        let lasso = exists_path(&g, 0, &f, f.len() as u32 - 1, &[&p]).unwrap();
        assert_eq!(lasso.cycle.len(), 2);
    }

    #[test]
    fn next_looks_one_step_ahead() {
        let g = graph(&[&[1], &[1]]);
        let p = [false, true];
        let mut f = Ltl::new();
        let leaf = f.add(LtlNode::Leaf(0));
        let x = f.add(LtlNode::Next(leaf));
        assert!(forall_paths(&g, 0, &mut f, x, &[&p]));
        let mut f2 = Ltl::new();
        let leaf = f2.add(LtlNode::Leaf(0));
        assert!(!forall_paths(&g, 0, &mut f2, leaf, &[&p]));
    }
}
