//! Quantified boolean formulas, their reduction to checking a CTLK formula
//! with strategic agents over uniform deterministic strategies, and a
//! brute-force evaluator.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::env::Environment;
use crate::formula::build::*;
use crate::formula::{render_formula, Formula};
use crate::space::AgentTag;
use crate::strategy::StrategyClass;

/// Largest variable count the brute-force evaluator accepts.
pub const ORACLE_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quant {
    Exists,
    Forall,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QbfError {
    #[error("variable `{0}` is quantified twice")]
    DuplicateVar(String),
    #[error("matrix mentions unquantified variable `{0}`")]
    FreeVar(String),
    #[error("matrix must be propositional (atoms, true, false, !, &, |, ->, <->)")]
    NotPropositional,
    #[error("prefix must alternate exists/forall starting with exists and have even length")]
    NotAlternating,
    #[error("{0} variables exceed the evaluator limit of {ORACLE_LIMIT}")]
    TooLarge(usize),
}

/// `Q_1 x_1 … Q_n x_n . γ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QbfInstance {
    pub prefix: Vec<(Quant, String)>,
    pub matrix: Formula,
}

fn propositional(f: &Formula) -> bool {
    use Formula::*;
    match f {
        Atom(_) | True | False => true,
        Not(a) => propositional(a),
        And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b) => propositional(a) && propositional(b),
        _ => false,
    }
}

impl QbfInstance {
    pub fn new(prefix: Vec<(Quant, String)>, matrix: Formula) -> Result<Self, QbfError> {
        let mut seen = BTreeSet::new();
        for (_, x) in &prefix {
            if !seen.insert(x.as_str()) {
                return Err(QbfError::DuplicateVar(x.clone()));
            }
        }
        if !propositional(&matrix) {
            return Err(QbfError::NotPropositional);
        }
        for a in matrix.atoms() {
            if !seen.contains(a.as_str()) {
                return Err(QbfError::FreeVar(a));
            }
        }
        Ok(QbfInstance { prefix, matrix })
    }

    pub fn num_vars(&self) -> usize {
        self.prefix.len()
    }

    /// Strictly alternating, `∃` first, even length.
    pub fn is_normalized(&self) -> bool {
        self.prefix.len().is_multiple_of(2)
            && self
                .prefix
                .iter()
                .enumerate()
                .all(|(k, (q, _))| *q == if k % 2 == 0 { Quant::Exists } else { Quant::Forall })
    }

    /// Inserts fresh variables absent from the matrix wherever the prefix
    /// fails to alternate `∃ ∀ ∃ ∀ …`, and pads to even length. Truth is
    /// unchanged because the fresh variables never occur.
    pub fn normalize(&self) -> QbfInstance {
        let used: BTreeSet<&str> = self.prefix.iter().map(|(_, x)| x.as_str()).collect();
        let mut fresh = (0..).map(|k| format!("pad{k}")).filter(|x| !used.contains(x.as_str()));
        let mut prefix = Vec::new();
        let expect = |len: usize| if len.is_multiple_of(2) { Quant::Exists } else { Quant::Forall };
        for (q, x) in &self.prefix {
            if *q != expect(prefix.len()) {
                prefix.push((expect(prefix.len()), fresh.next().unwrap()));
            }
            prefix.push((*q, x.clone()));
        }
        while prefix.is_empty() || prefix.len() % 2 == 1 {
            prefix.push((expect(prefix.len()), fresh.next().unwrap()));
        }
        QbfInstance {
            prefix,
            matrix: self.matrix.clone(),
        }
    }
}

impl fmt::Display for QbfInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (q, x) in &self.prefix {
            let word = match q {
                Quant::Exists => "exists",
                Quant::Forall => "forall",
            };
            write!(f, "{word} {x} ")?;
        }
        write!(f, ". {}", render_formula(&self.matrix))
    }
}

fn eval_matrix(f: &Formula, value: &BTreeMap<&str, bool>) -> bool {
    use Formula::*;
    match f {
        Atom(x) => value[x.as_str()],
        True => true,
        False => false,
        Not(a) => !eval_matrix(a, value),
        And(a, b) => eval_matrix(a, value) && eval_matrix(b, value),
        Or(a, b) => eval_matrix(a, value) || eval_matrix(b, value),
        Implies(a, b) => !eval_matrix(a, value) || eval_matrix(b, value),
        Iff(a, b) => eval_matrix(a, value) == eval_matrix(b, value),
        _ => unreachable!("matrix checked propositional"),
    }
}

/// Truth of the instance by recursion over the prefix.
pub fn eval_qbf_oracle(q: &QbfInstance) -> Result<bool, QbfError> {
    if q.num_vars() > ORACLE_LIMIT {
        return Err(QbfError::TooLarge(q.num_vars()));
    }
    fn go<'a>(prefix: &'a [(Quant, String)], matrix: &Formula, value: &mut BTreeMap<&'a str, bool>) -> bool {
        let Some(((quant, x), rest)) = prefix.split_first() else {
            return eval_matrix(matrix, value);
        };
        let mut branch = |b: bool| {
            value.insert(x.as_str(), b);
            go(rest, matrix, value)
        };
        match quant {
            Quant::Exists => branch(false) || branch(true),
            Quant::Forall => branch(false) && branch(true),
        }
    }
    Ok(go(&q.prefix, &q.matrix, &mut BTreeMap::new()))
}

fn sig(i: u32) -> AgentTag {
    AgentTag::strategic(&format!("{i}"))
}

fn time(t: usize) -> Formula {
    atom(&format!("p{t}"))
}

/// `val_i(x_j) = K[σ(i)](p_{j-1} → EX q_i)`.
pub fn val(i: u32, j: usize) -> Formula {
    know(sig(i), implies(time(j - 1), ex(atom(&format!("q{i}")))))
}

/// `agree(m) = ⋀_{j≤m} D[σ(1),σ(2)](p_{j-1} → (EX q1 ↔ EX q2))`.
pub fn agree(m: usize) -> Formula {
    conj((1..=m).map(|j| {
        dist(
            [sig(1), sig(2)],
            implies(time(j - 1), iff(ex(atom("q1")), ex(atom("q2")))),
        )
    }))
}

fn substitute(f: &Formula, index: &BTreeMap<&str, usize>) -> Formula {
    use Formula::*;
    let r = |x: &Formula| Box::new(substitute(x, index));
    match f {
        Atom(x) => val(2, index[x.as_str()]),
        True | False => f.clone(),
        Not(a) => Not(r(a)),
        And(a, b) => And(r(a), r(b)),
        Or(a, b) => Or(r(a), r(b)),
        Implies(a, b) => Implies(r(a), r(b)),
        Iff(a, b) => Iff(r(a), r(b)),
        _ => unreachable!("matrix checked propositional"),
    }
}

/// The environment: `s0` then `n` time steps, where `s{t}_{j}{k}` records
/// that agents 1 and 2 played `j` and `k` at time `t-1`. Both agents
/// observe only the time.
pub fn qbf_env(n: usize) -> Environment {
    let mut b = Environment::builder();
    for i in ["1", "2"] {
        b.agent(i).expect("fresh agent");
        b.action(i, "0").expect("fresh action");
        b.action(i, "1").expect("fresh action");
    }
    let name = |t: usize, j: u8, k: u8| format!("s{t}_{j}{k}");
    let bits = [(0u8, 0u8), (0, 1), (1, 0), (1, 1)];
    b.initial("s0");
    b.label("s0", "p0");
    for o in ["1", "2"] {
        b.observe(o, "s0", "0").expect("declared agent");
    }
    for t in 1..=n {
        for &(j, k) in &bits {
            let s = name(t, j, k);
            b.label(&s, &format!("p{t}"));
            if j == 1 {
                b.label(&s, "q1");
            }
            if k == 1 {
                b.label(&s, "q2");
            }
            for o in ["1", "2"] {
                b.observe(o, &s, &format!("{t}")).expect("declared agent");
            }
        }
    }
    b.prop("q1");
    b.prop("q2");
    let act = |v: u8| if v == 0 { "0" } else { "1" };
    for &(j, k) in &bits {
        b.transition("s0", &[Some(act(j)), Some(act(k))], &name(1, j, k)).expect("declared actions");
    }
    for t in 1..=n {
        for &(j, k) in &bits {
            let from = name(t, j, k);
            if t == n {
                b.transition(&from, &[None, None], &from).expect("declared actions");
            } else {
                for &(j2, k2) in &bits {
                    b.transition(&from, &[Some(act(j2)), Some(act(k2))], &name(t + 1, j2, k2))
                        .expect("declared actions");
                }
            }
        }
    }
    b.build()
}

/// `φ*` for a normalized instance: alternately fix `σ(1)` and let `σ(2)`
/// range universally, then fix `σ(2)` and choose `σ(1)`, checking at each
/// step that the assignments agree on the variables chosen so far.
pub fn qbf_formula(q: &QbfInstance) -> Result<Formula, QbfError> {
    if !q.is_normalized() {
        return Err(QbfError::NotAlternating);
    }
    let n = q.num_vars();
    let index: BTreeMap<&str, usize> = q.prefix.iter().enumerate().map(|(k, (_, x))| (x.as_str(), k + 1)).collect();
    let mut body = substitute(&q.matrix, &index);
    for k in (2..=n).rev() {
        body = if k % 2 == 0 {
            dist([sig(1)], implies(agree(k - 1), body))
        } else {
            not(dist([sig(2)], not(and(agree(k - 1), body))))
        };
    }
    Ok(somewhere(body))
}

/// `(E_φ, φ*, uniform deterministic)` for a normalized instance.
pub fn qbf_to_instance(q: &QbfInstance) -> Result<(Environment, Formula, StrategyClass), QbfError> {
    let f = qbf_formula(q)?;
    Ok((qbf_env(q.num_vars()), f, StrategyClass::LocallyUniformDeterministic))
}
