//! Model checking `Γ, E, Σ ⊨ φ`.
//!
//! Four engines share one compiled formula representation:
//! the ESL⁻ state recursion, the CTL*K labelling engine, its extension to
//! full ESL (quantifiers enumerated per binding), and the reduction to an
//! epistemic transition system over `S × Σ`.

mod compile;
mod eslminus;
pub mod ets;
mod label;
pub mod ltl;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashMap;

use crate::env::{Environment, StateId, Violation};
use crate::formula::{
    classify_fragment, desugar, free_vars, is_state_formula, validate_formula, Formula, FormulaError, Fragment,
};
use crate::space::{GlobalState, Space, SpaceError};
use crate::strategy::{enumerate_profiles, profile_count_bound, ClassError, StrategyClass, StrategyProfile};

use compile::{Compiled, NodeId, VarId};
use eslminus::EslMinus;
use ets::Ets;
use label::Labeller;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error("invalid environment: {}", list(.0))]
    Env(Vec<Violation>),
    #[error(transparent)]
    Class(#[from] ClassError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("free variable `{0}` is not bound by the context")]
    Unbound(String),
    #[error("context binds `{0}`, which is not free in the formula")]
    ContextMismatch(String),
    #[error("context binds `{0}` to a global state outside the strategy space")]
    NotAdmissible(String),
    #[error("the {engine} engine does not accept {fragment} formulas")]
    Fragment {
        engine: &'static str,
        fragment: &'static str,
    },
    #[error("{what} budget exceeded: need {needed}, limit {limit}")]
    BudgetExceeded {
        what: &'static str,
        limit: usize,
        needed: usize,
    },
    #[error("unknown proposition `{0}`")]
    UnknownAtom(String),
    #[error("formula contains surface sugar; desugar it first")]
    NotDesugared,
    #[error("witnesses are only produced for `!D[]!ψ` and `exists x . ψ` with a state-formula body")]
    UnsupportedWitness,
    #[error("expected a path formula over atoms, booleans, X and U")]
    NotPathFormula,
    #[error("unknown engine `{0}`")]
    UnknownEngine(String),
}

fn list(v: &[Violation]) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    for (k, x) in v.iter().enumerate() {
        if k > 0 {
            out.push_str("; ");
        }
        let _ = write!(out, "{x}");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    /// Pick by fragment.
    #[default]
    Auto,
    EslMinus,
    CtlStarK,
    Full,
    Reduction,
}

impl Engine {
    pub const ALL: [Engine; 5] = [
        Engine::Auto,
        Engine::EslMinus,
        Engine::CtlStarK,
        Engine::Full,
        Engine::Reduction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Auto => "auto",
            Engine::EslMinus => "eslminus",
            Engine::CtlStarK => "ctlstark",
            Engine::Full => "full",
            Engine::Reduction => "reduction",
        }
    }

    pub fn from_name(name: &str) -> Result<Engine, CheckError> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == name)
            .ok_or_else(|| CheckError::UnknownEngine(name.into()))
    }

    /// The engine `Auto` resolves to for a fragment.
    pub fn for_fragment(fragment: Fragment) -> Engine {
        match fragment {
            Fragment::CtlK | Fragment::EslMinus => Engine::EslMinus,
            Fragment::CtlStarK => Engine::CtlStarK,
            Fragment::FullEsl => Engine::Full,
        }
    }

    fn admits(self, fragment: Fragment) -> bool {
        match self {
            Engine::EslMinus => fragment.within(Fragment::EslMinus),
            Engine::CtlStarK => fragment.within(Fragment::CtlStarK),
            _ => true,
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    pub engine: Engine,
    /// Largest `|S × Σ|` the reduction will materialize.
    pub ets_budget: usize,
    /// Largest transformed formula the reduction will build.
    pub node_budget: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            engine: Engine::Auto,
            ets_budget: 200_000,
            node_budget: 1_000_000,
        }
    }
}

impl CheckOptions {
    pub fn with_engine(engine: Engine) -> Self {
        CheckOptions {
            engine,
            ..Self::default()
        }
    }
}

/// Bindings of free variables to global states.
pub type Context = BTreeMap<String, GlobalState>;

#[derive(Debug, Clone)]
pub struct Instance {
    pub env: Environment,
    pub class: StrategyClass,
    pub context: Context,
    pub formula: Formula,
}

impl Instance {
    pub fn new(env: Environment, class: StrategyClass, formula: Formula) -> Self {
        Instance {
            env,
            class,
            context: Context::new(),
            formula,
        }
    }

    pub fn with_context(mut self, context: Context) -> Self {
        self.context = context;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub states_explored: usize,
    pub profiles_enumerated: usize,
    pub memo_hits: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub holds: bool,
    pub witness: Option<GlobalState>,
    pub engine: Engine,
    pub fragment: Fragment,
    pub stats: Stats,
}

const MISSING: u32 = u32::MAX;

/// Current values of the formula's variables, plus an interner turning the
/// values of a node's free variables into a small memo key.
#[derive(Clone)]
pub(crate) struct Bindings {
    values: Vec<u32>,
    keys: HashMap<Vec<u32>, u32>,
}

impl Bindings {
    pub fn new(c: &Compiled) -> Self {
        Bindings {
            values: vec![MISSING; c.vars.len()],
            keys: HashMap::new(),
        }
    }

    pub fn get(&self, x: VarId) -> u32 {
        self.values[x as usize]
    }

    pub fn set(&mut self, x: VarId, g: u32) {
        self.values[x as usize] = g;
    }

    /// 0 for closed nodes; otherwise an id for the values of the free variables.
    pub fn key(&mut self, c: &Compiled, n: NodeId) -> u32 {
        let free = &c.free[n as usize];
        if free.is_empty() {
            return 0;
        }
        let v: Vec<u32> = free.iter().map(|&x| self.values[x as usize]).collect();
        let next = self.keys.len() as u32 + 1;
        *self.keys.entry(v).or_insert(next)
    }
}

/// The formula actually evaluated at the top: a path formula is closed
/// under `A`, since runs sharing their first point share the profile.
fn top_formula(f: &Formula) -> Formula {
    let f = desugar(f);
    if is_state_formula(&f) {
        f
    } else {
        Formula::PathAll(alloc::boxed::Box::new(f))
    }
}

fn resolve_engine(requested: Engine, fragment: Fragment) -> Result<Engine, CheckError> {
    let engine = match requested {
        Engine::Auto => Engine::for_fragment(fragment),
        e => e,
    };
    if !engine.admits(fragment) {
        return Err(CheckError::Fragment {
            engine: engine.name(),
            fragment: fragment.name(),
        });
    }
    Ok(engine)
}

fn check_context(f: &Formula, ctx: &Context) -> Result<(), CheckError> {
    let free = free_vars(f);
    if let Some(x) = free.iter().find(|x| !ctx.contains_key(*x)) {
        return Err(CheckError::Unbound(x.clone()));
    }
    if let Some(x) = ctx.keys().find(|x| !free.contains(*x)) {
        return Err(CheckError::ContextMismatch(x.clone()));
    }
    Ok(())
}

/// One evaluation session: a compiled formula plus an engine with its memo.
enum Session<'a, 'e> {
    Esl(EslMinus<'a, 'e>),
    Label(Labeller<'a, 'e>),
}

impl Session<'_, '_> {
    fn bindings_mut(&mut self) -> &mut Bindings {
        match self {
            Session::Esl(e) => e.bindings_mut(),
            Session::Label(l) => l.bindings_mut(),
        }
    }

    fn value(&mut self, n: NodeId, g: u32) -> bool {
        match self {
            Session::Esl(e) => e.eval(n, g),
            Session::Label(l) => l.label(n)[g as usize],
        }
    }

    fn values(&mut self, n: NodeId, len: usize) -> Vec<bool> {
        match self {
            Session::Esl(e) => (0..len as u32).map(|g| e.eval(n, g)).collect(),
            Session::Label(l) => l.label(n).to_vec(),
        }
    }

    fn memo_hits(&self) -> usize {
        match self {
            Session::Esl(e) => e.stats.memo_hits,
            Session::Label(l) => l.stats.memo_hits,
        }
    }
}

fn session<'a, 'e>(space: &'a Space<'e>, c: &'a Compiled, engine: Engine) -> Session<'a, 'e> {
    let bind = Bindings::new(c);
    match engine {
        Engine::EslMinus => Session::Esl(EslMinus::new(space, c, bind)),
        _ => Session::Label(Labeller::new(space, c, bind)),
    }
}

fn bind_context(
    s: &mut Session<'_, '_>,
    c: &Compiled,
    ctx: &Context,
    gid: impl Fn(&GlobalState) -> Option<u32>,
) -> Result<(), CheckError> {
    for (x, g) in ctx {
        let h = gid(g).ok_or_else(|| CheckError::NotAdmissible(x.clone()))?;
        if let Some(v) = c.var(x) {
            s.bindings_mut().set(v, h);
        }
    }
    Ok(())
}

/// Strategy space of an instance together with evaluation entry points.
pub struct Checker<'e> {
    space: Space<'e>,
    options: CheckOptions,
}

impl<'e> Checker<'e> {
    pub fn new(env: &'e Environment, class: &StrategyClass, options: CheckOptions) -> Result<Self, CheckError> {
        let violations = env.validate();
        if !violations.is_empty() {
            return Err(CheckError::Env(violations));
        }
        Ok(Checker {
            space: Space::build(env, class)?,
            options,
        })
    }

    pub fn space(&self) -> &Space<'e> {
        &self.space
    }

    /// Truth value at every admissible global state (space order). Path
    /// formulas are evaluated as `A φ`.
    pub fn evaluate(&self, formula: &Formula, ctx: &Context, engine: Engine) -> Result<Vec<bool>, CheckError> {
        validate_formula(formula, self.space.env())?;
        check_context(formula, ctx)?;
        let top = top_formula(formula);
        let engine = resolve_engine(engine, classify_fragment(&top))?;
        if engine == Engine::Reduction {
            return self.evaluate_reduced(&top, ctx);
        }
        let c = Compiled::new(&self.space, &top)?;
        let mut s = session(&self.space, &c, engine);
        bind_context(&mut s, &c, ctx, |g| self.space.gid_of(g))?;
        Ok(s.values(c.root, self.space.len()))
    }

    fn evaluate_reduced(&self, top: &Formula, ctx: &Context) -> Result<Vec<bool>, CheckError> {
        let env = self.space.env();
        let ets = Ets::build(env, self.space.profiles().to_vec(), self.options.ets_budget)?;
        let (values, lifted) = run_reduction(&ets, top, ctx, self.options.node_budget)?;
        Ok((0..self.space.len() as u32)
            .map(|g| {
                let h = lifted
                    .gid(self.space.state(g), self.space.profile_id(g))
                    .expect("admissible states are reachable in the ETS");
                values[h as usize]
            })
            .collect())
    }

    /// Verdict at the initial global states.
    pub fn check(&self, formula: &Formula, ctx: &Context) -> Result<Verdict, CheckError> {
        validate_formula(formula, self.space.env())?;
        check_context(formula, ctx)?;
        let top = top_formula(formula);
        let fragment = classify_fragment(&top);
        let engine = resolve_engine(self.options.engine, fragment)?;
        let mut stats = Stats {
            states_explored: self.space.len(),
            profiles_enumerated: self.space.profiles().len(),
            memo_hits: 0,
        };
        let holds = if engine == Engine::Reduction {
            let values = self.evaluate_reduced(&top, ctx)?;
            self.space.initial().iter().all(|&g| values[g as usize])
        } else {
            let c = Compiled::new(&self.space, &top)?;
            let mut s = session(&self.space, &c, engine);
            bind_context(&mut s, &c, ctx, |g| self.space.gid_of(g))?;
            let holds = self.space.initial().iter().all(|&g| s.value(c.root, g));
            stats.memo_hits = s.memo_hits();
            holds
        };
        let witness = if holds {
            match self.witness(formula, ctx) {
                Ok(w) => w,
                Err(CheckError::UnsupportedWitness) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        Ok(Verdict {
            holds,
            witness,
            engine,
            fragment,
            stats,
        })
    }

    /// Witness for a top-level `!D[]!ψ` (a global state where `ψ` holds, as
    /// `E ψ` for a path body) or `exists x . ψ` (a binding for `x` making
    /// `ψ` hold at the first initial global state). Every witness is
    /// re-checked by the labelling engine before it is returned.
    pub fn witness(&self, formula: &Formula, ctx: &Context) -> Result<Option<GlobalState>, CheckError> {
        validate_formula(formula, self.space.env())?;
        check_context(formula, ctx)?;
        let f = desugar(formula);
        if let Some(body) = somewhere_body(&f) {
            let target = if is_state_formula(body) {
                body.clone()
            } else {
                crate::formula::build::not(crate::formula::build::all(crate::formula::build::not(body.clone())))
            };
            let fragment = classify_fragment(&target);
            let search = Engine::for_fragment(fragment);
            let values = self.evaluate(&target, ctx, search)?;
            let Some(g) = values.iter().position(|&v| v) else {
                return Ok(None);
            };
            let recheck = self.evaluate(&target, ctx, Engine::Full)?;
            assert!(recheck[g], "witness failed its re-check");
            return Ok(Some(self.space.global_state(g as u32)));
        }
        if let Formula::Exists(x, body) = &f {
            let body: &Formula = body;
            if !is_state_formula(body) {
                return Err(CheckError::UnsupportedWitness);
            }
            let Some(&g0) = self.space.initial().first() else {
                return Ok(None);
            };
            let mut inner_ctx = ctx.clone();
            let found = self.first_binding(x, body, &inner_ctx, g0, classify_fragment(body))?;
            let Some(h) = found else {
                return Ok(None);
            };
            let witness = self.space.global_state(h);
            if free_vars(body).contains(x) {
                inner_ctx.insert(x.clone(), witness.clone());
            }
            let recheck = self.evaluate(body, &inner_ctx, Engine::Full)?;
            assert!(recheck[g0 as usize], "witness failed its re-check");
            return Ok(Some(witness));
        }
        Err(CheckError::UnsupportedWitness)
    }

    fn first_binding(
        &self,
        x: &str,
        body: &Formula,
        ctx: &Context,
        g0: u32,
        fragment: Fragment,
    ) -> Result<Option<u32>, CheckError> {
        // compile `exists x . body` so that `x` is a known variable
        let wrapped = Formula::Exists(x.into(), alloc::boxed::Box::new(body.clone()));
        let c = Compiled::new(&self.space, &wrapped)?;
        let compile::Node::Exists(v, body_node) = c.nodes[c.root as usize] else {
            unreachable!("root of an exists formula")
        };
        let mut s = session(&self.space, &c, Engine::for_fragment(fragment));
        bind_context(&mut s, &c, ctx, |g| self.space.gid_of(g))?;
        for h in 0..self.space.len() as u32 {
            s.bindings_mut().set(v, h);
            if s.value(body_node, g0) {
                return Ok(Some(h));
            }
        }
        Ok(None)
    }
}

/// `ψ` when `f` is `!D[]!ψ`.
fn somewhere_body(f: &Formula) -> Option<&Formula> {
    if let Formula::Not(a) = f {
        if let Formula::Dist(g, b) = &**a {
            if g.is_empty() {
                if let Formula::Not(c) = &**b {
                    return Some(c);
                }
            }
        }
    }
    None
}

/// Transforms, lifts and labels; returns values over the lifted space.
fn run_reduction<'e>(
    ets: &Ets<'e>,
    top: &Formula,
    ctx: &Context,
    node_budget: usize,
) -> Result<(Vec<bool>, Space<'e>), CheckError> {
    let mut gamma = BTreeMap::new();
    let reachable = ets.reachable();
    for (x, g) in ctx {
        let p = ets
            .profiles()
            .iter()
            .position(|q| *q == g.profile)
            .ok_or_else(|| CheckError::NotAdmissible(x.clone()))?;
        if (g.state as usize) >= ets.num_env_states() {
            return Err(CheckError::NotAdmissible(x.clone()));
        }
        let k = ets.index_of(g.state, p as u32);
        if reachable.binary_search(&k).is_err() {
            return Err(CheckError::NotAdmissible(x.clone()));
        }
        gamma.insert(x.clone(), k);
    }
    let closed = ets.transform(top, &gamma, node_budget)?;
    let lifted = ets.to_space();
    let values = {
        let c = Compiled::new(&lifted, &closed)?;
        let mut l = Labeller::new(&lifted, &c, Bindings::new(&c));
        l.label(c.root).to_vec()
    };
    Ok((values, lifted))
}

/// Checks an instance. The reduction engine enforces its budget before
/// enumerating the class; the other engines build the strategy space.
pub fn check(instance: &Instance, options: &CheckOptions) -> Result<Verdict, CheckError> {
    if options.engine == Engine::Reduction {
        return check_reduced(instance, options);
    }
    Checker::new(&instance.env, &instance.class, *options)?.check(&instance.formula, &instance.context)
}

fn check_reduced(instance: &Instance, options: &CheckOptions) -> Result<Verdict, CheckError> {
    let env = &instance.env;
    let violations = env.validate();
    if !violations.is_empty() {
        return Err(CheckError::Env(violations));
    }
    validate_formula(&instance.formula, env)?;
    check_context(&instance.formula, &instance.context)?;
    let top = top_formula(&instance.formula);
    let fragment = classify_fragment(&top);
    let bound = profile_count_bound(env, &instance.class)?;
    let needed = bound.saturating_mul(env.num_states());
    if needed > options.ets_budget {
        return Err(CheckError::BudgetExceeded {
            what: "ETS states",
            limit: options.ets_budget,
            needed,
        });
    }
    let profiles = enumerate_profiles(env, &instance.class)?;
    if profiles.is_empty() {
        return Err(ClassError::Empty.into());
    }
    let n_profiles = profiles.len();
    let ets = Ets::build(env, profiles, options.ets_budget)?;
    let (values, lifted) = run_reduction(&ets, &top, &instance.context, options.node_budget)?;
    let holds = lifted.initial().iter().all(|&g| values[g as usize]);
    Ok(Verdict {
        holds,
        witness: None,
        engine: Engine::Reduction,
        fragment,
        stats: Stats {
            states_explored: ets.len(),
            profiles_enumerated: n_profiles,
            memo_hits: 0,
        },
    })
}

/// Witness of an instance (see [`Checker::witness`]).
pub fn extract_witness(instance: &Instance, options: &CheckOptions) -> Result<Option<GlobalState>, CheckError> {
    Checker::new(&instance.env, &instance.class, *options)?.witness(&instance.formula, &instance.context)
}

/// True iff every infinite path from `state` under `profile` satisfies the
/// path formula `psi` (atoms, booleans, `X`, `U` and their sugar).
pub fn ltl_forall_paths(
    env: &Environment,
    profile: &StrategyProfile,
    state: StateId,
    psi: &Formula,
) -> Result<bool, CheckError> {
    let psi = desugar(psi);
    let mut ok = true;
    psi.walk(&mut |g| {
        if !matches!(
            g,
            Formula::Atom(_)
                | Formula::True
                | Formula::False
                | Formula::Not(_)
                | Formula::And(..)
                | Formula::Or(..)
                | Formula::Next(_)
                | Formula::Until(..)
        ) {
            ok = false;
        }
    });
    if !ok {
        return Err(CheckError::NotPathFormula);
    }
    validate_formula(&psi, env)?;
    let rooted = env.clone().with_initial(&[state]);
    let class = StrategyClass::Explicit(vec![profile.clone()]);
    let space = Space::build(&rooted, &class)?;
    let g = space.gid(state, 0).expect("start state is reachable");
    let top = Formula::PathAll(alloc::boxed::Box::new(psi));
    let c = Compiled::new(&space, &top)?;
    let mut l = Labeller::new(&space, &c, Bindings::new(&c));
    Ok(l.label(c.root)[g as usize])
}

#[cfg(test)]
mod tests;
