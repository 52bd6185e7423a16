use super::*;
use crate::env::tests::e1;
use crate::formula::parse_formula;
use crate::strategy::{ActionSet, Strategy};

const ENGINES: [Engine; 4] = [Engine::EslMinus, Engine::CtlStarK, Engine::Full, Engine::Reduction];

fn holds(env: &Environment, class: &StrategyClass, text: &str, engine: Engine) -> bool {
    let inst = Instance::new(env.clone(), class.clone(), parse_formula(text).unwrap());
    check(&inst, &CheckOptions::with_engine(engine)).unwrap().holds
}

fn constant(env: &Environment, action: u32) -> StrategyProfile {
    StrategyProfile(vec![Strategy::constant(env.num_states(), ActionSet::singleton(action))])
}

/// E1 with a blind agent.
fn e1_blind() -> Environment {
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
    b.observe("1", "s1", "0").unwrap();
    b.label("s0", "p");
    b.label("s1", "q");
    b.build()
}

#[test]
fn always_p_fails_under_all_profiles() {
    for engine in ENGINES {
        let text = "A G p";
        if engine == Engine::CtlStarK || engine == Engine::EslMinus || engine == Engine::Full {
            assert!(!holds(&e1(), &StrategyClass::All, text, engine), "{engine}");
        }
    }
    assert!(!holds(&e1(), &StrategyClass::All, "A G p", Engine::Reduction));
}

#[test]
fn some_profile_keeps_p_forever() {
    for engine in ENGINES {
        assert!(holds(&e1(), &StrategyClass::All, "!D[]!(A G p)", engine), "{engine}");
    }
}

#[test]
fn trivial_formula_holds() {
    for engine in ENGINES {
        assert!(holds(&e1(), &StrategyClass::Deterministic, "true", engine));
    }
}

#[test]
fn blind_agent_does_not_know_next_state() {
    let env = e1_blind();
    let class = StrategyClass::Explicit(vec![constant(&env, 0), constant(&env, 1)]);
    let space = Space::build(&env, &class).unwrap();
    let checker = Checker::new(&env, &class, CheckOptions::default()).unwrap();
    let values = checker
        .evaluate(&parse_formula("K[1] X p").unwrap(), &Context::new(), Engine::CtlStarK)
        .unwrap();
    let g = space.gid(0, 0).unwrap();
    assert!(!values[g as usize]);
    assert!(!holds(&env, &class, "K[1] X p", Engine::Full));
}

#[test]
fn eslminus_fixpoints_at_specific_states() {
    let env = e1();
    let class = StrategyClass::Explicit(vec![constant(&env, 0), constant(&env, 1)]);
    let checker = Checker::new(&env, &class, CheckOptions::default()).unwrap();
    let space = checker.space();
    let always_a = space.gid(0, 0).unwrap() as usize;
    let always_b = space.gid(0, 1).unwrap() as usize;
    let ag = checker
        .evaluate(&parse_formula("A G p").unwrap(), &Context::new(), Engine::EslMinus)
        .unwrap();
    assert!(ag[always_a]);
    assert!(!ag[always_b]);
    let exq = checker
        .evaluate(&parse_formula("E X q").unwrap(), &Context::new(), Engine::EslMinus)
        .unwrap();
    assert!(exq[always_b]);
    assert!(!exq[always_a]);
}

#[test]
fn universal_distributed_knowledge_is_a_conjunction() {
    let env = e1();
    let checker = Checker::new(&env, &StrategyClass::All, CheckOptions::default()).unwrap();
    let ctx = Context::new();
    for text in ["p", "A X p", "E F q"] {
        let inner = checker.evaluate(&parse_formula(text).unwrap(), &ctx, Engine::EslMinus).unwrap();
        let all = inner.iter().all(|&v| v);
        let d = checker
            .evaluate(&parse_formula(&alloc::format!("D[] {text}")).unwrap(), &ctx, Engine::EslMinus)
            .unwrap();
        assert!(d.iter().all(|&v| v == all), "{text}");
    }
}

#[test]
fn self_binding_makes_exists_loc_valid() {
    let env = e1();
    for engine in [Engine::EslMinus, Engine::Full, Engine::Reduction] {
        assert!(holds(&env, &StrategyClass::All, "exists x . loc(e,x)", engine));
    }
}

#[test]
fn engines_refuse_formulas_outside_their_fragment() {
    let inst = Instance::new(e1(), StrategyClass::All, parse_formula("exists x . loc(1,x)").unwrap());
    let err = check(&inst, &CheckOptions::with_engine(Engine::CtlStarK)).unwrap_err();
    assert!(matches!(err, CheckError::Fragment { .. }));
    let inst = Instance::new(e1(), StrategyClass::All, parse_formula("A (X p | X q)").unwrap());
    let err = check(&inst, &CheckOptions::with_engine(Engine::EslMinus)).unwrap_err();
    assert!(matches!(err, CheckError::Fragment { .. }));
}

#[test]
fn context_must_match_free_variables() {
    let env = e1();
    let f = parse_formula("loc(1,x)").unwrap();
    let inst = Instance::new(env.clone(), StrategyClass::All, f.clone());
    assert_eq!(check(&inst, &CheckOptions::default()).unwrap_err(), CheckError::Unbound("x".into()));

    let g = GlobalState {
        state: 0,
        profile: constant(&env, 0),
    };
    let mut ctx = Context::new();
    ctx.insert("x".into(), g.clone());
    ctx.insert("y".into(), g.clone());
    let inst = Instance::new(env.clone(), StrategyClass::All, f.clone()).with_context(ctx);
    assert_eq!(
        check(&inst, &CheckOptions::default()).unwrap_err(),
        CheckError::ContextMismatch("y".into())
    );

    // s1 is unreachable under always-a
    let mut ctx = Context::new();
    ctx.insert(
        "x".into(),
        GlobalState {
            state: 1,
            profile: constant(&env, 0),
        },
    );
    for engine in [Engine::Full, Engine::Reduction] {
        let inst = Instance::new(env.clone(), StrategyClass::All, f.clone()).with_context(ctx.clone());
        assert_eq!(
            check(&inst, &CheckOptions::with_engine(engine)).unwrap_err(),
            CheckError::NotAdmissible("x".into())
        );
    }
}

#[test]
fn bound_context_is_respected() {
    let env = e1();
    let class = StrategyClass::Deterministic;
    let mut ctx = Context::new();
    ctx.insert(
        "x".into(),
        GlobalState {
            state: 0,
            profile: constant(&env, 0),
        },
    );
    let f = parse_formula("loc(sig(1),x)").unwrap();
    for engine in [Engine::EslMinus, Engine::Full, Engine::Reduction] {
        let inst = Instance::new(env.clone(), class.clone(), f.clone()).with_context(ctx.clone());
        // the always-b profile starts at s0 too, with a different strategy
        assert!(!check(&inst, &CheckOptions::with_engine(engine)).unwrap().holds, "{engine}");
    }
    let f = parse_formula("D[sig(1)] (loc(sig(1),x) -> A G p)").unwrap();
    for engine in [Engine::EslMinus, Engine::Full, Engine::Reduction] {
        let inst = Instance::new(env.clone(), class.clone(), f.clone()).with_context(ctx.clone());
        assert!(check(&inst, &CheckOptions::with_engine(engine)).unwrap().holds, "{engine}");
    }
}

#[test]
fn witness_for_somewhere_pattern() {
    let env = e1();
    let inst = Instance::new(env.clone(), StrategyClass::Deterministic, parse_formula("!D[]!(A G p)").unwrap());
    let v = check(&inst, &CheckOptions::default()).unwrap();
    assert!(v.holds);
    let w = v.witness.unwrap();
    assert_eq!(w.profile, constant(&env, 0));
}

#[test]
fn witness_for_exists_pattern() {
    let env = e1();
    let f = parse_formula("exists x . (loc(sig(1),x) & A X q)").unwrap();
    let inst = Instance::new(env.clone(), StrategyClass::Deterministic, f);
    let v = check(&inst, &CheckOptions::default()).unwrap();
    // at the first initial state the profile is always-a, which never moves to q
    assert!(!v.holds);
    assert!(v.witness.is_none());

    let f = parse_formula("exists x . D[sig(1)] (loc(sig(1),x) -> A G p)").unwrap();
    let inst = Instance::new(env.clone(), StrategyClass::Deterministic, f);
    let v = check(&inst, &CheckOptions::default()).unwrap();
    assert!(v.holds);
    assert_eq!(v.witness.unwrap().profile, constant(&env, 0));
}

#[test]
fn false_instance_has_no_witness() {
    let inst = Instance::new(e1(), StrategyClass::Deterministic, parse_formula("!D[]!(A G (p & q))").unwrap());
    let v = check(&inst, &CheckOptions::default()).unwrap();
    assert!(!v.holds);
    assert!(v.witness.is_none());
    assert_eq!(extract_witness(&inst, &CheckOptions::default()).unwrap(), None);
}

#[test]
fn unsupported_witness_shape() {
    let inst = Instance::new(e1(), StrategyClass::Deterministic, parse_formula("A G p").unwrap());
    assert_eq!(
        extract_witness(&inst, &CheckOptions::default()).unwrap_err(),
        CheckError::UnsupportedWitness
    );
}

#[test]
fn reduction_refuses_over_budget_before_enumerating() {
    let inst = Instance::new(e1(), StrategyClass::All, parse_formula("A G p").unwrap());
    let opts = CheckOptions {
        engine: Engine::Reduction,
        ets_budget: 10,
        node_budget: 1_000_000,
    };
    assert_eq!(
        check(&inst, &opts).unwrap_err(),
        CheckError::BudgetExceeded {
            what: "ETS states",
            limit: 10,
            needed: 18
        }
    );
    let opts = CheckOptions {
        engine: Engine::Reduction,
        ets_budget: 100,
        node_budget: 5,
    };
    let inst = Instance::new(e1(), StrategyClass::All, parse_formula("exists x . loc(1,x)").unwrap());
    assert!(matches!(
        check(&inst, &opts).unwrap_err(),
        CheckError::BudgetExceeded {
            what: "formula nodes",
            ..
        }
    ));
}

#[test]
fn ets_transition_count_matches_successor_sets() {
    let env = e1();
    let profiles = enumerate_profiles(&env, &StrategyClass::All).unwrap();
    let expected: usize = profiles
        .iter()
        .map(|p| {
            (0..env.num_states() as StateId)
                .map(|s| crate::space::successors(&env, s, p).len())
                .sum::<usize>()
        })
        .sum();
    let ets = Ets::build(&env, profiles, 1000).unwrap();
    assert_eq!(ets.len(), 18);
    assert_eq!(ets.num_transitions(), expected);
}

#[test]
fn quantifier_free_formulas_pass_the_transform_unchanged() {
    let env = e1();
    let profiles = enumerate_profiles(&env, &StrategyClass::All).unwrap();
    let ets = Ets::build(&env, profiles, 1000).unwrap();
    let f = desugar(&parse_formula("A (p U q) & K[1] X p").unwrap());
    assert_eq!(ets.transform(&f, &BTreeMap::new(), 1000).unwrap(), f);
}

#[test]
fn own_propositions_are_not_universally_known() {
    let env = e1();
    let profiles = enumerate_profiles(&env, &StrategyClass::All).unwrap();
    let ets = Ets::build(&env, profiles, 1000).unwrap();
    let lifted = ets.to_space();
    assert!(lifted.len() >= 2);
    let k = lifted.external_id(0).unwrap();
    let f = parse_formula(&alloc::format!("D[] \"ets#{k}\"")).unwrap();
    let c = Compiled::new(&lifted, &desugar(&f)).unwrap();
    let mut l = Labeller::new(&lifted, &c, Bindings::new(&c));
    assert!(l.label(c.root).iter().all(|v| !v));
}

#[test]
fn ltl_entry_point() {
    let env = e1();
    let a = constant(&env, 0);
    let b = constant(&env, 1);
    assert!(ltl_forall_paths(&env, &a, 0, &parse_formula("G p").unwrap()).unwrap());
    assert!(!ltl_forall_paths(&env, &b, 0, &parse_formula("G p").unwrap()).unwrap());
    assert!(ltl_forall_paths(&env, &b, 0, &parse_formula("X G q").unwrap()).unwrap());
    let random = StrategyProfile::random(&env);
    assert!(!ltl_forall_paths(&env, &random, 0, &parse_formula("F q").unwrap()).unwrap());
    assert_eq!(
        ltl_forall_paths(&env, &a, 0, &parse_formula("K[1] p").unwrap()).unwrap_err(),
        CheckError::NotPathFormula
    );
}
