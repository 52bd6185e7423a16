use super::*;
use crate::env::tests::e1;
use crate::formula::{classify_fragment, parse_atel, parse_formula, render_formula, Fragment};
use crate::strategy::{profile_in_class, ActionSet};

fn g(names: &[&str]) -> Group {
    names.iter().map(|s| String::from(*s)).collect()
}

/// Two agents; agent 1 picks the successor of s0 and agent 2 is idle.
fn two_agents() -> Environment {
    let mut b = Environment::builder();
    b.agent("1").unwrap();
    b.agent("2").unwrap();
    b.action("1", "l").unwrap();
    b.action("1", "r").unwrap();
    b.action("2", "n").unwrap();
    b.initial("s0");
    b.state("sl");
    b.state("sr");
    b.transition("s0", &[Some("l"), None], "sl").unwrap();
    b.transition("s0", &[Some("r"), None], "sr").unwrap();
    b.transition("sl", &[None, None], "sl").unwrap();
    b.transition("sr", &[None, None], "sr").unwrap();
    for s in ["s0", "sl", "sr"] {
        b.observe("1", s, "o").unwrap();
        b.observe("2", s, s).unwrap();
    }
    b.label("sl", "p");
    b.build()
}

#[test]
fn empty_coalition_constrains_nothing() {
    let env = e1();
    for kind in [AtelKind::Deterministic, AtelKind::UniformDeterministic] {
        let v = atel_labels(&env, kind, &parse_atel("<<>> G p").unwrap()).unwrap();
        // under the random strategy s0 may leave p
        assert_eq!(v, vec![false, false]);
        let v = atel_labels(&env, kind, &parse_atel("<<>> G (p | q)").unwrap()).unwrap();
        assert_eq!(v, vec![true, true]);
    }
}

#[test]
fn single_agent_can_force_next_q() {
    let env = e1();
    let f = parse_atel("<<1>> X q").unwrap();
    assert!(eval_atel(&env, AtelKind::UniformDeterministic, 0, &f).unwrap());
    assert!(!eval_atel(&env, AtelKind::UniformDeterministic, 0, &parse_atel("<<>> X q").unwrap()).unwrap());
    assert!(eval_atel(&env, AtelKind::Deterministic, 0, &parse_atel("<<1>> G p").unwrap()).unwrap());
    assert!(eval_atel(&env, AtelKind::Deterministic, 0, &parse_atel("<<1>> (p U q)").unwrap()).unwrap());
}

#[test]
fn knowledge_is_observational() {
    let env = two_agents();
    // agent 1 sees nothing: sl has p, sr does not
    let f = parse_atel("K[1] p").unwrap();
    assert!(!eval_atel(&env, AtelKind::Deterministic, 1, &f).unwrap());
    assert!(eval_atel(&env, AtelKind::Deterministic, 1, &parse_atel("K[2] p").unwrap()).unwrap());
    assert!(eval_atel(&env, AtelKind::Deterministic, 1, &parse_atel("D[1,2] p").unwrap()).unwrap());
    assert!(!eval_atel(&env, AtelKind::Deterministic, 1, &parse_atel("C[1,2] p").unwrap()).unwrap());
    assert!(!eval_atel(&env, AtelKind::Deterministic, 1, &parse_atel("D[] p").unwrap()).unwrap());
    // uniform for agent 1 means the same move everywhere, which is still enough here
    assert!(eval_atel(&env, AtelKind::UniformDeterministic, 0, &parse_atel("<<1>> X p").unwrap()).unwrap());
    assert!(!eval_atel(&env, AtelKind::UniformDeterministic, 0, &parse_atel("<<2>> X p").unwrap()).unwrap());
}

#[test]
fn translation_table() {
    let t = |s: &str| render_formula(&translate_atel(&parse_atel(s).unwrap()));
    assert_eq!(t("<<1>> X p"), "!K[e]!D[e,sig(1)] X p");
    assert_eq!(t("<<1,2>> G p"), "!K[e]!D[e,sig(1),sig(2)] G p");
    assert_eq!(t("<<>> (p U q)"), "!K[e]!D[e] (p U q)");
    assert_eq!(t("K[1] p"), "K[1]p");
    assert_eq!(t("p"), "p");
    assert_eq!(t("C[1,2] !p"), "C[1,2] !p");
}

#[test]
fn translations_are_quantifier_free_ctlstark() {
    for s in ["<<1>> X p", "K[1] <<1,2>> G (p | q)", "C[1] <<2>> (p U K[2] q)", "!<<>> X D[1,2] p"] {
        let f = crate::formula::desugar(&translate_atel(&parse_atel(s).unwrap()));
        assert!(classify_fragment(&f).within(Fragment::CtlStarK), "{s}");
    }
}

#[test]
fn prepared_instance() {
    let env = two_agents();
    let (prepared, class) = prepare_atel_instance(&env, AtelKind::UniformDeterministic).unwrap();
    assert_eq!(prepared.initial(), &[0, 1, 2]);
    assert!(profile_in_class(&prepared, &StrategyProfile::random(&prepared), &class));
    let mixed = StrategyProfile(vec![
        Strategy::constant(3, ActionSet::singleton(0)),
        Strategy::random(&prepared, 1),
    ]);
    assert!(profile_in_class(&prepared, &mixed, &class));
    let non_uniform = StrategyProfile(vec![
        Strategy(vec![ActionSet::singleton(0), ActionSet::singleton(1), ActionSet::singleton(0)]),
        Strategy::random(&prepared, 1),
    ]);
    assert!(!profile_in_class(&prepared, &non_uniform, &class));
}

#[test]
fn built_in_sets_are_closed() {
    for env in [e1(), two_agents()] {
        for kind in [AtelKind::Deterministic, AtelKind::UniformDeterministic] {
            let set = GroupStrategySet::new(kind);
            assert!(set.is_restrictable(&env));
            assert!(set.is_extendable(&env));
        }
    }
}

#[test]
fn direct_and_translated_agree_on_small_examples() {
    for env in [e1(), two_agents()] {
        for kind in [AtelKind::Deterministic, AtelKind::UniformDeterministic] {
            for s in ["<<1>> X p", "<<1>> G p", "K[1] <<1>> X p", "<<>> (p U !p)", "!<<1>> G !p"] {
                let f = parse_atel(s).unwrap();
                if validate_atel(&f, &env).is_err() {
                    continue;
                }
                let direct = atel_labels(&env, kind, &f).unwrap();
                for engine in [Engine::CtlStarK, Engine::Full] {
                    let translated = translated_at_states(&env, kind, &f, engine).unwrap();
                    for (st, (&d, &(all, some))) in direct.iter().zip(&translated).enumerate() {
                        assert_eq!(all, some, "{s} at state {st}");
                        assert_eq!(d, all, "{s} at state {st} ({engine})");
                    }
                }
            }
        }
    }
}

#[test]
fn strategic_knowledge_forms() {
    let phi = parse_formula("A X p").unwrap();
    let d = translate_strategic_knowledge(KnowledgeKind::Dist, &g(&["2"]), &g(&["1"]), phi.clone());
    assert_eq!(render_formula(&d), "!K[e]!D[2,sig(1)] A X p");
    let e = translate_strategic_knowledge(KnowledgeKind::Everyone, &g(&["2"]), &g(&["1"]), phi.clone());
    assert_eq!(render_formula(&e), render_formula(&d));
    let c = translate_strategic_knowledge(KnowledgeKind::Common, &g(&["1", "2"]), &g(&["1"]), phi);
    assert_eq!(classify_fragment(&crate::formula::desugar(&c)), Fragment::EslMinus);
    assert_eq!(
        render_formula(&c),
        "!K[e]!exists x . (loc(sig(1),x) & C[1,2] (loc(sig(1),x) -> A X p))"
    );
}

#[test]
fn csl_normal_form() {
    let phi = parse_formula("A G p").unwrap();
    let f = translate_csl_normal_form(&[(KnowledgeKind::Dist, g(&["1"]))], &g(&["2"]), phi.clone());
    assert_eq!(render_formula(&f), "exists x . D[1] (loc(sig(2),x) -> A G p)");
    let f = translate_csl_normal_form(&[(KnowledgeKind::Common, g(&["1", "2"]))], &Group::new(), phi);
    assert_eq!(render_formula(&f), "exists x . C[1,2] A G p");
}

#[test]
fn catl_commitment() {
    let env = e1();
    let always_b = Strategy::constant(2, ActionSet::singleton(1));
    let env = env.with_named_strategy("go", 0, always_b).unwrap();
    let (aug, f) = translate_catl("1", "go", &parse_atel("p").unwrap(), &env).unwrap();
    assert_eq!(render_formula(&f), "D[e] (plays_1=go -> p)");
    assert!(aug.strategy_atoms().contains_key("plays_1=go"));
    let (_, f) = translate_catl("1", "go", &parse_atel("K[1] p").unwrap(), &env).unwrap();
    assert_eq!(render_formula(&f), "D[e] (plays_1=go -> D[1,sig(1)] p)");
    assert_eq!(
        translate_catl("1", "stay", &parse_atel("p").unwrap(), &env).unwrap_err(),
        AtelError::UnknownStrategy("stay".into())
    );
}

#[test]
fn catl_with_singleton_class_reduces_to_plain_distribution() {
    let env = e1();
    let always_a = Strategy::constant(2, ActionSet::singleton(0));
    let env = env.with_named_strategy("stay", 0, always_a.clone()).unwrap();
    let (aug, f) = translate_catl("1", "stay", &parse_atel("<<>> G p").unwrap(), &env).unwrap();
    let class = StrategyClass::Explicit(vec![StrategyProfile(vec![always_a])]);
    let checker = Checker::new(&aug, &class, CheckOptions::default()).unwrap();
    let ctx = Context::new();
    let with_atom = checker.evaluate(&f, &ctx, Engine::Full).unwrap();
    let Formula::Dist(tags, body) = &f else { panic!() };
    let Formula::Or(_, rhs) = crate::formula::desugar(body) else { panic!() };
    let without = checker.evaluate(&Formula::Dist(tags.clone(), rhs), &ctx, Engine::Full).unwrap();
    assert_eq!(with_atom, without);
    assert!(with_atom.iter().all(|&v| v));
}

#[test]
fn display_round_trips() {
    for s in ["<<1,2>> X p", "(K[1]p & <<>> (p U q))", "!C[1] <<2>> G \"a b\"", "D[] true"] {
        let f = parse_atel(s).unwrap();
        assert_eq!(parse_atel(&alloc::format!("{f}")).unwrap(), f, "{s}");
    }
}
