//! Engine agreement, semantic identities of the logic, and the path checker
//! against lasso enumeration.

use esl_core::check::ltl::{exists_path, Ltl, LtlNode};
use esl_core::check::{check, CheckOptions, Checker, Context, Engine, Instance};
use esl_core::formula::build::*;
use esl_core::formula::{classify_fragment, desugar, rewrite_dg_via_exists, Formula, Fragment};
use esl_core::testkit::*;
use esl_core::{AgentTag, Environment, StrategyClass};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn classes() -> [StrategyClass; 2] {
    [StrategyClass::All, StrategyClass::LocallyUniformDeterministic]
}

/// Classes whose strategy spaces stay small enough for nested quantifiers.
fn small_classes() -> [StrategyClass; 3] {
    [
        StrategyClass::Deterministic,
        StrategyClass::LocallyUniform,
        StrategyClass::LocallyUniformDeterministic,
    ]
}

fn values(env: &Environment, class: &StrategyClass, f: &Formula, engine: Engine) -> Vec<bool> {
    let checker = Checker::new(env, class, CheckOptions::with_engine(engine)).unwrap();
    checker.evaluate(f, &Context::new(), engine).unwrap()
}

fn holds(env: &Environment, class: &StrategyClass, f: &Formula, engine: Engine) -> bool {
    let instance = Instance::new(env.clone(), class.clone(), f.clone());
    check(&instance, &CheckOptions::with_engine(engine)).unwrap().holds
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn engines_agree_on_ctlk(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = random_env(&mut rng, 4);
        let f = random_state_formula(&mut rng, FormulaShape::CTLK, 4);
        prop_assert_eq!(classify_fragment(&desugar(&f)), Fragment::CtlK);
        let class = &classes()[rng.gen_range(0..2)];
        let reference = values(&env, class, &f, Engine::EslMinus);
        prop_assert_eq!(&values(&env, class, &f, Engine::CtlStarK), &reference);
        prop_assert_eq!(&values(&env, class, &f, Engine::Full), &reference);
        prop_assert_eq!(&values(&env, class, &f, Engine::Reduction), &reference);
        let verdict = holds(&env, class, &f, Engine::Auto);
        prop_assert_eq!(holds(&env, class, &f, Engine::Reduction), verdict);
    }

    #[test]
    fn esl_minus_engine_agrees_with_full(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = random_env(&mut rng, 3);
        let f = random_state_formula(&mut rng, FormulaShape::ESL_MINUS, 4);
        prop_assert!(classify_fragment(&desugar(&f)).within(Fragment::EslMinus));
        let class = StrategyClass::LocallyUniformDeterministic;
        let reference = values(&env, &class, &f, Engine::EslMinus);
        prop_assert_eq!(&values(&env, &class, &f, Engine::Full), &reference);
        prop_assert_eq!(&values(&env, &class, &f, Engine::Reduction), &reference);
    }

    #[test]
    fn ctlstark_engine_agrees_with_full(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = random_env(&mut rng, 4);
        let f = random_ctlstark_formula(&mut rng, 4);
        let class = &classes()[rng.gen_range(0..2)];
        let reference = values(&env, class, &f, Engine::CtlStarK);
        prop_assert_eq!(&values(&env, class, &f, Engine::Full), &reference);
    }

    #[test]
    fn desugar_is_idempotent_and_preserves_values(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = random_env(&mut rng, 3);
        let f = random_state_formula(&mut rng, FormulaShape::ESL_MINUS, 4);
        let d = desugar(&f);
        prop_assert_eq!(desugar(&d), d.clone());
        let class = StrategyClass::LocallyUniform;
        for engine in [Engine::EslMinus, Engine::Full] {
            prop_assert_eq!(values(&env, &class, &f, engine), values(&env, &class, &d, engine));
        }
    }

    #[test]
    fn adding_a_quantifier_never_lowers_the_fragment(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = if rng.gen_bool(0.5) {
            random_state_formula(&mut rng, FormulaShape::ESL_MINUS, 4)
        } else {
            random_ctlstark_formula(&mut rng, 4)
        };
        let before = classify_fragment(&desugar(&f));
        let after = classify_fragment(&desugar(&exists("fresh", f)));
        prop_assert!(before.within(after));
    }

    #[test]
    fn dg_elimination_preserves_values(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = random_env(&mut rng, 3);
        let f = random_state_formula(&mut rng, FormulaShape::ESL_MINUS, 4);
        let class = &small_classes()[rng.gen_range(0..3)];
        let rewritten = rewrite_dg_via_exists(&f);
        prop_assert_eq!(values(&env, class, &f, Engine::Auto), values(&env, class, &rewritten, Engine::Auto));
    }

    #[test]
    fn path_quantifier_is_knowledge_of_state_and_strategies(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = random_env(&mut rng, 4);
        let psi = random_path_formula(&mut rng, 4);
        let class = &classes()[rng.gen_range(0..2)];
        let everyone = [AgentTag::Env, AgentTag::strategic("1"), AgentTag::strategic("2")];
        let a = values(&env, class, &all(psi.clone()), Engine::Auto);
        let d = values(&env, class, &dist(everyone, psi), Engine::Auto);
        prop_assert_eq!(a, d);
    }

    #[test]
    fn larger_groups_know_more(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = random_env(&mut rng, 4);
        let psi = if rng.gen_bool(0.5) {
            random_path_formula(&mut rng, 3)
        } else {
            random_state_formula(&mut rng, FormulaShape::CTLK, 3)
        };
        let class = &classes()[rng.gen_range(0..2)];
        let small = vec![AgentTag::base("1")];
        let mut big = small.clone();
        big.push(if rng.gen_bool(0.5) { AgentTag::strategic("2") } else { AgentTag::base("2") });
        let weak = values(&env, class, &dist(small, psi.clone()), Engine::Auto);
        let strong = values(&env, class, &dist(big, psi), Engine::Auto);
        for (w, s) in weak.iter().zip(&strong) {
            prop_assert!(!w || *s);
        }
    }

    #[test]
    fn path_search_matches_lasso_enumeration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (graph, leaves) = random_graph(&mut rng, 4, 2);
        let leaf_refs: Vec<&[bool]> = leaves.iter().map(Vec::as_slice).collect();
        let mut f = Ltl::new();
        let root = random_ltl(&mut rng, &mut f, 2, 4);
        let found = exists_path(&graph, 0, &f, root, &leaf_refs);
        if let Some(lasso) = &found {
            prop_assert!(is_lasso_of(&graph, 0, lasso));
            prop_assert!(eval_on_lasso(&f, root, &leaf_refs, &lasso.prefix, &lasso.cycle));
        }
        let by_enumeration = enumerate_lassos(&graph, 0, 2 * graph.len() + 2)
            .iter()
            .any(|l| eval_on_lasso(&f, root, &leaf_refs, &l.prefix, &l.cycle));
        prop_assert_eq!(found.is_some(), by_enumeration);
        // the universal dual
        let neg = f.add(LtlNode::Not(root));
        let all_paths = exists_path(&graph, 0, &f, neg, &leaf_refs).is_none();
        if all_paths {
            prop_assert!(by_enumeration);
        }
    }
}
