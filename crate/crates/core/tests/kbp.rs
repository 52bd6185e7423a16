//! Knowledge-based programs: the implementation formula against the
//! fixed-point definition on the handcrafted corpus.

use std::collections::BTreeSet;

use esl_core::check::{check, CheckOptions, Checker, Context, Engine, Instance};
use esl_core::kbp::*;
use esl_core::space::{reach, successors};
use esl_core::strategy::enumerate_profiles;
use esl_core::testkit::kbp_corpus;
use esl_core::{Formula, StrategyClass};

#[test]
fn corpus_has_enough_small_cases() {
    let corpus = kbp_corpus();
    assert!(corpus.len() >= 5);
    for case in &corpus {
        assert!(case.env.num_states() <= 3, "{}", case.name);
        assert!(case.env.validate().is_empty(), "{}", case.name);
        case.program.validate(&case.env).unwrap();
    }
}

#[test]
fn implementation_formula_matches_fixed_points() {
    for case in kbp_corpus() {
        let rec = make_action_recording(&case.env).unwrap();
        let imp = imp_formula(&case.program, &rec).unwrap();
        let checker = Checker::new(&rec.env, &StrategyClass::LocallyUniform, CheckOptions::default()).unwrap();
        let values = checker.evaluate(&imp, &Context::new(), Engine::Auto).unwrap();
        let space = checker.space();
        for alpha in enumerate_profiles(&case.env, &StrategyClass::LocallyUniform).unwrap() {
            let direct = match is_implementation_direct(&case.env, &alpha, &case.program) {
                Ok(b) => b,
                Err(KbpError::Coverage { .. }) => false,
                Err(e) => panic!("{}: {e}", case.name),
            };
            let pid = space.profile_index(&rec.lift(&alpha)).unwrap();
            let points: Vec<bool> = (0..space.len() as u32)
                .filter(|&g| space.profile_id(g) == pid)
                .map(|g| values[g as usize])
                .collect();
            assert!(!points.is_empty());
            // the same value at every point with strategy alpha
            assert!(points.iter().all(|&v| v == points[0]), "{}", case.name);
            assert_eq!(points[0], direct, "{}: {:?}", case.name, alpha);
        }
    }
}

#[test]
fn existence_matches_enumeration_and_witnesses_reverify() {
    for case in kbp_corpus() {
        let found = find_implementations(&case.env, &case.program, &StrategyClass::LocallyUniform).unwrap();
        let v = check_kbp(&case.env, &case.program, &KbpQuery::Exists, CheckOptions::default()).unwrap();
        assert_eq!(v.holds, !found.is_empty(), "{}", case.name);
        match v.witness {
            Some(w) => {
                assert!(is_implementation_direct(&case.env, &w, &case.program).unwrap(), "{}", case.name);
                assert!(found.contains(&w));
            }
            None => assert!(!v.holds, "{}", case.name),
        }
    }
}

#[test]
fn all_implementations_query_matches_enumeration() {
    let properties = ["A F q", "A G !q", "E F p", "K[1] A X (p | q)"];
    for case in kbp_corpus() {
        let found = find_implementations(&case.env, &case.program, &StrategyClass::LocallyUniform).unwrap();
        for text in properties {
            let phi: Formula = esl_core::formula::parse_formula(text).unwrap();
            let expected = found.iter().all(|alpha| {
                let instance = Instance::new(case.env.clone(), StrategyClass::Explicit(vec![alpha.clone()]), Formula::Dist(Default::default(), Box::new(phi.clone())));
                check(&instance, &CheckOptions::default()).unwrap().holds
            });
            let v = check_kbp(&case.env, &case.program, &KbpQuery::AllSatisfy(phi), CheckOptions::default()).unwrap();
            assert_eq!(v.holds, expected, "{}: {}", case.name, text);
        }
    }
}

/// Guards evaluated in the system of a single profile agree with their
/// transform evaluated over the uniform strategy space of the recording.
#[test]
fn guards_as_specified() {
    for case in kbp_corpus() {
        let rec = make_action_recording(&case.env).unwrap();
        let checker = Checker::new(&rec.env, &StrategyClass::LocallyUniform, CheckOptions::default()).unwrap();
        let space = checker.space();
        for (_, guard, _) in case.program.expanded(&case.env) {
            let transformed = dollar_transform(&guard, &rec.env).unwrap();
            let wide = checker.evaluate(&transformed, &Context::new(), Engine::Auto).unwrap();
            for alpha in enumerate_profiles(&case.env, &StrategyClass::LocallyUniform).unwrap() {
                let single = Checker::new(&case.env, &StrategyClass::Explicit(vec![alpha.clone()]), CheckOptions::default()).unwrap();
                let narrow = single.evaluate(&guard, &Context::new(), Engine::Auto).unwrap();
                let narrow_space = single.space();
                let pid = space.profile_index(&rec.lift(&alpha)).unwrap();
                for g in 0..space.len() as u32 {
                    if space.profile_id(g) != pid {
                        continue;
                    }
                    let (s, _) = rec.origin[space.state(g) as usize];
                    let h = narrow_space.gid(s, 0).unwrap();
                    assert_eq!(wide[g as usize], narrow[h as usize], "{}: {:?}", case.name, guard);
                }
            }
        }
    }
}

/// Under a lifted profile the recording environment moves exactly like the
/// source, with the same labels and observations.
#[test]
fn recording_is_bisimilar_to_the_source() {
    for case in kbp_corpus() {
        let env = &case.env;
        let rec = make_action_recording(env).unwrap();
        let initial: BTreeSet<u32> = rec.env.initial().iter().map(|&r| rec.origin[r as usize].0).collect();
        assert_eq!(initial, env.initial().iter().copied().collect());
        for alpha in enumerate_profiles(env, &StrategyClass::LocallyUniform).unwrap() {
            let lifted = rec.lift(&alpha);
            assert_eq!(rec.project(env, &lifted).0.len(), alpha.0.len());
            let reached: BTreeSet<u32> = reach(&rec.env, &lifted).iter().map(|&r| rec.origin[r as usize].0).collect();
            assert_eq!(reached, reach(env, &alpha).into_iter().collect());
            for r in 0..rec.env.num_states() as u32 {
                let (s, _) = rec.origin[r as usize];
                let moved: BTreeSet<u32> = successors(&rec.env, r, &lifted).iter().map(|&t| rec.origin[t as usize].0).collect();
                assert_eq!(moved, successors(env, s, &alpha).into_iter().collect());
                for p in 0..env.props().len() as u32 {
                    let q = rec.env.props().get(env.props().name(p)).unwrap();
                    assert_eq!(rec.env.has_prop(r, q), env.has_prop(s, p));
                }
                for i in 0..env.num_agents() as u32 {
                    let same = |a: u32, b: u32| {
                        (rec.env.observation(i, a) == rec.env.observation(i, b))
                            == (env.observation(i, rec.origin[a as usize].0) == env.observation(i, rec.origin[b as usize].0))
                    };
                    assert!((0..rec.env.num_states() as u32).all(|b| same(r, b)));
                }
            }
        }
    }
}
