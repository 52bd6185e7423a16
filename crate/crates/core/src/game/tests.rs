use super::*;
use crate::check::{check, CheckOptions, Checker, Engine, Instance};
use crate::formula::render_formula;
use crate::strategy::enumerate_profiles;

fn prisoners_dilemma() -> NormalFormGame {
    let names = |v: [&str; 2]| v.iter().map(|s| String::from(*s)).collect::<Vec<_>>();
    let m = |rows: [[i64; 2]; 2]| rows.iter().map(|r| r.iter().map(|&v| Payoff::from_integer(v)).collect()).collect();
    NormalFormGame::new(
        [names(["cooperate", "defect"]), names(["cooperate", "defect"])],
        [m([[-1, -3], [0, -2]]), m([[-1, 0], [-3, -2]])],
    )
    .unwrap()
}

fn matching_pennies() -> NormalFormGame {
    NormalFormGame::from_integers(&[vec![1, -1], vec![-1, 1]], &[vec![-1, 1], vec![1, -1]]).unwrap()
}

fn verdict(game: &NormalFormGame, f: Formula, engine: Engine) -> crate::check::Verdict {
    let enc = game_to_env(game);
    check(&Instance::new(enc.env, enc.class, f), &CheckOptions::with_engine(engine)).unwrap()
}

#[test]
fn encoding_shape() {
    let g = prisoners_dilemma();
    let enc = game_to_env(&g);
    assert_eq!(enc.env.num_states(), 5);
    assert!(enc.env.validate().is_empty());
    assert_eq!(enumerate_profiles(&enc.env, &enc.class).unwrap().len(), 4);
    let mp = game_to_env(&matching_pennies());
    let s = mp.outcome[0][1];
    let names: Vec<&str> = mp.env.labels(s).iter().map(|&p| mp.env.props().name(p)).collect();
    assert!(names.contains(&"u0=-1") && names.contains(&"u1=1"));
}

#[test]
fn utility_formulas() {
    let g = prisoners_dilemma();
    assert_eq!(render_formula(&utility_formula(&g, 0, Payoff::from_integer(-3)).unwrap()), "X u0=-3");
    assert_eq!(
        utility_formula(&g, 0, Payoff::from_integer(7)),
        Err(GameError::NotAUtility {
            player: 0,
            value: Payoff::from_integer(7)
        })
    );
    let enc = game_to_env(&g);
    let checker = Checker::new(&enc.env, &enc.class, CheckOptions::default()).unwrap();
    let f = utility_formula(&g, 0, Payoff::from_integer(0)).unwrap();
    let values = checker.evaluate(&f, &Default::default(), Engine::Auto).unwrap();
    let space = checker.space();
    for (k, &v) in values.iter().enumerate() {
        let gs = space.global_state(k as u32);
        let s = gs.state;
        let (a, b) = if enc.env.is_initial(s) {
            enc.joint_action(&gs)
        } else {
            let (a, row) = enc.outcome.iter().enumerate().find(|(_, r)| r.contains(&s)).unwrap();
            (a, row.iter().position(|&t| t == s).unwrap())
        };
        assert_eq!(v, g.utility(0, a, b) == Payoff::from_integer(0));
    }
}

#[test]
fn named_games() {
    let pd = prisoners_dilemma();
    assert_eq!(brute_force_ne(&pd), (true, Some((1, 1))));
    let v = verdict(&pd, ne_formula(&pd), Engine::Auto);
    assert!(v.holds);
    let w = v.witness.unwrap();
    assert_eq!(game_to_env(&pd).joint_action(&w), (1, 1));
    let mp = matching_pennies();
    assert_eq!(brute_force_ne(&mp), (false, None));
    assert!(!verdict(&mp, ne_formula(&mp), Engine::Auto).holds);
    assert_eq!(verdict(&pd, pce_formula(&pd), Engine::Auto).holds, brute_force_pce(&pd));
    assert!(brute_force_pce(&pd));
}

#[test]
fn engines_agree_on_equilibria() {
    for g in [prisoners_dilemma(), matching_pennies()] {
        for f in [ne_formula(&g), pce_formula(&g)] {
            let expected = verdict(&g, f.clone(), Engine::CtlStarK).holds;
            assert_eq!(verdict(&g, f.clone(), Engine::Full).holds, expected);
            assert_eq!(verdict(&g, f, Engine::Reduction).holds, expected);
        }
    }
}

#[test]
fn degenerate_games() {
    let single = NormalFormGame::from_integers(&[vec![2]], &[vec![5]]).unwrap();
    assert!(brute_force_pce(&single));
    assert!(verdict(&single, pce_formula(&single), Engine::Auto).holds);
    assert!(verdict(&single, ne_formula(&single), Engine::Auto).holds);
    let constant = NormalFormGame::from_integers(&[vec![0, 0], vec![0, 0]], &[vec![0, 0], vec![0, 0]]).unwrap();
    assert_eq!(brute_force_ne(&constant), (true, Some((0, 0))));
    assert_eq!(
        NormalFormGame::from_integers(&[vec![0, 0], vec![0]], &[vec![0, 0], vec![0, 0]]),
        Err(GameError::Shape {
            player: 0,
            rows: 2,
            cols: 2
        })
    );
}
