//! Two-player normal-form games as environments, with Nash and perfect
//! cooperative equilibrium existence formulas and brute-force oracles.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_rational::Ratio;

use crate::env::{Environment, StateId};
use crate::formula::build::*;
use crate::formula::Formula;
use crate::space::{AgentTag, GlobalState};
use crate::strategy::StrategyClass;

pub type Payoff = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("player {0} has no actions")]
    NoActions(usize),
    #[error("player {player} has action `{action}` twice")]
    DuplicateAction { player: usize, action: String },
    #[error("payoff matrix of player {player} is not {rows}x{cols}")]
    Shape { player: usize, rows: usize, cols: usize },
    #[error("{value} is not a utility of player {player}")]
    NotAUtility { player: usize, value: Payoff },
    #[error("players are 0 and 1, not {0}")]
    NoSuchPlayer(usize),
}

/// `payoff[i][a][b]` is player i's utility when 0 plays `a` and 1 plays `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalFormGame {
    pub actions: [Vec<String>; 2],
    pub payoff: [Vec<Vec<Payoff>>; 2],
}

impl NormalFormGame {
    pub fn new(actions: [Vec<String>; 2], payoff: [Vec<Vec<Payoff>>; 2]) -> Result<Self, GameError> {
        for (i, acts) in actions.iter().enumerate() {
            if acts.is_empty() {
                return Err(GameError::NoActions(i));
            }
            let mut seen = BTreeSet::new();
            for a in acts {
                if !seen.insert(a) {
                    return Err(GameError::DuplicateAction {
                        player: i,
                        action: a.clone(),
                    });
                }
            }
        }
        let (rows, cols) = (actions[0].len(), actions[1].len());
        for (i, m) in payoff.iter().enumerate() {
            if m.len() != rows || m.iter().any(|r| r.len() != cols) {
                return Err(GameError::Shape { player: i, rows, cols });
            }
        }
        Ok(NormalFormGame { actions, payoff })
    }

    /// Integer payoffs with actions named `a0, a1, …` and `b0, b1, …`.
    pub fn from_integers(p0: &[Vec<i64>], p1: &[Vec<i64>]) -> Result<Self, GameError> {
        let rows = p0.len();
        let cols = p0.first().map_or(0, Vec::len);
        let names = |prefix: &str, n: usize| (0..n).map(|k| format!("{prefix}{k}")).collect::<Vec<_>>();
        let conv = |m: &[Vec<i64>]| m.iter().map(|r| r.iter().map(|&v| Payoff::from_integer(v)).collect()).collect();
        Self::new([names("a", rows), names("b", cols)], [conv(p0), conv(p1)])
    }

    pub fn utility(&self, i: usize, a: usize, b: usize) -> Payoff {
        self.payoff[i][a][b]
    }

    /// `V_i`, ascending.
    pub fn values(&self, i: usize) -> Vec<Payoff> {
        let set: BTreeSet<Payoff> = self.payoff[i].iter().flatten().copied().collect();
        set.into_iter().collect()
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.actions[1].len();
        (0..self.actions[0].len()).flat_map(move |a| (0..cols).map(move |b| (a, b)))
    }

    fn utility_at(&self, i: usize, cell: (usize, usize)) -> Payoff {
        self.utility(i, cell.0, cell.1)
    }

    /// True when `cell` gives player `i` a best response to the other
    /// player's action in it.
    pub fn is_best_response(&self, i: usize, cell: (usize, usize)) -> bool {
        let u = self.utility_at(i, cell);
        let n = self.actions[i].len();
        (0..n).all(|alt| {
            let other = if i == 0 { (alt, cell.1) } else { (cell.0, alt) };
            self.utility_at(i, other) <= u
        })
    }
}

pub fn utility_atom(i: usize, v: Payoff) -> String {
    format!("u{i}={v}")
}

/// The environment of a game: play happens in the first step from `init`,
/// and each outcome state is absorbing.
#[derive(Debug, Clone)]
pub struct GameEncoding {
    pub env: Environment,
    pub class: StrategyClass,
    /// `outcome[a][b]`
    pub outcome: Vec<Vec<StateId>>,
}

impl GameEncoding {
    /// The joint action a global state's profile plays at `init`.
    pub fn joint_action(&self, g: &GlobalState) -> (usize, usize) {
        let init = self.env.initial()[0];
        let pick = |i: usize| g.profile.0[i].enabled(init).iter().next().expect("nonempty") as usize;
        (pick(0), pick(1))
    }
}

/// Builds the environment of a game. Every state has the same observation,
/// so uniform deterministic profiles are exactly pure strategy pairs.
pub fn game_to_env(game: &NormalFormGame) -> GameEncoding {
    let mut b = Environment::builder();
    for i in 0..2 {
        let name = i.to_string();
        b.agent(&name).expect("fresh agent");
        for a in &game.actions[i] {
            b.action(&name, a).expect("distinct actions");
        }
    }
    b.initial("init");
    b.label("init", "init");
    for i in 0..2 {
        for v in game.values(i) {
            b.prop(&utility_atom(i, v));
        }
    }
    let mut names = alloc::vec![String::from("init")];
    let mut outcome = Vec::new();
    for (x, a) in game.actions[0].iter().enumerate() {
        let mut row = Vec::new();
        for (y, c) in game.actions[1].iter().enumerate() {
            let name = format!("{a}_{c}");
            row.push(b.state(&name));
            names.push(name.clone());
            b.transition("init", &[Some(a), Some(c)], &name).expect("declared actions");
            b.transition(&name, &[None, None], &name).expect("declared actions");
            for i in 0..2 {
                b.label(&name, &utility_atom(i, game.utility(i, x, y)));
            }
        }
        outcome.push(row);
    }
    for i in 0..2 {
        for s in &names {
            b.observe(&i.to_string(), s, "0").expect("declared agent");
        }
    }
    GameEncoding {
        env: b.build(),
        class: StrategyClass::LocallyUniformDeterministic,
        outcome,
    }
}

/// `U_i(v) = X (u_i = v)`.
pub fn utility_formula(game: &NormalFormGame, i: usize, v: Payoff) -> Result<Formula, GameError> {
    if i > 1 {
        return Err(GameError::NoSuchPlayer(i));
    }
    if !game.values(i).contains(&v) {
        return Err(GameError::NotAUtility { player: i, value: v });
    }
    Ok(next(atom(&utility_atom(i, v))))
}

fn u(i: usize, v: Payoff) -> Formula {
    next(atom(&utility_atom(i, v)))
}

/// `⋀_{v'∈V_i} (U_i(v') → v' ≤ v)`, keeping only the conjuncts with `v' > v`.
fn nothing_better(game: &NormalFormGame, i: usize, v: Payoff, guard: Option<&Formula>) -> Formula {
    conj(game.values(i).into_iter().filter(|&w| w > v).map(|w| {
        let premise = match guard {
            Some(g) => and(g.clone(), u(i, w)),
            None => u(i, w),
        };
        not(premise)
    }))
}

/// `BR_i = ⋁_v U_i(v) ∧ K_{σ(-i)} ⋀_{v'} (U_i(v') → v' ≤ v)`.
pub fn best_response(game: &NormalFormGame, i: usize) -> Formula {
    let adversary = AgentTag::strategic(&(1 - i).to_string());
    disj(
        game.values(i)
            .into_iter()
            .map(|v| and(u(i, v), know(adversary.clone(), nothing_better(game, i, v, None)))),
    )
}

/// `¬D[]¬(BR_0 ∧ BR_1)`.
pub fn ne_formula(game: &NormalFormGame) -> Formula {
    somewhere(and(best_response(game, 0), best_response(game, 1)))
}

/// `BU_i = ⋁_v U_i(v) ∧ D[] ⋀_{v'} ((BR_{-i} ∧ U_i(v')) → v' ≤ v)`.
pub fn best_against_responders(game: &NormalFormGame, i: usize) -> Formula {
    let br = best_response(game, 1 - i);
    disj(
        game.values(i)
            .into_iter()
            .map(|v| and(u(i, v), dist([], nothing_better(game, i, v, Some(&br))))),
    )
}

/// `¬D[]¬(BU_0 ∧ BU_1)`.
pub fn pce_formula(game: &NormalFormGame) -> Formula {
    somewhere(and(best_against_responders(game, 0), best_against_responders(game, 1)))
}

/// Pure Nash equilibrium by scanning the cells in row-major order.
pub fn brute_force_ne(game: &NormalFormGame) -> (bool, Option<(usize, usize)>) {
    let found = game
        .cells()
        .find(|&c| game.is_best_response(0, c) && game.is_best_response(1, c));
    (found.is_some(), found)
}

/// Some cell pays each player at least the most it can get from a cell
/// where the other player best-responds.
pub fn brute_force_pce(game: &NormalFormGame) -> bool {
    let threshold = |i: usize| {
        game.cells()
            .filter(|&c| game.is_best_response(1 - i, c))
            .map(|c| game.utility_at(i, c))
            .max()
    };
    let (t0, t1) = (threshold(0), threshold(1));
    game.cells().any(|c| {
        t0.is_none_or(|t| game.utility_at(0, c) >= t) && t1.is_none_or(|t| game.utility_at(1, c) >= t)
    })
}

#[cfg(test)]
mod tests;
