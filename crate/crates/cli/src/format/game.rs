//! Two-player normal-form games.
//!
//! ```text
//! actions 0: cooperate defect
//! actions 1: cooperate defect
//! cooperate cooperate: -1 -1
//! cooperate defect: -3 0
//! defect cooperate: 0 -3
//! defect defect: -2 -2
//! ```
//!
//! Each cell line gives the row player's and the column player's payoff;
//! payoffs are integers or fractions such as `3/2`.

use esl_core::game::{NormalFormGame, Payoff};

use super::{content_lines, FormatError};

fn payoff(line: usize, text: &str) -> Result<Payoff, FormatError> {
    let bad = || FormatError::new(line, format!("`{text}` is not an integer or fraction"));
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.parse::<i64>().map_err(|_| bad())?, d.parse::<i64>().map_err(|_| bad())?),
        None => (text.parse::<i64>().map_err(|_| bad())?, 1),
    };
    if den == 0 {
        return Err(FormatError::new(line, "zero denominator"));
    }
    Ok(Payoff::new(num, den))
}

pub fn parse_game(text: &str) -> Result<NormalFormGame, FormatError> {
    let mut actions: [Option<Vec<String>>; 2] = [None, None];
    let mut cells = Vec::new();
    for (line, content) in content_lines(text) {
        let (head, rest) = content
            .split_once(':')
            .ok_or_else(|| FormatError::new(line, "expected `:`"))?;
        let head: Vec<&str> = head.split_whitespace().collect();
        match head[..] {
            ["actions", p] => {
                let i: usize = match p {
                    "0" => 0,
                    "1" => 1,
                    _ => return Err(FormatError::new(line, "players are 0 and 1")),
                };
                if actions[i].is_some() {
                    return Err(FormatError::new(line, format!("actions of player {i} given twice")));
                }
                actions[i] = Some(rest.split_whitespace().map(String::from).collect());
            }
            [a, b] => {
                let values: Vec<&str> = rest.split_whitespace().collect();
                let [u0, u1] = values[..] else {
                    return Err(FormatError::new(line, "expected two payoffs"));
                };
                cells.push((line, a, b, payoff(line, u0)?, payoff(line, u1)?));
            }
            _ => return Err(FormatError::new(line, "expected `actions <player>:` or `<row> <col>: <u0> <u1>`")),
        }
    }
    let [Some(rows), Some(cols)] = actions else {
        return Err(FormatError::new(0, "both players need an `actions` line"));
    };
    let mut table: [Vec<Vec<Option<Payoff>>>; 2] = [
        vec![vec![None; cols.len()]; rows.len()],
        vec![vec![None; cols.len()]; rows.len()],
    ];
    for (line, a, b, u0, u1) in cells {
        let x = rows
            .iter()
            .position(|r| r == a)
            .ok_or_else(|| FormatError::new(line, format!("unknown action `{a}` of player 0")))?;
        let y = cols
            .iter()
            .position(|c| c == b)
            .ok_or_else(|| FormatError::new(line, format!("unknown action `{b}` of player 1")))?;
        if table[0][x][y].is_some() {
            return Err(FormatError::new(line, format!("cell `{a} {b}` given twice")));
        }
        table[0][x][y] = Some(u0);
        table[1][x][y] = Some(u1);
    }
    let mut payoff: [Vec<Vec<Payoff>>; 2] = [Vec::new(), Vec::new()];
    for (x, a) in rows.iter().enumerate() {
        for (y, b) in cols.iter().enumerate() {
            if table[0][x][y].is_none() {
                return Err(FormatError::new(0, format!("cell `{a} {b}` is missing")));
            }
        }
    }
    for i in 0..2 {
        payoff[i] = table[i]
            .iter()
            .map(|r| r.iter().map(|v| v.expect("checked")).collect())
            .collect();
    }
    NormalFormGame::new([rows, cols], payoff).map_err(|e| FormatError::new(0, e.to_string()))
}

pub fn render_game(game: &NormalFormGame) -> String {
    let mut out = String::new();
    for (i, acts) in game.actions.iter().enumerate() {
        out.push_str(&format!("actions {i}: {}\n", acts.join(" ")));
    }
    for (a, b) in game.cells() {
        out.push_str(&format!(
            "{} {}: {} {}\n",
            game.actions[0][a],
            game.actions[1][b],
            game.utility(0, a, b),
            game.utility(1, a, b)
        ));
    }
    out
}
