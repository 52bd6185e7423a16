//! A small payment scenario for experimenting with erasure properties.
//!
//! Customer `C` pays with card number `cc ∈ {0, 1}`; processor `P` holds a
//! copy `stored`. When merchant `M` acknowledges (`ack`) the transaction
//! closes and `P` overwrites `stored` with a random value; when `M` stays
//! silent (`skip`) a timeout closes it with the card number still stored.
//! Attacker `A` may `exploit` at any step, copying `stored` into a
//! variable only `A` observes. Closing the transaction sets `done`;
//! copying sets `exploited`.

use esl_core::formula::build::*;
use esl_core::{AgentTag, Environment, Formula};

pub const CARDS: [u8; 2] = [0, 1];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    Open,
    Acked,
    TimedOut,
}

#[derive(Clone, Copy)]
struct Point {
    cc: u8,
    phase: Phase,
    stored: u8,
    copy: Option<u8>,
}

impl Point {
    fn name(self) -> String {
        let phase = match self.phase {
            Phase::Open => "open",
            Phase::Acked => "acked",
            Phase::TimedOut => "timeout",
        };
        let copy = self.copy.map_or("none".to_string(), |c| c.to_string());
        format!("cc{}_{phase}_st{}_cp{copy}", self.cc, self.stored)
    }

    fn done(self) -> bool {
        self.phase != Phase::Open
    }
}

fn all_points() -> Vec<Point> {
    let mut out = Vec::new();
    for cc in CARDS {
        for phase in [Phase::Open, Phase::Acked, Phase::TimedOut] {
            for stored in CARDS {
                // only an acknowledged transaction randomizes the stored value
                if phase != Phase::Acked && stored != cc {
                    continue;
                }
                for copy in [None, Some(0), Some(1)] {
                    out.push(Point { cc, phase, stored, copy });
                }
            }
        }
    }
    out
}

fn cc_atom(x: u8) -> String {
    format!("cc={x}")
}

/// The environment. Every state is a point of the scenario; the initial
/// states are the open transactions before any exploit.
pub fn erasure_env() -> Environment {
    let mut b = Environment::builder();
    for (agent, actions) in [
        ("C", &["pay"][..]),
        ("M", &["ack", "skip"][..]),
        ("P", &["idle"][..]),
        ("A", &["exploit", "wait"][..]),
    ] {
        b.agent(agent).expect("fresh agent");
        for a in actions {
            b.action(agent, a).expect("fresh action");
        }
    }
    let points = all_points();
    for &p in &points {
        b.state(&p.name());
    }
    for &p in &points {
        if p.phase == Phase::Open && p.copy.is_none() {
            b.initial(&p.name());
        }
    }
    for x in CARDS {
        b.prop(&cc_atom(x));
    }
    b.prop("done");
    b.prop("exploited");
    for &p in &points {
        let s = p.name();
        b.label(&s, &cc_atom(p.cc));
        if p.done() {
            b.label(&s, "done");
        }
        if p.copy.is_some() {
            b.label(&s, "exploited");
        }
        let open = if p.done() { "closed" } else { "open" };
        b.observe("C", &s, &format!("cc{}-{open}", p.cc)).expect("declared agent");
        b.observe("M", &s, open).expect("declared agent");
        b.observe("P", &s, &format!("stored{}", p.stored)).expect("declared agent");
        let seen = p.copy.map_or("none".to_string(), |c| c.to_string());
        b.observe("A", &s, &format!("copy{seen}")).expect("declared agent");
    }
    for &p in &points {
        for (attack, copy) in [("exploit", Some(p.stored)), ("wait", p.copy)] {
            let moves: Vec<(Option<&str>, Point)> = match p.phase {
                Phase::Open => {
                    let mut m: Vec<_> = CARDS
                        .iter()
                        .map(|&stored| {
                            let q = Point {
                                phase: Phase::Acked,
                                stored,
                                copy,
                                ..p
                            };
                            (Some("ack"), q)
                        })
                        .collect();
                    let timed_out = Point {
                        phase: Phase::TimedOut,
                        copy,
                        ..p
                    };
                    m.push((Some("skip"), timed_out));
                    m
                }
                _ => vec![(None, Point { copy, ..p })],
            };
            for (merchant, q) in moves {
                b.transition(&p.name(), &[None, merchant, None, Some(attack)], &q.name())
                    .expect("declared actions");
            }
        }
    }
    b.build()
}

fn ruled_out_by(tags: &[AgentTag]) -> Formula {
    disj(CARDS.map(|x| dist(tags.iter().cloned(), not(atom(&cc_atom(x))))))
}

fn tag(name: &str) -> AgentTag {
    AgentTag::base(name)
}

fn sig(name: &str) -> AgentTag {
    AgentTag::strategic(name)
}

/// Named demo properties, each of the form "some behaviour reaches a bad
/// point".
pub fn erasure_formulas() -> Vec<(&'static str, Formula)> {
    let done = atom("done");
    let after_close = |knower: Formula| and(done.clone(), and(not(atom("exploited")), ef(knower)));
    vec![
        // the processor's state still rules out some card number
        ("residue", somewhere(and(done.clone(), ruled_out_by(&[tag("P")])))),
        ("residue-known-merchant", somewhere(and(done.clone(), ruled_out_by(&[tag("P"), sig("M")])))),
        ("attack", somewhere(after_close(ruled_out_by(&[tag("A"), sig("A")])))),
        ("collusion", somewhere(after_close(ruled_out_by(&[tag("A"), sig("A"), sig("M")])))),
    ]
}

fn ef(f: Formula) -> Formula {
    Formula::PathExists(Box::new(Formula::Finally(Box::new(f))))
}
