use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{validate_formula, Formula, FormulaError, TagSet};
use crate::atel::AtelFormula;
use crate::env::Environment;
use crate::space::AgentTag;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error(transparent)]
    Invalid(#[from] FormulaError),
}

fn err<T>(pos: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Syntax {
        pos,
        msg: msg.into(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Dot,
    Not,
    And,
    Or,
    Implies,
    Iff,
    /// `<<`, opening an ATEL coalition
    LCoal,
    /// `>>`
    RCoal,
    Word(String),
    Quoted(String),
    End,
}

pub(crate) fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '=' | '.' | '/')
}

pub(crate) const KEYWORDS: &[&str] = &[
    "A", "E", "X", "F", "G", "U", "K", "D", "C", "true", "false", "exists", "forall", "loc", "sig",
];

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut k = 0;
    let peek = |k: usize| chars.get(k).map(|&(_, c)| c);
    while k < chars.len() {
        let (pos, c) = chars[k];
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBrack),
            ']' => Some(Tok::RBrack),
            ',' => Some(Tok::Comma),
            '!' | '~' | '¬' => Some(Tok::Not),
            '∧' => Some(Tok::And),
            '∨' => Some(Tok::Or),
            '→' => Some(Tok::Implies),
            '↔' => Some(Tok::Iff),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, pos));
            k += 1;
            continue;
        }
        match c {
            c if c.is_whitespace() => k += 1,
            '&' => {
                k += if peek(k + 1) == Some('&') { 2 } else { 1 };
                out.push((Tok::And, pos));
            }
            '|' => {
                k += if peek(k + 1) == Some('|') { 2 } else { 1 };
                out.push((Tok::Or, pos));
            }
            '-' if peek(k + 1) == Some('>') => {
                k += 2;
                out.push((Tok::Implies, pos));
            }
            '<' if peek(k + 1) == Some('-') && peek(k + 2) == Some('>') => {
                k += 3;
                out.push((Tok::Iff, pos));
            }
            '<' if peek(k + 1) == Some('<') => {
                k += 2;
                out.push((Tok::LCoal, pos));
            }
            '>' if peek(k + 1) == Some('>') => {
                k += 2;
                out.push((Tok::RCoal, pos));
            }
            '⟨' if peek(k + 1) == Some('⟨') => {
                k += 2;
                out.push((Tok::LCoal, pos));
            }
            '⟩' if peek(k + 1) == Some('⟩') => {
                k += 2;
                out.push((Tok::RCoal, pos));
            }
            '∃' | '∀' | 'σ' => {
                let w = match c {
                    '∃' => "exists",
                    '∀' => "forall",
                    _ => "sig",
                };
                out.push((Tok::Word(w.into()), pos));
                k += 1;
            }
            '"' => {
                let mut s = String::new();
                k += 1;
                loop {
                    match peek(k) {
                        None => return err(pos, "unterminated quoted atom"),
                        Some('"') => break,
                        Some('\\') if peek(k + 1).is_some() => {
                            s.push(peek(k + 1).unwrap());
                            k += 2;
                        }
                        Some(ch) => {
                            s.push(ch);
                            k += 1;
                        }
                    }
                }
                k += 1;
                out.push((Tok::Quoted(s), pos));
            }
            c if is_word_char(c) || c == '-' => {
                let mut s = String::new();
                while let Some(ch) = peek(k) {
                    let dash = ch == '-' && peek(k + 1) != Some('>');
                    if is_word_char(ch) || dash {
                        s.push(ch);
                        k += 1;
                    } else {
                        break;
                    }
                }
                let after_binder = matches!(
                    out.last(),
                    Some((Tok::Word(w), _)) if w == "exists" || w == "forall"
                );
                if s == "." {
                    out.push((Tok::Dot, pos));
                } else if let (true, Some(dot)) = (after_binder, s.find('.')) {
                    // `exists x.p`: split the variable from the body
                    out.push((Tok::Word(s[..dot].to_string()), pos));
                    out.push((Tok::Dot, pos + dot));
                    if dot + 1 < s.len() {
                        out.push((Tok::Word(s[dot + 1..].to_string()), pos + dot + 1));
                    }
                } else {
                    out.push((Tok::Word(s), pos));
                }
            }
            _ => return err(pos, alloc::format!("unexpected character `{c}`")),
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            err(self.pos(), alloc::format!("expected {what}"))
        }
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Word(x) if x == w)
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.implies()?;
        while *self.peek() == Tok::Iff {
            self.bump();
            let rhs = self.implies()?;
            lhs = Formula::Iff(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.implies()?;
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.and()?;
            lhs = Formula::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let pos = self.pos();
        let word = match self.peek() {
            Tok::Not => {
                self.bump();
                return Ok(Formula::Not(Box::new(self.unary()?)));
            }
            Tok::Word(w) => w.clone(),
            _ => return self.primary(),
        };
        let boxed = |p: &mut Parser| -> Result<Box<Formula>, ParseError> { Ok(Box::new(p.unary()?)) };
        match word.as_str() {
            "A" => {
                self.bump();
                Ok(Formula::PathAll(boxed(self)?))
            }
            "X" => {
                self.bump();
                Ok(Formula::Next(boxed(self)?))
            }
            "F" => {
                self.bump();
                Ok(Formula::Finally(boxed(self)?))
            }
            "G" => {
                self.bump();
                Ok(Formula::Globally(boxed(self)?))
            }
            "E" => {
                self.bump();
                if *self.peek() == Tok::LBrack {
                    let tags = self.tagset()?;
                    Ok(Formula::Everyone(tags, boxed(self)?))
                } else {
                    Ok(Formula::PathExists(boxed(self)?))
                }
            }
            "K" => {
                self.bump();
                self.expect(Tok::LBrack, "`[` after K")?;
                let tag = self.tag()?;
                self.expect(Tok::RBrack, "`]`")?;
                Ok(Formula::Know(tag, boxed(self)?))
            }
            "D" | "C" => {
                self.bump();
                if *self.peek() != Tok::LBrack {
                    return err(self.pos(), alloc::format!("expected `[` after {word}"));
                }
                let tags = self.tagset()?;
                let body = boxed(self)?;
                Ok(if word == "D" {
                    Formula::Dist(tags, body)
                } else {
                    Formula::Common(tags, body)
                })
            }
            "exists" | "forall" => {
                self.bump();
                let var = self.variable()?;
                self.expect(Tok::Dot, "`.` after quantified variable")?;
                let body = boxed(self)?;
                Ok(if word == "exists" {
                    Formula::Exists(var, body)
                } else {
                    Formula::Forall(var, body)
                })
            }
            "U" => err(pos, "`U` must appear inside parentheses: (φ U ψ)"),
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::LParen => {
                let lhs = self.iff()?;
                if self.is_word("U") {
                    self.bump();
                    let rhs = self.iff()?;
                    self.expect(Tok::RParen, "`)` closing until")?;
                    return Ok(Formula::Until(Box::new(lhs), Box::new(rhs)));
                }
                self.expect(Tok::RParen, "`)`")?;
                Ok(lhs)
            }
            Tok::Quoted(s) => Ok(Formula::Atom(s)),
            Tok::Word(w) => match w.as_str() {
                "true" => Ok(Formula::True),
                "false" => Ok(Formula::False),
                "loc" => {
                    self.expect(Tok::LParen, "`(` after loc")?;
                    let tag = self.tag()?;
                    self.expect(Tok::Comma, "`,` in loc(tag, x)")?;
                    let var = self.variable()?;
                    self.expect(Tok::RParen, "`)` closing loc")?;
                    Ok(Formula::Loc(tag, var))
                }
                kw if super::parse::KEYWORDS.contains(&kw) => {
                    err(pos, alloc::format!("unexpected keyword `{kw}`"))
                }
                _ => Ok(Formula::Atom(w)),
            },
            Tok::End => err(pos, "unexpected end of input"),
            t => err(pos, alloc::format!("unexpected token {t:?}")),
        }
    }

    fn variable(&mut self) -> Result<String, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Word(w) if !KEYWORDS.contains(&w.as_str()) => Ok(w),
            _ => err(pos, "expected a variable name"),
        }
    }

    fn tag(&mut self) -> Result<AgentTag, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Word(w) if w == "e" => Ok(AgentTag::Env),
            Tok::Word(w) if w == "sig" => {
                self.expect(Tok::LParen, "`(` after sig")?;
                let p = self.pos();
                let name = match self.bump() {
                    Tok::Word(a) => a,
                    _ => return err(p, "expected an agent name"),
                };
                self.expect(Tok::RParen, "`)` closing sig")?;
                Ok(AgentTag::Strategic(name))
            }
            Tok::Word(w) => Ok(AgentTag::Base(w)),
            _ => err(pos, "expected an agent tag"),
        }
    }

    fn tagset(&mut self) -> Result<TagSet, ParseError> {
        self.expect(Tok::LBrack, "`[`")?;
        let mut tags = TagSet::new();
        if *self.peek() == Tok::RBrack {
            self.bump();
            return Ok(tags);
        }
        loop {
            tags.insert(self.tag()?);
            match self.bump() {
                Tok::Comma => continue,
                Tok::RBrack => return Ok(tags),
                _ => return err(self.toks[self.at - 1].1, "expected `,` or `]` in tag list"),
            }
        }
    }
}

/// Parses formula text; identifiers are not checked against an environment.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let f = p.iff()?;
    if *p.peek() != Tok::End {
        if p.is_word("U") {
            return err(p.pos(), "`U` must appear inside parentheses: (φ U ψ)");
        }
        return err(p.pos(), "unexpected trailing input");
    }
    Ok(f)
}

/// Parses and checks agents and atoms against `env`.
pub fn parse_formula_for(text: &str, env: &Environment) -> Result<Formula, ParseError> {
    let f = parse_formula(text)?;
    validate_formula(&f, env)?;
    Ok(f)
}

/// Parses ATEL text: the boolean and epistemic syntax of formulas plus
/// `<<G>> X φ`, `<<G>> G φ`, `<<G>> F φ` and `<<G>> (φ U ψ)`.
pub fn parse_atel(text: &str) -> Result<AtelFormula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let f = p.atel_iff()?;
    if *p.peek() != Tok::End {
        return err(p.pos(), "unexpected trailing input");
    }
    Ok(f)
}

impl Parser {
    fn atel_iff(&mut self) -> Result<AtelFormula, ParseError> {
        let mut lhs = self.atel_implies()?;
        while *self.peek() == Tok::Iff {
            self.bump();
            let rhs = self.atel_implies()?;
            lhs = AtelFormula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn atel_implies(&mut self) -> Result<AtelFormula, ParseError> {
        let lhs = self.atel_or()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.atel_implies()?;
            return Ok(AtelFormula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn atel_or(&mut self) -> Result<AtelFormula, ParseError> {
        let mut lhs = self.atel_and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.atel_and()?;
            lhs = AtelFormula::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn atel_and(&mut self) -> Result<AtelFormula, ParseError> {
        let mut lhs = self.atel_unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.atel_unary()?;
            lhs = AtelFormula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn agent_list(&mut self, close: Tok, what: &str) -> Result<BTreeSet<String>, ParseError> {
        let mut out = BTreeSet::new();
        if *self.peek() == close {
            self.bump();
            return Ok(out);
        }
        loop {
            let pos = self.pos();
            match self.bump() {
                Tok::Word(w) if w != "e" && !KEYWORDS.contains(&w.as_str()) => {
                    out.insert(w);
                }
                _ => return err(pos, alloc::format!("expected an agent name in {what}")),
            }
            let pos = self.pos();
            match self.bump() {
                Tok::Comma => continue,
                t if t == close => return Ok(out),
                _ => return err(pos, alloc::format!("expected `,` or the end of {what}")),
            }
        }
    }

    fn atel_unary(&mut self) -> Result<AtelFormula, ParseError> {
        let boxed = |p: &mut Parser| -> Result<Box<AtelFormula>, ParseError> { Ok(Box::new(p.atel_unary()?)) };
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(AtelFormula::Not(boxed(self)?))
            }
            Tok::LCoal => {
                self.bump();
                let group = self.agent_list(Tok::RCoal, "a coalition")?;
                let pos = self.pos();
                match self.bump() {
                    Tok::Word(w) if w == "X" => Ok(AtelFormula::Next(group, boxed(self)?)),
                    Tok::Word(w) if w == "G" => Ok(AtelFormula::Globally(group, boxed(self)?)),
                    Tok::Word(w) if w == "F" => Ok(AtelFormula::Until(
                        group,
                        Box::new(AtelFormula::True),
                        boxed(self)?,
                    )),
                    Tok::LParen => {
                        let lhs = self.atel_iff()?;
                        if !self.is_word("U") {
                            return err(self.pos(), "expected `U` after a coalition");
                        }
                        self.bump();
                        let rhs = self.atel_iff()?;
                        self.expect(Tok::RParen, "`)` closing until")?;
                        Ok(AtelFormula::Until(group, Box::new(lhs), Box::new(rhs)))
                    }
                    _ => err(pos, "expected X, G, F or (φ U ψ) after a coalition"),
                }
            }
            Tok::Word(w) if w == "K" => {
                self.bump();
                self.expect(Tok::LBrack, "`[` after K")?;
                let mut agents = self.agent_list(Tok::RBrack, "K[...]")?;
                if agents.len() != 1 {
                    return err(self.pos(), "K takes exactly one agent");
                }
                let agent = agents.pop_first().unwrap();
                Ok(AtelFormula::Know(agent, boxed(self)?))
            }
            Tok::Word(w) if w == "D" || w == "C" || w == "E" => {
                self.bump();
                self.expect(Tok::LBrack, "`[`")?;
                let group = self.agent_list(Tok::RBrack, "an agent group")?;
                let body = boxed(self)?;
                Ok(match w.as_str() {
                    "D" => AtelFormula::Dist(group, body),
                    "C" => AtelFormula::Common(group, body),
                    _ => AtelFormula::everyone(&group, *body),
                })
            }
            _ => self.atel_primary(),
        }
    }

    fn atel_primary(&mut self) -> Result<AtelFormula, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::LParen => {
                let f = self.atel_iff()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Quoted(s) => Ok(AtelFormula::Atom(s)),
            Tok::Word(w) => match w.as_str() {
                "true" => Ok(AtelFormula::True),
                "false" => Ok(AtelFormula::Not(Box::new(AtelFormula::True))),
                kw if KEYWORDS.contains(&kw) => err(pos, alloc::format!("unexpected keyword `{kw}`")),
                _ => Ok(AtelFormula::Atom(w)),
            },
            Tok::End => err(pos, "unexpected end of input"),
            t => err(pos, alloc::format!("unexpected token {t:?}")),
        }
    }
}
