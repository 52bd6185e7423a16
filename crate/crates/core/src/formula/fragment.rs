use super::Formula;

/// Syntactic fragments, ordered by inclusion: `CtlK` is below both
/// `EslMinus` and `CtlStarK`, which are below `FullEsl`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum Fragment {
    CtlK,
    EslMinus,
    CtlStarK,
    FullEsl,
}

impl Fragment {
    /// Inclusion order between fragments.
    pub fn within(self, other: Fragment) -> bool {
        use Fragment::*;
        matches!(
            (self, other),
            (CtlK, _) | (EslMinus, EslMinus) | (CtlStarK, CtlStarK) | (_, FullEsl)
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Fragment::CtlK => "CTLK",
            Fragment::EslMinus => "ESL-",
            Fragment::CtlStarK => "CTL*K",
            Fragment::FullEsl => "ESL",
        }
    }
}

/// True when the formula contains no `X`/`U` outside the scope of a path
/// quantifier or knowledge operator, i.e. its truth depends only on the
/// current global state.
pub fn is_state_formula(f: &Formula) -> bool {
    use Formula::*;
    match f {
        Atom(_) | True | False | Loc(..) => true,
        PathAll(_) | PathExists(_) | Dist(..) | Know(..) | Everyone(..) => true,
        // C over the empty group is the identity relation
        Common(g, a) => !g.is_empty() || is_state_formula(a),
        Next(_) | Until(..) | Finally(_) | Globally(_) => false,
        Not(a) | Exists(_, a) | Forall(_, a) => is_state_formula(a),
        And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b) => is_state_formula(a) && is_state_formula(b),
    }
}

/// Least fragment admitting a desugared formula.
pub fn classify_fragment(f: &Formula) -> Fragment {
    let quantified = {
        let mut q = false;
        f.walk(&mut |g| {
            if matches!(g, Formula::Exists(..) | Formula::Forall(..) | Formula::Loc(..)) {
                q = true;
            }
        });
        q
    };
    let ctl_shaped = is_state_formula(f) && ctl_state(f);
    match (ctl_shaped, quantified) {
        (true, false) => Fragment::CtlK,
        (true, true) => Fragment::EslMinus,
        (false, false) => Fragment::CtlStarK,
        (false, true) => Fragment::FullEsl,
    }
}

/// Every temporal operator sits directly under `A` (through negations) with
/// state-formula arguments.
fn ctl_state(f: &Formula) -> bool {
    use Formula::*;
    match f {
        Atom(_) | True | False | Loc(..) => true,
        Not(a) | Exists(_, a) | Dist(_, a) => ctl_state(a),
        Common(g, a) => !g.is_empty() && ctl_state(a),
        And(a, b) | Or(a, b) => ctl_state(a) && ctl_state(b),
        PathAll(a) => {
            let mut inner = &**a;
            while let Not(b) = inner {
                inner = b;
            }
            match inner {
                Next(b) => is_state_formula(b) && ctl_state(b),
                Until(b, c) => {
                    is_state_formula(b) && ctl_state(b) && is_state_formula(c) && ctl_state(c)
                }
                other => is_state_formula(other) && ctl_state(other),
            }
        }
        // sugar and bare temporal operators are outside the CTL shape
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{desugar, parse_formula};

    fn class(s: &str) -> Fragment {
        classify_fragment(&desugar(&parse_formula(s).unwrap()))
    }

    #[test]
    fn examples() {
        assert_eq!(class("A X p"), Fragment::CtlK);
        assert_eq!(class("!A!(p U q)"), Fragment::CtlK);
        assert_eq!(class("X p"), Fragment::CtlStarK);
        assert_eq!(class("A G p"), Fragment::CtlK);
        assert_eq!(class("E F K[1] p"), Fragment::CtlK);
        assert_eq!(class("A (X p & X q)"), Fragment::CtlStarK);
        assert_eq!(class("D[1] X p"), Fragment::CtlStarK);
        assert_eq!(class("exists x . loc(1,x)"), Fragment::EslMinus);
        assert_eq!(class("exists x . A X loc(1,x)"), Fragment::EslMinus);
        assert_eq!(class("exists x . A (loc(1,x) U X p)"), Fragment::FullEsl);
    }

    #[test]
    fn inclusion_order() {
        use Fragment::*;
        assert!(CtlK.within(EslMinus) && CtlK.within(CtlStarK) && CtlK.within(FullEsl));
        assert!(!EslMinus.within(CtlStarK) && !CtlStarK.within(EslMinus));
        assert!(!FullEsl.within(EslMinus));
    }
}
