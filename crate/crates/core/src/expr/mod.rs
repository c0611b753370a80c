//! The utility-expression language.
//!
//! Utilities are written in call syntax, e.g.
//!
//! ```text
//! if(eq(prob(2, intends(1, actual(1))), 0), 1, 0)
//! ```
//!
//! `prob(j, ev)` is player `j`'s degree of belief in an event,
//! `expect(j, e)` is `j`'s expectation of `e`, and `intends(k, σ)` is the
//! event that player `k`'s intended strategy is `σ`. Evaluation happens
//! either over a type space ([`eval()`]) or over a belief hierarchy (see
//! [`crate::psych`]); the arithmetic core is shared.

mod eval;
mod parser;

use std::fmt;

use crate::model::{GameKind, GameModel, Roster, StrategyMode};
use crate::rational::Rational;
use crate::Violation;

pub(crate) use eval::{
    action_of, eval_with, event_holds, linear_extension, player_of, Frame, IntentionView,
};
pub use eval::{eval, eval_utility, linearize, EvalContext, EvalError};
pub use parser::{parse_expr, SyntaxError};

/// Nesting bound for `expect` inside one utility.
pub const MAX_EXPECT_DEPTH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Min,
    Max,
}

impl BinOp {
    fn name(self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
            BinOp::Div => "div",
            BinOp::Min => "min",
            BinOp::Max => "max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn name(self) -> &'static str {
        match self {
            CmpOp::Eq => "eq",
            CmpOp::Lt => "lt",
            CmpOp::Le => "le",
            CmpOp::Gt => "gt",
            CmpOp::Ge => "ge",
        }
    }

    pub fn apply(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum UtilityExpr {
    Const(Rational),
    Binary(BinOp, Box<UtilityExpr>, Box<UtilityExpr>),
    Neg(Box<UtilityExpr>),
    If(Box<CondExpr>, Box<UtilityExpr>, Box<UtilityExpr>),
    Prob {
        observer: String,
        event: Box<EventExpr>,
    },
    Expect {
        observer: String,
        body: Box<UtilityExpr>,
    },
    ActualProb {
        player: String,
        action: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CondExpr {
    Compare(CmpOp, Box<UtilityExpr>, Box<UtilityExpr>),
    And(Box<CondExpr>, Box<CondExpr>),
    Or(Box<CondExpr>, Box<CondExpr>),
    Not(Box<CondExpr>),
    /// The event holds at the state being evaluated.
    Holds(Box<EventExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EventExpr {
    Intends {
        player: String,
        target: IntentTarget,
    },
    TypeIs {
        player: String,
        ty: String,
    },
    StateIn(Vec<String>),
    And(Box<EventExpr>, Box<EventExpr>),
    Or(Box<EventExpr>, Box<EventExpr>),
    Not(Box<EventExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum IntentTarget {
    Action(String),
    /// Whatever the named player actually plays in the evaluation context.
    ActualOf(String),
    Mixture(Vec<(String, Rational)>),
}

impl fmt::Display for UtilityExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UtilityExpr::Const(r) => write!(f, "{r}"),
            UtilityExpr::Binary(op, a, b) => write!(f, "{}({a}, {b})", op.name()),
            UtilityExpr::Neg(a) => write!(f, "neg({a})"),
            UtilityExpr::If(c, a, b) => write!(f, "if({c}, {a}, {b})"),
            UtilityExpr::Prob { observer, event } => write!(f, "prob({observer}, {event})"),
            UtilityExpr::Expect { observer, body } => write!(f, "expect({observer}, {body})"),
            UtilityExpr::ActualProb { player, action } => {
                write!(f, "actual_prob({player}, {action})")
            }
        }
    }
}

impl fmt::Display for CondExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CondExpr::Compare(op, a, b) => write!(f, "{}({a}, {b})", op.name()),
            CondExpr::And(a, b) => write!(f, "and({a}, {b})"),
            CondExpr::Or(a, b) => write!(f, "or({a}, {b})"),
            CondExpr::Not(a) => write!(f, "not({a})"),
            CondExpr::Holds(e) => write!(f, "holds({e})"),
        }
    }
}

impl fmt::Display for EventExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventExpr::Intends { player, target } => write!(f, "intends({player}, {target})"),
            EventExpr::TypeIs { player, ty } => write!(f, "type_is({player}, {ty})"),
            EventExpr::StateIn(states) => write!(f, "state_in({})", states.join(", ")),
            EventExpr::And(a, b) => write!(f, "and({a}, {b})"),
            EventExpr::Or(a, b) => write!(f, "or({a}, {b})"),
            EventExpr::Not(a) => write!(f, "not({a})"),
        }
    }
}

impl fmt::Display for IntentTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntentTarget::Action(a) => f.write_str(a),
            IntentTarget::ActualOf(p) => write!(f, "actual({p})"),
            IntentTarget::Mixture(parts) => {
                let body: Vec<String> = parts.iter().map(|(a, p)| format!("{a}: {p}")).collect();
                write!(f, "{{{}}}", body.join(", "))
            }
        }
    }
}

impl UtilityExpr {
    /// Deepest nesting of `expect`.
    pub fn expect_depth(&self) -> usize {
        match self {
            UtilityExpr::Const(_) | UtilityExpr::ActualProb { .. } | UtilityExpr::Prob { .. } => 0,
            UtilityExpr::Binary(_, a, b) => a.expect_depth().max(b.expect_depth()),
            UtilityExpr::Neg(a) => a.expect_depth(),
            UtilityExpr::If(c, a, b) => {
                c.expect_depth().max(a.expect_depth()).max(b.expect_depth())
            }
            UtilityExpr::Expect { body, .. } => 1 + body.expect_depth(),
        }
    }

    /// Deepest nesting of belief operators (`prob` and `expect`); the order of
    /// beliefs the expression reads.
    pub fn belief_depth(&self) -> usize {
        match self {
            UtilityExpr::Const(_) | UtilityExpr::ActualProb { .. } => 0,
            UtilityExpr::Prob { .. } => 1,
            UtilityExpr::Binary(_, a, b) => a.belief_depth().max(b.belief_depth()),
            UtilityExpr::Neg(a) => a.belief_depth(),
            UtilityExpr::If(c, a, b) => {
                c.belief_depth().max(a.belief_depth()).max(b.belief_depth())
            }
            UtilityExpr::Expect { body, .. } => 1 + body.belief_depth(),
        }
    }

    /// Whether any `intends` event appears.
    pub fn mentions_intentions(&self) -> bool {
        match self {
            UtilityExpr::Const(_) | UtilityExpr::ActualProb { .. } => false,
            UtilityExpr::Prob { event, .. } => event.mentions_intentions(),
            UtilityExpr::Binary(_, a, b) => a.mentions_intentions() || b.mentions_intentions(),
            UtilityExpr::Neg(a) => a.mentions_intentions(),
            UtilityExpr::If(c, a, b) => {
                c.mentions_intentions() || a.mentions_intentions() || b.mentions_intentions()
            }
            UtilityExpr::Expect { body, .. } => body.mentions_intentions(),
        }
    }
}

impl CondExpr {
    fn expect_depth(&self) -> usize {
        match self {
            CondExpr::Compare(_, a, b) => a.expect_depth().max(b.expect_depth()),
            CondExpr::And(a, b) | CondExpr::Or(a, b) => a.expect_depth().max(b.expect_depth()),
            CondExpr::Not(a) => a.expect_depth(),
            CondExpr::Holds(_) => 0,
        }
    }

    fn belief_depth(&self) -> usize {
        match self {
            CondExpr::Compare(_, a, b) => a.belief_depth().max(b.belief_depth()),
            CondExpr::And(a, b) | CondExpr::Or(a, b) => a.belief_depth().max(b.belief_depth()),
            CondExpr::Not(a) => a.belief_depth(),
            CondExpr::Holds(_) => 0,
        }
    }

    fn mentions_intentions(&self) -> bool {
        match self {
            CondExpr::Compare(_, a, b) => a.mentions_intentions() || b.mentions_intentions(),
            CondExpr::And(a, b) | CondExpr::Or(a, b) => {
                a.mentions_intentions() || b.mentions_intentions()
            }
            CondExpr::Not(a) => a.mentions_intentions(),
            CondExpr::Holds(e) => e.mentions_intentions(),
        }
    }
}

impl EventExpr {
    fn mentions_intentions(&self) -> bool {
        match self {
            EventExpr::Intends { .. } => true,
            EventExpr::TypeIs { .. } | EventExpr::StateIn(_) => false,
            EventExpr::And(a, b) | EventExpr::Or(a, b) => {
                a.mentions_intentions() || b.mentions_intentions()
            }
            EventExpr::Not(a) => a.mentions_intentions(),
        }
    }
}

/// Name-resolution and well-formedness checks shared by type-space games and
/// psychological games. Type and state atoms are only legal when `space` is
/// given.
pub(crate) struct Checker<'a, R: Roster + ?Sized> {
    pub roster: &'a R,
    pub space: Option<&'a GameModel>,
    pub out: Vec<Violation>,
}

impl<'a, R: Roster + ?Sized> Checker<'a, R> {
    pub fn new(roster: &'a R, space: Option<&'a GameModel>) -> Self {
        Checker {
            roster,
            space,
            out: Vec::new(),
        }
    }

    fn player(&mut self, name: &str, code: &str) -> Option<usize> {
        let idx = self.roster.player_index(name);
        if idx.is_none() {
            self.out
                .push(Violation::new(code, format!("no player named {name:?}")));
        }
        idx
    }

    fn action(&mut self, player: usize, name: &str) {
        if self.roster.action_index(player, name).is_none() {
            self.out.push(Violation::new(
                "unknown-action",
                format!(
                    "player {} has no action named {name:?}",
                    self.roster.players()[player]
                ),
            ));
        }
    }

    pub fn utility(&mut self, e: &UtilityExpr) {
        match e {
            UtilityExpr::Const(_) => {}
            UtilityExpr::Binary(_, a, b) => {
                self.utility(a);
                self.utility(b);
            }
            UtilityExpr::Neg(a) => self.utility(a),
            UtilityExpr::If(c, a, b) => {
                self.cond(c);
                self.utility(a);
                self.utility(b);
            }
            UtilityExpr::Prob { observer, event } => {
                self.player(observer, "unknown-player");
                self.event(event);
            }
            UtilityExpr::Expect { observer, body } => {
                self.player(observer, "unknown-player");
                self.utility(body);
            }
            UtilityExpr::ActualProb { player, action } => {
                if let Some(i) = self.player(player, "unknown-player") {
                    self.action(i, action);
                }
            }
        }
    }

    fn cond(&mut self, c: &CondExpr) {
        match c {
            CondExpr::Compare(_, a, b) => {
                self.utility(a);
                self.utility(b);
            }
            CondExpr::And(a, b) | CondExpr::Or(a, b) => {
                self.cond(a);
                self.cond(b);
            }
            CondExpr::Not(a) => self.cond(a),
            CondExpr::Holds(e) => self.event(e),
        }
    }

    fn event(&mut self, ev: &EventExpr) {
        match ev {
            EventExpr::Intends { player, target } => {
                let Some(i) = self.player(player, "unknown-player") else {
                    return;
                };
                match target {
                    IntentTarget::Action(a) => self.action(i, a),
                    IntentTarget::ActualOf(j) => {
                        self.player(j, "unbound-actual");
                    }
                    IntentTarget::Mixture(parts) => {
                        for (a, _) in parts {
                            self.action(i, a);
                        }
                        let total: Rational = parts.iter().map(|(_, p)| p).sum();
                        if !total.is_one() || parts.iter().any(|(_, p)| p.is_negative()) {
                            self.out.push(Violation::new(
                                "invalid-mixture",
                                format!("mixture literal {target} is not a distribution"),
                            ));
                        }
                        let distinct = parts.iter().filter(|(_, p)| !p.is_zero()).count();
                        if distinct > 1 && self.roster.mode(i) == StrategyMode::Pure {
                            self.out.push(Violation::new(
                                "mixed-strategy-in-pure-mode",
                                format!("mixture literal {target} for pure-mode player {player}"),
                            ));
                        }
                    }
                }
            }
            EventExpr::TypeIs { player, ty } => {
                let i = self.player(player, "unknown-player");
                match (self.space, i) {
                    (None, _) => self.out.push(Violation::new(
                        "type-space-atom-in-psych",
                        format!("type_is({player}, {ty}) needs a type space"),
                    )),
                    (Some(m), Some(i)) => {
                        if m.type_index(i, ty).is_none() {
                            self.out.push(Violation::new(
                                "unknown-type",
                                format!("player {player} has no type named {ty:?}"),
                            ));
                        }
                    }
                    (Some(_), None) => {}
                }
            }
            EventExpr::StateIn(states) => match self.space {
                None => self.out.push(Violation::new(
                    "type-space-atom-in-psych",
                    format!("{ev} needs a type space"),
                )),
                Some(m) => {
                    for s in states {
                        if m.state_index(s).is_none() {
                            self.out.push(Violation::new(
                                "unknown-state",
                                format!("no state named {s:?}"),
                            ));
                        }
                    }
                }
            },
            EventExpr::And(a, b) | EventExpr::Or(a, b) => {
                self.event(a);
                self.event(b);
            }
            EventExpr::Not(a) => self.event(a),
        }
    }
}

/// Checks an expression against the game it belongs to.
pub fn validate_expr(e: &UtilityExpr, model: &GameModel) -> Vec<Violation> {
    let mut checker = Checker::new(model, Some(model));
    checker.utility(e);
    let mut out = checker.out;
    if model.kind == GameKind::Bayesian && e.mentions_intentions() {
        out.push(Violation::new(
            "intention-event-in-bayesian-game",
            "intends(...) is meaningless in a game without intentions",
        ));
    }
    let depth = e.expect_depth();
    if depth > MAX_EXPECT_DEPTH {
        out.push(Violation::new(
            "expect-depth-exceeded",
            format!("expect nests {depth} deep, bound is {MAX_EXPECT_DEPTH}"),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::FiniteDistribution;
    use crate::model::{Strategy, TypeStrategyMap};

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn two_player(kind: GameKind) -> GameModel {
        GameModel {
            kind,
            players: names(&["1", "2"]),
            states: names(&["w"]),
            actions: vec![names(&["bold", "timid"]), names(&["*"])],
            strategy_mode: vec![StrategyMode::Pure; 2],
            types: vec![names(&["t1"]), names(&["t2"])],
            signals: vec![vec![0], vec![0]],
            beliefs: vec![
                vec![FiniteDistribution::point(0)],
                vec![FiniteDistribution::point(0)],
            ],
            intentions: (kind == GameKind::Bgii)
                .then(|| TypeStrategyMap(vec![vec![Strategy::Pure(0)], vec![Strategy::Pure(0)]])),
            utilities: vec![UtilityExpr::Const(Rational::zero()); 2],
        }
    }

    fn codes(e: &str, m: &GameModel) -> Vec<String> {
        validate_expr(&parse_expr(e).unwrap(), m)
            .into_iter()
            .map(|v| v.code)
            .collect()
    }

    #[test]
    fn well_formed_expression_validates() {
        let m = two_player(GameKind::Bgi);
        assert!(codes("sub(2, expect(1, prob(2, intends(1, bold))))", &m).is_empty());
        assert!(codes("if(eq(prob(2, intends(1, actual(1))), 0), 1, 0)", &m).is_empty());
        assert!(codes("if(holds(and(type_is(1, t1), state_in(w))), 1, 0)", &m).is_empty());
    }

    #[test]
    fn unknown_identifiers() {
        let m = two_player(GameKind::Bgi);
        assert_eq!(
            codes("prob(3, intends(1, bold))", &m),
            vec!["unknown-player"]
        );
        assert_eq!(codes("actual_prob(1, brave)", &m), vec!["unknown-action"]);
        assert_eq!(codes("prob(1, type_is(2, t9))", &m), vec!["unknown-type"]);
        assert_eq!(codes("prob(1, state_in(w, v))", &m), vec!["unknown-state"]);
        assert_eq!(
            codes("prob(1, intends(1, actual(7)))", &m),
            vec!["unbound-actual"]
        );
    }

    #[test]
    fn intentions_rejected_in_bayesian_games() {
        let m = two_player(GameKind::Bayesian);
        assert_eq!(
            codes("prob(2, intends(1, bold))", &m),
            vec!["intention-event-in-bayesian-game"]
        );
        assert!(codes("prob(2, type_is(1, t1))", &m).is_empty());
    }

    #[test]
    fn expect_depth_bound() {
        let m = two_player(GameKind::Bgi);
        let ok = "expect(1, expect(2, expect(1, expect(2, 1))))";
        assert!(codes(ok, &m).is_empty());
        let deep = "expect(1, expect(2, expect(1, expect(2, expect(1, 1)))))";
        assert_eq!(codes(deep, &m), vec!["expect-depth-exceeded"]);
    }

    #[test]
    fn mixture_literals() {
        let mut m = two_player(GameKind::Bgi);
        assert_eq!(
            codes("prob(2, intends(1, {bold: 1/2, timid: 1/2}))", &m),
            vec!["mixed-strategy-in-pure-mode"]
        );
        m.strategy_mode[0] = StrategyMode::MixedLinear;
        assert!(codes("prob(2, intends(1, {bold: 1/2, timid: 1/2}))", &m).is_empty());
        assert_eq!(
            codes("prob(2, intends(1, {bold: 1/2, timid: 1/3}))", &m),
            vec!["invalid-mixture"]
        );
    }

    #[test]
    fn depths() {
        let e = parse_expr("sub(2, expect(1, prob(2, intends(1, bold))))").unwrap();
        assert_eq!(e.expect_depth(), 1);
        assert_eq!(e.belief_depth(), 2);
        assert!(e.mentions_intentions());
        assert_eq!(parse_expr("7/3").unwrap().belief_depth(), 0);
    }
}
