use std::fmt;

use thiserror::Error;

use super::{BinOp, CondExpr, EventExpr, IntentTarget, UtilityExpr};
use crate::distribution::FiniteDistribution;
use crate::model::{GameModel, Roster, Strategy, StrategyMode, TypeStrategyMap};
use crate::rational::Rational;

/// Child-index path from the root of an expression to a subtree.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExprPath(pub Vec<usize>);

impl fmt::Display for ExprPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("/");
        }
        for i in &self.0 {
            write!(f, "/{i}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero at {path}")]
    DivisionByZero { path: ExprPath },
    #[error("unknown player {0:?}")]
    UnknownPlayer(String),
    #[error("player {player} has no action {action:?}")]
    UnknownAction { player: String, action: String },
    #[error("player {player} has no type {ty:?}")]
    UnknownType { player: String, ty: String },
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("intends(...) evaluated without an intention profile")]
    NoIntentions,
    #[error("mixture literal {0} is not a distribution")]
    InvalidMixture(String),
    #[error("player {0} is not mixed-linear")]
    ModeMismatch(String),
    #[error("no belief of player {0} is available at this point")]
    MissingBelief(String),
    #[error("the intention of player {0} is not determined at this point")]
    MissingIntention(String),
    #[error("{0} refers to a type space")]
    TypeSpaceAtom(String),
}

impl EvalError {
    fn under(mut self, child: usize) -> Self {
        if let EvalError::DivisionByZero { path } = &mut self {
            path.0.insert(0, child);
        }
        self
    }
}

/// Where belief operators and actual play get their meaning.
pub(crate) trait Frame {
    fn prob(&self, observer: &str, event: &EventExpr) -> Result<Rational, EvalError>;
    fn expect(&self, observer: &str, body: &UtilityExpr) -> Result<Rational, EvalError>;
    fn actual_prob(&self, player: &str, action: &str) -> Result<Rational, EvalError>;
    fn holds(&self, event: &EventExpr) -> Result<bool, EvalError>;
}

fn child<F: Frame>(e: &UtilityExpr, frame: &F, idx: usize) -> Result<Rational, EvalError> {
    eval_with(e, frame).map_err(|err| err.under(idx))
}

pub(crate) fn eval_with<F: Frame>(e: &UtilityExpr, frame: &F) -> Result<Rational, EvalError> {
    match e {
        UtilityExpr::Const(r) => Ok(r.clone()),
        UtilityExpr::Binary(op, a, b) => {
            let x = child(a, frame, 0)?;
            let y = child(b, frame, 1)?;
            match op {
                BinOp::Add => Ok(x + y),
                BinOp::Sub => Ok(x - y),
                BinOp::Mul => Ok(x * y),
                BinOp::Div => x.checked_div(&y).map_err(|_| EvalError::DivisionByZero {
                    path: ExprPath::default(),
                }),
                BinOp::Min => Ok(x.min(y)),
                BinOp::Max => Ok(x.max(y)),
            }
        }
        UtilityExpr::Neg(a) => Ok(-child(a, frame, 0)?),
        UtilityExpr::If(c, a, b) => {
            if cond_with(c, frame).map_err(|err| err.under(0))? {
                child(a, frame, 1)
            } else {
                child(b, frame, 2)
            }
        }
        UtilityExpr::Prob { observer, event } => frame.prob(observer, event),
        UtilityExpr::Expect { observer, body } => {
            frame.expect(observer, body).map_err(|err| err.under(1))
        }
        UtilityExpr::ActualProb { player, action } => frame.actual_prob(player, action),
    }
}

fn cond_with<F: Frame>(c: &CondExpr, frame: &F) -> Result<bool, EvalError> {
    match c {
        CondExpr::Compare(op, a, b) => {
            let x = child(a, frame, 0)?;
            let y = child(b, frame, 1)?;
            Ok(op.apply(&x, &y))
        }
        CondExpr::And(a, b) => Ok(cond_with(a, frame).map_err(|e| e.under(0))?
            && cond_with(b, frame).map_err(|e| e.under(1))?),
        CondExpr::Or(a, b) => Ok(cond_with(a, frame).map_err(|e| e.under(0))?
            || cond_with(b, frame).map_err(|e| e.under(1))?),
        CondExpr::Not(a) => Ok(!cond_with(a, frame).map_err(|e| e.under(0))?),
        CondExpr::Holds(ev) => frame.holds(ev),
    }
}

pub(crate) fn player_of<R: Roster + ?Sized>(roster: &R, name: &str) -> Result<usize, EvalError> {
    roster
        .player_index(name)
        .ok_or_else(|| EvalError::UnknownPlayer(name.to_string()))
}

pub(crate) fn action_of<R: Roster + ?Sized>(
    roster: &R,
    player: usize,
    name: &str,
) -> Result<usize, EvalError> {
    roster
        .action_index(player, name)
        .ok_or_else(|| EvalError::UnknownAction {
            player: roster.players()[player].clone(),
            action: name.to_string(),
        })
}

/// Resolves the strategy an `intends` event compares against.
pub(crate) fn resolve_target<R: Roster + ?Sized>(
    roster: &R,
    player: usize,
    target: &IntentTarget,
    actual: &[Strategy],
) -> Result<Strategy, EvalError> {
    match target {
        IntentTarget::Action(a) => Ok(Strategy::Pure(action_of(roster, player, a)?)),
        IntentTarget::ActualOf(j) => Ok(actual[player_of(roster, j)?].clone()),
        IntentTarget::Mixture(parts) => {
            let mut masses = Vec::with_capacity(parts.len());
            for (a, p) in parts {
                masses.push((action_of(roster, player, a)?, p.clone()));
            }
            let invalid = || EvalError::InvalidMixture(target.to_string());
            let d = FiniteDistribution::new(masses).map_err(|_| invalid())?;
            Ok(Strategy::mixed(d))
        }
    }
}

/// What an event can see about one point: intended strategies, and for type
/// spaces also types and the state itself.
pub(crate) trait IntentionView {
    fn intention(&self, player: usize) -> Result<&Strategy, EvalError>;
    fn type_of(&self, player: usize) -> Result<usize, EvalError>;
    fn state(&self) -> Result<usize, EvalError>;
}

pub(crate) fn event_holds<R: Roster + ?Sized, V: IntentionView>(
    roster: &R,
    space: Option<&GameModel>,
    actual: &[Strategy],
    ev: &EventExpr,
    view: &V,
) -> Result<bool, EvalError> {
    match ev {
        EventExpr::Intends { player, target } => {
            let k = player_of(roster, player)?;
            let want = resolve_target(roster, k, target, actual)?;
            Ok(*view.intention(k)? == want)
        }
        EventExpr::TypeIs { player, ty } => {
            let m = space.ok_or_else(|| EvalError::TypeSpaceAtom(ev.to_string()))?;
            let k = player_of(roster, player)?;
            let t = m.type_index(k, ty).ok_or_else(|| EvalError::UnknownType {
                player: player.clone(),
                ty: ty.clone(),
            })?;
            Ok(view.type_of(k)? == t)
        }
        EventExpr::StateIn(states) => {
            let m = space.ok_or_else(|| EvalError::TypeSpaceAtom(ev.to_string()))?;
            let w = view.state()?;
            for s in states {
                if m.state_index(s).is_none() {
                    return Err(EvalError::UnknownState(s.clone()));
                }
            }
            Ok(states.iter().any(|s| *s == m.states[w]))
        }
        EventExpr::And(a, b) => Ok(event_holds(roster, space, actual, a, view)?
            && event_holds(roster, space, actual, b, view)?),
        EventExpr::Or(a, b) => Ok(event_holds(roster, space, actual, a, view)?
            || event_holds(roster, space, actual, b, view)?),
        EventExpr::Not(a) => Ok(!event_holds(roster, space, actual, a, view)?),
    }
}

/// Everything a type-space utility reads: the model, the state `ω`, the
/// actual profile `σ`, and the intention profile `s`.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext<'a> {
    pub model: &'a GameModel,
    pub state: usize,
    pub actual: &'a [Strategy],
    pub intentions: Option<&'a TypeStrategyMap>,
}

impl<'a> EvalContext<'a> {
    /// A context whose intentions are the model's own (if it has any).
    pub fn new(model: &'a GameModel, state: usize, actual: &'a [Strategy]) -> Self {
        EvalContext {
            model,
            state,
            actual,
            intentions: model.intentions.as_ref(),
        }
    }

    pub fn with_intentions(self, intentions: &'a TypeStrategyMap) -> Self {
        EvalContext {
            intentions: Some(intentions),
            ..self
        }
    }

    fn at(&self, state: usize) -> Self {
        EvalContext { state, ..*self }
    }
}

struct StatePoint<'a> {
    ctx: &'a EvalContext<'a>,
    state: usize,
}

impl IntentionView for StatePoint<'_> {
    fn intention(&self, player: usize) -> Result<&Strategy, EvalError> {
        let s = self.ctx.intentions.ok_or(EvalError::NoIntentions)?;
        Ok(s.get(player, self.ctx.model.signal(player, self.state)))
    }

    fn type_of(&self, player: usize) -> Result<usize, EvalError> {
        Ok(self.ctx.model.signal(player, self.state))
    }

    fn state(&self) -> Result<usize, EvalError> {
        Ok(self.state)
    }
}

impl Frame for EvalContext<'_> {
    fn prob(&self, observer: &str, event: &EventExpr) -> Result<Rational, EvalError> {
        let m = self.model;
        let j = player_of(m, observer)?;
        let belief = m.belief(j, m.signal(j, self.state));
        let mut total = Rational::zero();
        for (&w, p) in belief.iter() {
            let point = StatePoint {
                ctx: self,
                state: w,
            };
            if event_holds(m, Some(m), self.actual, event, &point)? {
                total += p;
            }
        }
        Ok(total)
    }

    fn expect(&self, observer: &str, body: &UtilityExpr) -> Result<Rational, EvalError> {
        let m = self.model;
        let j = player_of(m, observer)?;
        m.belief(j, m.signal(j, self.state))
            .expectation(|&w| eval_with(body, &self.at(w)))
    }

    fn actual_prob(&self, player: &str, action: &str) -> Result<Rational, EvalError> {
        let i = player_of(self.model, player)?;
        let a = action_of(self.model, i, action)?;
        Ok(self.actual[i].prob_of(a))
    }

    fn holds(&self, event: &EventExpr) -> Result<bool, EvalError> {
        let point = StatePoint {
            ctx: self,
            state: self.state,
        };
        event_holds(self.model, Some(self.model), self.actual, event, &point)
    }
}

/// Evaluates `e` at `ctx` directly, treating every actual strategy as given.
pub fn eval(e: &UtilityExpr, ctx: &EvalContext<'_>) -> Result<Rational, EvalError> {
    eval_with(e, ctx)
}

/// The linear extension in `player`'s own actual strategy:
/// `Σ_a σ_i(a) · e(a, σ_{-i})`.
pub fn linearize(
    e: &UtilityExpr,
    ctx: &EvalContext<'_>,
    player: usize,
) -> Result<Rational, EvalError> {
    if ctx.model.mode(player) != StrategyMode::MixedLinear {
        return Err(EvalError::ModeMismatch(ctx.model.players[player].clone()));
    }
    linear_extension(&ctx.actual[player], ctx.actual, player, |actual| {
        eval_with(e, &EvalContext { actual, ..*ctx })
    })
}

/// `Σ_a σ(a) · f(σ with player's entry := a)`
pub(crate) fn linear_extension(
    strategy: &Strategy,
    actual: &[Strategy],
    player: usize,
    mut f: impl FnMut(&[Strategy]) -> Result<Rational, EvalError>,
) -> Result<Rational, EvalError> {
    let mut pure = actual.to_vec();
    let mut total = Rational::zero();
    for (a, p) in strategy.to_distribution().iter() {
        pure[player] = Strategy::Pure(*a);
        total += p * &f(&pure)?;
    }
    Ok(total)
}

/// Player `player`'s utility `e` at `ctx`, linearized when the player is
/// mixed-linear.
pub fn eval_utility(
    e: &UtilityExpr,
    ctx: &EvalContext<'_>,
    player: usize,
) -> Result<Rational, EvalError> {
    match ctx.model.mode(player) {
        StrategyMode::MixedLinear => linearize(e, ctx, player),
        StrategyMode::Pure | StrategyMode::MixedDirect => eval(e, ctx),
    }
}
