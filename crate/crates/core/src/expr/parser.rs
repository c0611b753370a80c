use thiserror::Error;

use super::{BinOp, CmpOp, CondExpr, EventExpr, IntentTarget, UtilityExpr};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {position}: {message}")]
pub struct SyntaxError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Name(String),
    LParen,
    RParen,
    Comma,
    LBrace,
    RBrace,
    Colon,
}

fn describe(t: Option<&Tok>) -> String {
    match t {
        None => "end of input".into(),
        Some(Tok::Name(n)) => format!("{n:?}"),
        Some(Tok::LParen) => "'('".into(),
        Some(Tok::RParen) => "')'".into(),
        Some(Tok::Comma) => "','".into(),
        Some(Tok::LBrace) => "'{'".into(),
        Some(Tok::RBrace) => "'}'".into(),
        Some(Tok::Colon) => "':'".into(),
    }
}

fn tokenize(text: &str) -> Vec<(Tok, usize)> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        let punct = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ':' => Some(Tok::Colon),
            _ => None,
        };
        if let Some(t) = punct {
            out.push((t, pos));
            chars.next();
        } else if c.is_whitespace() {
            chars.next();
        } else {
            let mut name = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_whitespace() || "(),{}:".contains(c) {
                    break;
                }
                name.push(c);
                chars.next();
            }
            out.push((Tok::Name(name), pos));
        }
    }
    out
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, p)| *p)
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(SyntaxError {
            position: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok) -> PResult<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!(
                "expected {}, found {}",
                describe(Some(&want)),
                describe(self.peek())
            ))
        }
    }

    fn name(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Some(Tok::Name(n)) => {
                let n = n.clone();
                self.pos += 1;
                Ok(n)
            }
            other => self.error(format!("expected {what}, found {}", describe(other))),
        }
    }

    fn rational(&mut self) -> PResult<Rational> {
        let at = self.offset();
        let text = self.name("a number")?;
        text.parse().map_err(|_| SyntaxError {
            position: at,
            message: format!("{text:?} is not a number"),
        })
    }

    /// Reads `name(` and returns the name; the caller consumes arguments.
    fn call_head(&mut self) -> PResult<Option<(String, usize)>> {
        let at = self.offset();
        if let (Some(Tok::Name(n)), Some((Tok::LParen, _))) =
            (self.peek(), self.toks.get(self.pos + 1))
        {
            let n = n.clone();
            self.pos += 2;
            return Ok(Some((n, at)));
        }
        Ok(None)
    }

    fn comma(&mut self) -> PResult<()> {
        self.expect(Tok::Comma)
    }

    fn close(&mut self) -> PResult<()> {
        self.expect(Tok::RParen)
    }

    fn utility(&mut self) -> PResult<UtilityExpr> {
        let Some((f, at)) = self.call_head()? else {
            return match self.peek() {
                Some(Tok::Name(_)) => Ok(UtilityExpr::Const(self.rational()?)),
                other => self.error(format!("expected an expression, found {}", describe(other))),
            };
        };
        let binary = |op| Some(op);
        let op = match f.as_str() {
            "add" => binary(BinOp::Add),
            "sub" => binary(BinOp::Sub),
            "mul" => binary(BinOp::Mul),
            "div" => binary(BinOp::Div),
            "min" => binary(BinOp::Min),
            "max" => binary(BinOp::Max),
            _ => None,
        };
        let e = if let Some(op) = op {
            let a = self.utility()?;
            self.comma()?;
            let b = self.utility()?;
            UtilityExpr::Binary(op, Box::new(a), Box::new(b))
        } else {
            match f.as_str() {
                "neg" => UtilityExpr::Neg(Box::new(self.utility()?)),
                "if" => {
                    let c = self.cond()?;
                    self.comma()?;
                    let a = self.utility()?;
                    self.comma()?;
                    let b = self.utility()?;
                    UtilityExpr::If(Box::new(c), Box::new(a), Box::new(b))
                }
                "prob" => {
                    let observer = self.name("a player")?;
                    self.comma()?;
                    let event = self.event()?;
                    UtilityExpr::Prob {
                        observer,
                        event: Box::new(event),
                    }
                }
                "expect" => {
                    let observer = self.name("a player")?;
                    self.comma()?;
                    let body = self.utility()?;
                    UtilityExpr::Expect {
                        observer,
                        body: Box::new(body),
                    }
                }
                "actual_prob" => {
                    let player = self.name("a player")?;
                    self.comma()?;
                    let action = self.name("an action")?;
                    UtilityExpr::ActualProb { player, action }
                }
                _ => {
                    return Err(SyntaxError {
                        position: at,
                        message: format!("unknown function {f:?} in expression position"),
                    })
                }
            }
        };
        self.close()?;
        Ok(e)
    }

    fn cond(&mut self) -> PResult<CondExpr> {
        let Some((f, at)) = self.call_head()? else {
            return self.error(format!(
                "expected a condition, found {}",
                describe(self.peek())
            ));
        };
        let cmp = match f.as_str() {
            "eq" => Some(CmpOp::Eq),
            "lt" => Some(CmpOp::Lt),
            "le" => Some(CmpOp::Le),
            "gt" => Some(CmpOp::Gt),
            "ge" => Some(CmpOp::Ge),
            _ => None,
        };
        let c = if let Some(op) = cmp {
            let a = self.utility()?;
            self.comma()?;
            let b = self.utility()?;
            CondExpr::Compare(op, Box::new(a), Box::new(b))
        } else {
            match f.as_str() {
                "and" | "or" => {
                    let a = self.cond()?;
                    self.comma()?;
                    let b = self.cond()?;
                    if f == "and" {
                        CondExpr::And(Box::new(a), Box::new(b))
                    } else {
                        CondExpr::Or(Box::new(a), Box::new(b))
                    }
                }
                "not" => CondExpr::Not(Box::new(self.cond()?)),
                "holds" => CondExpr::Holds(Box::new(self.event()?)),
                _ => {
                    return Err(SyntaxError {
                        position: at,
                        message: format!("unknown function {f:?} in condition position"),
                    })
                }
            }
        };
        self.close()?;
        Ok(c)
    }

    fn event(&mut self) -> PResult<EventExpr> {
        let Some((f, at)) = self.call_head()? else {
            return self.error(format!(
                "expected an event, found {}",
                describe(self.peek())
            ));
        };
        let ev = match f.as_str() {
            "intends" => {
                let player = self.name("a player")?;
                self.comma()?;
                let target = self.target()?;
                EventExpr::Intends { player, target }
            }
            "type_is" => {
                let player = self.name("a player")?;
                self.comma()?;
                let ty = self.name("a type")?;
                EventExpr::TypeIs { player, ty }
            }
            "state_in" => {
                let mut states = vec![self.name("a state")?];
                while self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                    states.push(self.name("a state")?);
                }
                EventExpr::StateIn(states)
            }
            "and" | "or" => {
                let a = self.event()?;
                self.comma()?;
                let b = self.event()?;
                if f == "and" {
                    EventExpr::And(Box::new(a), Box::new(b))
                } else {
                    EventExpr::Or(Box::new(a), Box::new(b))
                }
            }
            "not" => EventExpr::Not(Box::new(self.event()?)),
            _ => {
                return Err(SyntaxError {
                    position: at,
                    message: format!("unknown function {f:?} in event position"),
                })
            }
        };
        self.close()?;
        Ok(ev)
    }

    fn target(&mut self) -> PResult<IntentTarget> {
        if self.peek() == Some(&Tok::LBrace) {
            self.pos += 1;
            let mut parts = Vec::new();
            loop {
                let action = self.name("an action")?;
                self.expect(Tok::Colon)?;
                let p = self.rational()?;
                parts.push((action, p));
                match self.peek() {
                    Some(Tok::Comma) => self.pos += 1,
                    Some(Tok::RBrace) => {
                        self.pos += 1;
                        break;
                    }
                    other => {
                        return self
                            .error(format!("expected ',' or '}}', found {}", describe(other)))
                    }
                }
            }
            return Ok(IntentTarget::Mixture(parts));
        }
        if let Some((f, at)) = self.call_head()? {
            if f != "actual" {
                return Err(SyntaxError {
                    position: at,
                    message: format!("unknown function {f:?} in strategy position"),
                });
            }
            let p = self.name("a player")?;
            self.close()?;
            return Ok(IntentTarget::ActualOf(p));
        }
        Ok(IntentTarget::Action(self.name("an action")?))
    }
}

/// Parses one utility expression; the whole input must be consumed.
pub fn parse_expr(text: &str) -> Result<UtilityExpr, SyntaxError> {
    let mut p = Parser {
        toks: tokenize(text),
        pos: 0,
        end: text.len(),
    };
    let e = p.utility()?;
    if p.pos != p.toks.len() {
        return p.error(format!(
            "unexpected {} after expression",
            describe(p.peek())
        ));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn surprise_utility_tree() {
        let e = parse_expr("if(eq(prob(2, intends(1, actual(1))), 0), 1, 0)").unwrap();
        let expected = UtilityExpr::If(
            Box::new(CondExpr::Compare(
                CmpOp::Eq,
                Box::new(UtilityExpr::Prob {
                    observer: "2".into(),
                    event: Box::new(EventExpr::Intends {
                        player: "1".into(),
                        target: IntentTarget::ActualOf("1".into()),
                    }),
                }),
                Box::new(UtilityExpr::Const(r("0"))),
            )),
            Box::new(UtilityExpr::Const(r("1"))),
            Box::new(UtilityExpr::Const(r("0"))),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn bravery_bold_branch() {
        let e = parse_expr("sub(2, expect(1, prob(2, intends(1, bold))))").unwrap();
        let expected = UtilityExpr::Binary(
            BinOp::Sub,
            Box::new(UtilityExpr::Const(r("2"))),
            Box::new(UtilityExpr::Expect {
                observer: "1".into(),
                body: Box::new(UtilityExpr::Prob {
                    observer: "2".into(),
                    event: Box::new(EventExpr::Intends {
                        player: "1".into(),
                        target: IntentTarget::Action("bold".into()),
                    }),
                }),
            }),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn unbalanced_call_fails_at_end() {
        let text = "add(1,";
        let err = parse_expr(text).unwrap_err();
        assert_eq!(err.position, text.len());
        assert!(err.message.contains("end of input"), "{}", err.message);
    }

    #[test]
    fn error_positions() {
        assert_eq!(parse_expr("add(1, 2) 3").unwrap_err().position, 10);
        assert_eq!(parse_expr("frob(1)").unwrap_err().position, 0);
        assert_eq!(parse_expr("add(1, x)").unwrap_err().position, 7);
        assert_eq!(parse_expr("if(add(1,2), 1, 0)").unwrap_err().position, 3);
        assert!(parse_expr("").is_err());
        assert!(parse_expr("neg(1, 2)").is_err());
    }

    #[test]
    fn mixture_and_state_lists() {
        let e =
            parse_expr("prob(2, or(intends(1, {a: 1/2, b: 1/2}), state_in(x|y, x'|y')))").unwrap();
        assert_eq!(
            e.to_string(),
            "prob(2, or(intends(1, {a: 1/2, b: 1/2}), state_in(x|y, x'|y')))"
        );
    }

    #[test]
    fn canonical_printing_normalizes_whitespace_and_numbers() {
        let e = parse_expr("  max( 2/4 ,min(-3,  actual_prob(1,*)))").unwrap();
        assert_eq!(e.to_string(), "max(1/2, min(-3, actual_prob(1, *)))");
    }

    fn leaf() -> impl Strategy<Value = String> {
        prop_oneof![
            (-20i64..20, 1i64..7).prop_map(|(n, d)| Rational::new(n, d).unwrap().to_string()),
            Just("actual_prob(1, a)".to_string()),
            Just("prob(2, intends(1, actual(1)))".to_string()),
            Just("prob(1, and(type_is(2, y), not(state_in(w, v))))".to_string()),
            Just("prob(2, intends(1, {a: 1/3, b: 2/3}))".to_string()),
        ]
    }

    fn expr_text() -> impl Strategy<Value = String> {
        leaf().prop_recursive(4, 32, 3, |inner| {
            prop_oneof![
                (
                    prop::sample::select(vec!["add", "sub", "mul", "div", "min", "max"]),
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(f, a, b)| format!("{f}({a}, {b})")),
                inner.clone().prop_map(|a| format!("neg({a})")),
                inner.clone().prop_map(|a| format!("expect(2, {a})")),
                (
                    prop::sample::select(vec!["eq", "lt", "le", "gt", "ge"]),
                    inner.clone(),
                    inner.clone(),
                    inner.clone(),
                    inner
                )
                    .prop_map(|(c, a, b, x, y)| format!("if(not({c}({a}, {b})), {x}, {y})")),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(text in expr_text()) {
            let e = parse_expr(&text).unwrap();
            let printed = e.to_string();
            prop_assert_eq!(&printed, &text);
            prop_assert_eq!(parse_expr(&printed).unwrap(), e);
        }
    }
}
