//! Recursive-descent parser for potential expressions.
//!
//! Precedence, tightest first: `^` (right associative), unary `-`,
//! `*` `/`, `+` `-` (binary operators left associative).

use std::collections::BTreeSet;

use super::{BinOp, Expression, Func, Node};
use crate::error::{Error, Result};

/// Names an expression may refer to, split into variables and parameters.
#[derive(Debug, Clone, Default)]
pub struct Symbols {
    variables: BTreeSet<String>,
    parameters: BTreeSet<String>,
}

impl Symbols {
    pub fn new<V, P, S1, S2>(variables: V, parameters: P) -> Self
    where
        V: IntoIterator<Item = S1>,
        P: IntoIterator<Item = S2>,
        S1: Into<String>,
        S2: Into<String>,
    {
        Symbols {
            variables: variables.into_iter().map(Into::into).collect(),
            parameters: parameters.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    start: usize,
    end: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let s = &text[start..i];
            let value: f64 = s.parse().map_err(|_| Error::Syntax {
                offset: start,
                message: format!("malformed number `{s}`"),
            })?;
            out.push(Token {
                tok: Tok::Num(value),
                start,
                end: i,
            });
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(text[start..i].to_string()),
                start,
                end: i,
            });
        } else if b"+-*/^(),".contains(&c) {
            out.push(Token {
                tok: Tok::Op(c as char),
                start: i,
                end: i + 1,
            });
            i += 1;
        } else {
            let ch = text[i..].chars().next().unwrap_or('?');
            return Err(Error::Syntax {
                offset: i,
                message: format!("unexpected character `{ch}`"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    symbols: &'a Symbols,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_op(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Op(c))
    }

    /// Offset of the next token, or just past the last consumed one at end
    /// of input.
    fn offset(&self) -> usize {
        match self.tokens.get(self.pos) {
            Some(t) => t.start,
            None => self.tokens.last().map_or(0, |t| t.end),
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        let message = match self.tokens.get(self.pos) {
            None => format!("{} (unexpected end of input)", message.into()),
            Some(_) => message.into(),
        };
        Err(Error::Syntax {
            offset: self.offset(),
            message,
        })
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek_op(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected `{c}`"))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.peek_op('+') {
                BinOp::Add
            } else if self.peek_op('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.peek_op('*') {
                BinOp::Mul
            } else if self.peek_op('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek_op('-') {
            self.pos += 1;
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek_op('^') {
            self.pos += 1;
            // Right associative; the exponent may carry its own unary minus.
            let exponent = self.unary()?;
            Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Node> {
        let Some(tok) = self.peek().cloned() else {
            return self.error("expected an operand");
        };
        match tok {
            Tok::Num(x) => {
                self.pos += 1;
                Ok(Node::Num(x))
            }
            Tok::Op('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if self.peek_op('(') {
                    self.call(&name)
                } else if self.symbols.variables.contains(&name) {
                    Ok(Node::Var(name))
                } else if self.symbols.parameters.contains(&name) {
                    Ok(Node::Param(name))
                } else {
                    Err(Error::UnknownIdentifier(name))
                }
            }
            Tok::Op(c) => self.error(format!("unexpected `{c}`")),
        }
    }

    fn call(&mut self, name: &str) -> Result<Node> {
        self.expect('(')?;
        let first = self.expr()?;
        let node = if name == "pow" {
            self.expect(',')?;
            let exponent = self.expr()?;
            Node::Binary(BinOp::Pow, Box::new(first), Box::new(exponent))
        } else if let Some(f) = Func::from_name(name) {
            Node::Call(f, Box::new(first))
        } else {
            return Err(Error::UnknownIdentifier(name.to_string()));
        };
        self.expect(')')?;
        Ok(node)
    }
}

/// Parses `text`, resolving identifiers against `symbols`.
pub fn parse(text: &str, symbols: &Symbols) -> Result<Expression> {
    if text.trim().is_empty() {
        return Err(Error::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        symbols,
    };
    let root = p.expr()?;
    if p.pos < p.tokens.len() {
        return p.error("unexpected trailing input");
    }
    Ok(Expression::from_node(root))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(vars: &[&str]) -> Symbols {
        Symbols::new(vars.iter().copied(), ["c"])
    }

    fn num(x: f64) -> Box<Node> {
        Box::new(Node::Num(x))
    }

    fn var(v: &str) -> Box<Node> {
        Box::new(Node::Var(v.into()))
    }

    #[test]
    fn sqrt_of_product() {
        let e = parse("sqrt(2*S)", &s(&["S"])).unwrap();
        assert_eq!(
            e.root(),
            &Node::Call(Func::Sqrt, Box::new(Node::Binary(BinOp::Mul, num(2.0), var("S"))))
        );
    }

    #[test]
    fn kerr_newman_radicand_depth_and_round_trip() {
        let text = "2*S + (J^2 + Q^4/4)/(8*S) + Q^2/2";
        let sy = s(&["S", "J", "Q"]);
        let e = parse(text, &sy).unwrap();
        assert_eq!(e.depth(), 7);
        let back = parse(&e.to_string(), &sy).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn incomplete_input_reports_offset() {
        let err = parse("2*X + ", &s(&["X"])).unwrap_err();
        assert!(matches!(err, Error::Syntax { offset: 5, .. }), "{err:?}");
    }

    #[test]
    fn unknown_identifier_is_named() {
        assert_eq!(
            parse("S + T", &s(&["S"])).unwrap_err(),
            Error::UnknownIdentifier("T".into())
        );
        assert_eq!(
            parse("sin(S)", &s(&["S"])).unwrap_err(),
            Error::UnknownIdentifier("sin".into())
        );
    }

    #[test]
    fn precedence_and_associativity() {
        let sy = s(&["x", "y"]);
        // -x^2 is -(x^2)
        let e = parse("-x^2", &sy).unwrap();
        assert_eq!(
            e.root(),
            &Node::Neg(Box::new(Node::Binary(BinOp::Pow, var("x"), num(2.0))))
        );
        // x^y^2 is x^(y^2)
        let e = parse("x^y^2", &sy).unwrap();
        assert_eq!(
            e.root(),
            &Node::Binary(
                BinOp::Pow,
                var("x"),
                Box::new(Node::Binary(BinOp::Pow, var("y"), num(2.0)))
            )
        );
        // x-y-2 is (x-y)-2
        let e = parse("x - y - 2", &sy).unwrap();
        assert_eq!(
            e.root(),
            &Node::Binary(
                BinOp::Sub,
                Box::new(Node::Binary(BinOp::Sub, var("x"), var("y"))),
                num(2.0)
            )
        );
        // x/y*2 is (x/y)*2
        let e = parse("x/y*2", &sy).unwrap();
        assert_eq!(
            e.root(),
            &Node::Binary(
                BinOp::Mul,
                Box::new(Node::Binary(BinOp::Div, var("x"), var("y"))),
                num(2.0)
            )
        );
        assert!(parse("x^-1", &sy).is_ok());
        assert!(parse("pow(x, 1.5e-3)", &sy).is_ok());
        assert!(matches!(parse("", &sy), Err(Error::Syntax { .. })));
        assert!(matches!(parse("x y", &sy), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse("(x", &sy), Err(Error::Syntax { .. })));
        assert!(matches!(parse("x # 2", &sy), Err(Error::Syntax { offset: 2, .. })));
    }

    #[test]
    fn parameters_resolve_separately() {
        let e = parse("c*x", &s(&["x"])).unwrap();
        assert_eq!(
            e.root(),
            &Node::Binary(BinOp::Mul, Box::new(Node::Param("c".into())), var("x"))
        );
    }

    fn arb_node() -> impl Strategy<Value = Node> {
        let leaf = prop_oneof![
            (0u32..10_000, 0u32..4).prop_map(|(m, e)| Node::Num(m as f64 / 10f64.powi(e as i32))),
            Just(Node::Var("x".into())),
            Just(Node::Var("y".into())),
            Just(Node::Param("c".into())),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Node::Neg(Box::new(a))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, a, b)| Node::Binary(op, Box::new(a), Box::new(b))),
                (
                    prop_oneof![
                        Just(Func::Sqrt),
                        Just(Func::Exp),
                        Just(Func::Log),
                        Just(Func::Abs)
                    ],
                    inner
                )
                    .prop_map(|(f, a)| Node::Call(f, Box::new(a))),
            ]
        })
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(node in arb_node()) {
            let sy = s(&["x", "y"]);
            let first = parse(&Expression::from_node(node).to_string(), &sy).unwrap();
            let second = parse(&first.to_string(), &sy).unwrap();
            prop_assert_eq!(first, second);
        }
    }
}
