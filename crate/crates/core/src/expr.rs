//! A small expression language for coordinate functions.
//!
//! ```text
//! expr     = term { ("+" | "-") term } ;
//! term     = unary { ("*" | "/") unary } ;
//! unary    = "-" unary | power ;
//! power    = atom { "^" exponent } ;
//! exponent = [ "-" ] integer | "(" [ "-" ] integer ")" ;
//! atom     = number | variable | function "(" expr ")" | "(" expr ")" ;
//! function = "exp" | "log" | "sin" | "cos" | "sqrt" ;
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` is `-(x^2)`. Exponents must be integer
//! constants and are evaluated by repeated multiplication. Variables are resolved to positions
//! in the declared variable list at parse time.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::jet::{Elementary, JetError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character {found:?} at byte {offset}")]
    UnexpectedChar { found: char, offset: usize },
    #[error("unexpected {found} at byte {offset}, expected {expected}")]
    UnexpectedToken { found: String, expected: &'static str, offset: usize },
    #[error("unknown variable {name:?} at byte {offset}")]
    UnknownVariable { name: String, offset: usize },
    #[error("unknown function {name:?} at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("exponent at byte {offset} must be an integer constant")]
    NonIntegerExponent { offset: usize },
    #[error("malformed number at byte {offset}")]
    BadNumber { offset: usize },
}

impl ParseError {
    /// Byte offset into the source text, when the error has one.
    pub fn offset(&self) -> Option<usize> {
        match self {
            Self::Empty => None,
            Self::UnexpectedChar { offset, .. }
            | Self::UnexpectedToken { offset, .. }
            | Self::UnknownVariable { offset, .. }
            | Self::UnknownFunction { offset, .. }
            | Self::NonIntegerExponent { offset }
            | Self::BadNumber { offset } => Some(*offset),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl Function {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Self::Exp,
            "log" => Self::Log,
            "sin" => Self::Sin,
            "cos" => Self::Cos,
            "sqrt" => Self::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Exp => "exp",
            Self::Log => "log",
            Self::Sin => "sin",
            Self::Cos => "cos",
            Self::Sqrt => "sqrt",
        }
    }

    fn elementary(self) -> Elementary {
        match self {
            Self::Exp => Elementary::Exp,
            Self::Log => Elementary::Log,
            Self::Sin => Elementary::Sin,
            Self::Cos => Elementary::Cos,
            Self::Sqrt => Elementary::Sqrt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            Self::Add => '+',
            Self::Sub => '-',
            Self::Mul => '*',
            Self::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Call(Function, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
}

/// A parsed expression together with the ordered variable names it was resolved against.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    variables: Vec<String>,
    root: Node,
}

impl Expr {
    pub fn parse<S: AsRef<str>>(text: &str, variables: &[S]) -> Result<Self, ParseError> {
        let variables: Vec<String> = variables.iter().map(|s| s.as_ref().to_string()).collect();
        let tokens = lex(text)?;
        if tokens.is_empty() {
            return Err(ParseError::Empty);
        }
        let mut parser = Parser { tokens: &tokens, pos: 0, variables: &variables, end: text.len() };
        let root = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(ParseError::UnexpectedToken {
                found: tok.kind.describe(),
                expected: "end of expression",
                offset: tok.offset,
            });
        }
        Ok(Self { variables, root })
    }

    /// Wraps an already-built tree; every `Var` index must be below `variables.len()`.
    pub fn from_node(root: Node, variables: Vec<String>) -> Option<Self> {
        (max_var(&root).is_none_or(|m| m < variables.len())).then_some(Self { variables, root })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// True when the expression references no variable.
    pub fn is_constant(&self) -> bool {
        max_var(&self.root).is_none()
    }

    /// Evaluates over any scalar ring. `template` supplies the ring for constants; `env` holds one
    /// scalar per declared variable.
    pub fn eval<S: Scalar>(&self, template: &S, env: &[S]) -> Result<S, JetError> {
        assert!(env.len() >= self.variables.len(), "environment shorter than variable list");
        eval_node(&self.root, template, env)
    }

    pub fn eval_f64(&self, env: &[f64]) -> Result<f64, JetError> {
        self.eval(&0.0, env)
    }
}

fn max_var(node: &Node) -> Option<usize> {
    match node {
        Node::Const(_) => None,
        Node::Var(i) => Some(*i),
        Node::Neg(a) | Node::Call(_, a) | Node::Pow(a, _) => max_var(a),
        Node::Binary(_, a, b) => match (max_var(a), max_var(b)) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, y) => x.or(y),
        },
    }
}

fn eval_node<S: Scalar>(node: &Node, template: &S, env: &[S]) -> Result<S, JetError> {
    Ok(match node {
        Node::Const(c) => template.lift_constant(*c),
        Node::Var(i) => env[*i].clone(),
        Node::Neg(a) => eval_node(a, template, env)?.neg(),
        Node::Call(f, a) => eval_node(a, template, env)?.apply(f.elementary())?,
        Node::Binary(op, a, b) => {
            let l = eval_node(a, template, env)?;
            let r = eval_node(b, template, env)?;
            match op {
                BinaryOp::Add => l.add(&r),
                BinaryOp::Sub => l.sub(&r),
                BinaryOp::Mul => l.mul(&r),
                BinaryOp::Div => l.div(&r)?,
            }
        }
        Node::Pow(a, n) => eval_node(a, template, env)?.powi(*n)?,
    })
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, &self.variables)
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, vars: &[String]) -> fmt::Result {
    match node {
        Node::Const(c) => write!(f, "{c:?}"),
        Node::Var(i) => f.write_str(&vars[*i]),
        Node::Neg(a) => {
            f.write_str("(-")?;
            write_node(f, a, vars)?;
            f.write_str(")")
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(f, a, vars)?;
            f.write_str(")")
        }
        Node::Binary(op, a, b) => {
            f.write_str("(")?;
            write_node(f, a, vars)?;
            write!(f, " {} ", op.symbol())?;
            write_node(f, b, vars)?;
            f.write_str(")")
        }
        Node::Pow(a, n) => {
            f.write_str("(")?;
            write_node(f, a, vars)?;
            write!(f, ")^{n}")
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64, bool),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            Self::Number(v, _) => alloc::format!("number {v}"),
            Self::Ident(s) => alloc::format!("identifier {s:?}"),
            Self::Plus => "'+'".into(),
            Self::Minus => "'-'".into(),
            Self::Star => "'*'".into(),
            Self::Slash => "'/'".into(),
            Self::Caret => "'^'".into(),
            Self::LParen => "'('".into(),
            Self::RParen => "')'".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => TokenKind::Plus,
            b'-' => TokenKind::Minus,
            b'*' => TokenKind::Star,
            b'/' => TokenKind::Slash,
            b'^' => TokenKind::Caret,
            b'(' => TokenKind::LParen,
            b')' => TokenKind::RParen,
            b'0'..=b'9' | b'.' => {
                let mut integral = true;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    integral = false;
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    integral = false;
                    i += 1;
                    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                        i += 1;
                    }
                    let digits = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if digits == i {
                        return Err(ParseError::BadNumber { offset: start });
                    }
                }
                let value: f64 = text[start..i].parse().map_err(|_| ParseError::BadNumber { offset: start })?;
                out.push(Token { kind: TokenKind::Number(value, integral), offset: start });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token { kind: TokenKind::Ident(text[start..i].to_string()), offset: start });
                continue;
            }
            _ => {
                let found = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError::UnexpectedChar { found, offset: start });
            }
        };
        out.push(Token { kind, offset: start });
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    variables: &'a [String],
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<&TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek_kind() == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        match self.peek() {
            Some(tok) => ParseError::UnexpectedToken { found: tok.kind.describe(), expected, offset: tok.offset },
            None => ParseError::UnexpectedToken { found: "end of input".into(), expected, offset: self.end },
        }
    }

    fn expect(&mut self, kind: &TokenKind, expected: &'static str) -> Result<(), ParseError> {
        if self.eat(kind) {
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Plus) => BinaryOp::Add,
                Some(TokenKind::Minus) => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Star) => BinaryOp::Mul,
                Some(TokenKind::Slash) => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.eat(&TokenKind::Minus) {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let mut base = self.atom()?;
        while self.eat(&TokenKind::Caret) {
            let n = self.exponent()?;
            base = Node::Pow(Box::new(base), n);
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        let paren = self.eat(&TokenKind::LParen);
        let negative = self.eat(&TokenKind::Minus);
        let tok = self.peek().cloned().ok_or_else(|| self.unexpected("integer exponent"))?;
        let n = match tok.kind {
            TokenKind::Number(v, integral) => {
                if !integral || v > i32::MAX as f64 {
                    return Err(ParseError::NonIntegerExponent { offset: tok.offset });
                }
                v as i32
            }
            TokenKind::Ident(_) | TokenKind::LParen => return Err(ParseError::NonIntegerExponent { offset: tok.offset }),
            _ => return Err(self.unexpected("integer exponent")),
        };
        self.pos += 1;
        if paren {
            self.expect(&TokenKind::RParen, "')'")?;
        }
        Ok(if negative { -n } else { n })
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let tok = self.peek().cloned().ok_or_else(|| self.unexpected("operand"))?;
        match tok.kind {
            TokenKind::Number(v, _) => {
                self.pos += 1;
                Ok(Node::Const(v))
            }
            TokenKind::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(&TokenKind::RParen, "')'")?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                self.pos += 1;
                if self.peek_kind() == Some(&TokenKind::LParen) {
                    let func = Function::from_name(&name)
                        .ok_or(ParseError::UnknownFunction { name: name.clone(), offset: tok.offset })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect(&TokenKind::RParen, "')'")?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                match self.variables.iter().position(|v| *v == name) {
                    Some(i) => Ok(Node::Var(i)),
                    None => Err(ParseError::UnknownVariable { name, offset: tok.offset }),
                }
            }
            _ => Err(self.unexpected("operand")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{Jet, JetSpace};
    use alloc::format;
    use alloc::sync::Arc;
    use alloc::vec;

    const NONE: [&str; 0] = [];

    #[test]
    fn precedence() {
        let e = Expr::parse("1+2*3", &NONE).unwrap();
        assert!(e.is_constant());
        assert_eq!(e.eval_f64(&[]).unwrap(), 7.0);
        assert_eq!(Expr::parse("-2^2", &NONE).unwrap().eval_f64(&[]).unwrap(), -4.0);
        assert_eq!(Expr::parse("2*3^2-1", &NONE).unwrap().eval_f64(&[]).unwrap(), 17.0);
        assert_eq!(Expr::parse("8/4/2", &NONE).unwrap().eval_f64(&[]).unwrap(), 1.0);
        assert_eq!(Expr::parse("2^-1", &NONE).unwrap().eval_f64(&[]).unwrap(), 0.5);
        assert_eq!(Expr::parse("(1+1)^(-2)", &NONE).unwrap().eval_f64(&[]).unwrap(), 0.25);
    }

    #[test]
    fn exp_at_zero() {
        let e = Expr::parse("exp(0.3*x1)", &["x1"]).unwrap();
        assert_eq!(e.eval_f64(&[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn cube_third_derivative() {
        let e = Expr::parse("x1^3", &["x1"]).unwrap();
        let space = Arc::new(JetSpace::new(1, 3).unwrap());
        let x = Jet::variable(&space, 2.0, 0).unwrap();
        let out = e.eval(&x, core::slice::from_ref(&x)).unwrap();
        assert!((out.extract(&[3]).unwrap() - 6.0).abs() < 1e-14);
    }

    #[test]
    fn real_evaluation() {
        let e = Expr::parse("x1*x2", &["x1", "x2"]).unwrap();
        assert_eq!(e.eval_f64(&[3.0, 7.0]).unwrap(), 21.0);
        let e = Expr::parse("sqrt(x1*x1)", &["x1"]).unwrap();
        assert_eq!(e.eval_f64(&[-2.0]).unwrap(), 2.0);
    }

    #[test]
    fn domain_errors_surface() {
        let e = Expr::parse("log(x1)", &["x1"]).unwrap();
        assert_eq!(e.eval_f64(&[-1.0]).unwrap_err(), JetError::Domain { function: "log", value: -1.0 });
        let e = Expr::parse("1/x1", &["x1"]).unwrap();
        assert!(matches!(e.eval_f64(&[0.0]), Err(JetError::Domain { function: "division", .. })));
    }

    #[test]
    fn malformed_inputs_carry_offsets() {
        let corpus: &[(&str, usize)] = &[
            ("(x1+1", 5),
            ("x1+1)", 4),
            ("x1+", 3),
            ("x1*", 3),
            ("foo(x1)", 0),
            ("x1 + q", 5),
            ("x1^1.5", 3),
            ("x1^x1", 3),
            ("2 $ 3", 2),
            ("()", 1),
            ("1e", 0),
            ("x1 x1", 3),
            ("sin x1", 0),
        ];
        for (text, offset) in corpus {
            let err = Expr::parse(text, &["x1"]).unwrap_err();
            assert_eq!(err.offset(), Some(*offset), "{text}: {err}");
        }
        assert_eq!(Expr::parse("   ", &["x1"]).unwrap_err(), ParseError::Empty);
        assert!(matches!(Expr::parse("foo(x1)", &["x1"]), Err(ParseError::UnknownFunction { .. })));
        assert!(matches!(Expr::parse("x2", &["x1"]), Err(ParseError::UnknownVariable { .. })));
    }

    #[test]
    fn display_round_trip() {
        let vars = ["x1", "x2"];
        for text in ["1+2*x1", "-x1^2", "exp(0.3*x1)/(1 + x2^-2)", "sqrt(x1*x1 + 1e-3) - cos(x2)", "(x1-x2)^3"] {
            let e = Expr::parse(text, &vars).unwrap();
            let printed = format!("{e}");
            let back = Expr::parse(&printed, &vars).unwrap();
            assert_eq!(back, e, "{text} -> {printed}");
        }
    }

    #[test]
    fn from_node_checks_variables() {
        let node = Node::Binary(BinaryOp::Add, Box::new(Node::Var(0)), Box::new(Node::Var(2)));
        assert!(Expr::from_node(node.clone(), vec!["a".into(), "b".into()]).is_none());
        assert!(Expr::from_node(node, vec!["a".into(), "b".into(), "c".into()]).is_some());
    }
}
