//! A small expression language for the nonlinearity and reaction terms.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | factor
//! factor := number | 's' | ident | ident '(' args ')' | '(' expr ')'
//! ```
//!
//! `s` is the state variable. Calls are `min(a, b)`, `max(a, b)`, `abs(a)`,
//! `tanh(a)` and `pow(a, k)` with a literal exponent `k >= 1`. Any other
//! identifier is a per-vertex attribute, resolved when the expression is
//! bound to data.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// The state variable `s`.
    Var,
    Attr(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    Abs(Box<Expr>),
    Tanh(Box<Expr>),
    Pow(Box<Expr>, f64),
}

const PREC_UNARY: u8 = 3;
const PREC_ATOM: u8 = 4;

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let tokens = lex(text)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            end: text.len(),
        };
        let e = p.expr()?;
        match p.peek() {
            None => Ok(e),
            Some(t) => Err(Error::Expr {
                position: t.pos,
                message: format!("unexpected {}", t.kind),
            }),
        }
    }

    /// Attribute names in order of first appearance.
    pub fn required_attributes(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Attr(name) = e {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
        });
        out
    }

    pub fn has_division(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, Expr::Binary(BinOp::Div, ..)));
        found
    }

    /// True when the expression is the literal constant zero.
    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Var | Expr::Attr(_) => {}
            Expr::Neg(a) | Expr::Abs(a) | Expr::Tanh(a) | Expr::Pow(a, _) => a.visit(f),
            Expr::Binary(_, a, b) | Expr::Min(a, b) | Expr::Max(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Neg(_) => PREC_UNARY,
            Expr::Const(c) if c.is_sign_negative() => PREC_UNARY,
            _ => PREC_ATOM,
        }
    }

    /// Evaluates with attribute values looked up by name.
    pub fn eval(&self, s: f64, attr: &dyn Fn(&str) -> f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var => s,
            Expr::Attr(name) => attr(name),
            Expr::Neg(a) => -a.eval(s, attr),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval(s, attr), b.eval(s, attr));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            Expr::Min(a, b) => a.eval(s, attr).min(b.eval(s, attr)),
            Expr::Max(a, b) => a.eval(s, attr).max(b.eval(s, attr)),
            Expr::Abs(a) => a.eval(s, attr).abs(),
            Expr::Tanh(a) => a.eval(s, attr).tanh(),
            Expr::Pow(a, k) => a.eval(s, attr).powf(*k),
        }
    }

    /// Lowers to a postfix program, mapping attribute names to slots in `attrs`.
    pub(crate) fn compile(&self, attrs: &[String]) -> Result<Program> {
        let mut ops = Vec::new();
        self.emit(attrs, &mut ops)?;
        let mut depth = 0usize;
        let mut max_depth = 0usize;
        for op in &ops {
            depth = depth + 1 - op.arity();
            max_depth = max_depth.max(depth);
        }
        Ok(Program { ops, max_depth })
    }

    fn emit(&self, attrs: &[String], ops: &mut Vec<Op>) -> Result<()> {
        match self {
            Expr::Const(c) => ops.push(Op::Const(*c)),
            Expr::Var => ops.push(Op::Var),
            Expr::Attr(name) => {
                let slot = attrs
                    .iter()
                    .position(|a| a == name)
                    .ok_or_else(|| Error::UnknownAttribute(name.clone()))?;
                ops.push(Op::Attr(slot));
            }
            Expr::Neg(a) => {
                a.emit(attrs, ops)?;
                ops.push(Op::Neg);
            }
            Expr::Abs(a) => {
                a.emit(attrs, ops)?;
                ops.push(Op::Abs);
            }
            Expr::Tanh(a) => {
                a.emit(attrs, ops)?;
                ops.push(Op::Tanh);
            }
            Expr::Pow(a, k) => {
                a.emit(attrs, ops)?;
                ops.push(Op::Pow(*k));
            }
            Expr::Binary(op, a, b) => {
                a.emit(attrs, ops)?;
                b.emit(attrs, ops)?;
                ops.push(match op {
                    BinOp::Add => Op::Add,
                    BinOp::Sub => Op::Sub,
                    BinOp::Mul => Op::Mul,
                    BinOp::Div => Op::Div,
                });
            }
            Expr::Min(a, b) => {
                a.emit(attrs, ops)?;
                b.emit(attrs, ops)?;
                ops.push(Op::Min);
            }
            Expr::Max(a, b) => {
                a.emit(attrs, ops)?;
                b.emit(attrs, ops)?;
                ops.push(Op::Max);
            }
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var => f.write_str("s"),
            Expr::Attr(name) => f.write_str(name),
            Expr::Neg(a) => {
                // `-2` would read back as a negative literal, not a negation
                let literal = matches!(**a, Expr::Const(c) if !c.is_sign_negative());
                if literal || a.precedence() < PREC_UNARY {
                    write!(f, "-({a})")
                } else {
                    write!(f, "-{a}")
                }
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                if a.precedence() < p {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, " {} ", op.symbol())?;
                if b.precedence() <= p {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            Expr::Min(a, b) => write!(f, "min({a}, {b})"),
            Expr::Max(a, b) => write!(f, "max({a}, {b})"),
            Expr::Abs(a) => write!(f, "abs({a})"),
            Expr::Tanh(a) => write!(f, "tanh({a})"),
            Expr::Pow(a, k) => write!(f, "pow({a}, {k})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Op {
    Const(f64),
    Var,
    Attr(usize),
    Neg,
    Abs,
    Tanh,
    Pow(f64),
    Add,
    Sub,
    Mul,
    Div,
    Min,
    Max,
}

impl Op {
    fn arity(self) -> usize {
        match self {
            Op::Const(_) | Op::Var | Op::Attr(_) => 0,
            Op::Neg | Op::Abs | Op::Tanh | Op::Pow(_) => 1,
            _ => 2,
        }
    }
}

const INLINE_STACK: usize = 32;

/// Postfix form of an [`Expr`] with attributes resolved to slots.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Program {
    ops: Vec<Op>,
    max_depth: usize,
}

impl Program {
    pub(crate) fn eval(&self, s: f64, attrs: &[f64]) -> f64 {
        if self.max_depth <= INLINE_STACK {
            let mut stack = [0.0; INLINE_STACK];
            self.run(s, attrs, &mut stack)
        } else {
            let mut stack = vec![0.0; self.max_depth];
            self.run(s, attrs, &mut stack)
        }
    }

    fn run(&self, s: f64, attrs: &[f64], stack: &mut [f64]) -> f64 {
        let mut top = 0usize;
        for op in &self.ops {
            match *op {
                Op::Const(c) => {
                    stack[top] = c;
                    top += 1;
                }
                Op::Var => {
                    stack[top] = s;
                    top += 1;
                }
                Op::Attr(k) => {
                    stack[top] = attrs[k];
                    top += 1;
                }
                Op::Neg => stack[top - 1] = -stack[top - 1],
                Op::Abs => stack[top - 1] = stack[top - 1].abs(),
                Op::Tanh => stack[top - 1] = stack[top - 1].tanh(),
                Op::Pow(k) => stack[top - 1] = stack[top - 1].powf(k),
                binary => {
                    top -= 1;
                    let (a, b) = (stack[top - 1], stack[top]);
                    stack[top - 1] = match binary {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        Op::Div => a / b,
                        Op::Min => a.min(b),
                        Op::Max => a.max(b),
                        _ => unreachable!(),
                    };
                }
            }
        }
        stack[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Number(v) => write!(f, "number `{v}`"),
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Plus => f.write_str("`+`"),
            TokenKind::Minus => f.write_str("`-`"),
            TokenKind::Star => f.write_str("`*`"),
            TokenKind::Slash => f.write_str("`/`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::Comma => f.write_str("`,`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    pos: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
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
            b'(' => TokenKind::LParen,
            b')' => TokenKind::RParen,
            b',' => TokenKind::Comma,
            b'0'..=b'9' | b'.' => {
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
                let lit = &text[start..i];
                let v: f64 = lit.parse().map_err(|_| Error::Expr {
                    position: start,
                    message: format!("malformed number `{lit}`"),
                })?;
                out.push(Token {
                    kind: TokenKind::Number(v),
                    pos: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    kind: TokenKind::Ident(text[start..i].to_string()),
                    pos: start,
                });
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(Error::Expr {
                    position: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push(Token { kind, pos: start });
        i += 1;
    }
    Ok(out)
}

const FUNCTIONS: [&str; 5] = ["min", "max", "abs", "tanh", "pow"];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Expr {
            position: self.here(),
            message: message.into(),
        })
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<()> {
        if self.eat(&kind) {
            Ok(())
        } else {
            match self.peek() {
                Some(t) => self.fail(format!("expected {kind}, found {}", t.kind)),
                None => self.fail(format!("expected {kind}, found end of input")),
            }
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(&TokenKind::Plus) {
                BinOp::Add
            } else if self.eat(&TokenKind::Minus) {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(&TokenKind::Star) {
                BinOp::Mul
            } else if self.eat(&TokenKind::Slash) {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(&TokenKind::Minus) {
            if let Some(Token {
                kind: TokenKind::Number(v),
                ..
            }) = self.peek()
            {
                let v = *v;
                self.pos += 1;
                return Ok(Expr::Const(-v));
            }
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Expr> {
        let Some(tok) = self.next() else {
            return self.fail("unexpected end of input");
        };
        match tok.kind {
            TokenKind::Number(v) => Ok(Expr::Const(v)),
            TokenKind::LParen => {
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            TokenKind::Ident(name) => {
                let call = self.eat(&TokenKind::LParen);
                if !call {
                    if name == "s" {
                        return Ok(Expr::Var);
                    }
                    if FUNCTIONS.contains(&name.as_str()) {
                        return Err(Error::Expr {
                            position: tok.pos,
                            message: format!("`{name}` must be called with arguments"),
                        });
                    }
                    return Ok(Expr::Attr(name));
                }
                self.call(&name, tok.pos)
            }
            other => Err(Error::Expr {
                position: tok.pos,
                message: format!("unexpected {other}"),
            }),
        }
    }

    fn call(&mut self, name: &str, pos: usize) -> Result<Expr> {
        let mut args = vec![self.expr()?];
        while self.eat(&TokenKind::Comma) {
            args.push(self.expr()?);
        }
        self.expect(TokenKind::RParen)?;
        let arity = |want: usize, args: &[Expr]| -> Result<()> {
            if args.len() == want {
                Ok(())
            } else {
                Err(Error::Expr {
                    position: pos,
                    message: format!("`{name}` takes {want} argument(s), got {}", args.len()),
                })
            }
        };
        let mut it = args.clone().into_iter().map(Box::new);
        match name {
            "min" | "max" => {
                arity(2, &args)?;
                let (a, b) = (it.next().unwrap(), it.next().unwrap());
                Ok(if name == "min" {
                    Expr::Min(a, b)
                } else {
                    Expr::Max(a, b)
                })
            }
            "abs" | "tanh" => {
                arity(1, &args)?;
                let a = it.next().unwrap();
                Ok(if name == "abs" {
                    Expr::Abs(a)
                } else {
                    Expr::Tanh(a)
                })
            }
            "pow" => {
                arity(2, &args)?;
                match args[1] {
                    Expr::Const(k) if k >= 1.0 && k.is_finite() => {
                        Ok(Expr::Pow(it.next().unwrap(), k))
                    }
                    _ => Err(Error::Expr {
                        position: pos,
                        message: "`pow` exponent must be a numeric literal >= 1".into(),
                    }),
                }
            }
            _ => Err(Error::Expr {
                position: pos,
                message: format!("unknown function `{name}`"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_attrs(_: &str) -> f64 {
        panic!("no attributes expected")
    }

    #[test]
    fn parses_basic_forms() {
        assert_eq!(Expr::parse("s").unwrap(), Expr::Var);
        assert_eq!(
            Expr::parse("tanh(s)").unwrap(),
            Expr::Tanh(Box::new(Expr::Var))
        );
        let e = Expr::parse("max(s - c, 0) * 0.5").unwrap();
        assert_eq!(e.required_attributes(), vec!["c".to_string()]);
        assert_eq!(e.to_string(), "max(s - c, 0) * 0.5");
        assert!(!e.has_division());
        assert!(Expr::parse("s/(1+s)").unwrap().has_division());
    }

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("1 - 2 - 3 * s / 4").unwrap();
        assert_eq!(e.eval(2.0, &no_attrs), 1.0 - 2.0 - 3.0 * 2.0 / 4.0);
        assert_eq!(e.to_string(), "1 - 2 - 3 * s / 4");
        let r = Expr::parse("1 - (2 - s)").unwrap();
        assert_eq!(r.to_string(), "1 - (2 - s)");
        assert_eq!(r.eval(5.0, &no_attrs), 4.0);
        assert_eq!(Expr::parse("-s * 2").unwrap().eval(3.0, &no_attrs), -6.0);
        assert_eq!(Expr::parse("-2").unwrap(), Expr::Const(-2.0));
        assert_eq!(
            Expr::parse("-(2)").unwrap(),
            Expr::Neg(Box::new(Expr::Const(2.0)))
        );
    }

    #[test]
    fn evaluates_calls() {
        let e = Expr::parse("min(s, 1) + max(s, 3) + abs(-s) + pow(s, 2)").unwrap();
        assert_eq!(e.eval(2.0, &no_attrs), 1.0 + 3.0 + 2.0 + 4.0);
        let a = Expr::parse("k * s").unwrap();
        assert_eq!(
            a.eval(2.0, &|name| if name == "k" { 0.25 } else { 0.0 }),
            0.5
        );
    }

    #[test]
    fn syntax_errors_carry_position() {
        let cases = [
            ("s +", 3),
            ("(s", 2),
            ("s ) ", 2),
            ("2 $ s", 2),
            ("foo(s)", 0),
            ("pow(s, 0.5)", 0),
            ("pow(s, c)", 0),
            ("min(s)", 0),
            ("tanh", 0),
            ("", 0),
        ];
        for (text, want) in cases {
            match Expr::parse(text) {
                Err(Error::Expr { position, .. }) => assert_eq!(position, want, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn program_matches_tree() {
        let e = Expr::parse("max(s - c, 0) * 0.5 + tanh(s) / (1 + pow(s, 2)) - -k").unwrap();
        let attrs = e.required_attributes();
        assert_eq!(attrs, vec!["c".to_string(), "k".to_string()]);
        let prog = e.compile(&attrs).unwrap();
        for s in [0.0, 0.3, 1.7, 12.0] {
            let tree = e.eval(s, &|n| if n == "c" { 0.2 } else { 1.5 });
            assert_eq!(prog.eval(s, &[0.2, 1.5]), tree);
        }
        assert!(matches!(
            e.compile(&["c".into()]),
            Err(Error::UnknownAttribute(name)) if name == "k"
        ));
    }
}
