//! Closed-form coefficient expressions.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'pi' | 'e' | var | func '(' expr (',' expr)* ')' | '(' expr ')'
//! var     := 't' | 'x' | 'x1' | 'x2' | 'x3' | 'y' | 'y1' | 'y2' | 'y3'
//! ```
//!
//! One-argument functions: `sin cos tan atan exp ln log sqrt abs tanh sign`;
//! two-argument: `pow min max`.

use std::fmt;

use crate::error::{Error, Result};

/// Evaluation slots: `[t, x1, x2, x3, y1, y2, y3]`.
pub type Vars = [f64; 7];

pub const T: usize = 0;
pub const X1: usize = 1;
pub const Y1: usize = 4;

/// Builds the slot array from time, slow state and fast state.
pub fn vars(t: f64, x: &[f64], y: &[f64]) -> Vars {
    let mut v = [0.0; 7];
    v[T] = t;
    v[X1..X1 + x.len()].copy_from_slice(x);
    v[Y1..Y1 + y.len()].copy_from_slice(y);
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fn1 {
    Sin,
    Cos,
    Tan,
    Atan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Tanh,
    Sign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fn2 {
    Pow,
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call1(Fn1, Box<Node>),
    Call2(Fn2, Box<Node>, Box<Node>),
}

impl Node {
    fn eval(&self, v: &Vars) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Var(i) => v[*i],
            Node::Neg(a) => -a.eval(v),
            Node::Bin(op, a, b) => {
                let (a, b) = (a.eval(v), b.eval(v));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Node::Call1(f, a) => {
                let a = a.eval(v);
                match f {
                    Fn1::Sin => a.sin(),
                    Fn1::Cos => a.cos(),
                    Fn1::Tan => a.tan(),
                    Fn1::Atan => a.atan(),
                    Fn1::Exp => a.exp(),
                    Fn1::Ln => a.ln(),
                    Fn1::Sqrt => a.sqrt(),
                    Fn1::Abs => a.abs(),
                    Fn1::Tanh => a.tanh(),
                    Fn1::Sign => {
                        if a > 0.0 {
                            1.0
                        } else if a < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    }
                }
            }
            Node::Call2(f, a, b) => {
                let (a, b) = (a.eval(v), b.eval(v));
                match f {
                    Fn2::Pow => a.powf(b),
                    Fn2::Min => a.min(b),
                    Fn2::Max => a.max(b),
                }
            }
        }
    }

    fn visit_vars(&self, out: &mut [bool; 7]) {
        match self {
            Node::Const(_) => {}
            Node::Var(i) => out[*i] = true,
            Node::Neg(a) | Node::Call1(_, a) => a.visit_vars(out),
            Node::Bin(_, a, b) | Node::Call2(_, a, b) => {
                a.visit_vars(out);
                b.visit_vars(out);
            }
        }
    }
}

/// A parsed expression together with its source text.
#[derive(Debug, Clone)]
pub struct Expr {
    source: String,
    root: Node,
    used: [bool; 7],
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl std::str::FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        let tokens = lex(source)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        if let Some(tok) = p.tokens.get(p.pos) {
            return Err(Error::Expr {
                offset: tok.offset,
                message: format!("unexpected {:?}", tok.kind),
            });
        }
        let mut used = [false; 7];
        root.visit_vars(&mut used);
        Ok(Self {
            source: source.trim().to_string(),
            root,
            used,
        })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            source: format!("{c:?}"),
            root: Node::Const(c),
            used: [false; 7],
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, v: &Vars) -> f64 {
        self.root.eval(v)
    }

    pub fn eval_tx(&self, t: f64, x: &[f64]) -> f64 {
        self.eval(&vars(t, x, &[]))
    }

    pub fn uses(&self, slot: usize) -> bool {
        self.used[slot]
    }

    pub fn depends_on_time(&self) -> bool {
        self.used[T]
    }

    pub fn depends_on_state(&self) -> bool {
        self.used[X1..].iter().any(|&u| u)
    }

    pub fn is_constant(&self) -> bool {
        !self.used.iter().any(|&u| u)
    }

    /// Highest slow-state index referenced (`x3` → 3), 0 if none.
    pub fn max_x_index(&self) -> usize {
        (1..=3).rev().find(|&i| self.used[X1 + i - 1]).unwrap_or(0)
    }

    /// Highest fast-state index referenced (`y2` → 2), 0 if none.
    pub fn max_y_index(&self) -> usize {
        (1..=3).rev().find(|&i| self.used[Y1 + i - 1]).unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    offset: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let kind = if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut k = i + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    i = k;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            Tok::Num(text.parse().map_err(|_| Error::Expr {
                offset: start,
                message: format!("bad number {text:?}"),
            })?)
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(src[start..i].to_string())
        } else {
            i += 1;
            match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => {
                    return Err(Error::Expr {
                        offset: start,
                        message: format!("unexpected character {c:?}"),
                    })
                }
            }
        };
        out.push(Token { kind, offset: start });
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .or(self.tokens.last())
            .map_or(0, |t| t.offset)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Expr {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {want:?}"))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if let Some(Tok::Op('+')) = self.peek() {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        let Some(tok) = self.peek().cloned() else {
            return self.err("unexpected end of expression");
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Node::Const(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen)?;
                    self.call(&name, args)
                } else {
                    self.ident(&name)
                }
            }
            other => {
                self.pos -= 1;
                self.err(format!("unexpected {other:?}"))
            }
        }
    }

    fn ident(&mut self, name: &str) -> Result<Node> {
        let slot = match name {
            "pi" => return Ok(Node::Const(std::f64::consts::PI)),
            "e" => return Ok(Node::Const(std::f64::consts::E)),
            "t" => T,
            "x" | "x1" => X1,
            "x2" => X1 + 1,
            "x3" => X1 + 2,
            "y" | "y1" => Y1,
            "y2" => Y1 + 1,
            "y3" => Y1 + 2,
            _ => {
                self.pos -= 1;
                return self.err(format!("unknown variable {name:?}"));
            }
        };
        Ok(Node::Var(slot))
    }

    fn call(&mut self, name: &str, mut args: Vec<Node>) -> Result<Node> {
        let f1 = match name {
            "sin" => Some(Fn1::Sin),
            "cos" => Some(Fn1::Cos),
            "tan" => Some(Fn1::Tan),
            "atan" => Some(Fn1::Atan),
            "exp" => Some(Fn1::Exp),
            "ln" | "log" => Some(Fn1::Ln),
            "sqrt" => Some(Fn1::Sqrt),
            "abs" => Some(Fn1::Abs),
            "tanh" => Some(Fn1::Tanh),
            "sign" => Some(Fn1::Sign),
            _ => None,
        };
        if let Some(f) = f1 {
            if args.len() != 1 {
                return self.err(format!("{name} takes one argument"));
            }
            return Ok(Node::Call1(f, Box::new(args.remove(0))));
        }
        let f2 = match name {
            "pow" => Fn2::Pow,
            "min" => Fn2::Min,
            "max" => Fn2::Max,
            _ => return self.err(format!("unknown function {name:?}")),
        };
        if args.len() != 2 {
            return self.err(format!("{name} takes two arguments"));
        }
        let b = args.pop().unwrap();
        let a = args.pop().unwrap();
        Ok(Node::Call2(f2, Box::new(a), Box::new(b)))
    }
}
