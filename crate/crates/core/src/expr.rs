//! Arithmetic expressions over the coordinates `x`, `y`, `z`.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 'x' | 'y' | 'z' | '(' sum ')'
//! ```
//!
//! `^` binds tighter than unary minus and is right-associative, so `-2^2 = -4`
//! and `2^3^2 = 512`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::Vec3;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn apply(self, a: f64, b: f64) -> Result<f64> {
        Ok(match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => {
                if b == 0.0 {
                    return Err(Error::ExprEval("division by zero".into()));
                }
                a / b
            }
            BinOp::Pow => a.powf(b),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Num(f64),
    /// Coordinate index 0..3.
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    Num(f64),
    Var(usize),
    Neg,
    Bin(BinOp),
}

/// A parsed expression. The tree is kept for printing; evaluation runs a
/// flattened postfix program.
#[derive(Clone, Debug)]
pub struct Expr {
    source: String,
    tree: Node,
    program: Vec<Op>,
    max_stack: usize,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.tree == other.tree
    }
}

pub fn parse(text: &str) -> Result<Expr> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let tree = p.sum()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(Expr::from_tree(text.to_string(), tree))
}

impl Expr {
    fn from_tree(source: String, tree: Node) -> Self {
        let mut program = Vec::new();
        compile(&tree, &mut program);
        let mut depth = 0usize;
        let mut max_stack = 0usize;
        for op in &program {
            match op {
                Op::Num(_) | Op::Var(_) => depth += 1,
                Op::Neg => {}
                Op::Bin(_) => depth -= 1,
            }
            max_stack = max_stack.max(depth);
        }
        Expr {
            source,
            tree,
            program,
            max_stack,
        }
    }

    pub fn constant(value: f64) -> Self {
        Expr::from_tree(format!("{value:?}"), Node::Num(value))
    }

    pub fn zero() -> Self {
        Expr::constant(0.0)
    }

    pub fn tree(&self) -> &Node {
        &self.tree
    }

    /// Text the expression was parsed from.
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn is_zero(&self) -> bool {
        self.tree == Node::Num(0.0)
    }

    pub fn evaluate(&self, point: &Vec3) -> Result<f64> {
        let mut stack: Vec<f64> = Vec::with_capacity(self.max_stack);
        for op in &self.program {
            match *op {
                Op::Num(v) => stack.push(v),
                Op::Var(i) => stack.push(point[i]),
                Op::Neg => {
                    let top = stack.last_mut().expect("well-formed program");
                    *top = -*top;
                }
                Op::Bin(b) => {
                    let rhs = stack.pop().expect("well-formed program");
                    let lhs = stack.last_mut().expect("well-formed program");
                    *lhs = b.apply(*lhs, rhs)?;
                }
            }
        }
        Ok(stack[0])
    }
}

/// Free-function form of [`Expr::evaluate`].
pub fn evaluate(e: &Expr, point: &Vec3) -> Result<f64> {
    e.evaluate(point)
}

fn compile(node: &Node, out: &mut Vec<Op>) {
    match node {
        Node::Num(v) => out.push(Op::Num(*v)),
        Node::Var(i) => out.push(Op::Var(*i)),
        Node::Neg(a) => {
            compile(a, out);
            out.push(Op::Neg);
        }
        Node::Bin(op, a, b) => {
            compile(a, out);
            compile(b, out);
            out.push(Op::Bin(*op));
        }
    }
}

impl fmt::Display for Node {
    /// Fully parenthesized; reparses to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => write!(f, "(-{:?})", -v),
            Node::Num(v) => write!(f, "{v:?}"),
            Node::Var(i) => write!(f, "{}", ['x', 'y', 'z'][*i]),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.tree.fmt(f)
    }
}

impl FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Expr {
    /// Accepts either a string or a bare JSON number.
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(t) => parse(&t).map_err(serde::de::Error::custom),
            Raw::Number(v) => Ok(Expr::constant(v)),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::ExprSyntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn sum(&mut self) -> Result<Node> {
        let mut lhs = self.product()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.product()?;
            let op = if c == b'+' { BinOp::Add } else { BinOp::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == b'*' { BinOp::Mul } else { BinOp::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.sum()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                    self.pos += 1;
                }
                match &self.src[start..self.pos] {
                    b"x" => Ok(Node::Var(0)),
                    b"y" => Ok(Node::Var(1)),
                    b"z" => Ok(Node::Var(2)),
                    other => {
                        self.pos = start;
                        Err(self.error(&format!("unknown identifier `{}`", String::from_utf8_lossy(other))))
                    }
                }
            }
            Some(c) => Err(self.error(&format!("unexpected character `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = mark;
                return Err(self.error("malformed exponent"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let v: f64 = text.parse().map_err(|_| self.error("malformed number"))?;
        if !v.is_finite() {
            self.pos = start;
            return Err(self.error("number out of range"));
        }
        Ok(Node::Num(v))
    }
}
