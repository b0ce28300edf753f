//! A small scalar expression language for user-defined problem files.
//!
//! Expressions are written in the variables `x1..xn`, the 1-based function index `i`
//! and the constant `pi`. Supported operators, from loosest to tightest binding:
//! `+ -`, `* /`, `^` (right associative), unary `-`. Functions: `sin cos tan exp log
//! sqrt abs floor pow(a, b)`.
//!
//! Evaluation comes in two flavours: [`Expr::eval`] on plain `f64` and
//! [`Expr::eval_dual`] which carries a forward-mode gradient alongside the value.

mod dual;
mod eval;
mod parse;

use std::fmt;

use thiserror::Error;

pub use dual::DualNumber;
pub use parse::{parse, parse_at};

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("LexError at {pos}: unexpected character {ch:?}")]
    Lex { pos: Pos, ch: char },
    #[error("ParseError at {pos}: expected {expected}, found {found}")]
    Parse {
        pos: Pos,
        expected: String,
        found: String,
    },
    #[error("UnknownIdentifier at {pos}: {name:?}")]
    UnknownIdentifier { pos: Pos, name: String },
    #[error("VariableOutOfRange at {pos}: x{index} but n = {n}")]
    VariableOutOfRange { pos: Pos, index: usize, n: usize },
    #[error("ArityError at {pos}: {name} takes {expected} argument(s), got {found}")]
    Arity {
        pos: Pos,
        name: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("DomainError at {pos}: {message}")]
    Domain { pos: Pos, message: String },
    #[error("evaluation point has {found} coordinates, expression expects {expected}")]
    Dimension { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Floor,
    Pow,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
        Func::Floor,
        Func::Pow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Floor => "floor",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        if self == Func::Pow {
            2
        } else {
            1
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    /// Zero-based variable index (`x1` is `Var(0)`).
    Var(usize),
    /// The function index `i`.
    Param,
    Pi,
    Neg(Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub node: Node,
    pub pos: Pos,
}

impl Expr {
    pub fn new(node: Node, pos: Pos) -> Self {
        Self { node, pos }
    }

    /// Zero-based indices of the variables the expression mentions, sorted.
    pub fn free_variables(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Node::Var(j) = e.node {
                out.push(j);
            }
        });
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn uses_parameter(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e.node, Node::Param));
        found
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match &self.node {
            Node::Neg(a) => a.visit(f),
            Node::Binary(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Node::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
            Node::Const(_) | Node::Var(_) | Node::Param | Node::Pi => {}
        }
    }

    /// Tree equality ignoring source positions.
    pub fn same_structure(&self, other: &Expr) -> bool {
        match (&self.node, &other.node) {
            (Node::Const(a), Node::Const(b)) => a.to_bits() == b.to_bits(),
            (Node::Var(a), Node::Var(b)) => a == b,
            (Node::Param, Node::Param) | (Node::Pi, Node::Pi) => true,
            (Node::Neg(a), Node::Neg(b)) => a.same_structure(b),
            (Node::Binary(o1, a1, b1), Node::Binary(o2, a2, b2)) => {
                o1 == o2 && a1.same_structure(a2) && b1.same_structure(b2)
            }
            (Node::Call(f1, a1), Node::Call(f2, a2)) => {
                f1 == f2
                    && a1.len() == a2.len()
                    && a1.iter().zip(a2).all(|(x, y)| x.same_structure(y))
            }
            _ => false,
        }
    }
}

/// Fully parenthesised rendering; re-parsing it yields the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Node::Const(c) => write!(f, "{c:?}"),
            Node::Var(j) => write!(f, "x{}", j + 1),
            Node::Param => f.write_str("i"),
            Node::Pi => f.write_str("pi"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
