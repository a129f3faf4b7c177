//! Arithmetic expression language for user-defined models and supply rates.
//!
//! Grammar (closed; no user functions):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          // right-associative
//! primary := number | ident | ident '(' args ')' | '(' expr ')'
//! ```
//!
//! Identifiers `x<i>`, `u<i>`, `z<i>`, `y<i>`, `ydot<i>`, `v<i>`, `xp<i>`
//! (1-based) and `t` are signals; `pi` is π; everything else is a named
//! parameter.

mod compile;
mod models;
mod parse;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub use compile::{Compiled, Frame, Scope, Signal};
pub use models::{compile_all, compile_one, dsl_generator, dsl_plant, GeneratorSource, GENERATOR_PARAMS};
pub use parse::parse_expression;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DslErrorKind {
    Syntax,
    UnknownIdentifier,
    Arity,
    UnboundVariable,
    NonFinite,
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{kind:?} at byte {offset}: {message}")]
pub struct DslError {
    pub kind: DslErrorKind,
    pub offset: usize,
    pub message: String,
}

impl DslError {
    pub(crate) fn new(kind: DslErrorKind, offset: usize, message: impl Into<String>) -> Self {
        Self { kind, offset, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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
            Self::Add => '+',
            Self::Sub => '-',
            Self::Mul => '*',
            Self::Div => '/',
            Self::Pow => '^',
        }
    }

    #[inline]
    pub(crate) fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Self::Add => a + b,
            Self::Sub => a - b,
            Self::Mul => a * b,
            Self::Div => a / b,
            Self::Pow => power(a, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Tanh,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sign,
    Min,
    Max,
    Pow,
}

impl Func {
    pub fn lookup(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Self::Sin,
            "cos" => Self::Cos,
            "tan" => Self::Tan,
            "tanh" => Self::Tanh,
            "exp" => Self::Exp,
            "ln" => Self::Ln,
            "sqrt" => Self::Sqrt,
            "abs" => Self::Abs,
            "sign" => Self::Sign,
            "min" => Self::Min,
            "max" => Self::Max,
            "pow" => Self::Pow,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Sin => "sin",
            Self::Cos => "cos",
            Self::Tan => "tan",
            Self::Tanh => "tanh",
            Self::Exp => "exp",
            Self::Ln => "ln",
            Self::Sqrt => "sqrt",
            Self::Abs => "abs",
            Self::Sign => "sign",
            Self::Min => "min",
            Self::Max => "max",
            Self::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Self::Min | Self::Max | Self::Pow => 2,
            _ => 1,
        }
    }

    #[inline]
    pub(crate) fn apply1(self, a: f64) -> f64 {
        match self {
            Self::Sin => a.sin(),
            Self::Cos => a.cos(),
            Self::Tan => a.tan(),
            Self::Tanh => a.tanh(),
            Self::Exp => a.exp(),
            Self::Ln => a.ln(),
            Self::Sqrt => a.sqrt(),
            Self::Abs => a.abs(),
            Self::Sign => sign(a),
            Self::Min | Self::Max | Self::Pow => f64::NAN,
        }
    }

    #[inline]
    pub(crate) fn apply2(self, a: f64, b: f64) -> f64 {
        match self {
            Self::Min => a.min(b),
            Self::Max => a.max(b),
            Self::Pow => power(a, b),
            _ => f64::NAN,
        }
    }
}

/// `sign(0) = 0`, unlike `f64::signum`.
#[inline]
pub fn sign(a: f64) -> f64 {
    if a > 0.0 {
        1.0
    } else if a < 0.0 {
        -1.0
    } else {
        a * 0.0
    }
}

/// Real power; a negative base with a non-integer exponent yields NaN.
#[inline]
pub fn power(a: f64, b: f64) -> f64 {
    a.powf(b)
}

/// Abstract syntax tree. Identifiers keep their byte offset for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Ident { name: String, offset: usize },
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call { func: Func, args: Vec<Node>, offset: usize },
}

/// Parsed expression together with its source text.
#[derive(Debug, Clone)]
pub struct Expression {
    source: String,
    root: Node,
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        self.root.structurally_eq(&other.root)
    }
}

impl Node {
    /// Equality ignoring source offsets.
    fn structurally_eq(&self, other: &Node) -> bool {
        match (self, other) {
            (Node::Num(a), Node::Num(b)) => a.to_bits() == b.to_bits(),
            (Node::Ident { name: a, .. }, Node::Ident { name: b, .. }) => a == b,
            (Node::Neg(a), Node::Neg(b)) => a.structurally_eq(b),
            (Node::Binary(oa, la, ra), Node::Binary(ob, lb, rb)) => oa == ob && la.structurally_eq(lb) && ra.structurally_eq(rb),
            (Node::Call { func: fa, args: aa, .. }, Node::Call { func: fb, args: ab, .. }) => {
                fa == fb && aa.len() == ab.len() && aa.iter().zip(ab).all(|(x, y)| x.structurally_eq(y))
            }
            _ => false,
        }
    }

    fn visit_idents<'a>(&'a self, out: &mut dyn FnMut(&'a str, usize)) {
        match self {
            Node::Num(_) => {}
            Node::Ident { name, offset } => out(name, *offset),
            Node::Neg(a) => a.visit_idents(out),
            Node::Binary(_, a, b) => {
                a.visit_idents(out);
                b.visit_idents(out);
            }
            Node::Call { args, .. } => args.iter().for_each(|a| a.visit_idents(out)),
        }
    }
}

impl Expression {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Distinct identifier names in order of first appearance.
    pub fn identifiers(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        self.root.visit_idents(&mut |name, _| {
            if !names.iter().any(|n| n == name) {
                names.push(name.to_string());
            }
        });
        names
    }

    /// Whether any signal identifier starts with `prefix` followed by an index.
    pub fn references_prefix(&self, prefix: &str) -> bool {
        let mut found = false;
        self.root.visit_idents(&mut |name, _| {
            if let Some((kind, _)) = compile::classify(name) {
                if kind.prefix() == prefix {
                    found = true;
                }
            }
        });
        found
    }

    /// Tree-walking evaluation against a name → value map.
    pub fn eval(&self, bindings: &HashMap<String, f64>) -> Result<f64, DslError> {
        let value = eval_node(&self.root, bindings)?;
        if value.is_finite() {
            Ok(value)
        } else {
            Err(DslError::new(DslErrorKind::NonFinite, 0, format!("expression evaluated to {value}")))
        }
    }
}

/// Evaluates with IEEE-754 double arithmetic; a non-finite result is an error.
pub fn eval_expression(expr: &Expression, bindings: &HashMap<String, f64>) -> Result<f64, DslError> {
    expr.eval(bindings)
}

fn eval_node(node: &Node, bindings: &HashMap<String, f64>) -> Result<f64, DslError> {
    Ok(match node {
        Node::Num(v) => *v,
        Node::Ident { name, offset } => match bindings.get(name) {
            Some(v) => *v,
            None if name == "pi" => std::f64::consts::PI,
            None => return Err(DslError::new(DslErrorKind::UnboundVariable, *offset, format!("`{name}` is not bound"))),
        },
        Node::Neg(a) => -eval_node(a, bindings)?,
        Node::Binary(op, a, b) => op.apply(eval_node(a, bindings)?, eval_node(b, bindings)?),
        Node::Call { func, args, .. } => match args.as_slice() {
            [a] => func.apply1(eval_node(a, bindings)?),
            [a, b] => func.apply2(eval_node(a, bindings)?, eval_node(b, bindings)?),
            _ => unreachable!("arity checked at parse time"),
        },
    })
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Debug formatting of f64 is the shortest round-trip representation
            Node::Num(v) => write!(f, "{v:?}"),
            Node::Ident { name, .. } => f.write_str(name),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Call { func, args, .. } => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Pretty-prints in fully parenthesised form, which parses back to the same tree.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}
