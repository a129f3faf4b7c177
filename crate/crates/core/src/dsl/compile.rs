use std::collections::HashMap;

use super::{BinOp, DslError, DslErrorKind, Expression, Func, Node};

/// Indexed signal families an expression may read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signal {
    X,
    U,
    Z,
    Y,
    Ydot,
    V,
    Xp,
}

impl Signal {
    const ALL: [Signal; 7] = [Signal::Ydot, Signal::Xp, Signal::X, Signal::U, Signal::Z, Signal::Y, Signal::V];

    pub fn prefix(self) -> &'static str {
        match self {
            Self::X => "x",
            Self::U => "u",
            Self::Z => "z",
            Self::Y => "y",
            Self::Ydot => "ydot",
            Self::V => "v",
            Self::Xp => "xp",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// Splits `x12` into `(X, 11)`. Indices are 1-based in the text, 0-based here.
pub(crate) fn classify(name: &str) -> Option<(Signal, usize)> {
    // longer prefixes first so `ydot1` is not read as `y` + "dot1"
    for kind in Signal::ALL {
        if let Some(rest) = name.strip_prefix(kind.prefix()) {
            if !rest.is_empty() && !rest.starts_with('0') && rest.bytes().all(|b| b.is_ascii_digit()) {
                return rest.parse::<usize>().ok().map(|i| (kind, i - 1));
            }
        }
    }
    None
}

/// Declared binding set an expression is compiled against.
#[derive(Debug, Clone, Default)]
pub struct Scope {
    dims: [usize; 7],
    time: bool,
    constants: HashMap<String, f64>,
    dynamic: Vec<String>,
}

impl Scope {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn signal(mut self, kind: Signal, dim: usize) -> Self {
        self.dims[kind.slot()] = dim;
        self
    }

    pub fn with_time(mut self) -> Self {
        self.time = true;
        self
    }

    /// Named parameters folded in as constants at compile time.
    pub fn constants<'a>(mut self, values: impl IntoIterator<Item = (&'a String, &'a f64)>) -> Self {
        self.constants.extend(values.into_iter().map(|(k, v)| (k.clone(), *v)));
        self
    }

    /// Names resolved at evaluation time from `Frame::w`, in declaration order.
    pub fn dynamic(mut self, names: &[&str]) -> Self {
        self.dynamic.extend(names.iter().map(|s| s.to_string()));
        self
    }

    pub fn dim(&self, kind: Signal) -> usize {
        self.dims[kind.slot()]
    }
}

#[derive(Debug, Clone)]
enum Op {
    Const(f64),
    Signal(Signal, usize),
    Time,
    Dynamic(usize),
    Neg(Box<Op>),
    Binary(BinOp, Box<Op>, Box<Op>),
    Call1(Func, Box<Op>),
    Call2(Func, Box<Op>, Box<Op>),
}

/// Evaluation inputs. Unused families stay empty.
#[derive(Debug, Clone, Copy, Default)]
pub struct Frame<'a> {
    pub x: &'a [f64],
    pub u: &'a [f64],
    pub z: &'a [f64],
    pub y: &'a [f64],
    pub ydot: &'a [f64],
    pub v: &'a [f64],
    pub xp: &'a [f64],
    pub w: &'a [f64],
    pub t: f64,
}

impl Frame<'_> {
    #[inline]
    fn signal(&self, kind: Signal) -> &[f64] {
        match kind {
            Signal::X => self.x,
            Signal::U => self.u,
            Signal::Z => self.z,
            Signal::Y => self.y,
            Signal::Ydot => self.ydot,
            Signal::V => self.v,
            Signal::Xp => self.xp,
        }
    }
}

/// An expression with every identifier resolved; evaluation does not allocate.
#[derive(Debug, Clone)]
pub struct Compiled {
    op: Op,
}

impl Compiled {
    #[inline]
    pub fn eval(&self, frame: &Frame<'_>) -> f64 {
        run(&self.op, frame)
    }

    /// Like [`Compiled::eval`], flagging a non-finite result.
    pub fn eval_checked(&self, frame: &Frame<'_>) -> Result<f64, DslError> {
        let v = self.eval(frame);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(DslError::new(DslErrorKind::NonFinite, 0, format!("expression evaluated to {v}")))
        }
    }

    /// Constant value, if the expression folded completely.
    pub fn as_constant(&self) -> Option<f64> {
        match self.op {
            Op::Const(v) => Some(v),
            _ => None,
        }
    }
}

impl Expression {
    /// Resolves identifiers against `scope`; unknown or out-of-range names are
    /// reported at their byte offset.
    pub fn compile(&self, scope: &Scope) -> Result<Compiled, DslError> {
        Ok(Compiled { op: lower(&self.root, scope)? })
    }
}

fn lower(node: &Node, scope: &Scope) -> Result<Op, DslError> {
    Ok(match node {
        Node::Num(v) => Op::Const(*v),
        Node::Ident { name, offset } => resolve(name, *offset, scope)?,
        Node::Neg(a) => match lower(a, scope)? {
            Op::Const(v) => Op::Const(-v),
            a => Op::Neg(Box::new(a)),
        },
        Node::Binary(op, a, b) => match (lower(a, scope)?, lower(b, scope)?) {
            (Op::Const(x), Op::Const(y)) => Op::Const(op.apply(x, y)),
            (a, b) => Op::Binary(*op, Box::new(a), Box::new(b)),
        },
        Node::Call { func, args, .. } => {
            let mut lowered = args.iter().map(|a| lower(a, scope)).collect::<Result<Vec<_>, _>>()?;
            match lowered.len() {
                1 => match lowered.pop().unwrap() {
                    Op::Const(v) => Op::Const(func.apply1(v)),
                    a => Op::Call1(*func, Box::new(a)),
                },
                _ => {
                    let b = lowered.pop().unwrap();
                    let a = lowered.pop().unwrap();
                    match (a, b) {
                        (Op::Const(x), Op::Const(y)) => Op::Const(func.apply2(x, y)),
                        (a, b) => Op::Call2(*func, Box::new(a), Box::new(b)),
                    }
                }
            }
        }
    })
}

fn resolve(name: &str, offset: usize, scope: &Scope) -> Result<Op, DslError> {
    if let Some((kind, index)) = classify(name) {
        let dim = scope.dim(kind);
        if index < dim {
            return Ok(Op::Signal(kind, index));
        }
        let message = if dim == 0 {
            format!("`{name}`: no `{}` signals are available here", kind.prefix())
        } else {
            format!("`{name}` out of range: `{}` has {dim} component(s)", kind.prefix())
        };
        return Err(DslError::new(DslErrorKind::UnknownIdentifier, offset, message));
    }
    if name == "t" {
        if scope.time {
            return Ok(Op::Time);
        }
        return Err(DslError::new(DslErrorKind::UnknownIdentifier, offset, "time `t` is not available here"));
    }
    if let Some(i) = scope.dynamic.iter().position(|d| d == name) {
        return Ok(Op::Dynamic(i));
    }
    if let Some(v) = scope.constants.get(name) {
        return Ok(Op::Const(*v));
    }
    if name == "pi" {
        return Ok(Op::Const(std::f64::consts::PI));
    }
    Err(DslError::new(DslErrorKind::UnknownIdentifier, offset, format!("unknown identifier `{name}`")))
}

#[inline]
fn run(op: &Op, frame: &Frame<'_>) -> f64 {
    match op {
        Op::Const(v) => *v,
        Op::Signal(kind, i) => frame.signal(*kind)[*i],
        Op::Time => frame.t,
        Op::Dynamic(i) => frame.w[*i],
        Op::Neg(a) => -run(a, frame),
        Op::Binary(o, a, b) => o.apply(run(a, frame), run(b, frame)),
        Op::Call1(f, a) => f.apply1(run(a, frame)),
        Op::Call2(f, a, b) => f.apply2(run(a, frame), run(b, frame)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_expression;

    #[test]
    fn classify_prefixes() {
        assert_eq!(classify("x1"), Some((Signal::X, 0)));
        assert_eq!(classify("ydot2"), Some((Signal::Ydot, 1)));
        assert_eq!(classify("xp3"), Some((Signal::Xp, 2)));
        assert_eq!(classify("y10"), Some((Signal::Y, 9)));
        assert_eq!(classify("x0"), None);
        assert_eq!(classify("x"), None);
        assert_eq!(classify("xa"), None);
        assert_eq!(classify("gamma"), None);
    }

    #[test]
    fn compiled_matches_tree_walk() {
        let e = parse_expression("k*x2 - sin(u1) + t*w + pi").unwrap();
        let params = HashMap::from([("k".to_string(), 3.0)]);
        let scope = Scope::new().signal(Signal::X, 2).signal(Signal::U, 1).with_time().constants(&params).dynamic(&["w"]);
        let c = e.compile(&scope).unwrap();
        let frame = Frame { x: &[0.0, 2.0], u: &[0.3], w: &[4.0], t: 0.5, ..Default::default() };
        let bindings = HashMap::from([
            ("k".to_string(), 3.0),
            ("x2".to_string(), 2.0),
            ("u1".to_string(), 0.3),
            ("t".to_string(), 0.5),
            ("w".to_string(), 4.0),
        ]);
        assert_eq!(c.eval(&frame), e.eval(&bindings).unwrap());
    }

    #[test]
    fn scope_violations_are_positioned() {
        let scope = Scope::new().signal(Signal::X, 2);
        let e = parse_expression("x1 + x3").unwrap();
        let err = e.compile(&scope).unwrap_err();
        assert_eq!((err.kind, err.offset), (DslErrorKind::UnknownIdentifier, 5));
        let err = parse_expression("x1 * q").unwrap().compile(&scope).unwrap_err();
        assert_eq!((err.kind, err.offset), (DslErrorKind::UnknownIdentifier, 5));
        let err = parse_expression("t").unwrap().compile(&scope).unwrap_err();
        assert_eq!(err.kind, DslErrorKind::UnknownIdentifier);
    }

    #[test]
    fn constants_fold() {
        let params = HashMap::from([("a".to_string(), 2.0)]);
        let c = parse_expression("a^2 + sqrt(a*8)").unwrap().compile(&Scope::new().constants(&params)).unwrap();
        assert_eq!(c.as_constant(), Some(8.0));
    }

    #[test]
    fn checked_eval_flags_domain_errors() {
        let c = parse_expression("ln(x1)").unwrap().compile(&Scope::new().signal(Signal::X, 1)).unwrap();
        let err = c.eval_checked(&Frame { x: &[0.0], ..Default::default() }).unwrap_err();
        assert_eq!(err.kind, DslErrorKind::NonFinite);
    }
}
