//! Plants and generators assembled from expression strings.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{parse_expression, Compiled, DslError, Frame, Func, Node, Scope, Signal};
use crate::model::{GeneratorModel, ParamPoint, PlantModel};
use crate::{Error, Result};

/// Dynamic names every generator expression may read.
pub const GENERATOR_PARAMS: [&str; 3] = ["varpi", "a_u", "phi_u"];

fn labelled(label: &str, err: DslError) -> Error {
    Error::Dsl(DslError { message: format!("{label}: {}", err.message), ..err })
}

/// Parses and compiles a list of expressions, labelling errors `what[i]`.
pub fn compile_all(what: &str, texts: &[String], scope: &Scope) -> Result<(Vec<Compiled>, bool)> {
    let mut nonsmooth = false;
    let mut out = Vec::with_capacity(texts.len());
    for (i, text) in texts.iter().enumerate() {
        let label = format!("{what}[{i}]");
        let expr = parse_expression(text).map_err(|e| labelled(&label, e))?;
        nonsmooth |= is_nonsmooth(expr.root());
        out.push(expr.compile(scope).map_err(|e| labelled(&label, e))?);
    }
    Ok((out, nonsmooth))
}

/// Compiles a single expression, labelling errors with `what`.
pub fn compile_one(what: &str, text: &str, scope: &Scope) -> Result<Compiled> {
    let expr = parse_expression(text).map_err(|e| labelled(what, e))?;
    expr.compile(scope).map_err(|e| labelled(what, e))
}

fn is_nonsmooth(node: &Node) -> bool {
    match node {
        Node::Num(_) | Node::Ident { .. } => false,
        Node::Neg(a) => is_nonsmooth(a),
        Node::Binary(_, a, b) => is_nonsmooth(a) || is_nonsmooth(b),
        Node::Call { func, args, .. } => matches!(func, Func::Abs | Func::Sign | Func::Min | Func::Max) || args.iter().any(is_nonsmooth),
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(Error::Dimension(format!("{what}: expected {want} expression(s), got {got}")))
    }
}

/// Plant `ẋ = f(x,u)`, `y = h(x,u)` from expressions over `x1..xn`, `u1..um`
/// and named parameters. The output dimension is `h.len()`.
pub fn dsl_plant(
    name: &str,
    state_dim: usize,
    input_dim: usize,
    f: &[String],
    h: &[String],
    params: &BTreeMap<String, f64>,
) -> Result<PlantModel> {
    check_len("f", f.len(), state_dim)?;
    if h.is_empty() {
        return Err(Error::Dimension("h: at least one output expression is required".into()));
    }
    if input_dim == 0 {
        return Err(Error::Dimension("input dimension must be at least 1".into()));
    }
    let scope = Scope::new().signal(Signal::X, state_dim).signal(Signal::U, input_dim).constants(params);
    let (f_exprs, f_rough) = compile_all("f", f, &scope)?;
    let (h_exprs, h_rough) = compile_all("h", h, &scope)?;
    let f_exprs = Arc::new(f_exprs);
    let h_exprs = Arc::new(h_exprs);
    let plant = PlantModel::new(
        name,
        state_dim,
        input_dim,
        h.len(),
        move |x, u, dx| {
            let frame = Frame { x, u, ..Default::default() };
            for (d, e) in dx.iter_mut().zip(f_exprs.iter()) {
                *d = e.eval(&frame);
            }
        },
        move |x, u, y| {
            let frame = Frame { x, u, ..Default::default() };
            for (o, e) in y.iter_mut().zip(h_exprs.iter()) {
                *o = e.eval(&frame);
            }
        },
    );
    Ok(if f_rough || h_rough { plant.nonsmooth() } else { plant })
}

/// Expression sources for a generator; all may read `varpi`, `a_u`, `phi_u`
/// (0 when unset) and named parameters, and `s`, `ell`, `ell_dot` also read `z1..zr`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSource {
    pub s: Vec<String>,
    pub ell: Vec<String>,
    pub ell_dot: Option<Vec<String>>,
    pub z0: Vec<String>,
    pub period: String,
}

fn dynamic_values(omega: &ParamPoint) -> [f64; 3] {
    [omega.varpi, omega.a_u, omega.phi_u.unwrap_or(0.0)]
}

fn eval_into(exprs: &[Compiled], omega: &ParamPoint, z: &[f64], out: &mut [f64]) {
    let w = dynamic_values(omega);
    let frame = Frame { z, w: &w, ..Default::default() };
    for (o, e) in out.iter_mut().zip(exprs) {
        *o = e.eval(&frame);
    }
}

pub fn dsl_generator(name: &str, source: &GeneratorSource, params: &BTreeMap<String, f64>) -> Result<GeneratorModel> {
    let r = source.s.len();
    if r == 0 {
        return Err(Error::Dimension("s: at least one generator state is required".into()));
    }
    check_len("z0", source.z0.len(), r)?;
    let m = source.ell.len();
    if m == 0 {
        return Err(Error::Dimension("ell: at least one input expression is required".into()));
    }
    let outer = Scope::new().constants(params).dynamic(&GENERATOR_PARAMS);
    let inner = outer.clone().signal(Signal::Z, r);
    let s = Arc::new(compile_all("s", &source.s, &inner)?.0);
    let ell = Arc::new(compile_all("ell", &source.ell, &inner)?.0);
    let z0 = Arc::new(compile_all("z0", &source.z0, &outer)?.0);
    let period = compile_one("period", &source.period, &outer)?;
    let ell_dot = match &source.ell_dot {
        Some(d) => {
            check_len("ell_dot", d.len(), m)?;
            Some(Arc::new(compile_all("ell_dot", d, &inner)?.0))
        }
        None => None,
    };
    let mut generator = GeneratorModel::new(
        name,
        r,
        m,
        move |omega, z, dz| eval_into(&s, omega, z, dz),
        move |omega, z, u| eval_into(&ell, omega, z, u),
        move |omega| {
            let mut out = vec![0.0; z0.len()];
            eval_into(&z0, omega, &[], &mut out);
            out
        },
        move |omega| {
            let w = dynamic_values(omega);
            period.eval(&Frame { w: &w, ..Default::default() })
        },
    );
    if let Some(d) = ell_dot {
        generator = generator.with_ell_dot(move |omega, z, du| eval_into(&d, omega, z, du));
    }
    Ok(generator)
}
