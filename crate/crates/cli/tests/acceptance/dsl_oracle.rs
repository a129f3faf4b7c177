//! Random expression trees, rendered to text and evaluated by a tree walker
//! that shares no code with the library parser or compiler.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub enum Tree {
    Num(f64),
    Var(&'static str),
    Neg(Box<Tree>),
    Bin(char, Box<Tree>, Box<Tree>),
    Call(&'static str, Vec<Tree>),
}

pub const VARS: [&str; 5] = ["x1", "x2", "u1", "gain", "pi"];
const UNARY: [&str; 9] = ["sin", "cos", "tan", "tanh", "exp", "ln", "sqrt", "abs", "sign"];
const BINARY: [&str; 3] = ["min", "max", "pow"];

pub fn random_tree(rng: &mut ChaCha8Rng, depth: u32) -> Tree {
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.5) {
            // short decimals so the text is exact enough to re-parse bit for bit
            let digits: u32 = rng.gen_range(0..4);
            Tree::Num(rng.gen_range(0..2000) as f64 / 10f64.powi(digits as i32))
        } else {
            Tree::Var(VARS.choose(rng).unwrap())
        };
    }
    let sub = |rng: &mut ChaCha8Rng| Box::new(random_tree(rng, depth - 1));
    match rng.gen_range(0..10) {
        0 => Tree::Neg(sub(rng)),
        1..=5 => {
            let op = *['+', '-', '*', '/', '^'].choose(rng).unwrap();
            Tree::Bin(op, sub(rng), sub(rng))
        }
        6..=8 => Tree::Call(UNARY.choose(rng).unwrap(), vec![random_tree(rng, depth - 1)]),
        _ => Tree::Call(BINARY.choose(rng).unwrap(), vec![random_tree(rng, depth - 1), random_tree(rng, depth - 1)]),
    }
}

fn precedence(t: &Tree) -> u8 {
    match t {
        Tree::Bin('+' | '-', ..) => 1,
        Tree::Bin('*' | '/', ..) => 2,
        Tree::Neg(_) => 3,
        Tree::Bin(..) => 4,
        _ => 5,
    }
}

fn wrap(t: &Tree, parens: bool, rng: &mut ChaCha8Rng) -> String {
    let s = render(t, rng);
    // occasionally add redundant parentheses too
    if parens || rng.gen_bool(0.1) {
        format!("({s})")
    } else {
        s
    }
}

/// Text with the fewest parentheses the precedence rules allow, plus some
/// redundant ones and random spacing.
pub fn render(t: &Tree, rng: &mut ChaCha8Rng) -> String {
    let sp = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.3) { " " } else { "" };
    match t {
        Tree::Num(v) => format!("{v}"),
        Tree::Var(name) => name.to_string(),
        Tree::Neg(a) => format!("-{}", wrap(a, precedence(a) < 3, rng)),
        Tree::Bin('^', a, b) => {
            let base = wrap(a, precedence(a) <= 4, rng);
            let exponent = wrap(b, precedence(b) < 3, rng);
            format!("{base}{}^{}{exponent}", sp(rng), sp(rng))
        }
        Tree::Bin(op, a, b) => {
            let p = precedence(t);
            let lhs = wrap(a, precedence(a) < p, rng);
            let rhs = wrap(b, precedence(b) <= p, rng);
            format!("{lhs}{}{op}{}{rhs}", sp(rng), sp(rng))
        }
        Tree::Call(name, args) => {
            let args: Vec<String> = args.iter().map(|a| render(a, rng)).collect();
            format!("{name}({})", args.join(", "))
        }
    }
}

pub fn binding(name: &str, env: &[f64; 4]) -> f64 {
    match name {
        "x1" => env[0],
        "x2" => env[1],
        "u1" => env[2],
        "gain" => env[3],
        "pi" => std::f64::consts::PI,
        other => panic!("unbound {other}"),
    }
}

pub fn eval(t: &Tree, env: &[f64; 4]) -> f64 {
    match t {
        Tree::Num(v) => *v,
        Tree::Var(name) => binding(name, env),
        Tree::Neg(a) => -eval(a, env),
        Tree::Bin(op, a, b) => {
            let (a, b) = (eval(a, env), eval(b, env));
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                '/' => a / b,
                _ => a.powf(b),
            }
        }
        Tree::Call(name, args) => {
            let a = eval(&args[0], env);
            match *name {
                "sin" => a.sin(),
                "cos" => a.cos(),
                "tan" => a.tan(),
                "tanh" => a.tanh(),
                "exp" => a.exp(),
                "ln" => a.ln(),
                "sqrt" => a.sqrt(),
                "abs" => a.abs(),
                "sign" => {
                    if a > 0.0 {
                        1.0
                    } else if a < 0.0 {
                        -1.0
                    } else {
                        a * 0.0
                    }
                }
                _ => {
                    let b = eval(&args[1], env);
                    match *name {
                        "min" => a.min(b),
                        "max" => a.max(b),
                        _ => a.powf(b),
                    }
                }
            }
        }
    }
}

/// Distance in units in the last place; NaNs match each other only.
pub fn ulps(a: f64, b: f64) -> u64 {
    if a.is_nan() || b.is_nan() {
        return if a.is_nan() && b.is_nan() { 0 } else { u64::MAX };
    }
    if a == b {
        return 0;
    }
    if a.signum() != b.signum() {
        return u64::MAX;
    }
    (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
}
