//! Closed-loop composition of a controlled plant `ẋ = f_c(x,u,v)` with a
//! feedback `ẋ_p = f_p(x_p,x,u,y)`, `v = κ(x_p,x,u,y)`, the stability test of
//! the unforced origin and the specification-box check on frequency responses.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::FrequencyResponseSample;
use crate::dsl::{compile_all, Frame, Scope, Signal as Sig};
use crate::linalg::eigenvalues;
use crate::model::{builtin_model, invalid, ParamPoint, PlantModel, SpecSet};
use crate::ode::{Dopri5, IntegratorSettings, StepControl};
use crate::{Error, Result};

type ControlledFn = Arc<dyn Fn(&[f64], &[f64], &[f64], &mut [f64]) + Send + Sync>;
type FeedbackFn = Arc<dyn Fn(&[f64], &[f64], &[f64], &[f64], &mut [f64]) + Send + Sync>;

/// Plant with a control channel: `ẋ = f_c(x,u,v)`, `y = h(x,u)`, where
/// `f_c(x,u,0)` is the open-loop vector field.
#[derive(Clone)]
pub struct ControlledPlant {
    name: String,
    open: PlantModel,
    control_dim: usize,
    f_c: ControlledFn,
    differentiable: bool,
}

impl ControlledPlant {
    pub fn new<F>(open: PlantModel, control_dim: usize, f_c: F) -> Self
    where
        F: Fn(&[f64], &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self { name: open.name().to_string(), differentiable: open.is_differentiable(), open, control_dim, f_c: Arc::new(f_c) }
    }

    /// `f_c(x,u,v) = f(x,u) + v` with `v ∈ Rⁿ`.
    pub fn additive(open: PlantModel) -> Self {
        let n = open.state_dim();
        let plant = open.clone();
        Self::new(open, n, move |x, u, v, dx| {
            plant.dynamics(x, u, dx);
            for (d, vi) in dx.iter_mut().zip(v) {
                *d += vi;
            }
        })
    }

    /// `f_c` from expressions over `x`, `u`, `v` and parameters; `h` over `x`, `u`.
    pub fn from_dsl(
        name: &str,
        state_dim: usize,
        input_dim: usize,
        control_dim: usize,
        f_c: &[String],
        h: &[String],
        params: &BTreeMap<String, f64>,
    ) -> Result<Self> {
        if f_c.len() != state_dim {
            return Err(Error::Dimension(format!("f: expected {state_dim} expression(s), got {}", f_c.len())));
        }
        let scope = Scope::new().signal(Sig::X, state_dim).signal(Sig::U, input_dim).signal(Sig::V, control_dim).constants(params);
        let (exprs, rough) = compile_all("f", f_c, &scope)?;
        let exprs = Arc::new(exprs);
        let open_f = exprs.clone();
        let zeros = vec![0.0; control_dim];
        // the open loop is f_c with v = 0; h comes from the plain plant builder
        let open = crate::dsl::dsl_plant(name, state_dim, input_dim, &vec!["0".to_string(); state_dim], h, params)?;
        let (p, h_plant) = (open.output_dim(), open.clone());
        let open = PlantModel::new(
            name,
            state_dim,
            input_dim,
            p,
            move |x, u, dx| {
                let frame = Frame { x, u, v: &zeros, ..Default::default() };
                for (d, e) in dx.iter_mut().zip(open_f.iter()) {
                    *d = e.eval(&frame);
                }
            },
            move |x, u, y| h_plant.output(x, u, y),
        );
        let smooth = open.is_differentiable() && !rough;
        let mut out = Self::new(open, control_dim, move |x, u, v, dx| {
            let frame = Frame { x, u, v, ..Default::default() };
            for (d, e) in dx.iter_mut().zip(exprs.iter()) {
                *d = e.eval(&frame);
            }
        });
        out.differentiable = smooth;
        if !smooth {
            out.open = out.open.nonsmooth();
        }
        Ok(out)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn open_loop(&self) -> &PlantModel {
        &self.open
    }
    pub fn control_dim(&self) -> usize {
        self.control_dim
    }
}

/// Feedback `ẋ_p = f_p(x_p,x,u,y)`, `v = κ(x_p,x,u,y)`; `state_dim = 0` is static.
#[derive(Clone)]
pub struct Feedback {
    name: String,
    state_dim: usize,
    control_dim: usize,
    f_p: FeedbackFn,
    kappa: FeedbackFn,
    differentiable: bool,
}

impl Feedback {
    pub fn new<P, K>(name: impl Into<String>, state_dim: usize, control_dim: usize, f_p: P, kappa: K) -> Self
    where
        P: Fn(&[f64], &[f64], &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        K: Fn(&[f64], &[f64], &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self { name: name.into(), state_dim, control_dim, f_p: Arc::new(f_p), kappa: Arc::new(kappa), differentiable: true }
    }

    /// Static `v = κ(x, u, y)`.
    pub fn static_map<K>(name: impl Into<String>, control_dim: usize, kappa: K) -> Self
    where
        K: Fn(&[f64], &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::new(name, 0, control_dim, |_, _, _, _, _| {}, move |_, x, u, y, v| kappa(x, u, y, v))
    }

    pub fn zero(control_dim: usize) -> Self {
        Self::static_map("zero", control_dim, |_, _, _, v| v.fill(0.0))
    }

    /// `κ = (−K x₁, K x₁²)`.
    pub fn example5_state(k: f64) -> Self {
        Self::static_map("example5_state", 2, move |x, _, _, v| {
            v[0] = -k * x[0];
            v[1] = k * x[0] * x[0];
        })
    }

    /// `κ = −K (x₁ + tanh(x₁ + x₂), 0)`.
    pub fn example5_output(k: f64) -> Self {
        Self::static_map("example5_output", 2, move |x, _, _, v| {
            v[0] = -k * (x[0] + (x[0] + x[1]).tanh());
            v[1] = 0.0;
        })
    }

    /// Built-in feedback by name with gain `k`.
    pub fn builtin(name: &str, k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(invalid("K", "must be finite"));
        }
        match name {
            "example5_state" => Ok(Self::example5_state(k)),
            "example5_output" => Ok(Self::example5_output(k)),
            other => Err(invalid("feedback.name", format!("unknown built-in feedback `{other}`"))),
        }
    }

    /// Feedback from expressions over `x`, `xp`, `u`, `y` and parameters.
    pub fn from_dsl(
        kappa: &[String],
        f_p: &[String],
        plant_state_dim: usize,
        input_dim: usize,
        output_dim: usize,
        params: &BTreeMap<String, f64>,
    ) -> Result<Self> {
        if kappa.is_empty() {
            return Err(Error::Dimension("kappa: at least one expression is required".into()));
        }
        let scope = Scope::new()
            .signal(Sig::X, plant_state_dim)
            .signal(Sig::Xp, f_p.len())
            .signal(Sig::U, input_dim)
            .signal(Sig::Y, output_dim)
            .constants(params);
        let (k_exprs, k_rough) = compile_all("kappa", kappa, &scope)?;
        let (p_exprs, p_rough) = compile_all("f_p", f_p, &scope)?;
        let eval_all = |exprs: Vec<crate::dsl::Compiled>| {
            let exprs = Arc::new(exprs);
            move |xp: &[f64], x: &[f64], u: &[f64], y: &[f64], out: &mut [f64]| {
                let frame = Frame { x, u, y, xp, ..Default::default() };
                for (o, e) in out.iter_mut().zip(exprs.iter()) {
                    *o = e.eval(&frame);
                }
            }
        };
        let mut fb = Self::new("dsl", f_p.len(), kappa.len(), eval_all(p_exprs), eval_all(k_exprs));
        fb.differentiable = !(k_rough || p_rough);
        Ok(fb)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn state_dim(&self) -> usize {
        self.state_dim
    }
    pub fn control_dim(&self) -> usize {
        self.control_dim
    }
}

/// Fixed-size scratch for the small per-call buffers of the closed loop.
const SCRATCH: usize = 16;

fn with_scratch<R>(len: usize, f: impl FnOnce(&mut [f64]) -> R) -> R {
    if len <= SCRATCH {
        let mut buf = [0.0; SCRATCH];
        f(&mut buf[..len])
    } else {
        f(&mut vec![0.0; len])
    }
}

/// Closed loop as an ordinary plant with state `(x, x_p)` and output `h(x, u)`.
pub fn compose_closed_loop(plant: &ControlledPlant, feedback: &Feedback) -> Result<PlantModel> {
    if plant.control_dim != feedback.control_dim {
        return Err(Error::Dimension(format!(
            "plant `{}` takes {} control input(s) but feedback `{}` produces {}",
            plant.name, plant.control_dim, feedback.name, feedback.control_dim
        )));
    }
    let open = &plant.open;
    let (n, m, p) = (open.state_dim(), open.input_dim(), open.output_dim());
    let (np, mv) = (feedback.state_dim, feedback.control_dim);
    let (f_c, h_open) = (plant.f_c.clone(), open.clone());
    let (f_p, kappa) = (feedback.f_p.clone(), feedback.kappa.clone());
    let h_out = open.clone();
    let model = PlantModel::new(
        format!("{}+{}", plant.name, feedback.name),
        n + np,
        m,
        p,
        move |s, u, ds| {
            let (x, xp) = s.split_at(n);
            let (dx, dxp) = ds.split_at_mut(n);
            with_scratch(p + mv, |buf| {
                let (y, v) = buf.split_at_mut(p);
                h_open.output(x, u, y);
                kappa(xp, x, u, y, v);
                f_c(x, u, v, dx);
                f_p(xp, x, u, y, dxp);
            });
        },
        move |s, u, y| h_out.output(&s[..n], u, y),
    );
    Ok(if plant.differentiable && feedback.differentiable { model } else { model.nonsmooth() })
}

/// Example 5 controlled plant: the open-loop `example5_plant` with `f_c = f + v`.
pub fn example5_controlled() -> ControlledPlant {
    let (open, _) = builtin_model("example5_plant", &BTreeMap::new()).expect("built-in model");
    ControlledPlant::additive(open)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct StabilityOptions {
    /// Eigenvalue dead band around the imaginary axis.
    pub eps_jacobian: f64,
    pub trials: usize,
    pub perturbation: f64,
    /// Required shrink factor of `‖x‖`.
    pub decay_factor: f64,
    /// Longest simulated horizon; horizons double from 1 up to this.
    pub max_horizon: f64,
    pub seed: u64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self { eps_jacobian: 1e-6, trials: 16, perturbation: 1e-3, decay_factor: 1e3, max_horizon: 1e13, seed: 0, rtol: 1e-8, atol: 1e-14 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub verdict: Stability,
    /// `‖f(0, 0)‖`; the origin must be an equilibrium.
    pub equilibrium_residual: f64,
    pub jacobian: Option<DMatrix<f64>>,
    pub eigenvalues: Vec<Complex64>,
    /// `None` when the model is not differentiable.
    pub jacobian_verdict: Option<Stability>,
    pub trials_decayed: usize,
    pub trials_escaped: usize,
    /// Longest time any decaying trial needed.
    pub decay_time: f64,
    pub simulation_verdict: Stability,
}

/// Central-difference Jacobian of `f(·, 0)` at `x`, step `1e-6·(1 + ‖x‖)`.
pub fn jacobian_at(model: &PlantModel, x: &[f64]) -> DMatrix<f64> {
    let n = model.state_dim();
    let u = vec![0.0; model.input_dim()];
    let step = 1e-6 * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt());
    let mut jac = DMatrix::zeros(n, n);
    let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
    let (mut fp, mut fm) = (vec![0.0; n], vec![0.0; n]);
    for j in 0..n {
        xp[j] = x[j] + step;
        xm[j] = x[j] - step;
        model.dynamics(&xp, &u, &mut fp);
        model.dynamics(&xm, &u, &mut fm);
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * step);
        }
        xp[j] = x[j];
        xm[j] = x[j];
    }
    jac
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

enum Trial {
    Decayed(f64),
    Escaped,
    Undecided,
}

fn run_trial(model: &PlantModel, x0: Vec<f64>, options: &StabilityOptions) -> Trial {
    let n = model.state_dim();
    let u = vec![0.0; model.input_dim()];
    let start = norm(&x0);
    let mut x = x0;
    let mut solver = Dopri5::new(n);
    let ctl = StepControl {
        rtol: options.rtol,
        atol: options.atol,
        h_max: f64::INFINITY,
        max_steps: IntegratorSettings::default().max_steps_per_period,
    };
    let mut h = 0.0;
    let (mut t, mut horizon) = (0.0, 1.0f64);
    while t < options.max_horizon {
        let end = horizon.min(options.max_horizon);
        if solver.solve(|_, s, ds| model.dynamics(s, &u, ds), t, &mut x, end, &mut h, &ctl, |_| {}).is_err() {
            return Trial::Escaped;
        }
        t = end;
        let size = norm(&x);
        if size * options.decay_factor <= start {
            return Trial::Decayed(t);
        }
        if size >= start * options.decay_factor {
            return Trial::Escaped;
        }
        horizon *= 2.0;
    }
    Trial::Undecided
}

/// Asymptotic stability of the unforced origin: linearization plus
/// simulation from random perturbations.
pub fn check_origin_stability(model: &PlantModel, options: &StabilityOptions) -> Result<StabilityReport> {
    let n = model.state_dim();
    if n == 0 {
        return Err(Error::Dimension("stability needs a plant with state".into()));
    }
    let mut f0 = vec![0.0; n];
    model.dynamics(&vec![0.0; n], &vec![0.0; model.input_dim()], &mut f0);
    let equilibrium_residual = norm(&f0);

    let (jacobian, eigs, jacobian_verdict) = if model.is_differentiable() {
        let jac = jacobian_at(model, &vec![0.0; n]);
        let eigs = eigenvalues(&jac);
        let abscissa = eigs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        let verdict = if abscissa < -options.eps_jacobian {
            Stability::Stable
        } else if abscissa > options.eps_jacobian {
            Stability::Unstable
        } else {
            Stability::Inconclusive
        };
        (Some(jac), eigs, Some(verdict))
    } else {
        (None, Vec::new(), None)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let (mut decayed, mut escaped, mut decay_time) = (0, 0, 0.0f64);
    for _ in 0..options.trials {
        let mut dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let len = norm(&dir).max(f64::MIN_POSITIVE);
        dir.iter_mut().for_each(|v| *v *= options.perturbation / len);
        match run_trial(model, dir, options) {
            Trial::Decayed(t) => {
                decayed += 1;
                decay_time = decay_time.max(t);
            }
            Trial::Escaped => escaped += 1,
            Trial::Undecided => {}
        }
    }
    let simulation_verdict = if decayed == options.trials {
        Stability::Stable
    } else if escaped > 0 {
        Stability::Unstable
    } else {
        Stability::Inconclusive
    };
    let verdict = if equilibrium_residual > 1e-9 {
        Stability::Inconclusive
    } else {
        match (jacobian_verdict, simulation_verdict) {
            (Some(Stability::Unstable), _) => Stability::Unstable,
            (Some(Stability::Stable), Stability::Stable) => Stability::Stable,
            (Some(Stability::Stable), _) => Stability::Inconclusive,
            (_, sim) => sim,
        }
    };
    Ok(StabilityReport {
        verdict,
        equilibrium_residual,
        jacobian,
        eigenvalues: eigs,
        jacobian_verdict,
        trials_decayed: decayed,
        trials_escaped: escaped,
        decay_time,
        simulation_verdict,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecCheck {
    pub omega: ParamPoint,
    pub alpha_ok: bool,
    /// `None` for a degenerate sample, whose phase and radius are undefined.
    pub theta_ok: Option<bool>,
    pub radius_ok: Option<bool>,
    pub alpha_margin: f64,
    pub theta_margin: f64,
    pub radius_margin: f64,
    /// Smallest of the defined margins; negative iff outside.
    pub margin: f64,
}

impl SpecCheck {
    pub fn inside(&self) -> bool {
        self.alpha_ok && self.theta_ok.unwrap_or(true) && self.radius_ok.unwrap_or(true)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecReport {
    pub checks: Vec<SpecCheck>,
    pub all_inside: bool,
    /// Index of the sample with the smallest margin.
    pub worst: Option<usize>,
}

pub fn check_spec(samples: &[FrequencyResponseSample], spec: &SpecSet) -> SpecReport {
    let checks: Vec<SpecCheck> = samples
        .iter()
        .map(|s| {
            let alpha_margin = spec.alpha.margin(s.alpha);
            if s.degenerate {
                return SpecCheck {
                    omega: s.omega,
                    alpha_ok: spec.alpha.contains(s.alpha),
                    theta_ok: None,
                    radius_ok: None,
                    alpha_margin,
                    theta_margin: f64::NAN,
                    radius_margin: f64::NAN,
                    margin: alpha_margin,
                };
            }
            let theta_margin = spec.theta.margin(s.theta);
            let radius_margin = spec.radius.margin(s.radius);
            SpecCheck {
                omega: s.omega,
                alpha_ok: spec.alpha.contains(s.alpha),
                theta_ok: Some(spec.theta.contains(s.theta)),
                radius_ok: Some(spec.radius.contains(s.radius)),
                alpha_margin,
                theta_margin,
                radius_margin,
                margin: alpha_margin.min(theta_margin).min(radius_margin),
            }
        })
        .collect();
    let worst = checks.iter().enumerate().min_by(|a, b| a.1.margin.total_cmp(&b.1.margin)).map(|(i, _)| i);
    SpecReport { all_inside: checks.iter().all(SpecCheck::inside), checks, worst }
}
