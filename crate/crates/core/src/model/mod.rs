//! Domain types: parameter points, plants, signal generators, LTI realizations,
//! supply rates, specification sets and sweep grids.

mod builtin;
mod special;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::dsl::Expression;
use crate::{Error, Result};

pub use builtin::{builtin_model, cveticanin_generator, gene_regulatory_equilibrium, harmonic_generator, HarmonicStart};
pub use special::{cveticanin_k_alpha, euler_beta, ln_gamma};

/// Parameter of the generator family: angular frequency `varpi` (rad/s),
/// amplitude `a_u` and an optional phase override `phi_u` (rad).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamPoint {
    pub varpi: f64,
    pub a_u: f64,
    pub phi_u: Option<f64>,
}

impl ParamPoint {
    pub fn new(varpi: f64, a_u: f64) -> Result<Self> {
        let point = Self { varpi, a_u, phi_u: None };
        point.validate()?;
        Ok(point)
    }

    pub fn with_phase(mut self, phi_u: f64) -> Result<Self> {
        self.phi_u = Some(phi_u);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.varpi.is_finite() && self.varpi > 0.0) {
            return Err(invalid("varpi", format!("must be finite and > 0, got {}", self.varpi)));
        }
        if !(self.a_u.is_finite() && self.a_u > 0.0) {
            return Err(invalid("a_u", format!("must be finite and > 0, got {}", self.a_u)));
        }
        if let Some(phi) = self.phi_u {
            if !phi.is_finite() {
                return Err(invalid("phi_u", "must be finite"));
            }
        }
        Ok(())
    }
}

pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name: name.to_string(), reason: reason.into() }
}

/// `(state, input, out)` callback shared by plant dynamics and output maps.
pub type PlantFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;
/// `(parameter, generator state, out)` callback used by generators.
pub type GeneratorFn = Arc<dyn Fn(&ParamPoint, &[f64], &mut [f64]) + Send + Sync>;
type InitialStateFn = Arc<dyn Fn(&ParamPoint) -> Vec<f64> + Send + Sync>;

/// Driven system `ẋ = f(x,u)`, `y = h(x,u)` with `x ∈ Rⁿ`, `u ∈ Rᵐ`, `y ∈ Rᵖ`.
///
/// `n = 0` is allowed and describes a memoryless map.
#[derive(Clone)]
pub struct PlantModel {
    name: String,
    n: usize,
    m: usize,
    p: usize,
    f: PlantFn,
    h: PlantFn,
    differentiable: bool,
}

impl PlantModel {
    pub fn new<F, H>(name: impl Into<String>, n: usize, m: usize, p: usize, f: F, h: H) -> Self
    where
        F: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        H: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self { name: name.into(), n, m, p, f: Arc::new(f), h: Arc::new(h), differentiable: true }
    }

    /// Marks the right-hand side as nonsmooth (no Jacobian-based analysis).
    pub fn nonsmooth(mut self) -> Self {
        self.differentiable = false;
        self
    }

    /// Identity map `y = u` with no state.
    pub fn passthrough(m: usize) -> Self {
        Self::new("passthrough", 0, m, m, |_, _, _| {}, |_, u, y| y.copy_from_slice(u))
    }

    pub fn from_realization(lti: &LtiRealization) -> Self {
        let a = lti.a.clone();
        let b = lti.b.clone();
        let c = lti.c.clone();
        let (n, m, p) = (lti.state_dim(), lti.input_dim(), lti.output_dim());
        Self::new(
            "lti",
            n,
            m,
            p,
            move |x, u, dx| {
                for i in 0..n {
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += a[(i, j)] * x[j];
                    }
                    for j in 0..m {
                        acc += b[(i, j)] * u[j];
                    }
                    dx[i] = acc;
                }
            },
            move |x, _, y| {
                for i in 0..p {
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += c[(i, j)] * x[j];
                    }
                    y[i] = acc;
                }
            },
        )
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn state_dim(&self) -> usize {
        self.n
    }
    pub fn input_dim(&self) -> usize {
        self.m
    }
    pub fn output_dim(&self) -> usize {
        self.p
    }
    pub fn is_differentiable(&self) -> bool {
        self.differentiable
    }

    #[inline]
    pub fn dynamics(&self, x: &[f64], u: &[f64], dx: &mut [f64]) {
        (self.f)(x, u, dx)
    }

    #[inline]
    pub fn output(&self, x: &[f64], u: &[f64], y: &mut [f64]) {
        (self.h)(x, u, y)
    }

    pub fn output_vec(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.p];
        self.output(x, u, &mut y);
        y
    }
}

impl fmt::Debug for PlantModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlantModel")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("p", &self.p)
            .field("differentiable", &self.differentiable)
            .finish()
    }
}

/// Signal generator `ż = s(ω,z)`, `u = ℓ(ω,z)` started from `z0(ω)` with period `T_ω`.
#[derive(Clone)]
pub struct GeneratorModel {
    name: String,
    r: usize,
    m: usize,
    s: GeneratorFn,
    ell: GeneratorFn,
    ell_dot: Option<GeneratorFn>,
    z0: InitialStateFn,
    period: Arc<dyn Fn(&ParamPoint) -> f64 + Send + Sync>,
    amplitude_limit: Option<f64>,
}

impl GeneratorModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new<S, L, Z, P>(name: impl Into<String>, r: usize, m: usize, s: S, ell: L, z0: Z, period: P) -> Self
    where
        S: Fn(&ParamPoint, &[f64], &mut [f64]) + Send + Sync + 'static,
        L: Fn(&ParamPoint, &[f64], &mut [f64]) + Send + Sync + 'static,
        Z: Fn(&ParamPoint) -> Vec<f64> + Send + Sync + 'static,
        P: Fn(&ParamPoint) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            r,
            m,
            s: Arc::new(s),
            ell: Arc::new(ell),
            ell_dot: None,
            z0: Arc::new(z0),
            period: Arc::new(period),
            amplitude_limit: None,
        }
    }

    /// Supplies `ℓ̇(ω,z)` analytically; without it the derivative is
    /// finite-differenced on the sample grid.
    pub fn with_ell_dot<D>(mut self, ell_dot: D) -> Self
    where
        D: Fn(&ParamPoint, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.ell_dot = Some(Arc::new(ell_dot));
        self
    }

    /// Rejects parameter points with `a_u ≥ limit`.
    pub fn with_amplitude_limit(mut self, limit: f64) -> Self {
        self.amplitude_limit = Some(limit);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn state_dim(&self) -> usize {
        self.r
    }
    pub fn input_dim(&self) -> usize {
        self.m
    }
    pub fn has_analytic_derivative(&self) -> bool {
        self.ell_dot.is_some()
    }

    pub fn check(&self, omega: &ParamPoint) -> Result<()> {
        omega.validate()?;
        if let Some(limit) = self.amplitude_limit {
            if omega.a_u >= limit {
                return Err(invalid("a_u", format!("must stay below {limit} for generator `{}`", self.name)));
            }
        }
        let period = self.period(omega);
        if !(period.is_finite() && period > 0.0) {
            return Err(invalid("period", format!("generator period must be positive, got {period}")));
        }
        Ok(())
    }

    #[inline]
    pub fn vector_field(&self, omega: &ParamPoint, z: &[f64], dz: &mut [f64]) {
        (self.s)(omega, z, dz)
    }

    #[inline]
    pub fn ell(&self, omega: &ParamPoint, z: &[f64], u: &mut [f64]) {
        (self.ell)(omega, z, u)
    }

    /// Analytic `ℓ̇` if available; returns `false` otherwise.
    #[inline]
    pub fn ell_dot(&self, omega: &ParamPoint, z: &[f64], du: &mut [f64]) -> bool {
        match &self.ell_dot {
            Some(d) => {
                d(omega, z, du);
                true
            }
            None => false,
        }
    }

    pub fn initial_state(&self, omega: &ParamPoint) -> Vec<f64> {
        (self.z0)(omega)
    }

    pub fn period(&self, omega: &ParamPoint) -> f64 {
        (self.period)(omega)
    }
}

impl fmt::Debug for GeneratorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneratorModel")
            .field("name", &self.name)
            .field("r", &self.r)
            .field("m", &self.m)
            .field("analytic_ell_dot", &self.ell_dot.is_some())
            .finish()
    }
}

/// `ẋ = Ax + Bu`, `y = Cx` with Hurwitz `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiRealization {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl LtiRealization {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.ncols() != n {
            return Err(Error::Dimension(format!(
                "A is {}x{}, B is {}x{}, C is {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        if a.iter().chain(b.iter()).chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("realization", "matrix entries must be finite"));
        }
        let lti = Self { a, b, c };
        let abscissa = crate::linalg::spectral_abscissa(&lti.a);
        if abscissa >= 0.0 {
            return Err(Error::NotHurwitz(abscissa));
        }
        Ok(lti)
    }

    /// Builds from row-major nested arrays.
    pub fn from_rows(a: &[Vec<f64>], b: &[Vec<f64>], c: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows_to_matrix("A", a)?, rows_to_matrix("B", b)?, rows_to_matrix("C", c)?)
    }

    /// First-order SISO system `c·b/(s + rate)`.
    pub fn first_order(rate: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, -rate), DMatrix::from_element(1, 1, b), DMatrix::from_element(1, 1, c))
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }
    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }
    pub fn is_siso(&self) -> bool {
        self.input_dim() == 1 && self.output_dim() == 1
    }
}

fn rows_to_matrix(label: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension(format!("{label}: ragged rows")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Supply rate `s(u, y)` whose per-period integral certifies dissipativity
/// relative to the generator.
#[derive(Debug, Clone, PartialEq)]
pub enum SupplyRate {
    /// `γ²uᵀu − yᵀy`
    L2Gain { gamma: f64 },
    /// `uᵀy`
    Passivity,
    /// `uᵀẏ`
    Counterclockwise,
    /// `uᵀy − γ₁yᵀy`
    OutputStrict { gamma1: f64 },
    /// `uᵀy − γ₂uᵀu`
    InputStrict { gamma2: f64 },
    /// `uᵀy − γ₁yᵀy − γ₂uᵀu`
    VeryStrict { gamma1: f64, gamma2: f64 },
    /// Expression over `u1..`, `y1..`, `ydot1..`.
    Custom(Expression),
}

impl SupplyRate {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be > 0, got {v}")))
            }
        };
        match self {
            Self::L2Gain { gamma } => positive("gamma", *gamma),
            Self::OutputStrict { gamma1 } => positive("gamma1", *gamma1),
            Self::InputStrict { gamma2 } => positive("gamma2", *gamma2),
            Self::VeryStrict { gamma1, gamma2 } => {
                positive("gamma1", *gamma1)?;
                positive("gamma2", *gamma2)
            }
            Self::Passivity | Self::Counterclockwise | Self::Custom(_) => Ok(()),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::L2Gain { .. } => "l2_gain",
            Self::Passivity => "passivity",
            Self::Counterclockwise => "counterclockwise",
            Self::OutputStrict { .. } => "output_strict",
            Self::InputStrict { .. } => "input_strict",
            Self::VeryStrict { .. } => "very_strict",
            Self::Custom(_) => "custom",
        }
    }

    /// Whether evaluating the supply needs `ẏ`.
    pub fn needs_output_rate(&self) -> bool {
        match self {
            Self::Counterclockwise => true,
            Self::Custom(e) => e.references_prefix("ydot"),
            _ => false,
        }
    }
}

/// Closed interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    /// Signed distance to the nearest bound; nonnegative iff inside.
    pub fn margin(&self, value: f64) -> f64 {
        (value - self.min).min(self.max - value)
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }
}

/// Loop-shaping specification box `[α_min, α_max] × [ϑ_min, ϑ_max] × [r_min, r_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecSet {
    pub alpha: Range,
    pub theta: Range,
    pub radius: Range,
}

impl SpecSet {
    pub fn new(alpha: Range, theta: Range, radius: Range) -> Result<Self> {
        for (name, r) in [("alpha_range", alpha), ("theta_range", theta), ("radius_range", radius)] {
            if !(r.min.is_finite() && r.max.is_finite()) || r.min > r.max {
                return Err(invalid(name, format!("need finite min ≤ max, got [{}, {}]", r.min, r.max)));
            }
        }
        if radius.min <= 0.0 || radius.max > 1.0 {
            return Err(invalid("radius_range", "must lie within (0, 1]"));
        }
        if theta.min < -PI || theta.max > PI {
            return Err(invalid("theta_range", "must lie within [-π, π]"));
        }
        Ok(Self { alpha, theta, radius })
    }
}

/// Frequency × amplitude grid; both axes strictly increasing and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub varpi_values: Vec<f64>,
    pub a_u_values: Vec<f64>,
}

impl SweepGrid {
    pub fn new(varpi_values: Vec<f64>, a_u_values: Vec<f64>) -> Result<Self> {
        check_axis("varpi_values", &varpi_values)?;
        check_axis("a_u_values", &a_u_values)?;
        Ok(Self { varpi_values, a_u_values })
    }

    /// `count_varpi × count_a` log-spaced grid.
    pub fn log(varpi: (f64, f64), count_varpi: usize, a_u: (f64, f64), count_a: usize) -> Result<Self> {
        Self::new(logspace(varpi.0, varpi.1, count_varpi), logspace(a_u.0, a_u.1, count_a))
    }

    pub fn len(&self) -> usize {
        self.varpi_values.len() * self.a_u_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points in row-major order: amplitude outer, frequency inner.
    pub fn points(&self) -> Vec<ParamPoint> {
        let mut out = Vec::with_capacity(self.len());
        for &a_u in &self.a_u_values {
            for &varpi in &self.varpi_values {
                out.push(ParamPoint { varpi, a_u, phi_u: None });
            }
        }
        out
    }
}

fn check_axis(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(invalid(name, "must be nonempty"));
    }
    for (i, v) in values.iter().enumerate() {
        if !(v.is_finite() && *v > 0.0) {
            return Err(invalid(&format!("{name}[{i}]"), format!("must be finite and > 0, got {v}")));
        }
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(name, "must be strictly increasing"));
    }
    Ok(())
}

/// `count` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (l0, l1) = (lo.log10(), hi.log10());
            (0..count).map(|i| if i == count - 1 { hi } else { 10f64.powf(l0 + (l1 - l0) * i as f64 / (count - 1) as f64) }).collect()
        }
    }
}
