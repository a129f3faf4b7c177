//! Multi-tone excitation: several generators with weights `M` stacked into one
//! generator of period `T_A`, and empirical constants for the superposition
//! bounds on gain and phase.

use nalgebra::DMatrix;

use crate::analysis::{frequency_response, signal_inner, signal_norm};
use crate::linalg::spectral_norm;
use crate::model::{invalid, GeneratorModel, ParamPoint, PlantModel};
use crate::ode::{settle_to_steady_state, IntegratorSettings, SteadyStateRecord};
use crate::{Error, Result};

/// Default largest denominator accepted when rationalizing period ratios.
pub const DEFAULT_MAX_DENOMINATOR: u64 = 64;
/// Relative error allowed between a period ratio and its rational approximation.
pub const RATIO_TOL: f64 = 1e-9;

/// One weighted tone `(ω, M)` with `M` an `m×m` matrix acting on `ℓ(ω, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tone {
    pub omega: ParamPoint,
    pub weight: DMatrix<f64>,
}

impl Tone {
    pub fn scalar(omega: ParamPoint, weight: f64, m: usize) -> Self {
        Self { omega, weight: DMatrix::identity(m, m) * weight }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiInputSpec {
    pub tones: Vec<Tone>,
    pub max_denominator: u64,
}

impl MultiInputSpec {
    pub fn new(tones: Vec<Tone>) -> Result<Self> {
        if tones.is_empty() {
            return Err(invalid("tones", "need at least one tone"));
        }
        for (i, tone) in tones.iter().enumerate() {
            tone.omega.validate().map_err(|e| invalid(&format!("tones[{i}]"), e.to_string()))?;
            let w = &tone.weight;
            if w.nrows() != w.ncols() {
                return Err(invalid(&format!("tones[{i}].weight"), "must be square"));
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(invalid(&format!("tones[{i}].weight"), "must be finite"));
            }
        }
        Ok(Self { tones, max_denominator: DEFAULT_MAX_DENOMINATOR })
    }

    pub fn with_max_denominator(mut self, q_max: u64) -> Self {
        self.max_denominator = q_max;
        self
    }
}

/// Best continued-fraction convergent `p/q` of `x > 0` with `q ≤ q_max` and
/// relative error at most `rel_tol`.
pub fn rational_approximation(x: f64, q_max: u64, rel_tol: f64) -> Option<(u64, u64)> {
    if !(x.is_finite() && x > 0.0) {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a > u64::MAX as f64 / 2.0 {
            return None;
        }
        let a = a as u64;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        if q2 > q_max {
            return None;
        }
        if ((p2 as f64 / q2 as f64) - x).abs() <= rel_tol * x {
            return Some((p2, q2));
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = rest - a as f64;
        if frac == 0.0 {
            return None;
        }
        rest = 1.0 / frac;
    }
    None
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Smallest `T_A` that is an integer multiple of every tone period.
pub fn common_period(spec: &MultiInputSpec, generator: &GeneratorModel) -> Result<f64> {
    let periods: Vec<f64> = spec
        .tones
        .iter()
        .map(|t| {
            generator.check(&t.omega)?;
            Ok(generator.period(&t.omega))
        })
        .collect::<Result<_>>()?;
    let base = periods[0];
    // T_i = T_1·p_i/q_i in lowest terms; T_A = k·T_1 needs p_i | k, so k = lcm(p)
    let mut lcm_p = 1u64;
    for &t in &periods[1..] {
        let (p, q) = rational_approximation(t / base, spec.max_denominator, RATIO_TOL)
            .ok_or(Error::IncommensurateFrequencies { max_denominator: spec.max_denominator })?;
        let g = gcd(p, q);
        let p = p / g;
        lcm_p = (lcm_p / gcd(lcm_p, p)).checked_mul(p).ok_or(Error::IncommensurateFrequencies { max_denominator: spec.max_denominator })?;
    }
    Ok(base * lcm_p as f64)
}

/// Stacked generator `z_A = (z_1, …, z_N)`, `u_A = Σ M_i ℓ(ω_i, z_i)` with period `T_A`.
/// The parameter point passed to its callbacks is ignored.
pub fn lifted_generator(spec: &MultiInputSpec, generator: &GeneratorModel) -> Result<GeneratorModel> {
    let m = generator.input_dim();
    for (i, tone) in spec.tones.iter().enumerate() {
        if tone.weight.nrows() != m {
            return Err(Error::Dimension(format!(
                "tones[{i}].weight must be {m}x{m}, got {}x{}",
                tone.weight.nrows(),
                tone.weight.ncols()
            )));
        }
    }
    let period = common_period(spec, generator)?;
    let r = generator.state_dim();
    let count = spec.tones.len();
    let tones = std::sync::Arc::new(spec.tones.clone());
    let base = generator.clone();

    let (g, t) = (base.clone(), tones.clone());
    let field = move |_: &ParamPoint, z: &[f64], dz: &mut [f64]| {
        for (i, tone) in t.iter().enumerate() {
            g.vector_field(&tone.omega, &z[i * r..(i + 1) * r], &mut dz[i * r..(i + 1) * r]);
        }
    };
    let (g, t) = (base.clone(), tones.clone());
    let output = move |_: &ParamPoint, z: &[f64], u: &mut [f64]| {
        weighted_sum(&t, z, r, u, |w, zi, out| g.ell(w, zi, out));
    };
    let (g, t) = (base.clone(), tones.clone());
    let z0 = move |_: &ParamPoint| t.iter().flat_map(|tone| g.initial_state(&tone.omega)).collect::<Vec<f64>>();
    let name = format!("{}x{count}", generator.name());
    let mut lifted = GeneratorModel::new(name, r * count, m, field, output, z0, move |_| period);
    if generator.has_analytic_derivative() {
        let (g, t) = (base, tones);
        lifted = lifted.with_ell_dot(move |_, z, du| {
            weighted_sum(&t, z, r, du, |w, zi, out| {
                g.ell_dot(w, zi, out);
            });
        });
    }
    Ok(lifted)
}

fn weighted_sum(tones: &[Tone], z: &[f64], r: usize, out: &mut [f64], eval: impl Fn(&ParamPoint, &[f64], &mut [f64])) {
    let m = out.len();
    out.fill(0.0);
    let mut part = [0.0f64; 8];
    let mut heap;
    let part: &mut [f64] = if m <= 8 {
        &mut part[..m]
    } else {
        heap = vec![0.0; m];
        &mut heap
    };
    for (i, tone) in tones.iter().enumerate() {
        eval(&tone.omega, &z[i * r..(i + 1) * r], part);
        for a in 0..m {
            for b in 0..m {
                out[a] += tone.weight[(a, b)] * part[b];
            }
        }
    }
}

fn lifted_settings(spec: &MultiInputSpec, generator: &GeneratorModel, period: f64, settings: &IntegratorSettings) -> IntegratorSettings {
    let shortest = spec.tones.iter().map(|t| generator.period(&t.omega)).fold(f64::INFINITY, f64::min);
    let multiple = (period / shortest - 1e-9).ceil().max(1.0) as usize;
    IntegratorSettings { samples_per_period: settings.samples_per_period * multiple, ..settings.clone() }
}

/// Steady state of the plant under the multi-tone input, sampled over one `T_A`.
/// The sample count is scaled so the fastest tone keeps `samples_per_period`
/// samples per own period. The record carries the first tone's parameter point.
pub fn multi_steady_state(
    plant: &PlantModel,
    generator: &GeneratorModel,
    spec: &MultiInputSpec,
    settings: &IntegratorSettings,
) -> Result<SteadyStateRecord> {
    if spec.tones.iter().all(|t| t.weight.iter().all(|&v| v == 0.0)) {
        return Err(Error::ZeroInput);
    }
    let lifted = lifted_generator(spec, generator)?;
    let first = spec.tones[0].omega;
    let settings = lifted_settings(spec, generator, lifted.period(&first), settings);
    settle_to_steady_state(plant, &lifted, &first, &settings)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToneReport {
    pub omega: ParamPoint,
    pub weight_norm: f64,
    pub alpha: f64,
    /// `r cos ϑ` and `r sin ϑ`; zero for a degenerate tone.
    pub r_cos: f64,
    pub r_sin: f64,
    pub degenerate: bool,
    /// `‖M‖·α·‖ℓ(ω)‖` over `T_A`, this tone's share of the triangle bound.
    pub triangle_term: f64,
}

/// Instance-level constants for the superposition bounds. They are the
/// smallest uniform constants that make each bound hold for this instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpositionReport {
    pub period: f64,
    pub output_norm: f64,
    pub input_output: f64,
    pub rate_output: f64,
    pub tones: Vec<ToneReport>,
    /// `Σ ‖M‖·‖Y_ω‖` over `T_A`.
    pub triangle_bound: f64,
    pub b_star: f64,
    pub c_star: f64,
    pub d_star: f64,
    pub periods_simulated: usize,
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

pub fn superposition_report(
    plant: &PlantModel,
    generator: &GeneratorModel,
    spec: &MultiInputSpec,
    settings: &IntegratorSettings,
) -> Result<SuperpositionReport> {
    let record = multi_steady_state(plant, generator, spec, settings)?;
    let (period, q) = (record.period, record.quadrature);
    let output_norm = signal_norm(&record.output, period, q)?;
    let input_output = signal_inner(&record.input, &record.output, period, q)?.abs();
    let rate_output = signal_inner(&record.input_rate, &record.output, period, q)?.abs();

    let mut tones = Vec::with_capacity(spec.tones.len());
    for tone in &spec.tones {
        let single = settle_to_steady_state(plant, generator, &tone.omega, settings)?;
        let sample = frequency_response(&single)?;
        let weight_norm = spectral_norm(&tone.weight);
        let input_norm = signal_norm(&single.input, single.period, single.quadrature)? * (period / single.period).sqrt();
        let (r_cos, r_sin) =
            if sample.degenerate { (0.0, 0.0) } else { (sample.radius * sample.theta.cos(), sample.radius * sample.theta.sin()) };
        tones.push(ToneReport {
            omega: tone.omega,
            weight_norm,
            alpha: sample.alpha,
            r_cos,
            r_sin,
            degenerate: sample.degenerate,
            triangle_term: weight_norm * sample.alpha * input_norm,
        });
    }
    if tones.iter().all(|t| t.alpha == 0.0) {
        return Err(Error::Degenerate);
    }
    let gain_sum: f64 = tones.iter().map(|t| t.weight_norm * t.alpha).sum();
    let cos_sum: f64 = tones.iter().map(|t| t.r_cos.abs()).sum();
    let sin_sum: f64 = tones.iter().map(|t| t.r_sin.abs()).sum();
    Ok(SuperpositionReport {
        period,
        output_norm,
        input_output,
        rate_output,
        triangle_bound: tones.iter().map(|t| t.triangle_term).sum(),
        b_star: ratio(output_norm, gain_sum),
        c_star: ratio(input_output, cos_sum),
        d_star: ratio(rate_output, sin_sum),
        tones,
        periods_simulated: record.diagnostics.periods_simulated,
    })
}
