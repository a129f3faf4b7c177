//! Dissipativity relative to the generator, certified two ways: by the sign of
//! the per-period supply integral and by the equivalent condition on `(α, ϑ, r)`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::analysis::{periodic_derivative, signal_inner, signal_norm, FrequencyResponseSample};
use crate::dsl::{DslError, DslErrorKind, Frame, Scope, Signal as Sig};
use crate::model::{invalid, ParamPoint, SupplyRate};
use crate::ode::{Signal, SteadyStateRecord};
use crate::{Error, Result};

/// Relative band around `c_ω = 0` treated as numerically zero.
pub const INTEGRAL_BAND: f64 = 1e-8;
/// Band around a zero frequency-response margin.
pub const MARGIN_BAND: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    /// Too close to the boundary to call.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipativityCertificate {
    pub omega: ParamPoint,
    pub supply: String,
    pub c_omega: f64,
    /// Magnitude scale `c_omega` is compared against.
    pub c_scale: f64,
    pub holds_integral: bool,
    /// `None` for custom supplies, which have no frequency-response condition.
    pub holds_frf: Option<bool>,
    pub margin: f64,
    pub borderline: bool,
    pub consistent: bool,
    pub verdict: Verdict,
}

fn output_rate(record: &SteadyStateRecord) -> Signal {
    periodic_derivative(&record.output, record.period)
}

/// `c_ω` together with the scale of its constituent terms.
fn integral_with_scale(record: &SteadyStateRecord, supply: &SupplyRate) -> Result<(f64, f64)> {
    supply.validate()?;
    let (t, q) = (record.period, record.quadrature);
    let inner = |a: &Signal, b: &Signal| signal_inner(a, b, t, q);
    let norm = |a: &Signal| signal_norm(a, t, q);
    let (u, y) = (&record.input, &record.output);
    if !matches!(supply, SupplyRate::Custom(_)) && u.dim() != y.dim() {
        return Err(Error::Dimension(format!("supply needs equal input and output dimensions, got {} and {}", u.dim(), y.dim())));
    }
    Ok(match supply {
        SupplyRate::L2Gain { gamma } => {
            let (uu, yy) = (inner(u, u)?, inner(y, y)?);
            (gamma * gamma * uu - yy, gamma * gamma * uu + yy)
        }
        SupplyRate::Passivity => (inner(u, y)?, norm(u)? * norm(y)?),
        SupplyRate::Counterclockwise => {
            let ydot = output_rate(record);
            (inner(u, &ydot)?, norm(u)? * norm(&ydot)?)
        }
        SupplyRate::OutputStrict { gamma1 } => {
            let yy = inner(y, y)?;
            (inner(u, y)? - gamma1 * yy, norm(u)? * norm(y)? + gamma1 * yy)
        }
        SupplyRate::InputStrict { gamma2 } => {
            let uu = inner(u, u)?;
            (inner(u, y)? - gamma2 * uu, norm(u)? * norm(y)? + gamma2 * uu)
        }
        SupplyRate::VeryStrict { gamma1, gamma2 } => {
            let (uu, yy) = (inner(u, u)?, inner(y, y)?);
            (inner(u, y)? - gamma1 * yy - gamma2 * uu, norm(u)? * norm(y)? + gamma1 * yy + gamma2 * uu)
        }
        SupplyRate::Custom(expr) => {
            let scope = Scope::new().signal(Sig::U, u.dim()).signal(Sig::Y, y.dim()).signal(Sig::Ydot, y.dim());
            let compiled = expr.compile(&scope)?;
            let ydot = if supply.needs_output_rate() { output_rate(record) } else { Signal::zeros(y.dim(), y.len()) };
            let mut values = Vec::with_capacity(u.len());
            for k in 0..u.len() {
                let v = compiled.eval(&Frame { u: u.sample(k), y: y.sample(k), ydot: ydot.sample(k), ..Default::default() });
                if !v.is_finite() {
                    return Err(DslError::new(DslErrorKind::NonFinite, 0, format!("supply evaluated to {v} at sample {k}")).into());
                }
                values.push(v);
            }
            let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
            let ones = Signal::scalar(vec![1.0; values.len()]);
            (inner(&Signal::scalar(values), &ones)?, inner(&Signal::scalar(abs), &ones)?)
        }
    })
}

/// `c_ω = ∫_{T_ω} s(u(t), y(t)) dt` over the recorded period; `ẏ` comes from
/// periodic central differences of the output samples.
pub fn supply_integral(record: &SteadyStateRecord, supply: &SupplyRate) -> Result<f64> {
    Ok(integral_with_scale(record, supply)?.0)
}

/// Signed distance of `ϑ` to the half-plane `cos ϑ ≥ 0`.
fn cosine_margin(theta: f64) -> f64 {
    FRAC_PI_2 - theta.abs()
}

/// Signed distance of `ϑ ∈ (−π, π]` to the half-plane `sin ϑ ≤ 0`.
fn sine_margin(theta: f64) -> f64 {
    if theta <= 0.0 {
        (-theta).min(theta + PI)
    } else {
        -theta.min(PI - theta)
    }
}

/// Frequency-response condition equivalent to a nonnegative supply integral,
/// with the signed margin to the binding inequality. Degenerate samples
/// (`α = 0`) follow each condition's zero-output case.
pub fn frf_condition(sample: &FrequencyResponseSample, supply: &SupplyRate) -> Result<(bool, f64)> {
    supply.validate()?;
    let alpha = sample.alpha;
    if let SupplyRate::L2Gain { gamma } = supply {
        let margin = gamma - alpha;
        return Ok((margin >= 0.0, margin));
    }
    if sample.degenerate {
        return match supply {
            SupplyRate::Passivity | SupplyRate::Counterclockwise | SupplyRate::OutputStrict { .. } => Ok((true, f64::INFINITY)),
            SupplyRate::InputStrict { .. } | SupplyRate::VeryStrict { .. } => Ok((false, f64::NEG_INFINITY)),
            _ => Err(invalid("supply", "custom supplies have no frequency-response condition")),
        };
    }
    let (theta, radius) = (sample.theta, sample.radius);
    let rc = radius * theta.cos();
    let open_half_plane = cosine_margin(theta);
    let (holds, margin) = match supply {
        SupplyRate::Passivity => (open_half_plane >= 0.0, open_half_plane),
        SupplyRate::Counterclockwise => {
            let m = sine_margin(theta);
            (m >= 0.0, m)
        }
        SupplyRate::OutputStrict { gamma1 } => {
            if open_half_plane <= 0.0 {
                (false, open_half_plane)
            } else {
                let m = rc / gamma1 - alpha;
                (m >= 0.0, m)
            }
        }
        SupplyRate::InputStrict { gamma2 } => {
            if open_half_plane <= 0.0 {
                (false, open_half_plane)
            } else {
                let m = alpha - gamma2 / rc;
                (m >= 0.0, m)
            }
        }
        SupplyRate::VeryStrict { gamma1, gamma2 } => {
            if open_half_plane <= 0.0 {
                (false, open_half_plane)
            } else {
                let delta = rc * rc - 4.0 * gamma1 * gamma2;
                if delta < 0.0 {
                    (false, -(-delta).sqrt() / (2.0 * gamma1))
                } else {
                    let lo = (rc - delta.sqrt()) / (2.0 * gamma1);
                    let hi = (rc + delta.sqrt()) / (2.0 * gamma1);
                    let m = (alpha - lo).min(hi - alpha);
                    (m >= 0.0, m)
                }
            }
        }
        SupplyRate::L2Gain { .. } => unreachable!(),
        SupplyRate::Custom(_) => return Err(invalid("supply", "custom supplies have no frequency-response condition")),
    };
    Ok((holds, margin))
}

/// Evaluates both routes and reports whether they agree. Points within the
/// numerical band of either boundary are `Indeterminate` and count as consistent.
pub fn certify(record: &SteadyStateRecord, sample: &FrequencyResponseSample, supply: &SupplyRate) -> Result<DissipativityCertificate> {
    if record.omega != sample.omega {
        return Err(invalid("sample", "record and sample belong to different parameter points"));
    }
    let (c_omega, c_scale) = integral_with_scale(record, supply)?;
    let band = INTEGRAL_BAND * c_scale;
    let holds_integral = c_omega >= -band;
    let frf = match supply {
        SupplyRate::Custom(_) => None,
        _ => Some(frf_condition(sample, supply)?),
    };
    let margin = frf.map_or(f64::NAN, |(_, m)| m);
    let borderline = c_omega.abs() <= band || frf.is_some_and(|(_, m)| m.abs() <= MARGIN_BAND);
    let holds_frf = frf.map(|(h, _)| h);
    let consistent = borderline || holds_frf.is_none_or(|h| h == holds_integral);
    let verdict = if borderline {
        Verdict::Indeterminate
    } else if holds_integral && holds_frf.unwrap_or(true) {
        Verdict::Holds
    } else if !holds_integral && !holds_frf.unwrap_or(false) {
        Verdict::Fails
    } else {
        Verdict::Indeterminate
    };
    Ok(DissipativityCertificate {
        omega: record.omega,
        supply: supply.label().to_string(),
        c_omega,
        c_scale,
        holds_integral,
        holds_frf,
        margin,
        borderline,
        consistent,
        verdict,
    })
}

/// `(⟨u, ẏ⟩ + ⟨u̇, y⟩) / (‖u̇‖‖y‖)`, which vanishes for periodic signals.
pub fn counterclockwise_identity(record: &SteadyStateRecord) -> Result<f64> {
    let (t, q) = (record.period, record.quadrature);
    let ydot = output_rate(record);
    let lhs = signal_inner(&record.input, &ydot, t, q)?;
    let rhs = signal_inner(&record.input_rate, &record.output, t, q)?;
    let scale = signal_norm(&record.input_rate, t, q)? * signal_norm(&record.output, t, q)?;
    Ok(if scale > 0.0 { (lhs + rhs) / scale } else { 0.0 })
}
