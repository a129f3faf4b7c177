//! Gain, phase, radius and frequency response of a settled record.

use num_complex::Complex64;

use crate::model::ParamPoint;
use crate::ode::{Quadrature, Signal, SteadyStateRecord};
use crate::{Error, Result};

/// `‖Y‖ < DEGENERATE_RATIO · ‖u‖` marks the output as zero.
pub const DEGENERATE_RATIO: f64 = 1e-12;

/// Radius excess over 1 attributed to rounding and clamped away.
const RADIUS_ROUNDING: f64 = 1e-10;

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!("sample counts differ: {a} vs {b}")));
    }
    if a == 0 {
        return Err(Error::Dimension("no samples".into()));
    }
    Ok(())
}

/// Periodic trapezoid rule `(T/M) Σ f_k g_k` (the endpoint is excluded since it equals sample 0).
pub fn l2_inner(f: &[f64], g: &[f64], period: f64) -> Result<f64> {
    check_lengths(f.len(), g.len())?;
    Ok(period / f.len() as f64 * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>())
}

/// Composite Simpson on the closed grid with `f_M = f_0`; needs even `M`.
pub fn l2_inner_simpson(f: &[f64], g: &[f64], period: f64) -> Result<f64> {
    check_lengths(f.len(), g.len())?;
    let m = f.len();
    if !m.is_multiple_of(2) {
        return Err(Error::Dimension(format!("Simpson needs an even sample count, got {m}")));
    }
    // weights 1,4,2,...,4,1 over M+1 points; the two endpoint halves merge at k=0
    let sum: f64 = f.iter().zip(g).enumerate().map(|(k, (a, b))| if k % 2 == 1 { 4.0 } else { 2.0 } * a * b).sum();
    Ok(period / (3.0 * m as f64) * sum)
}

/// Inner product of two vector signals on the same grid.
pub fn signal_inner(a: &Signal, b: &Signal, period: f64, rule: Quadrature) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!("signal dimensions differ: {} vs {}", a.dim(), b.dim())));
    }
    check_lengths(a.len(), b.len())?;
    let samples = a.len();
    let per_sample: Vec<f64> = (0..samples).map(|k| a.sample(k).iter().zip(b.sample(k)).map(|(x, y)| x * y).sum::<f64>()).collect();
    let ones = vec![1.0; samples];
    match rule {
        Quadrature::Trapezoid => l2_inner(&per_sample, &ones, period),
        Quadrature::Simpson => l2_inner_simpson(&per_sample, &ones, period),
    }
}

pub fn signal_norm(a: &Signal, period: f64, rule: Quadrature) -> Result<f64> {
    Ok(signal_inner(a, a, period, rule)?.max(0.0).sqrt())
}

/// 4th-order central difference on the periodic grid (wraps around).
pub fn periodic_derivative(signal: &Signal, period: f64) -> Signal {
    let samples = signal.len();
    let dim = signal.dim();
    let mut out = Signal::zeros(dim, samples);
    if samples < 5 {
        return out;
    }
    let dt = period / samples as f64;
    for k in 0..samples {
        let at = |offset: isize| signal.sample(((k as isize + offset).rem_euclid(samples as isize)) as usize);
        let (m2, m1, p1, p2) = (at(-2), at(-1), at(1), at(2));
        let row = out.sample_mut(k);
        for i in 0..dim {
            row[i] = (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * dt);
        }
    }
    out
}

/// Frequency response functionals for one parameter point. When the output
/// is degenerate, `theta`, `radius`, `re`, `im` and `residual_sq` are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyResponseSample {
    pub omega: ParamPoint,
    pub alpha: f64,
    pub re: f64,
    pub im: f64,
    pub theta: f64,
    pub radius: f64,
    pub gamma: Complex64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub residual_sq: f64,
    pub degenerate: bool,
}

impl FrequencyResponseSample {
    /// Builds a sample from `(α, 𝔉Re, 𝔉Im)`; used for reference responses.
    pub fn from_components(omega: ParamPoint, alpha: f64, re: f64, im: f64) -> Self {
        let theta = wrap_phase(im.atan2(re));
        let radius = re.hypot(im);
        Self {
            omega,
            alpha,
            re,
            im,
            theta,
            radius,
            gamma: Complex64::new(alpha * re, alpha * im),
            lambda1: f64::NAN,
            lambda2: f64::NAN,
            residual_sq: 1.0 - radius * radius,
            degenerate: false,
        }
    }
}

/// Maps an angle onto `(−π, π]`.
pub fn wrap_phase(theta: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    if theta > -PI && theta <= PI {
        return theta;
    }
    let w = PI - (PI - theta).rem_euclid(TAU);
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

struct Norms {
    u: f64,
    udot: f64,
    y: f64,
    uy: f64,
    udot_y: f64,
}

fn norms(record: &SteadyStateRecord) -> Result<Norms> {
    if record.output.dim() != record.input.dim() {
        return Err(Error::Dimension(format!(
            "phase needs matching input and output dimensions, got {} and {}",
            record.input.dim(),
            record.output.dim()
        )));
    }
    let (t, q) = (record.period, record.quadrature);
    let u = signal_norm(&record.input, t, q)?;
    if !(u > 0.0) {
        return Err(Error::ZeroInput);
    }
    Ok(Norms {
        u,
        udot: signal_norm(&record.input_rate, t, q)?,
        y: signal_norm(&record.output, t, q)?,
        uy: signal_inner(&record.input, &record.output, t, q)?,
        udot_y: signal_inner(&record.input_rate, &record.output, t, q)?,
    })
}

/// `α = ‖Y‖ / ‖u‖`.
pub fn omega_gain(record: &SteadyStateRecord) -> Result<f64> {
    let (t, q) = (record.period, record.quadrature);
    let u = signal_norm(&record.input, t, q)?;
    if !(u > 0.0) {
        return Err(Error::ZeroInput);
    }
    Ok(signal_norm(&record.output, t, q)? / u)
}

/// `(𝔉Re, 𝔉Im) = (⟨u,Y⟩/(‖u‖‖Y‖), ⟨u̇,Y⟩/(‖u̇‖‖Y‖))`.
pub fn omega_phase_components(record: &SteadyStateRecord) -> Result<(f64, f64)> {
    let n = norms(record)?;
    if n.y < DEGENERATE_RATIO * n.u || !(n.udot > 0.0) {
        return Err(Error::Degenerate);
    }
    Ok((n.uy / (n.u * n.y), n.udot_y / (n.udot * n.y)))
}

pub fn omega_phase(record: &SteadyStateRecord) -> Result<f64> {
    let (re, im) = omega_phase_components(record)?;
    Ok(wrap_phase(im.atan2(re)))
}

pub fn omega_radius(record: &SteadyStateRecord) -> Result<f64> {
    let (re, im) = omega_phase_components(record)?;
    Ok(re.hypot(im))
}

/// `⟨u̇,u⟩/(‖u‖‖u̇‖)`; vanishes for any periodic input.
pub fn orthogonality_check(record: &SteadyStateRecord) -> Result<f64> {
    let (t, q) = (record.period, record.quadrature);
    let u = signal_norm(&record.input, t, q)?;
    let udot = signal_norm(&record.input_rate, t, q)?;
    if !(u > 0.0 && udot > 0.0) {
        return Err(Error::ZeroInput);
    }
    Ok(signal_inner(&record.input_rate, &record.input, t, q)? / (u * udot))
}

/// `(λ1, λ2, ‖Y − λ1u − λ2u̇‖²/‖Y‖²)`, computed directly from the residual signal.
pub fn projection_residual(record: &SteadyStateRecord) -> Result<(f64, f64, f64)> {
    let n = norms(record)?;
    if n.y < DEGENERATE_RATIO * n.u || !(n.udot > 0.0) {
        return Err(Error::Degenerate);
    }
    let lambda1 = n.uy / (n.u * n.u);
    let lambda2 = n.udot_y / (n.udot * n.udot);
    let residual = Signal::new(
        record.output.dim(),
        record
            .output
            .as_slice()
            .iter()
            .zip(record.input.as_slice().iter().zip(record.input_rate.as_slice()))
            .map(|(y, (u, du))| y - lambda1 * u - lambda2 * du)
            .collect(),
    );
    let r = signal_norm(&residual, record.period, record.quadrature)?;
    Ok((lambda1, lambda2, (r / n.y).powi(2)))
}

/// All functionals at once.
pub fn frequency_response(record: &SteadyStateRecord) -> Result<FrequencyResponseSample> {
    let n = norms(record)?;
    let alpha = n.y / n.u;
    let lambda1 = n.uy / (n.u * n.u);
    if n.y < DEGENERATE_RATIO * n.u {
        return Ok(FrequencyResponseSample {
            omega: record.omega,
            alpha,
            re: f64::NAN,
            im: f64::NAN,
            theta: f64::NAN,
            radius: f64::NAN,
            gamma: Complex64::new(0.0, 0.0),
            lambda1,
            lambda2: if n.udot > 0.0 { n.udot_y / (n.udot * n.udot) } else { f64::NAN },
            residual_sq: f64::NAN,
            degenerate: true,
        });
    }
    if !(n.udot > 0.0) {
        return Err(Error::Degenerate);
    }
    let mut re = n.uy / (n.u * n.y);
    let mut im = n.udot_y / (n.udot * n.y);
    let mut radius = re.hypot(im);
    if radius > 1.0 && radius <= 1.0 + RADIUS_ROUNDING {
        re /= radius;
        im /= radius;
        radius = 1.0;
    }
    let theta = wrap_phase(im.atan2(re));
    let (_, lambda2, residual_sq) = projection_residual(record)?;
    let gamma = Complex64::from_polar(alpha * radius, theta);
    debug_assert!((gamma - Complex64::new(alpha * re, alpha * im)).norm() <= 1e-12 * alpha.max(1.0));
    Ok(FrequencyResponseSample {
        omega: record.omega,
        alpha,
        re,
        im,
        theta,
        radius,
        gamma,
        lambda1,
        lambda2,
        residual_sq,
        degenerate: false,
    })
}

/// Unwraps `theta` along a sequence (e.g. increasing `ϖ` at fixed `a_u`);
/// NaN entries are passed through and skipped.
pub fn unwrap_phase(theta: &[f64]) -> Vec<f64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut out = Vec::with_capacity(theta.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for &t in theta {
        if t.is_nan() {
            out.push(t);
            continue;
        }
        if let Some(p) = prev {
            let jump = t - p;
            offset -= two_pi * (jump / two_pi).round();
        }
        prev = Some(t);
        out.push(t + offset);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{DerivativeSource, Diagnostics};
    use std::f64::consts::PI;

    fn grid(m: usize, period: f64) -> Vec<f64> {
        (0..m).map(|k| k as f64 * period / m as f64).collect()
    }

    /// Record with harmonic input `a sin(ϖt)` and the given output samples.
    fn synthetic(varpi: f64, a: f64, m: usize, y: impl Fn(f64) -> f64) -> SteadyStateRecord {
        let period = 2.0 * PI / varpi;
        let times = grid(m, period);
        SteadyStateRecord {
            omega: ParamPoint::new(varpi, a).unwrap(),
            period,
            input: Signal::scalar(times.iter().map(|t| a * (varpi * t).sin()).collect()),
            input_rate: Signal::scalar(times.iter().map(|t| a * varpi * (varpi * t).cos()).collect()),
            output: Signal::scalar(times.iter().map(|&t| y(t)).collect()),
            state: Signal::new(0, vec![]),
            generator_state: Signal::new(0, vec![]),
            input_at_period: vec![0.0],
            output_at_period: vec![y(period)],
            quadrature: Quadrature::Trapezoid,
            diagnostics: Diagnostics {
                periods_simulated: 0,
                final_residual: 0.0,
                generator_gap: 0.0,
                nonsmooth: false,
                input_rate: DerivativeSource::Analytic,
                steps: 0,
            },
            times,
        }
    }

    #[test]
    fn l2_inner_examples() {
        let t = grid(1024, 2.0 * PI);
        let s: Vec<f64> = t.iter().map(|v| v.sin()).collect();
        let c: Vec<f64> = t.iter().map(|v| v.cos()).collect();
        assert!((l2_inner(&s, &s, 2.0 * PI).unwrap() - PI).abs() < 1e-10);
        assert!(l2_inner(&s, &c, 2.0 * PI).unwrap().abs() < 1e-12);
        assert!((l2_inner(&[1.0; 7], &[1.0; 7], 3.0).unwrap() - 3.0).abs() < 1e-15);
        assert!(l2_inner(&[1.0; 3], &[1.0; 4], 1.0).is_err());
        assert!((l2_inner_simpson(&s, &s, 2.0 * PI).unwrap() - PI).abs() < 1e-10);
    }

    #[test]
    fn periodic_derivative_is_fourth_order() {
        let err = |m: usize| {
            let t = grid(m, 2.0 * PI);
            let s = Signal::scalar(t.iter().map(|v| (2.0 * v).sin()).collect());
            let d = periodic_derivative(&s, 2.0 * PI);
            t.iter().zip(d.as_slice()).map(|(v, dv)| (dv - 2.0 * (2.0 * v).cos()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(64) / err(128);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn identity_and_sign_flip() {
        let r = synthetic(1.0, 2.0, 256, |t| 2.0 * t.sin());
        let s = frequency_response(&r).unwrap();
        assert!((s.alpha - 1.0).abs() < 1e-14 && (s.re - 1.0).abs() < 1e-14 && s.im.abs() < 1e-14);
        let (l1, l2, res) = projection_residual(&r).unwrap();
        assert!((l1 - 1.0).abs() < 1e-14 && l2.abs() < 1e-14 && res < 1e-28);
        let r = synthetic(1.0, 2.0, 256, |t| -2.0 * t.sin());
        let s = frequency_response(&r).unwrap();
        assert!((s.re + 1.0).abs() < 1e-14);
        assert_eq!(s.theta, PI);
    }

    #[test]
    fn quadrature_response() {
        // y = u̇ ‖u‖/‖u̇‖
        let r = synthetic(3.0, 1.0, 512, |t| (3.0 * t).cos());
        let s = frequency_response(&r).unwrap();
        assert!((s.theta - PI / 2.0).abs() < 1e-12);
        assert!((s.radius - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lti_half_pole_at_half_rad() {
        // H(j0.5) = 1 − j: y = |H| a sin(ϖt + arg H)
        let h = Complex64::new(1.0, -1.0);
        let r = synthetic(0.5, 0.7, 1024, |t| h.norm() * 0.7 * (0.5 * t + h.arg()).sin());
        let s = frequency_response(&r).unwrap();
        assert!((s.alpha - 2f64.sqrt()).abs() < 1e-12);
        assert!((s.theta + PI / 4.0).abs() < 1e-12);
        assert!((s.gamma - h).norm() < 1e-12);
        assert!(s.residual_sq.abs() < 1e-12);
        assert!(orthogonality_check(&r).unwrap().abs() < 1e-12);
    }

    #[test]
    fn distorted_output_radius_below_one() {
        let r = synthetic(1.0, 1.0, 1024, |t| t.sin() + 0.5 * (3.0 * t).sin());
        let s = frequency_response(&r).unwrap();
        let expected = 1.0 / (1.25f64).sqrt();
        assert!((s.radius - expected).abs() < 1e-12);
        assert!((s.residual_sq - (1.0 - s.radius * s.radius)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_output_is_flagged() {
        let r = synthetic(1.0, 1.0, 64, |_| 0.0);
        let s = frequency_response(&r).unwrap();
        assert!(s.degenerate && s.alpha == 0.0 && s.theta.is_nan() && s.radius.is_nan());
        assert_eq!(omega_phase(&r), Err(Error::Degenerate));
        let mut r = synthetic(1.0, 1.0, 64, |t| t.sin());
        r.input = r.input.map(|_| 0.0);
        assert_eq!(omega_gain(&r), Err(Error::ZeroInput));
    }

    #[test]
    fn broken_periodicity_shows_in_orthogonality() {
        // a ramp is not periodic, its sampled derivative is not orthogonal to it
        let mut r = synthetic(1.0, 1.0, 256, |t| t.sin());
        let times = r.times.clone();
        r.input = Signal::scalar(times.iter().map(|t| t * t).collect());
        r.input_rate = Signal::scalar(times.iter().map(|t| 2.0 * t).collect());
        assert!(orthogonality_check(&r).unwrap().abs() > 0.1);
    }

    #[test]
    fn gamma_from_polar_components() {
        let s = FrequencyResponseSample::from_components(ParamPoint::new(1.0, 1.0).unwrap(), 2.0, 0.0, 0.5);
        assert!((s.gamma - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn unwrap_crosses_branch_cut() {
        let u = unwrap_phase(&[3.0, -3.0, f64::NAN, -2.9]);
        assert!((u[1] - (2.0 * PI - 3.0)).abs() < 1e-15);
        assert!(u[2].is_nan());
        assert!((u[3] - (2.0 * PI - 2.9)).abs() < 1e-15);
    }
}
