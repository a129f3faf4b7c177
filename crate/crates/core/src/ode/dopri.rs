//! Dormand–Prince 5(4) with the standard 4th-order continuous extension.

use super::IntegrationError;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Step-size controls for one integration call.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

/// One accepted step with its interpolation coefficients.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<'a> {
    pub t0: f64,
    pub h: f64,
    coeffs: &'a [f64],
}

impl DenseStep<'_> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Interpolated state at `t` (meaningful for `t ∈ [t0, t0+h]`).
    pub fn eval(&self, t: f64, out: &mut [f64]) {
        interpolate(self.coeffs, self.t0, self.h, t, out)
    }

    pub fn coefficients(&self) -> &[f64] {
        self.coeffs
    }
}

pub(crate) fn interpolate(coeffs: &[f64], t0: f64, h: f64, t: f64, out: &mut [f64]) {
    let n = out.len();
    let theta = (t - t0) / h;
    let theta1 = 1.0 - theta;
    for i in 0..n {
        let r = |k: usize| coeffs[k * n + i];
        out[i] = r(0) + theta * (r(1) + theta1 * (r(2) + theta * (r(3) + theta1 * r(4))));
    }
}

/// Reusable stage storage.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    n: usize,
    k: [Vec<f64>; 7],
    y1: Vec<f64>,
    tmp: Vec<f64>,
    dense: Vec<f64>,
}

fn rms_norm(v: &[f64], y0: &[f64], y1: &[f64], rtol: f64, atol: f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let sum: f64 = v
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = atol + rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / v.len() as f64).sqrt()
}

impl Dopri5 {
    pub fn new(n: usize) -> Self {
        Self { n, k: std::array::from_fn(|_| vec![0.0; n]), y1: vec![0.0; n], tmp: vec![0.0; n], dense: vec![0.0; 5 * n] }
    }

    fn initial_step<F>(&mut self, rhs: &mut F, t0: f64, y0: &[f64], ctl: &StepControl) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = self.n;
        rhs(t0, y0, &mut self.k[0]);
        let scale = |i: usize| ctl.atol + ctl.rtol * y0[i].abs();
        let d0 = (0..n).map(|i| (y0[i] / scale(i)).powi(2)).sum::<f64>().sqrt() / (n as f64).sqrt();
        let d1 = (0..n).map(|i| (self.k[0][i] / scale(i)).powi(2)).sum::<f64>().sqrt() / (n as f64).sqrt();
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(ctl.h_max);
        for i in 0..n {
            self.tmp[i] = y0[i] + h0 * self.k[0][i];
        }
        rhs(t0 + h0, &self.tmp, &mut self.k[1]);
        let d2 = (0..n).map(|i| ((self.k[1][i] - self.k[0][i]) / scale(i)).powi(2)).sum::<f64>().sqrt() / (n as f64).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
        (100.0 * h0).min(h1).min(ctl.h_max)
    }

    /// Integrates `y' = rhs(t, y)` from `t0` to `t_end`, overwriting `y`.
    /// `h` carries the proposed step in and out (non-positive means "pick one").
    /// `on_step` sees every accepted step. Returns the number of accepted steps.
    #[allow(clippy::too_many_arguments)]
    pub fn solve<F, S>(
        &mut self,
        mut rhs: F,
        t0: f64,
        y: &mut [f64],
        t_end: f64,
        h: &mut f64,
        ctl: &StepControl,
        mut on_step: S,
    ) -> Result<usize, IntegrationError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        S: FnMut(&DenseStep<'_>),
    {
        let n = self.n;
        assert_eq!(y.len(), n, "state length mismatch");
        if y.iter().any(|v| !v.is_finite()) {
            return Err(IntegrationError::NonFiniteState { t: t0 });
        }
        if n == 0 {
            let coeffs: [f64; 0] = [];
            on_step(&DenseStep { t0, h: t_end - t0, coeffs: &coeffs });
            return Ok(1);
        }
        let span = t_end - t0;
        if !(span > 0.0) {
            return Ok(0);
        }
        let mut t = t0;
        let mut step = if *h > 0.0 { h.min(ctl.h_max) } else { self.initial_step(&mut rhs, t0, y, ctl) };
        rhs(t, y, &mut self.k[0]);
        let mut accepted = 0usize;
        let mut attempts = 0usize;
        let mut last_rejected = false;
        let proposal;
        loop {
            let remaining = t_end - t;
            let last = step >= remaining * (1.0 - 1e-12);
            let hs = if last { remaining } else { step };
            let h_min = 16.0 * f64::EPSILON * t.abs().max(span);
            if hs < h_min && !last {
                return Err(IntegrationError::StepUnderflow { t, h: hs });
            }
            attempts += 1;
            if attempts > ctl.max_steps {
                return Err(IntegrationError::StepBudget { steps: ctl.max_steps, t });
            }
            let err = self.attempt(&mut rhs, t, y, hs, ctl);
            if !err.is_finite() {
                if hs <= h_min {
                    return Err(IntegrationError::NonFiniteState { t });
                }
                step = hs * FAC_MIN;
                last_rejected = true;
                continue;
            }
            if err <= 1.0 {
                self.dense_coefficients(y, hs);
                on_step(&DenseStep { t0: t, h: hs, coeffs: &self.dense });
                accepted += 1;
                t = if last { t_end } else { t + hs };
                y.copy_from_slice(&self.y1);
                self.k.swap(0, 6);
                let mut fac = (SAFETY * err.max(1e-10).powf(-0.2)).clamp(FAC_MIN, FAC_MAX);
                if last_rejected {
                    fac = fac.min(1.0);
                }
                last_rejected = false;
                let next = (hs * fac).min(ctl.h_max);
                if last {
                    // a step shortened to hit t_end should not shrink the next call's step
                    proposal = if hs < step { step } else { next };
                    break;
                }
                step = next;
            } else {
                let fac = (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
                step = hs * fac;
                last_rejected = true;
                if hs * fac < h_min {
                    return Err(IntegrationError::StepUnderflow { t, h: hs * fac });
                }
            }
        }
        *h = proposal;
        Ok(accepted)
    }

    /// Computes stages for a step of size `h` from `(t, y)` into `y1`; returns the scaled error.
    fn attempt<F>(&mut self, rhs: &mut F, t: f64, y: &[f64], h: f64, ctl: &StepControl) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = self.n;
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        rhs(t + C2 * h, tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + C3 * h, tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * h, tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * h, tmp, k5);
        for i in 0..n {
            tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(t + h, tmp, k6);
        let y1 = &mut self.y1;
        for i in 0..n {
            y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        if y1.iter().any(|v| !v.is_finite()) {
            return f64::NAN;
        }
        rhs(t + h, y1, k7);
        for i in 0..n {
            tmp[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        rms_norm(tmp, y, y1, ctl.rtol, ctl.atol)
    }

    fn dense_coefficients(&mut self, y0: &[f64], h: f64) {
        let n = self.n;
        let [k1, _, k3, k4, k5, k6, k7] = &self.k;
        for i in 0..n {
            let ydiff = self.y1[i] - y0[i];
            let bspl = h * k1[i] - ydiff;
            self.dense[i] = y0[i];
            self.dense[n + i] = ydiff;
            self.dense[2 * n + i] = bspl;
            self.dense[3 * n + i] = ydiff - h * k7[i] - bspl;
            self.dense[4 * n + i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
    }
}
