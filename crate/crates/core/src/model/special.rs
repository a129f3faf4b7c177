use std::f64::consts::PI;

use super::invalid;
use crate::Result;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7, with reflection below 1/2).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Γ(x)Γ(1−x) = π / sin(πx)
        (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
    }
}

/// Euler beta function `B(a,b) = Γ(a)Γ(b)/Γ(a+b)`, evaluated in log space.
pub fn euler_beta(a: f64, b: f64) -> Result<f64> {
    if !(a.is_finite() && a > 0.0) {
        return Err(invalid("a", format!("beta argument must be > 0, got {a}")));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(invalid("b", format!("beta argument must be > 0, got {b}")));
    }
    Ok((ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp())
}

/// Period constant of the oscillator `z̈ = −c² z |z/a|^{α−1}`:
/// `k_α = 4/√(2(α+1)) · B(1/(α+1), 1/2)`, so that `c = ϖ k_α / 2π` gives period `2π/ϖ`.
pub fn cveticanin_k_alpha(alpha: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(invalid("exponent", format!("must be > 0, got {alpha}")));
    }
    let beta = euler_beta(1.0 / (alpha + 1.0), 0.5)?;
    Ok(4.0 / (2.0 * (alpha + 1.0)).sqrt() * beta)
}
