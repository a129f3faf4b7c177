//! Exact linear reference: Sylvester solutions, `H(jϖ)` and the response a
//! stable LTI system must show under harmonic excitation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::FrequencyResponseSample;
use crate::linalg::{self, spectral_abscissa};
use crate::model::{invalid, LtiRealization, ParamPoint};
use crate::{Error, Result};

/// Generator matrix `S(ϖ) = [[0, ϖ], [−ϖ, 0]]` of the harmonic generator.
pub fn harmonic_s(varpi: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, varpi, -varpi, 0.0])
}

/// Output map `L = [1 0]` of the harmonic generator.
pub fn harmonic_l() -> DMatrix<f64> {
    DMatrix::from_row_slice(1, 2, &[1.0, 0.0])
}

fn check_varpi(varpi: f64) -> Result<()> {
    if varpi.is_finite() && varpi > 0.0 {
        Ok(())
    } else {
        Err(invalid("varpi", format!("must be positive and finite, got {varpi}")))
    }
}

fn check_single_input(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<usize> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!("A must be square, got {}x{}", n, a.ncols())));
    }
    if b.nrows() != n || b.ncols() != 1 {
        return Err(Error::Dimension(format!("B must be {n}x1, got {}x{}", b.nrows(), b.ncols())));
    }
    Ok(n)
}

/// `Φ = −(A² + ϖ²I)⁻¹ (B L S + A B L)`, the unique solution of `AΦ + BL = ΦS`.
pub fn sylvester_closed_form(a: &DMatrix<f64>, b: &DMatrix<f64>, varpi: f64) -> Result<DMatrix<f64>> {
    check_varpi(varpi)?;
    let n = check_single_input(a, b)?;
    let l = harmonic_l();
    let s = harmonic_s(varpi);
    let bl = b * &l;
    let lhs = a * a + DMatrix::identity(n, n) * (varpi * varpi);
    let rhs = &bl * &s + a * &bl;
    Ok(-linalg::solve(&lhs, &rhs)?)
}

/// Solves `AΦ − ΦS = −W` through the Kronecker form `(I ⊗ A − Sᵀ ⊗ I) vec Φ = −vec W`.
pub fn sylvester_direct(a: &DMatrix<f64>, s: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let k = s.nrows();
    if a.ncols() != n || s.ncols() != k || w.nrows() != n || w.ncols() != k {
        return Err(Error::Dimension(format!(
            "need A n×n, S k×k, W n×k; got A {}x{}, S {}x{}, W {}x{}",
            a.nrows(),
            a.ncols(),
            s.nrows(),
            s.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    let big = DMatrix::<f64>::identity(k, k).kronecker(a) - s.transpose().kronecker(&DMatrix::<f64>::identity(n, n));
    // column-major storage makes the matrix data exactly vec(W)
    let rhs = DMatrix::from_column_slice(n * k, 1, (-w).as_slice());
    let x = linalg::solve(&big, &rhs)?;
    Ok(DMatrix::from_column_slice(n, k, x.as_slice()))
}

/// `‖AΦ + BL − ΦS‖_F` for the harmonic generator.
pub fn sylvester_residual(a: &DMatrix<f64>, b: &DMatrix<f64>, phi: &DMatrix<f64>, varpi: f64) -> f64 {
    (a * phi + b * harmonic_l() - phi * harmonic_s(varpi)).norm()
}

/// `C (jϖI − A)⁻¹ B`, cross-checked against `CΦ₁ + jCΦ₂`.
pub fn transfer_eval(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, varpi: f64) -> Result<Complex64> {
    check_varpi(varpi)?;
    let n = check_single_input(a, b)?;
    if c.nrows() != 1 || c.ncols() != n {
        return Err(Error::Dimension(format!("C must be 1x{n}, got {}x{}", c.nrows(), c.ncols())));
    }
    let resolvent = DMatrix::<Complex64>::identity(n, n) * Complex64::new(0.0, varpi) - linalg::to_complex(a);
    let x = linalg::solve(&resolvent, &linalg::to_complex(b))?;
    let h = (linalg::to_complex(c) * x)[(0, 0)];
    let phi = sylvester_closed_form(a, b, varpi)?;
    let cphi = c * phi;
    let via_sylvester = Complex64::new(cphi[(0, 0)], cphi[(0, 1)]);
    let scale = c.norm() * b.norm() * (1.0 + resolvent.norm());
    if (h - via_sylvester).norm() > 1e-8 * scale.max(1.0) {
        return Err(Error::Singular(format!("resolvent {h} and Sylvester route {via_sylvester} disagree")));
    }
    Ok(h)
}

/// Response of a stable SISO realization: `α = |H|`, `ϑ = arg H`, `r = 1`, `Γ = H(jϖ)`.
/// Independent of the amplitude.
pub fn lti_reference_response(realization: &LtiRealization, omega: &ParamPoint) -> Result<FrequencyResponseSample> {
    omega.validate()?;
    if !realization.is_siso() {
        return Err(Error::Dimension(format!(
            "reference response needs a SISO realization, got {} input(s) and {} output(s)",
            realization.input_dim(),
            realization.output_dim()
        )));
    }
    let h = transfer_eval(&realization.a, &realization.b, &realization.c, omega.varpi)?;
    let alpha = h.norm();
    if alpha == 0.0 {
        return Ok(FrequencyResponseSample {
            omega: *omega,
            alpha: 0.0,
            re: f64::NAN,
            im: f64::NAN,
            theta: f64::NAN,
            radius: f64::NAN,
            gamma: h,
            lambda1: 0.0,
            lambda2: 0.0,
            residual_sq: f64::NAN,
            degenerate: true,
        });
    }
    let mut sample = FrequencyResponseSample::from_components(*omega, alpha, h.re / alpha, h.im / alpha);
    sample.theta = crate::analysis::wrap_phase(h.arg());
    sample.radius = 1.0;
    sample.gamma = h;
    sample.lambda1 = h.re;
    sample.lambda2 = h.im / omega.varpi;
    sample.residual_sq = 0.0;
    Ok(sample)
}

/// Random stable realization with `n` states, one input and one output:
/// entries uniform in `[−1, 1]`, then `A` shifted so its spectral abscissa is
/// uniform in `[−2, −0.1]`.
pub fn random_stable_siso(n: usize, seed: u64) -> LtiRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..=1.0));
    let margin = rng.gen_range(0.1..=2.0);
    let shift = spectral_abscissa(&a) + margin;
    for i in 0..n {
        a[(i, i)] -= shift;
    }
    let b = DMatrix::from_fn(n, 1, |_, _| rng.gen_range(-1.0..=1.0));
    let c = DMatrix::from_fn(1, n, |_, _| rng.gen_range(-1.0..=1.0));
    LtiRealization::new(a, b, c).expect("shifted spectrum is Hurwitz")
}
