//! Nonlinear frequency response of periodically forced ODE systems.
//!
//! A plant `ẋ = f(x,u), y = h(x,u)` is driven by a periodic signal generator
//! `ż = s(ω,z), u = ℓ(ω,z)`. Once the interconnection settles onto its periodic
//! steady state, one period of input and output is sampled and reduced to the
//! gain `α`, phase `ϑ` and radius `r` of the frequency response
//! `Γ(ω) = α·r·e^{jϑ}`. Sweeping `ω = (ϖ, a_u)` over a grid produces Bode-like
//! surfaces over frequency and amplitude.
//!
//! Module map:
//!
//! * [`model`]: domain types, the built-in model library and special functions.
//! * [`dsl`]: arithmetic expressions for user-defined models and supply rates.
//! * [`ode`]: Dormand–Prince 5(4) integration and steady-state settling.
//! * [`analysis`]: L2 functionals over one period and the frequency response sample.
//! * [`lti`]: exact linear reference (Sylvester solution, `H(jϖ)`).
//! * [`dissipativity`]: supply integral and frequency-response certificates.
//! * [`multi`]: multi-tone excitation over a common period.
//! * [`loopshape`]: closed-loop composition, origin stability and spec-set checks.
//! * [`sweep`]: grid evaluation helpers shared by the CLI and the browser demo.

// NaN must fail range checks, so `!(x > 0.0)` is used on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops mirror the component formulas in the integrator and weights
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod dissipativity;
pub mod dsl;
mod error;
pub mod linalg;
pub mod loopshape;
pub mod lti;
pub mod model;
pub mod multi;
pub mod ode;
pub mod sweep;

pub use error::{Error, Result};
