//! Time integration of the generator–plant interconnection and extraction of
//! the periodic steady state.

mod dopri;
mod record;
mod settle;

use thiserror::Error;

pub use dopri::{DenseStep, Dopri5, StepControl};
pub use record::{DerivativeSource, Diagnostics, Signal, SteadyStateRecord};
pub use settle::{integrate, settle_to_steady_state, DenseTrajectory};

use crate::model::invalid;
use crate::Result;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IntegrationError {
    #[error("step size underflow (h = {h:e}) at t = {t}; stiff or blowing up")]
    StepUnderflow { t: f64, h: f64 },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("step budget of {steps} exhausted at t = {t}")]
    StepBudget { steps: usize, t: f64 },
}

/// Quadrature rule for inner products over one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    /// Periodic trapezoid `(T/M) Σ f_k g_k`.
    #[default]
    Trapezoid,
    /// Composite Simpson on the closed periodic grid (needs even `M`).
    Simpson,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorSettings {
    pub rtol: f64,
    pub atol: f64,
    pub samples_per_period: usize,
    pub settle_tol: f64,
    pub washout_periods: usize,
    pub max_periods: usize,
    /// Plant initial state; zeros when `None`.
    pub x_init: Option<Vec<f64>>,
    pub quadrature: Quadrature,
    /// Accepted plus rejected steps allowed per integration call.
    pub max_steps_per_period: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            samples_per_period: 1024,
            settle_tol: 1e-8,
            washout_periods: 5,
            max_periods: 2000,
            x_init: None,
            quadrature: Quadrature::Trapezoid,
            max_steps_per_period: 2_000_000,
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be a positive finite number, got {v}")))
            }
        };
        positive("rtol", self.rtol)?;
        positive("atol", self.atol)?;
        positive("settle_tol", self.settle_tol)?;
        if self.samples_per_period < 8 {
            return Err(invalid("samples_per_period", "must be at least 8"));
        }
        if self.quadrature == Quadrature::Simpson && !self.samples_per_period.is_multiple_of(2) {
            return Err(invalid("samples_per_period", "Simpson quadrature needs an even sample count"));
        }
        if self.max_periods == 0 || self.max_periods <= self.washout_periods {
            return Err(invalid("max_periods", "must exceed washout_periods"));
        }
        if self.max_steps_per_period == 0 {
            return Err(invalid("max_steps_per_period", "must be positive"));
        }
        if let Some(x) = &self.x_init {
            if let Some(i) = x.iter().position(|v| !v.is_finite()) {
                return Err(invalid(&format!("x_init[{i}]"), "must be finite"));
            }
        }
        Ok(())
    }

    pub(crate) fn step_control(&self, h_max: f64) -> StepControl {
        StepControl { rtol: self.rtol, atol: self.atol, h_max, max_steps: self.max_steps_per_period }
    }
}
