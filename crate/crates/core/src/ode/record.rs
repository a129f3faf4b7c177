use super::Quadrature;
use crate::model::ParamPoint;

/// Vector-valued samples stored row-major: sample `k` is `data[k*dim..(k+1)*dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    dim: usize,
    data: Vec<f64>,
}

impl Signal {
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim == 0 && data.is_empty() || dim > 0 && data.len().is_multiple_of(dim), "ragged signal");
        Self { dim, data }
    }

    pub fn zeros(dim: usize, samples: usize) -> Self {
        Self { dim, data: vec![0.0; dim * samples] }
    }

    /// Scalar signal from one value per sample.
    pub fn scalar(values: Vec<f64>) -> Self {
        Self { dim: 1, data: values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn sample_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Component `i` across all samples.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.data.iter().skip(i).step_by(self.dim.max(1)).copied().collect()
    }

    /// Largest absolute entry.
    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeSource {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub periods_simulated: usize,
    /// Relative L2 distance between the last two simulated periods of `y`.
    pub final_residual: f64,
    /// Largest `‖z(T) − z0‖` seen across periods.
    pub generator_gap: f64,
    /// The plant right-hand side has kinks; no event handling was applied.
    pub nonsmooth: bool,
    pub input_rate: DerivativeSource,
    pub steps: usize,
}

/// One period of the settled interconnection sampled on `t_k = kT/M`, `k = 0..M`.
#[derive(Debug, Clone)]
pub struct SteadyStateRecord {
    pub omega: ParamPoint,
    pub period: f64,
    pub times: Vec<f64>,
    pub input: Signal,
    pub input_rate: Signal,
    pub output: Signal,
    pub state: Signal,
    pub generator_state: Signal,
    /// `u(T)` and `y(T)`, for the periodicity check against sample 0.
    pub input_at_period: Vec<f64>,
    pub output_at_period: Vec<f64>,
    /// Rule used for every inner product taken over this record.
    pub quadrature: Quadrature,
    pub diagnostics: Diagnostics,
}

impl SteadyStateRecord {
    pub fn samples(&self) -> usize {
        self.times.len()
    }

    /// `max(‖u_0 − u(T)‖∞, ‖y_0 − y(T)‖∞)` relative to the signals' sup norms.
    pub fn periodicity_gap(&self) -> f64 {
        let gap = |s: &Signal, end: &[f64]| {
            let first = s.sample(0);
            let diff = first.iter().zip(end).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let scale = s.sup_norm();
            if scale > 0.0 {
                diff / scale
            } else {
                diff
            }
        };
        gap(&self.input, &self.input_at_period).max(gap(&self.output, &self.output_at_period))
    }
}
