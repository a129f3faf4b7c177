//! Grid evaluation of the frequency response. Points are independent; callers
//! may evaluate them in any order (or in parallel) and hand the outcomes to
//! [`assemble`], which fixes the row order and unwraps the phase along `ϖ`.

use crate::analysis::{frequency_response, unwrap_phase, FrequencyResponseSample};
use crate::model::{GeneratorModel, ParamPoint, PlantModel, SweepGrid};
use crate::ode::{settle_to_steady_state, Diagnostics, IntegratorSettings, SteadyStateRecord};
use crate::{Error, Result};

/// Settled record and its frequency response at one point.
pub fn evaluate_point(
    plant: &PlantModel,
    generator: &GeneratorModel,
    omega: &ParamPoint,
    settings: &IntegratorSettings,
) -> Result<(SteadyStateRecord, FrequencyResponseSample)> {
    let record = settle_to_steady_state(plant, generator, omega, settings)?;
    let sample = frequency_response(&record)?;
    Ok((record, sample))
}

/// What survives of a point once the record is dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResponse {
    pub sample: FrequencyResponseSample,
    pub diagnostics: Diagnostics,
}

pub fn evaluate_response(
    plant: &PlantModel,
    generator: &GeneratorModel,
    omega: &ParamPoint,
    settings: &IntegratorSettings,
) -> Result<PointResponse> {
    let (record, sample) = evaluate_point(plant, generator, omega, settings)?;
    Ok(PointResponse { sample, diagnostics: record.diagnostics })
}

/// Short machine-readable status for a failed point.
pub fn status_of(error: &Error) -> &'static str {
    match error {
        Error::NoConvergence { .. } => "no_convergence",
        Error::Integration(_) => "integration_failed",
        Error::GeneratorNotPeriodic { .. } => "generator_not_periodic",
        Error::ZeroInput => "zero_input",
        Error::Degenerate => "degenerate",
        Error::Dsl(_) => "expression_error",
        _ => "error",
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    /// Position in [`SweepGrid::points`] order.
    pub index: usize,
    pub omega: ParamPoint,
    pub outcome: std::result::Result<PointResponse, Error>,
    /// `theta` unwrapped along increasing `ϖ` at fixed `a_u`; NaN when unavailable.
    pub theta_unwrapped: f64,
}

impl SweepRow {
    pub fn status(&self) -> &'static str {
        match &self.outcome {
            Ok(_) => "ok",
            Err(e) => status_of(e),
        }
    }

    pub fn sample(&self) -> Option<&FrequencyResponseSample> {
        self.outcome.as_ref().ok().map(|r| &r.sample)
    }
}

/// Orders per-point outcomes by grid index and adds the unwrapped phase.
/// `outcomes[i]` must belong to `grid.points()[i]`.
pub fn assemble(grid: &SweepGrid, outcomes: Vec<std::result::Result<PointResponse, Error>>) -> Result<Vec<SweepRow>> {
    let points = grid.points();
    if outcomes.len() != points.len() {
        return Err(Error::Dimension(format!("{} outcomes for {} grid points", outcomes.len(), points.len())));
    }
    let mut rows: Vec<SweepRow> = points
        .into_iter()
        .zip(outcomes)
        .enumerate()
        .map(|(index, (omega, outcome))| SweepRow { index, omega, outcome, theta_unwrapped: f64::NAN })
        .collect();
    let width = grid.varpi_values.len();
    for line in rows.chunks_mut(width) {
        let theta: Vec<f64> = line.iter().map(|r| r.sample().map_or(f64::NAN, |s| s.theta)).collect();
        for (row, t) in line.iter_mut().zip(unwrap_phase(&theta)) {
            row.theta_unwrapped = t;
        }
    }
    Ok(rows)
}

/// Sequential sweep over the whole grid.
pub fn sweep(plant: &PlantModel, generator: &GeneratorModel, grid: &SweepGrid, settings: &IntegratorSettings) -> Result<Vec<SweepRow>> {
    settings.validate()?;
    let outcomes = grid.points().iter().map(|w| evaluate_response(plant, generator, w, settings)).collect();
    assemble(grid, outcomes)
}
