use std::collections::VecDeque;

use super::dopri::{interpolate, Dopri5};
use super::record::{DerivativeSource, Diagnostics, Signal, SteadyStateRecord};
use super::IntegratorSettings;
use crate::analysis::periodic_derivative;
use crate::model::{GeneratorModel, ParamPoint, PlantModel};
use crate::{Error, Result};

/// Relative tolerance on `‖z(T) − z(0)‖` for a generator to count as periodic.
const GENERATOR_GAP_TOL: f64 = 1e-6;

/// Stacked right-hand side `(ẋ, ż) = (f(x, ℓ(z)), s(z))`.
struct Interconnection<'a> {
    plant: &'a PlantModel,
    generator: &'a GeneratorModel,
    omega: &'a ParamPoint,
    u: Vec<f64>,
}

impl<'a> Interconnection<'a> {
    fn new(plant: &'a PlantModel, generator: &'a GeneratorModel, omega: &'a ParamPoint) -> Self {
        Self { plant, generator, omega, u: vec![0.0; generator.input_dim()] }
    }

    fn rhs(&mut self, s: &[f64], ds: &mut [f64]) {
        let n = self.plant.state_dim();
        let (x, z) = s.split_at(n);
        let (dx, dz) = ds.split_at_mut(n);
        self.generator.ell(self.omega, z, &mut self.u);
        self.plant.dynamics(x, &self.u, dx);
        self.generator.vector_field(self.omega, z, dz);
    }
}

fn check_dims(plant: &PlantModel, generator: &GeneratorModel) -> Result<()> {
    if plant.input_dim() != generator.input_dim() {
        return Err(Error::Dimension(format!(
            "plant `{}` takes {} input(s) but generator `{}` produces {}",
            plant.name(),
            plant.input_dim(),
            generator.name(),
            generator.input_dim()
        )));
    }
    Ok(())
}

fn initial_plant_state(plant: &PlantModel, settings: &IntegratorSettings) -> Result<Vec<f64>> {
    match &settings.x_init {
        None => Ok(vec![0.0; plant.state_dim()]),
        Some(x) if x.len() == plant.state_dim() => Ok(x.clone()),
        Some(x) => Err(Error::Dimension(format!("x_init has {} entries, plant state has {}", x.len(), plant.state_dim()))),
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Dense solution of the interconnection from `t = 0`.
#[derive(Debug, Clone)]
pub struct DenseTrajectory {
    plant_dim: usize,
    dim: usize,
    starts: Vec<f64>,
    widths: Vec<f64>,
    coeffs: Vec<f64>,
    horizon: f64,
    initial: Vec<f64>,
}

impl DenseTrajectory {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step_count(&self) -> usize {
        self.starts.len()
    }

    /// Stacked state `(x, z)` at time `t ∈ [0, horizon]`.
    pub fn sample(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        if self.starts.is_empty() || t <= 0.0 {
            out.copy_from_slice(&self.initial);
            return out;
        }
        let idx = self.starts.partition_point(|&s| s <= t).saturating_sub(1);
        let span = 5 * self.dim;
        interpolate(&self.coeffs[idx * span..(idx + 1) * span], self.starts[idx], self.widths[idx], t.min(self.horizon), &mut out);
        out
    }

    pub fn plant_state(&self, t: f64) -> Vec<f64> {
        let mut s = self.sample(t);
        s.truncate(self.plant_dim);
        s
    }

    pub fn generator_state(&self, t: f64) -> Vec<f64> {
        self.sample(t).split_off(self.plant_dim)
    }
}

/// Integrates the interconnection from `(x0, z0(ω))` over `[0, horizon]`
/// without any periodic resetting.
pub fn integrate(
    plant: &PlantModel,
    generator: &GeneratorModel,
    omega: &ParamPoint,
    x0: &[f64],
    horizon: f64,
    settings: &IntegratorSettings,
) -> Result<DenseTrajectory> {
    check_dims(plant, generator)?;
    generator.check(omega)?;
    settings.validate()?;
    if x0.len() != plant.state_dim() {
        return Err(Error::Dimension(format!("x0 has {} entries, plant state has {}", x0.len(), plant.state_dim())));
    }
    if let Some(i) = x0.iter().position(|v| !v.is_finite()) {
        return Err(crate::model::invalid(&format!("x0[{i}]"), "must be finite"));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(crate::model::invalid("horizon", format!("must be positive, got {horizon}")));
    }
    check_generator(generator, omega, settings)?;
    let period = generator.period(omega);
    let mut state = [x0, &generator.initial_state(omega)[..]].concat();
    let dim = state.len();
    let mut traj = DenseTrajectory {
        plant_dim: plant.state_dim(),
        dim,
        starts: Vec::new(),
        widths: Vec::new(),
        coeffs: Vec::new(),
        horizon,
        initial: state.clone(),
    };
    let mut ic = Interconnection::new(plant, generator, omega);
    let mut solver = Dopri5::new(dim);
    let mut h = 0.0;
    let mut ctl = settings.step_control(period / 8.0);
    ctl.max_steps = ctl.max_steps.saturating_mul((horizon / period).ceil().max(1.0) as usize);
    solver.solve(
        |_, s, ds| ic.rhs(s, ds),
        0.0,
        &mut state,
        horizon,
        &mut h,
        &ctl,
        |step| {
            traj.starts.push(step.t0);
            traj.widths.push(step.h);
            traj.coeffs.extend_from_slice(step.coefficients());
        },
    )?;
    Ok(traj)
}

/// Runs the generator alone for one period: rejects a non-periodic generator
/// or an identically zero input before the plant is touched.
fn check_generator(generator: &GeneratorModel, omega: &ParamPoint, settings: &IntegratorSettings) -> Result<()> {
    let period = generator.period(omega);
    let z0 = generator.initial_state(omega);
    if z0.len() != generator.state_dim() {
        return Err(Error::Dimension(format!("z0 has {} entries, generator state has {}", z0.len(), generator.state_dim())));
    }
    let samples = settings.samples_per_period;
    let dt = period / samples as f64;
    let mut z = z0.clone();
    let mut u = vec![0.0; generator.input_dim()];
    let mut u_energy = 0.0;
    generator.ell(omega, &z, &mut u);
    u_energy += u.iter().map(|v| v * v).sum::<f64>();
    let mut solver = Dopri5::new(z.len());
    let mut h = 0.0;
    let mut cursor = 1usize;
    let mut buf = z.clone();
    let ctl = settings.step_control(period / 8.0);
    solver.solve(
        |_, z, dz| generator.vector_field(omega, z, dz),
        0.0,
        &mut z,
        period,
        &mut h,
        &ctl,
        |step| {
            while cursor < samples {
                let tk = cursor as f64 * dt;
                if tk > step.t1() {
                    break;
                }
                step.eval(tk, &mut buf);
                generator.ell(omega, &buf, &mut u);
                u_energy += u.iter().map(|v| v * v).sum::<f64>();
                cursor += 1;
            }
        },
    )?;
    let gap = distance(&z, &z0);
    let tolerance = GENERATOR_GAP_TOL * (1.0 + norm(&z0));
    if !(gap <= tolerance) {
        return Err(Error::GeneratorNotPeriodic { gap, tolerance });
    }
    if u_energy == 0.0 {
        return Err(Error::ZeroInput);
    }
    Ok(())
}

/// Integrates period by period until consecutive periods of the output agree
/// to `settle_tol` (relative L2) after the washout, and returns the last period.
///
/// Time restarts at 0 each period and the generator state is reset to `z0(ω)`,
/// so phase drift of a neutrally stable generator cannot accumulate.
pub fn settle_to_steady_state(
    plant: &PlantModel,
    generator: &GeneratorModel,
    omega: &ParamPoint,
    settings: &IntegratorSettings,
) -> Result<SteadyStateRecord> {
    check_dims(plant, generator)?;
    generator.check(omega)?;
    settings.validate()?;
    let x_init = initial_plant_state(plant, settings)?;
    check_generator(generator, omega, settings)?;

    let n = plant.state_dim();
    let m = plant.input_dim();
    let p = plant.output_dim();
    let period = generator.period(omega);
    let samples = settings.samples_per_period;
    let dt = period / samples as f64;
    let z0 = generator.initial_state(omega);
    let mut state = [&x_init[..], &z0[..]].concat();
    let dim = state.len();

    let mut ic = Interconnection::new(plant, generator, omega);
    let mut solver = Dopri5::new(dim);
    let ctl = settings.step_control(period / 8.0);
    let mut h = 0.0;
    let mut grid = vec![0.0; samples * dim];
    let mut u_grid = vec![0.0; samples * m];
    let mut history: VecDeque<Vec<f64>> = VecDeque::with_capacity(5);
    let mut max_gap: f64 = 0.0;
    let mut steps = 0usize;
    let mut residual = f64::INFINITY;
    let mut u_end = vec![0.0; m];
    let mut y_end = vec![0.0; p];

    for k in 1..=settings.max_periods {
        grid[..dim].copy_from_slice(&state);
        let mut cursor = 1usize;
        steps += solver.solve(
            |_, s, ds| ic.rhs(s, ds),
            0.0,
            &mut state,
            period,
            &mut h,
            &ctl,
            |step| {
                while cursor < samples {
                    let tk = cursor as f64 * dt;
                    if tk > step.t1() {
                        break;
                    }
                    step.eval(tk, &mut grid[cursor * dim..(cursor + 1) * dim]);
                    cursor += 1;
                }
            },
        )?;
        debug_assert_eq!(cursor, samples);

        generator.ell(omega, &state[n..], &mut u_end);
        plant.output(&state[..n], &u_end, &mut y_end);
        max_gap = max_gap.max(distance(&state[n..], &z0));
        state[n..].copy_from_slice(&z0);

        let mut y_grid = if history.len() == 5 { history.pop_front().unwrap() } else { vec![0.0; samples * p] };
        for j in 0..samples {
            let s = &grid[j * dim..(j + 1) * dim];
            let u = &mut u_grid[j * m..(j + 1) * m];
            generator.ell(omega, &s[n..], u);
            plant.output(&s[..n], u, &mut y_grid[j * p..(j + 1) * p]);
        }
        if y_grid.iter().any(|v| !v.is_finite()) {
            return Err(crate::ode::IntegrationError::NonFiniteState { t: period }.into());
        }
        let scale = norm(&y_grid).max(1e-12 * norm(&u_grid));
        if let Some(prev) = history.back() {
            let diff = distance(&y_grid, prev);
            residual = if diff == 0.0 { 0.0 } else { diff / scale };
        }
        history.push_back(y_grid);

        if k > settings.washout_periods && residual <= settings.settle_tol {
            let y_grid = history.pop_back().unwrap();
            return Ok(build_record(
                plant,
                generator,
                omega,
                settings,
                period,
                &grid,
                u_grid,
                y_grid,
                u_end,
                y_end,
                Diagnostics {
                    periods_simulated: k,
                    final_residual: residual,
                    generator_gap: max_gap,
                    nonsmooth: !plant.is_differentiable(),
                    input_rate: if generator.has_analytic_derivative() {
                        DerivativeSource::Analytic
                    } else {
                        DerivativeSource::FiniteDifference
                    },
                    steps,
                },
            ));
        }
    }
    Err(Error::NoConvergence { periods: settings.max_periods, residual, subharmonic: subharmonic_hint(&history, residual) })
}

/// If the newest period matches the one `j` periods earlier much better than
/// its immediate predecessor, the response is likely `j`-periodic.
fn subharmonic_hint(history: &VecDeque<Vec<f64>>, residual: f64) -> Option<usize> {
    let last = history.back()?;
    let scale = norm(last);
    if scale == 0.0 {
        return None;
    }
    (2..=4).find(|&j| history.len() > j && distance(last, &history[history.len() - 1 - j]) / scale < 1e-2 * residual)
}

#[allow(clippy::too_many_arguments)]
fn build_record(
    plant: &PlantModel,
    generator: &GeneratorModel,
    omega: &ParamPoint,
    settings: &IntegratorSettings,
    period: f64,
    grid: &[f64],
    u_grid: Vec<f64>,
    y_grid: Vec<f64>,
    u_end: Vec<f64>,
    y_end: Vec<f64>,
    diagnostics: Diagnostics,
) -> SteadyStateRecord {
    let n = plant.state_dim();
    let m = plant.input_dim();
    let samples = settings.samples_per_period;
    let dim = grid.len() / samples;
    let dt = period / samples as f64;
    let mut x = Vec::with_capacity(samples * n);
    let mut z = Vec::with_capacity(samples * (dim - n));
    for row in grid.chunks_exact(dim) {
        x.extend_from_slice(&row[..n]);
        z.extend_from_slice(&row[n..]);
    }
    let generator_state = Signal::new(dim - n, z);
    let input = Signal::new(m, u_grid);
    let input_rate = if generator.has_analytic_derivative() {
        let mut rate = Signal::zeros(m, samples);
        for j in 0..samples {
            generator.ell_dot(omega, generator_state.sample(j), rate.sample_mut(j));
        }
        rate
    } else {
        periodic_derivative(&input, period)
    };
    SteadyStateRecord {
        omega: *omega,
        period,
        times: (0..samples).map(|j| j as f64 * dt).collect(),
        input,
        input_rate,
        output: Signal::new(plant.output_dim(), y_grid),
        state: Signal::new(n, x),
        generator_state,
        input_at_period: u_end,
        output_at_period: y_end,
        quadrature: settings.quadrature,
        diagnostics,
    }
}
