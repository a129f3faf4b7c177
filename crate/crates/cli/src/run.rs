//! Subcommand execution. Every grid point is an independent task; results are
//! collected in grid order so output does not depend on the worker count.

use std::fmt;
use std::fs;
use std::io;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use rayon::ThreadPool;
use serde_json::{json, Value};

use nlfreq::analysis::{unwrap_phase, FrequencyResponseSample};
use nlfreq::dissipativity::{certify, DissipativityCertificate, Verdict};
use nlfreq::loopshape::{check_origin_stability, check_spec, compose_closed_loop, Stability, StabilityOptions};
use nlfreq::lti::lti_reference_response;
use nlfreq::model::{ParamPoint, SweepGrid};
use nlfreq::multi::superposition_report;
use nlfreq::ode::SteadyStateRecord;
use nlfreq::sweep::{assemble, evaluate_point, evaluate_response, status_of, SweepRow};
use nlfreq::Error;

use crate::config::{Config, ConfigError, System};
use crate::output::{number_value, write_json, Cell, Format, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Frequency-response surface over the grid
    Sweep,
    /// One grid point with its full steady-state record
    Point,
    /// Dissipativity certificate per grid point
    Dissipativity,
    /// Multi-tone steady state and superposition constants
    Multitone,
    /// Closed-loop stability and specification check
    Loopshape,
    /// Exact response of a linear realization over the grid
    LtiOracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::Point => "point",
            Command::Dissipativity => "dissipativity",
            Command::Multitone => "multitone",
            Command::Loopshape => "loopshape",
            Command::LtiOracle => "lti-oracle",
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Io(io::Error),
    /// Computation error outside any per-point outcome.
    Compute(Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
            RunError::Compute(e) => write!(f, "{e}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e)
    }
}

pub struct RunOptions {
    pub out: PathBuf,
    pub workers: usize,
    pub format: Format,
}

/// What a successful run wrote.
#[derive(Debug, Default)]
pub struct Summary {
    pub files: Vec<String>,
    pub points: usize,
    pub failed: usize,
    pub report: Value,
}

impl Summary {
    pub fn exit_code(&self) -> i32 {
        if self.failed > 0 {
            2
        } else {
            0
        }
    }
}

struct Context<'a> {
    config: &'a Config,
    options: &'a RunOptions,
    pool: ThreadPool,
}

impl Context<'_> {
    fn map<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
        self.pool.install(|| items.par_iter().map(f).collect())
    }

    fn dir(&self) -> &std::path::Path {
        &self.options.out
    }
}

/// Runs one subcommand and writes its outputs plus `meta.json`.
pub fn run(command: Command, config: &Config, options: &RunOptions) -> Result<Summary, RunError> {
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(options.workers).build().map_err(io::Error::other)?;
    fs::create_dir_all(&options.out)?;
    let ctx = Context { config, options, pool };
    let system = config.system()?;
    let summary = match command {
        Command::Sweep => run_sweep(&ctx, &system)?,
        Command::Point => run_point(&ctx, &system)?,
        Command::Dissipativity => run_dissipativity(&ctx, &system)?,
        Command::Multitone => run_multitone(&ctx, &system)?,
        Command::Loopshape => run_loopshape(&ctx, &system)?,
        Command::LtiOracle => run_lti_oracle(&ctx, &system)?,
    };
    let meta = json!({
        "tool": "nlfreq",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": command.name(),
        "workers": options.workers,
        "format": match options.format { Format::Csv => "csv", Format::Json => "json" },
        "outputs": summary.files,
        "points": summary.points,
        "failed": summary.failed,
        "exit_code": summary.exit_code(),
        "report": summary.report,
        "elapsed_seconds": started.elapsed().as_secs_f64(),
        "config": serde_json::to_value(config).map_err(io::Error::other)?,
    });
    write_json(&options.out, "meta.json", &meta)?;
    Ok(summary)
}

const SWEEP_COLUMNS: [&str; 14] = [
    "varpi",
    "a_u",
    "alpha",
    "theta_rad",
    "theta_unwrapped",
    "radius",
    "re_gamma",
    "im_gamma",
    "degenerate",
    "periods_simulated",
    "residual",
    "residual_sq",
    "status",
    "message",
];

fn sweep_rows(ctx: &Context, system: &System, grid: &SweepGrid) -> Result<Vec<SweepRow>, RunError> {
    let settings = ctx.config.settings()?;
    let outcomes = ctx.map(&grid.points(), |w| evaluate_response(&system.plant, &system.generator, w, &settings));
    assemble(grid, outcomes).map_err(RunError::Compute)
}

/// Status for a row; a degenerate sample is flagged but not a failure.
fn row_status(row: &SweepRow) -> &'static str {
    match row.sample() {
        Some(s) if s.degenerate => "degenerate",
        _ => row.status(),
    }
}

fn is_failure(status: &str) -> bool {
    !matches!(status, "ok" | "degenerate")
}

fn sweep_cells(row: &SweepRow) -> Vec<Cell> {
    let mut cells: Vec<Cell> = vec![row.omega.varpi.into(), row.omega.a_u.into()];
    match &row.outcome {
        Ok(r) => {
            let s = &r.sample;
            cells.extend([
                s.alpha.into(),
                s.theta.into(),
                row.theta_unwrapped.into(),
                s.radius.into(),
                s.gamma.re.into(),
                s.gamma.im.into(),
                s.degenerate.into(),
                r.diagnostics.periods_simulated.into(),
                r.diagnostics.final_residual.into(),
                s.residual_sq.into(),
                row_status(row).into(),
                Cell::Text(String::new()),
            ]);
        }
        Err(e) => {
            let (periods, residual) = match e {
                Error::NoConvergence { periods, residual, .. } => (Cell::from(*periods), Cell::from(*residual)),
                _ => (Cell::Empty, Cell::Empty),
            };
            cells.extend(std::iter::repeat_n(Cell::Num(f64::NAN), 6));
            cells.extend([Cell::Empty, periods, residual, Cell::Num(f64::NAN), status_of(e).into(), e.to_string().into()]);
        }
    }
    cells
}

fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut table = Table::new(&SWEEP_COLUMNS);
    for row in rows {
        table.push(sweep_cells(row));
    }
    table
}

fn count_failed(rows: &[SweepRow]) -> usize {
    rows.iter().filter(|r| is_failure(row_status(r))).count()
}

fn run_sweep(ctx: &Context, system: &System) -> Result<Summary, RunError> {
    let grid = ctx.config.grid()?;
    let rows = sweep_rows(ctx, system, &grid)?;
    let file = sweep_table(&rows).write(ctx.dir(), "sweep", ctx.options.format)?;
    Ok(Summary { files: vec![file], points: rows.len(), failed: count_failed(&rows), report: Value::Null })
}

fn sample_json(s: &FrequencyResponseSample) -> Value {
    json!({
        "varpi": s.omega.varpi,
        "a_u": s.omega.a_u,
        "phi_u": s.omega.phi_u,
        "alpha": number_value(s.alpha),
        "theta_rad": number_value(s.theta),
        "radius": number_value(s.radius),
        "re": number_value(s.re),
        "im": number_value(s.im),
        "re_gamma": number_value(s.gamma.re),
        "im_gamma": number_value(s.gamma.im),
        "lambda1": number_value(s.lambda1),
        "lambda2": number_value(s.lambda2),
        "residual_sq": number_value(s.residual_sq),
        "degenerate": s.degenerate,
    })
}

fn record_table(record: &SteadyStateRecord) -> Table {
    let mut columns = vec!["t".to_string()];
    for (prefix, dim) in [
        ("u", record.input.dim()),
        ("udot", record.input_rate.dim()),
        ("y", record.output.dim()),
        ("x", record.state.dim()),
        ("z", record.generator_state.dim()),
    ] {
        columns.extend((1..=dim).map(|i| format!("{prefix}{i}")));
    }
    let mut table = Table { columns, rows: Vec::with_capacity(record.samples()) };
    for (k, &t) in record.times.iter().enumerate() {
        let mut row = vec![Cell::Num(t)];
        for signal in [&record.input, &record.input_rate, &record.output, &record.state, &record.generator_state] {
            if signal.dim() > 0 {
                row.extend(signal.sample(k).iter().map(|&v| Cell::Num(v)));
            }
        }
        table.rows.push(row);
    }
    table
}

fn run_point(ctx: &Context, system: &System) -> Result<Summary, RunError> {
    let grid = ctx.config.grid()?;
    if grid.len() != 1 {
        return Err(ConfigError { path: "grids".into(), message: format!("`point` needs a 1x1 grid, got {} points", grid.len()) }.into());
    }
    let settings = ctx.config.settings()?;
    let omega = grid.points()[0];
    let mut files = Vec::new();
    let (report, failed) = match evaluate_point(&system.plant, &system.generator, &omega, &settings) {
        Ok((record, sample)) => {
            let d = &record.diagnostics;
            let report = json!({
                "status": if sample.degenerate { "degenerate" } else { "ok" },
                "sample": sample_json(&sample),
                "period": record.period,
                "samples": record.samples(),
                "periodicity_gap": number_value(record.periodicity_gap()),
                "diagnostics": {
                    "periods_simulated": d.periods_simulated,
                    "final_residual": number_value(d.final_residual),
                    "generator_gap": number_value(d.generator_gap),
                    "nonsmooth": d.nonsmooth,
                    "input_rate": format!("{:?}", d.input_rate).to_lowercase(),
                    "steps": d.steps,
                },
            });
            files.push(record_table(&record).write(ctx.dir(), "point_record", ctx.options.format)?);
            (report, 0)
        }
        Err(e) => (json!({"status": status_of(&e), "message": e.to_string(), "varpi": omega.varpi, "a_u": omega.a_u}), 1),
    };
    write_json(ctx.dir(), "point.json", &report)?;
    files.insert(0, "point.json".into());
    Ok(Summary { files, points: 1, failed, report })
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Fails => "fails",
        Verdict::Indeterminate => "indeterminate",
    }
}

fn run_dissipativity(ctx: &Context, system: &System) -> Result<Summary, RunError> {
    let grid = ctx.config.grid()?;
    let supply = ctx.config.supply()?;
    let settings = ctx.config.settings()?;
    let outcomes: Vec<Result<DissipativityCertificate, Error>> = ctx.map(&grid.points(), |w| {
        let (record, sample) = evaluate_point(&system.plant, &system.generator, w, &settings)?;
        certify(&record, &sample, &supply)
    });
    let mut table = Table::new(&[
        "varpi",
        "a_u",
        "supply",
        "c_omega",
        "c_scale",
        "holds_integral",
        "holds_frf",
        "margin",
        "borderline",
        "consistent",
        "verdict",
        "status",
        "message",
    ]);
    let (mut failed, mut inconsistent) = (0, 0);
    for (w, outcome) in grid.points().iter().zip(&outcomes) {
        let mut row: Vec<Cell> = vec![w.varpi.into(), w.a_u.into(), supply.label().into()];
        match outcome {
            Ok(c) => {
                if !c.consistent {
                    inconsistent += 1;
                }
                row.extend([
                    c.c_omega.into(),
                    c.c_scale.into(),
                    c.holds_integral.into(),
                    c.holds_frf.into(),
                    c.margin.into(),
                    c.borderline.into(),
                    c.consistent.into(),
                    verdict_name(c.verdict).into(),
                    "ok".into(),
                    Cell::Text(String::new()),
                ]);
            }
            Err(e) => {
                failed += 1;
                row.extend([Cell::Num(f64::NAN), Cell::Num(f64::NAN), Cell::Empty, Cell::Empty, Cell::Num(f64::NAN)]);
                row.extend([Cell::Empty, Cell::Empty, Cell::Empty, status_of(e).into(), e.to_string().into()]);
            }
        }
        table.push(row);
    }
    let file = table.write(ctx.dir(), "dissipativity", ctx.options.format)?;
    Ok(Summary { files: vec![file], points: outcomes.len(), failed, report: json!({ "inconsistent": inconsistent }) })
}

fn run_multitone(ctx: &Context, system: &System) -> Result<Summary, RunError> {
    let spec = ctx.config.multi(system.plant.input_dim())?;
    let settings = ctx.config.settings()?;
    let mut files = vec!["multitone.json".to_string()];
    let (report, failed) = match superposition_report(&system.plant, &system.generator, &spec, &settings) {
        Ok(r) => {
            let mut table = Table::new(&["varpi", "a_u", "phi_u", "weight_norm", "alpha", "r_cos", "r_sin", "degenerate", "triangle_term"]);
            for t in &r.tones {
                table.push(vec![
                    t.omega.varpi.into(),
                    t.omega.a_u.into(),
                    t.omega.phi_u.map_or(Cell::Empty, Cell::Num),
                    t.weight_norm.into(),
                    t.alpha.into(),
                    t.r_cos.into(),
                    t.r_sin.into(),
                    t.degenerate.into(),
                    t.triangle_term.into(),
                ]);
            }
            files.push(table.write(ctx.dir(), "multitone_tones", ctx.options.format)?);
            let report = json!({
                "status": "ok",
                "period": r.period,
                "output_norm": number_value(r.output_norm),
                "input_output": number_value(r.input_output),
                "rate_output": number_value(r.rate_output),
                "triangle_bound": number_value(r.triangle_bound),
                "b_star": number_value(r.b_star),
                "c_star": number_value(r.c_star),
                "d_star": number_value(r.d_star),
                "periods_simulated": r.periods_simulated,
                "tones": table.to_json(),
            });
            (report, 0)
        }
        Err(e @ (Error::NoConvergence { .. } | Error::Integration(_) | Error::GeneratorNotPeriodic { .. })) => {
            (json!({"status": status_of(&e), "message": e.to_string()}), 1)
        }
        Err(e @ Error::IncommensurateFrequencies { .. }) => {
            return Err(ConfigError { path: "multi.tones".into(), message: e.to_string() }.into())
        }
        Err(e) => return Err(RunError::Compute(e)),
    };
    write_json(ctx.dir(), "multitone.json", &report)?;
    Ok(Summary { files, points: 1, failed, report })
}

fn stability_name(s: Stability) -> &'static str {
    match s {
        Stability::Stable => "stable",
        Stability::Unstable => "unstable",
        Stability::Inconclusive => "inconclusive",
    }
}

/// Grid used by `loopshape` when none is configured.
pub fn default_loopshape_grid() -> SweepGrid {
    SweepGrid::log((1e-2, 1e2), 9, (1e-2, 1e2), 9).expect("static grid")
}

fn run_loopshape(ctx: &Context, system: &System) -> Result<Summary, RunError> {
    let (controlled, feedback) = ctx.config.feedback(system)?;
    let grid = if ctx.config.grids.is_some() { ctx.config.grid()? } else { default_loopshape_grid() };
    let spec = ctx.config.spec_set()?;
    let closed = compose_closed_loop(&controlled, &feedback).map_err(RunError::Compute)?;
    let options = StabilityOptions { seed: ctx.config.feedback.as_ref().and_then(|f| f.seed).unwrap_or(0), ..Default::default() };
    let stability = check_origin_stability(&closed, &options).map_err(RunError::Compute)?;

    let closed_system = System { plant: closed, generator: system.generator.clone(), realization: None, controlled: None };
    let rows = sweep_rows(ctx, &closed_system, &grid)?;
    let samples: Vec<(usize, FrequencyResponseSample)> = rows.iter().filter_map(|r| r.sample().map(|s| (r.index, *s))).collect();
    let plain: Vec<FrequencyResponseSample> = samples.iter().map(|(_, s)| *s).collect();
    let spec_report = spec.as_ref().map(|sp| check_spec(&plain, sp));

    let mut columns: Vec<&str> = SWEEP_COLUMNS.to_vec();
    columns.extend(["inside", "spec_margin"]);
    let mut table = Table::new(&columns);
    let mut check_of = vec![None; rows.len()];
    if let Some(rep) = &spec_report {
        for ((index, _), check) in samples.iter().zip(&rep.checks) {
            check_of[*index] = Some(check);
        }
    }
    for (row, check) in rows.iter().zip(&check_of) {
        let mut cells = sweep_cells(row);
        match check {
            Some(c) => cells.extend([c.inside().into(), c.margin.into()]),
            None => cells.extend([Cell::Empty, Cell::Empty]),
        }
        table.push(cells);
    }
    let file = table.write(ctx.dir(), "loopshape_surface", ctx.options.format)?;

    let max_alpha = plain.iter().map(|s| s.alpha).fold(f64::NEG_INFINITY, f64::max);
    let min_radius = plain.iter().filter(|s| !s.degenerate).map(|s| s.radius).fold(f64::INFINITY, f64::min);
    let failed = count_failed(&rows);
    let spec_json = match (&spec_report, spec) {
        (Some(rep), Some(sp)) => {
            let worst = rep.worst.map(|i| {
                let c = &rep.checks[i];
                json!({
                    "varpi": c.omega.varpi,
                    "a_u": c.omega.a_u,
                    "margin": number_value(c.margin),
                    "alpha_margin": number_value(c.alpha_margin),
                    "theta_margin": number_value(c.theta_margin),
                    "radius_margin": number_value(c.radius_margin),
                })
            });
            json!({
                "alpha": [sp.alpha.min, sp.alpha.max],
                "theta": [sp.theta.min, sp.theta.max],
                "radius": [sp.radius.min, sp.radius.max],
                "all_inside": rep.all_inside && failed == 0,
                "checked": rep.checks.len(),
                "outside": rep.checks.iter().filter(|c| !c.inside()).count(),
                "worst": worst,
            })
        }
        _ => Value::Null,
    };
    let report = json!({
        "plant": controlled.name(),
        "feedback": feedback.name(),
        "closed_loop_state_dim": closed_system.plant.state_dim(),
        "stability": {
            "verdict": stability_name(stability.verdict),
            "equilibrium_residual": number_value(stability.equilibrium_residual),
            "jacobian_verdict": stability.jacobian_verdict.map(stability_name),
            "eigenvalues": stability.eigenvalues.iter().map(|l| [l.re, l.im]).collect::<Vec<_>>(),
            "simulation_verdict": stability_name(stability.simulation_verdict),
            "trials": options.trials,
            "trials_decayed": stability.trials_decayed,
            "trials_escaped": stability.trials_escaped,
            "decay_time": stability.decay_time,
            "seed": options.seed,
        },
        "surface": {
            "points": rows.len(),
            "failed": failed,
            "max_alpha": number_value(max_alpha),
            "min_radius": number_value(min_radius),
        },
        "spec": spec_json,
    });
    write_json(ctx.dir(), "loopshape.json", &report)?;
    Ok(Summary { files: vec!["loopshape.json".into(), file], points: rows.len(), failed, report })
}

fn run_lti_oracle(ctx: &Context, system: &System) -> Result<Summary, RunError> {
    let realization = system.realization.as_ref().ok_or_else(|| ConfigError {
        path: "model".into(),
        message: "lti-oracle needs a linear model: `realization` or the built-in `lti`".into(),
    })?;
    let grid = ctx.config.grid()?;
    let points: Vec<ParamPoint> = grid.points();
    let outcomes = ctx.map(&points, |w| lti_reference_response(realization, w));
    let mut unwrapped = Vec::with_capacity(points.len());
    for line in outcomes.chunks(grid.varpi_values.len()) {
        let theta: Vec<f64> = line.iter().map(|o| o.as_ref().map_or(f64::NAN, |s| s.theta)).collect();
        unwrapped.extend(unwrap_phase(&theta));
    }
    let mut table = Table::new(&[
        "varpi",
        "a_u",
        "alpha",
        "theta_rad",
        "theta_unwrapped",
        "radius",
        "re_gamma",
        "im_gamma",
        "degenerate",
        "status",
        "message",
    ]);
    let mut failed = 0;
    for ((w, outcome), theta_u) in points.iter().zip(&outcomes).zip(unwrapped) {
        let mut row: Vec<Cell> = vec![w.varpi.into(), w.a_u.into()];
        match outcome {
            Ok(s) => row.extend([
                s.alpha.into(),
                s.theta.into(),
                theta_u.into(),
                s.radius.into(),
                s.gamma.re.into(),
                s.gamma.im.into(),
                s.degenerate.into(),
                if s.degenerate { "degenerate" } else { "ok" }.into(),
                Cell::Text(String::new()),
            ]),
            Err(e) => {
                failed += 1;
                row.extend(std::iter::repeat_n(Cell::Num(f64::NAN), 6));
                row.extend([Cell::Empty, status_of(e).into(), e.to_string().into()]);
            }
        }
        table.push(row);
    }
    let file = table.write(ctx.dir(), "lti_oracle", ctx.options.format)?;
    Ok(Summary { files: vec![file], points: points.len(), failed, report: Value::Null })
}
