//! Acceptance suite: one PASS/FAIL line per criterion, details indented below.
//!
//! Runs with `cargo test -p nlfreq-cli --test acceptance`. The process fails
//! when a criterion fails, except for entries in `KNOWN_DEVIATIONS`, which are
//! still printed as FAIL.

mod dsl_oracle;

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fs;
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nlfreq::analysis::{orthogonality_check, unwrap_phase, FrequencyResponseSample};
use nlfreq::dissipativity::certify;
use nlfreq::dsl::{parse_expression, DslErrorKind, Frame, Scope, Signal};
use nlfreq::loopshape::{check_origin_stability, compose_closed_loop, example5_controlled, Feedback, Stability, StabilityOptions};
use nlfreq::lti::{
    harmonic_l, harmonic_s, lti_reference_response, random_stable_siso, sylvester_closed_form, sylvester_direct, sylvester_residual,
};
use nlfreq::model::{builtin_model, logspace, GeneratorModel, LtiRealization, ParamPoint, PlantModel, SupplyRate, SweepGrid};
use nlfreq::multi::{common_period, multi_steady_state, superposition_report, MultiInputSpec, Tone};
use nlfreq::ode::IntegratorSettings;
use nlfreq::sweep::{evaluate_point, sweep};

// tolerances, as pinned by the acceptance criteria
const LTI_GAIN_REL: f64 = 1e-4;
const LTI_PHASE: f64 = 1e-4;
const LTI_RADIUS: f64 = 1e-4;
const SYLVESTER_TOL: f64 = 1e-10;
const RADIUS_IDENTITY_TOL: f64 = 1e-8;
const ORTHOGONALITY_TOL: f64 = 1e-8;
const C_OMEGA_TOL: f64 = 1e-4;
const LINEARIZATION_REL: f64 = 0.02;
const PHASE_FLIP: f64 = 2.5;
const RADIUS_DIP: f64 = 0.8;
const SUPERPOSITION_REL: f64 = 1e-6;
const PERIOD_REL: f64 = 1e-9;
const EIGEN_TOL: f64 = 1e-4;
const DSL_ULPS: u64 = 1;

/// Criteria whose failure is analysed and documented rather than fixed.
const KNOWN_DEVIATIONS: &[u32] = &[6];

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Self { pass, summary: summary.into(), details: Vec::new() }
    }

    fn detail(mut self, line: impl Into<String>) -> Self {
        self.details.push(line.into());
        self
    }
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn example1_params() -> BTreeMap<String, f64> {
    params(&[("a1", 0.5), ("a2", 1.0), ("a3", 1.0), ("b1", 1.0), ("c1", 1.0)])
}

fn gene_params() -> BTreeMap<String, f64> {
    params(&[("gamma", 5.0), ("k_on", 1.0), ("k_off", 0.5), ("p_tot", 20.0), ("u_bar", 100.5), ("K", 0.05), ("K_u", 0.1)])
}

fn model(name: &str, p: BTreeMap<String, f64>) -> (PlantModel, GeneratorModel) {
    builtin_model(name, &p).unwrap()
}

fn log_grid(varpi: (f64, f64), nv: usize, a_u: (f64, f64), na: usize) -> SweepGrid {
    SweepGrid::log(varpi, nv, a_u, na).unwrap()
}

fn criterion_1() -> Outcome {
    let lti = LtiRealization::first_order(0.5, 1.0, 1.0).unwrap();
    let plant = PlantModel::from_realization(&lti);
    let (_, gen) = model("lti", params(&[("a1", 0.5)]));
    let grid = log_grid((1e-2, 1e2), 20, (1e-2, 1e2), 20);
    let rows = sweep(&plant, &gen, &grid, &IntegratorSettings::default()).unwrap();
    let (mut gain, mut phase, mut radius, mut failed) = (0.0f64, 0.0f64, 0.0f64, 0);
    for row in &rows {
        let Some(s) = row.sample() else {
            failed += 1;
            continue;
        };
        let exact = lti_reference_response(&lti, &row.omega).unwrap();
        gain = gain.max((s.alpha / exact.alpha - 1.0).abs());
        phase = phase.max((s.theta - exact.theta).abs());
        radius = radius.max((s.radius - 1.0).abs());
    }
    let pass = failed == 0 && gain <= LTI_GAIN_REL && phase <= LTI_PHASE && radius <= LTI_RADIUS;
    Outcome::new(
        pass,
        format!("{} points, {failed} failed; max gain rel err {gain:.2e}, phase err {phase:.2e} rad, |r-1| {radius:.2e}", rows.len()),
    )
}

/// `C(jϖI − A)⁻¹B` by nalgebra's complex LU, independent of the library's solver.
fn resolvent_oracle(r: &LtiRealization, varpi: f64) -> Complex64 {
    let n = r.state_dim();
    let a = r.a.map(|v| Complex64::new(v, 0.0));
    let m = DMatrix::<Complex64>::identity(n, n) * Complex64::new(0.0, varpi) - a;
    let x = m.lu().solve(&r.b.map(|v| Complex64::new(v, 0.0))).unwrap();
    (r.c.map(|v| Complex64::new(v, 0.0)) * x)[(0, 0)]
}

fn criterion_2() -> Outcome {
    let (mut diff, mut residual, mut transfer) = (0.0f64, 0.0f64, 0.0f64);
    let freqs = logspace(1e-2, 1e2, 10);
    for seed in 0..50u64 {
        let r = random_stable_siso(1 + (seed as usize % 8), seed);
        for &w in &freqs {
            let closed = sylvester_closed_form(&r.a, &r.b, w).unwrap();
            let direct = sylvester_direct(&r.a, &harmonic_s(w), &(&r.b * harmonic_l())).unwrap();
            diff = diff.max((&closed - &direct).amax());
            residual = residual.max(sylvester_residual(&r.a, &r.b, &closed, w));
            let cphi = &r.c * &closed;
            let h = resolvent_oracle(&r, w);
            transfer = transfer.max((Complex64::new(cphi[(0, 0)], cphi[(0, 1)]) - h).norm() / h.norm());
        }
    }
    Outcome::new(
        diff <= SYLVESTER_TOL && residual <= SYLVESTER_TOL,
        format!("500 cases; max elementwise diff {diff:.2e}, max residual {residual:.2e}"),
    )
    .detail(format!("C·Φ against an independent complex resolvent: max rel err {transfer:.2e}"))
}

struct RadiusStats {
    checked: usize,
    failed: usize,
    degenerate: usize,
    radius_ok: bool,
    identity: f64,
}

/// Criteria 3 and 4 share one pass over the built-in models.
fn criteria_3_and_4() -> (Outcome, Outcome) {
    let default = IntegratorSettings::default();
    let gene = IntegratorSettings { atol: 1e-20, ..Default::default() };
    let closed = |fb: Feedback| {
        let plant = compose_closed_loop(&example5_controlled(), &fb).unwrap();
        let (_, gen) = model("example5_plant", params(&[]));
        (plant, gen)
    };
    let wide = log_grid((1e-2, 1e2), 6, (1e-2, 1e2), 6);
    let cases: Vec<(&str, (PlantModel, GeneratorModel), SweepGrid, &IntegratorSettings)> = vec![
        ("example1", model("example1", example1_params()), log_grid((1e-2, 1e2), 8, (1e-2, 1e2), 8), &default),
        ("lti", model("lti", params(&[("a1", 0.5)])), wide.clone(), &default),
        ("cveticanin_gen", model("cveticanin_gen", params(&[])), wide.clone(), &default),
        ("gene_regulatory", model("gene_regulatory", gene_params()), log_grid((1e-2, 1e1), 6, (1e-1, 1e2), 6), &gene),
        ("harmonic_gen", model("harmonic_gen", params(&[])), log_grid((1e-2, 1e2), 10, (1e-2, 1e2), 10), &default),
        ("example5 + state feedback", closed(Feedback::example5_state(10.0)), wide.clone(), &default),
        ("example5 + output feedback", closed(Feedback::example5_output(10.0)), wide, &default),
    ];
    let mut lines = Vec::new();
    let mut all_ok = true;
    let (mut ortho_harmonic, mut ortho_cveticanin, mut ortho_count) = (0.0f64, 0.0f64, 0);
    for (name, (plant, gen), grid, settings) in &cases {
        let mut st = RadiusStats { checked: 0, failed: 0, degenerate: 0, radius_ok: true, identity: 0.0 };
        for w in grid.points() {
            let (record, sample) = match evaluate_point(plant, gen, &w, settings) {
                Ok(v) => v,
                Err(_) => {
                    st.failed += 1;
                    continue;
                }
            };
            let o = orthogonality_check(&record).unwrap().abs();
            ortho_count += 1;
            if gen.name() == "cveticanin" {
                ortho_cveticanin = ortho_cveticanin.max(o);
            } else {
                ortho_harmonic = ortho_harmonic.max(o);
            }
            if sample.degenerate {
                st.degenerate += 1;
                continue;
            }
            st.checked += 1;
            st.radius_ok &= sample.radius > 0.0 && sample.radius <= 1.0;
            st.identity = st.identity.max((sample.residual_sq - (1.0 - sample.radius * sample.radius)).abs());
        }
        let ok = st.radius_ok && st.identity <= RADIUS_IDENTITY_TOL && st.checked > 0;
        all_ok &= ok;
        lines.push(format!(
            "{name}: {} converged, {} degenerate, {} not converged; r in (0,1]: {}; max identity gap {:.2e}",
            st.checked, st.degenerate, st.failed, st.radius_ok, st.identity
        ));
    }
    let mut c3 = Outcome::new(all_ok, format!("{} model/grid combinations", cases.len()));
    c3.details = lines;
    c3 = c3.detail("non-converged points are excluded; the criterion covers converged samples");
    let c4 = Outcome::new(
        ortho_harmonic <= ORTHOGONALITY_TOL && ortho_cveticanin <= ORTHOGONALITY_TOL,
        format!("{ortho_count} records; max |<u',u>|/(|u||u'|): harmonic {ortho_harmonic:.2e}, cveticanin {ortho_cveticanin:.2e}"),
    );
    (c3, c4)
}

fn criterion_5() -> Outcome {
    let lag = PlantModel::from_realization(&LtiRealization::first_order(1.0, 1.0, 1.0).unwrap());
    let negation = PlantModel::new("negation", 0, 1, 1, |_, _, _| {}, |_, u, y| y[0] = -u[0]);
    let plants = [("1/(s+1)", lag.clone()), ("y=u", PlantModel::passthrough(1)), ("y=-u", negation)];
    let supplies = [
        SupplyRate::L2Gain { gamma: 1.0 },
        SupplyRate::Passivity,
        SupplyRate::Counterclockwise,
        SupplyRate::OutputStrict { gamma1: 0.25 },
        SupplyRate::InputStrict { gamma2: 0.25 },
        SupplyRate::VeryStrict { gamma1: 0.25, gamma2: 0.25 },
    ];
    let (_, gen) = model("lti", params(&[("a1", 1.0)]));
    let grid = log_grid((1e-2, 1e2), 10, (1e-1, 1e1), 5);
    let settings = IntegratorSettings::default();
    let (mut compared, mut borderline, mut mismatches) = (0, 0, Vec::new());
    for (name, plant) in &plants {
        for w in grid.points() {
            let (record, sample) = evaluate_point(plant, &gen, &w, &settings).unwrap();
            for supply in &supplies {
                let c = certify(&record, &sample, supply).unwrap();
                if c.borderline {
                    borderline += 1;
                    continue;
                }
                compared += 1;
                if Some(c.holds_integral) != c.holds_frf {
                    mismatches.push(format!("{name} {} at ({}, {})", supply.label(), w.varpi, w.a_u));
                }
            }
        }
    }
    let w = ParamPoint::new(1.0, 1.0).unwrap();
    let (record, sample) = evaluate_point(&lag, &gen, &w, &settings).unwrap();
    let c_omega = certify(&record, &sample, &SupplyRate::Passivity).unwrap().c_omega;
    let c_err = (c_omega - PI / 2.0).abs();
    let mut out = Outcome::new(
        mismatches.is_empty() && c_err <= C_OMEGA_TOL,
        format!("{compared} non-borderline comparisons, {} mismatches ({borderline} borderline skipped); c_omega = {c_omega:.8} (|c - pi/2| = {c_err:.1e})", mismatches.len()),
    );
    for m in mismatches.iter().take(5) {
        out = out.detail(format!("mismatch: {m}"));
    }
    out
}

/// Fixed-step RK4 integration of the first example, sharing nothing with the
/// library integrator. Returns `ϑ` over the last of `periods` periods.
fn rk4_example1_phase(varpi: f64, a_u: f64, periods: usize, steps: usize) -> f64 {
    let f = |t: f64, x: [f64; 2]| {
        let u = a_u * (varpi * t).cos();
        [-0.5 * x[0] + u, -x[0] * x[0] - x[1] + x[0] * u]
    };
    let period = 2.0 * PI / varpi;
    let h = period / steps as f64;
    let mut x = [0.0; 2];
    let (mut uy, mut uu, mut dy, mut dd) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..periods * steps {
        let t = k as f64 * h;
        if k >= (periods - 1) * steps {
            let y = x[0] + x[0] * x[1];
            let u = a_u * (varpi * t).cos();
            let du = -a_u * varpi * (varpi * t).sin();
            uy += u * y;
            uu += u * u;
            dy += du * y;
            dd += du * du;
        }
        let k1 = f(t, x);
        let k2 = f(t + h / 2.0, [x[0] + h / 2.0 * k1[0], x[1] + h / 2.0 * k1[1]]);
        let k3 = f(t + h / 2.0, [x[0] + h / 2.0 * k2[0], x[1] + h / 2.0 * k2[1]]);
        let k4 = f(t + h, [x[0] + h * k3[0], x[1] + h * k3[1]]);
        for i in 0..2 {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    (dy / dd.sqrt()).atan2(uy / uu.sqrt())
}

fn example1_samples(varpi: f64, a_u: &[f64]) -> Vec<FrequencyResponseSample> {
    let (plant, gen) = model("example1", example1_params());
    let settings = IntegratorSettings::default();
    a_u.iter().map(|&a| evaluate_point(&plant, &gen, &ParamPoint::new(varpi, a).unwrap(), &settings).unwrap().1).collect()
}

fn phase_span(samples: &[FrequencyResponseSample]) -> f64 {
    let theta = unwrap_phase(&samples.iter().map(|s| s.theta).collect::<Vec<_>>());
    let max = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = theta.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

fn criterion_6() -> Outcome {
    let varpi = 0.1;
    let linear_gain = 1.0 / Complex64::new(0.5, varpi).norm();
    let small = example1_samples(varpi, &[0.01, 0.02, 0.03, 0.04, 0.05]);
    let gain_err = small.iter().map(|s| (s.alpha / linear_gain - 1.0).abs()).fold(0.0, f64::max);
    let pass_a = gain_err <= LINEARIZATION_REL;

    let band_a: Vec<f64> = (0..=30).map(|i| 0.6 + 0.01 * i as f64).collect();
    let band = example1_samples(varpi, &band_a);
    let span = phase_span(&band);
    let pass_b = span >= PHASE_FLIP;
    let min_r = band.iter().map(|s| s.radius).fold(f64::INFINITY, f64::min);
    let pass_c = min_r < RADIUS_DIP;

    let wide = example1_samples(varpi, &logspace(0.1, 2.0, 20));
    let slow = example1_samples(0.01, &band_a);
    let oracle: Vec<(f64, f64, f64)> =
        [0.6, 0.9].iter().map(|&a| (a, rk4_example1_phase(varpi, a, 12, 8192), band[((a - 0.6) / 0.01).round() as usize].theta)).collect();
    let oracle_gap = oracle.iter().map(|(_, o, s)| (o - s).abs()).fold(0.0, f64::max);

    let verdict = |p: bool| if p { "pass" } else { "FAIL" };
    Outcome::new(pass_a && pass_b && pass_c, format!("(a) {} (b) {} (c) {}", verdict(pass_a), verdict(pass_b), verdict(pass_c)))
        .detail(format!("(a) a_u 0.01..0.05: max |alpha/|H| - 1| = {gain_err:.2e} (|H(j0.1)| = {linear_gain:.5})"))
        .detail(format!("(b) a_u 0.60..0.90: |d theta| = {span:.3} rad, needs >= {PHASE_FLIP}"))
        .detail(format!("(c) a_u 0.60..0.90: min r = {min_r:.4}"))
        .detail(format!(
            "independent RK4: theta(0.6) = {:.4} vs {:.4}, theta(0.9) = {:.4} vs {:.4} (max gap {oracle_gap:.1e})",
            oracle[0].1, oracle[0].2, oracle[1].1, oracle[1].2
        ))
        .detail(format!("whole sweep a_u 0.1..2 at varpi 0.1: |d theta| = {:.3} rad", phase_span(&wide)))
        .detail(format!("same band at varpi 0.01: |d theta| = {:.3} rad", phase_span(&slow)))
}

fn criterion_7() -> Outcome {
    let lti = LtiRealization::first_order(0.5, 1.0, 1.0).unwrap();
    let plant = PlantModel::from_realization(&lti);
    let (_, gen) = model("lti", params(&[("a1", 0.5)]));
    let tones = [(1.0, 0.5, 1.0), (2.5, 0.8, 0.6)];
    let spec = MultiInputSpec::new(tones.iter().map(|&(w, a, m)| Tone::scalar(ParamPoint::new(w, a).unwrap(), m, 1)).collect()).unwrap();
    let period = common_period(&spec, &gen).unwrap();
    let period_err = (period / (4.0 * PI) - 1.0).abs();
    let settings = IntegratorSettings::default();
    let record = multi_steady_state(&plant, &gen, &spec, &settings).unwrap();
    // steady state of 1/(s+0.5) under a·sin(ϖt) is a|H| sin(ϖt + arg H)
    let (mut err, mut norm) = (0.0, 0.0);
    for (k, &t) in record.times.iter().enumerate() {
        let exact: f64 = tones
            .iter()
            .map(|&(w, a, m)| {
                let h = 1.0 / Complex64::new(0.5, w);
                m * a * h.norm() * (w * t + h.arg()).sin()
            })
            .sum();
        err += (record.output.sample(k)[0] - exact).powi(2);
        norm += exact * exact;
    }
    let rel = (err / norm).sqrt();
    let report = superposition_report(&plant, &gen, &spec, &settings).unwrap();
    let tightness = report.triangle_bound / report.output_norm;
    Outcome::new(
        rel <= SUPERPOSITION_REL && period_err <= PERIOD_REL,
        format!("rel L2 err {rel:.2e}; T_A = {period:.12} (rel err {period_err:.1e} vs 4pi)"),
    )
    .detail(format!(
        "b* = {:.4}, c* = {:.4}, d* = {:.4}; triangle bound / ||Y_A|| = {tightness:.3}",
        report.b_star, report.c_star, report.d_star
    ))
}

fn criterion_8() -> Outcome {
    let controlled = example5_controlled();
    let state = compose_closed_loop(&controlled, &Feedback::example5_state(10.0)).unwrap();
    let output = compose_closed_loop(&controlled, &Feedback::example5_output(10.0)).unwrap();
    let stability = check_origin_stability(&state, &StabilityOptions::default()).unwrap();
    let mut eig: Vec<f64> = stability.eigenvalues.iter().map(|l| l.re).collect();
    eig.sort_by(f64::total_cmp);
    let imag = stability.eigenvalues.iter().map(|l| l.im.abs()).fold(0.0, f64::max);
    let eig_ok = eig.len() == 2 && (eig[0] + 9.0).abs() <= EIGEN_TOL && (eig[1] + 1.0).abs() <= EIGEN_TOL && imag <= EIGEN_TOL;
    let r1 = stability.verdict == Stability::Stable && eig_ok;

    let (_, gen) = model("example5_plant", params(&[]));
    let grid = log_grid((1e-2, 1e2), 10, (1e-2, 1e2), 10);
    let settings = IntegratorSettings::default();
    let surface = |plant: &PlantModel| {
        let rows = sweep(plant, &gen, &grid, &settings).unwrap();
        let failed = rows.iter().filter(|r| r.sample().is_none()).count();
        let samples: Vec<FrequencyResponseSample> = rows.iter().filter_map(|r| r.sample().cloned()).collect();
        let max_alpha = samples.iter().map(|s| s.alpha).fold(0.0, f64::max);
        let min_r = samples.iter().filter(|s| !s.degenerate).map(|s| s.radius).fold(f64::INFINITY, f64::min);
        (failed, max_alpha, min_r)
    };
    let (failed_s, alpha_s, r_s) = surface(&state);
    let (failed_o, alpha_o, r_o) = surface(&output);
    let pass = r1 && failed_s == 0 && failed_o == 0 && alpha_s < 1.0 && r_o >= r_s;
    Outcome::new(
        pass,
        format!(
            "R1 {:?}, eigenvalues {eig:.6?}; state fb max alpha {alpha_s:.4}; min r: output fb {r_o:.4} >= state fb {r_s:.4}",
            stability.verdict
        ),
    )
    .detail(format!(
        "{} grid points per loop, not converged: state {failed_s}, output {failed_o}; output fb max alpha {alpha_o:.4}",
        grid.len()
    ))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let gain = "gain".to_string();
    let (mut worst, mut finite, mut mismatches) = (0u64, 0, Vec::new());
    for _ in 0..200 {
        let tree = dsl_oracle::random_tree(&mut rng, 5);
        let text = dsl_oracle::render(&tree, &mut rng);
        let expr = match parse_expression(&text) {
            Ok(e) => e,
            Err(e) => {
                mismatches.push(format!("`{text}` failed to parse: {e}"));
                continue;
            }
        };
        for _ in 0..3 {
            let env: [f64; 4] = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.1..3.0)];
            let expected = dsl_oracle::eval(&tree, &env);
            let bindings: HashMap<String, f64> =
                ["x1", "x2", "u1", "gain"].iter().map(|n| (n.to_string(), dsl_oracle::binding(n, &env))).collect();
            // the interpreter reports non-finite results as errors
            let interpreted = match expr.eval(&bindings) {
                Ok(v) => v,
                Err(e) if e.kind == DslErrorKind::NonFinite && !expected.is_finite() => expected,
                Err(e) => {
                    mismatches.push(format!("`{text}`: oracle {expected}, interpreter error {e}"));
                    continue;
                }
            };
            let scope = Scope::new().signal(Signal::X, 2).signal(Signal::U, 1).constants([(&gain, &env[3])]);
            let compiled = expr.compile(&scope).unwrap().eval(&Frame { x: &env[..2], u: &env[2..3], ..Default::default() });
            let d = dsl_oracle::ulps(expected, interpreted).max(dsl_oracle::ulps(expected, compiled));
            if expected.is_finite() {
                finite += 1;
            }
            if d > DSL_ULPS {
                mismatches.push(format!("`{text}`: oracle {expected}, interpreted {interpreted}, compiled {compiled}"));
            }
            worst = worst.max(d.min(1 << 20));
        }
    }
    let errors = [
        ("x1 + * 2", DslErrorKind::Syntax, 5),
        ("sin(x1", DslErrorKind::Syntax, 6),
        ("x1 + foo(2)", DslErrorKind::UnknownIdentifier, 5),
        ("max(x1)", DslErrorKind::Arity, 0),
        ("2 * pow(x1, 2, 3)", DslErrorKind::Arity, 4),
    ];
    let mut error_lines = Vec::new();
    let mut errors_ok = true;
    for (text, kind, offset) in errors {
        let got = parse_expression(text).err();
        let ok = got.as_ref().is_some_and(|e| e.kind == kind && e.offset == offset);
        errors_ok &= ok;
        error_lines.push(format!("`{text}` -> {}", got.map_or("no error".to_string(), |e| e.to_string())));
    }
    let unbound = parse_expression("x1 + q").unwrap().compile(&Scope::new().signal(Signal::X, 1)).err();
    let ok = unbound.as_ref().is_some_and(|e| e.kind == DslErrorKind::UnknownIdentifier && e.offset == 5);
    errors_ok &= ok;
    error_lines.push(format!("`x1 + q` (compile) -> {}", unbound.map_or("no error".to_string(), |e| e.to_string())));

    let mut out = Outcome::new(
        mismatches.is_empty() && errors_ok,
        format!("200 expressions x 3 bindings, {finite} finite values, worst {worst} ulp; positioned errors ok: {errors_ok}"),
    );
    for m in mismatches.iter().take(5) {
        out = out.detail(m.clone());
    }
    for l in error_lines {
        out = out.detail(l);
    }
    out
}

fn criterion_10() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        r#"{"schema": 1,
            "model": {"name": "example1", "params": {"a1": 0.5, "a2": 1, "a3": 1, "b1": 1, "c1": 1}},
            "grids": {"varpi": {"min": 0.05, "max": 20, "count": 6}, "a_u": {"min": 0.05, "max": 5, "count": 6}}}"#,
    )
    .unwrap();
    let max = std::thread::available_parallelism().map_or(1, |n| n.get()).to_string();
    let mut outputs = Vec::new();
    for workers in ["1", "4", max.as_str()] {
        let out = dir.path().join(format!("w{workers}"));
        let status = Command::new(env!("CARGO_BIN_EXE_nlfreq"))
            .args(["sweep", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", workers])
            .output()
            .unwrap()
            .status;
        outputs.push((workers, status.code(), fs::read(out.join("sweep.csv")).unwrap_or_default()));
    }
    let identical = outputs.windows(2).all(|w| w[0].2 == w[1].2) && !outputs[0].2.is_empty();
    let codes: Vec<String> = outputs.iter().map(|(w, c, _)| format!("{w}:{}", c.unwrap_or(-1))).collect();
    Outcome::new(
        identical,
        format!(
            "workers {{1, 4, {max}}}: byte-identical sweep.csv ({} bytes) = {identical}; exit codes {}",
            outputs[0].2.len(),
            codes.join(" ")
        ),
    )
}

fn main() {
    // `cargo test` passes harness flags such as `--list`; this target has no sub-tests
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let names = [
        "LTI equivalence",
        "Sylvester oracle",
        "radius identities",
        "orthogonality",
        "dissipativity route equivalence",
        "example 1 phase flip",
        "multi-tone superposition",
        "loop shaping",
        "expression language",
        "determinism",
    ];
    let started = Instant::now();
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    let mut record = |id: u32, o: Outcome, seconds: f64| {
        report(id, names[id as usize - 1], &o, seconds);
        results.push((id, o));
    };
    let timed = |f: fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        (o, t.elapsed().as_secs_f64())
    };
    for (id, f) in [(1, criterion_1 as fn() -> Outcome), (2, criterion_2)] {
        let (o, s) = timed(f);
        record(id, o, s);
    }
    let t = Instant::now();
    let (c3, c4) = criteria_3_and_4();
    let shared = t.elapsed().as_secs_f64();
    record(3, c3, shared);
    record(4, c4, shared);
    for (id, f) in
        [(5, criterion_5 as fn() -> Outcome), (6, criterion_6), (7, criterion_7), (8, criterion_8), (9, criterion_9), (10, criterion_10)]
    {
        let (o, s) = timed(f);
        record(id, o, s);
    }
    let passed = results.iter().filter(|r| r.1.pass).count();
    let unexpected: Vec<u32> = results.iter().filter(|r| !r.1.pass && !KNOWN_DEVIATIONS.contains(&r.0)).map(|r| r.0).collect();
    let known: Vec<u32> = results.iter().filter(|r| !r.1.pass && KNOWN_DEVIATIONS.contains(&r.0)).map(|r| r.0).collect();
    println!(
        "{passed}/{} criteria passed in {:.1}s; known deviations failing: {known:?}; unexpected failures: {unexpected:?}",
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}

fn report(id: u32, name: &str, o: &Outcome, seconds: f64) {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    println!("{tag} {id:>2} {name}: {} [{seconds:.1}s]", o.summary);
    for d in &o.details {
        println!("        {d}");
    }
}
