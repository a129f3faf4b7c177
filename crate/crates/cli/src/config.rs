//! Run configuration: JSON schema 1, unknown keys rejected. Semantic checks
//! report the JSON path of the offending value.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use nlfreq::dsl::{dsl_generator, dsl_plant, GeneratorSource};
use nlfreq::loopshape::{example5_controlled, ControlledPlant, Feedback};
use nlfreq::model::{
    builtin_model, cveticanin_generator, harmonic_generator, logspace, GeneratorModel, HarmonicStart, LtiRealization, ParamPoint,
    PlantModel, Range, SpecSet, SupplyRate, SweepGrid,
};
use nlfreq::multi::{MultiInputSpec, Tone};
use nlfreq::ode::{IntegratorSettings, Quadrature};

pub const SCHEMA_VERSION: u32 = 1;

/// Configuration problem, located by JSON path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(path: impl Into<String>, message: impl fmt::Display) -> ConfigError {
    ConfigError { path: path.into(), message: message.to_string() }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema: u32,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grids: Option<GridConfig>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supply: Option<SupplyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multi: Option<MultiConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<FeedbackConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SpecConfig>,
}

/// Exactly one of `name` (built-in), `dsl` or `realization`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dsl: Option<DslModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realization: Option<RealizationConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DslModelConfig {
    pub state_dim: usize,
    #[serde(default = "one")]
    pub input_dim: usize,
    /// When set, `f` may read `v1..v{control_dim}` and loop shaping uses it as `f_c`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_dim: Option<usize>,
    pub f: Vec<String>,
    pub h: Vec<String>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationConfig {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum StartConfig {
    Sine,
    Cosine,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorConfig {
    Harmonic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start: Option<StartConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi_u: Option<f64>,
    },
    Cveticanin {
        #[serde(default = "default_exponent")]
        exponent: f64,
    },
    Dsl {
        s: Vec<String>,
        ell: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ell_dot: Option<Vec<String>>,
        z0: Vec<String>,
        period: String,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        params: BTreeMap<String, f64>,
    },
}

fn default_exponent() -> f64 {
    30.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Either explicit value lists or log-spaced axes.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub varpi_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_u_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub varpi: Option<AxisConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_u: Option<AxisConfig>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureConfig {
    Trapezoid,
    Simpson,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_per_period: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settle_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub washout_periods: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_periods: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps_per_period: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_init: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SupplyConfig {
    L2Gain { gamma: f64 },
    Passivity,
    Counterclockwise,
    OutputStrict { gamma1: f64 },
    InputStrict { gamma2: f64 },
    VeryStrict { gamma1: f64, gamma2: f64 },
    Custom { expression: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightConfig {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToneConfig {
    pub varpi: f64,
    pub a_u: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_u: Option<f64>,
    #[serde(default = "unit_weight")]
    pub weight: WeightConfig,
}

fn unit_weight() -> WeightConfig {
    WeightConfig::Scalar(1.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiConfig {
    pub tones: Vec<ToneConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_denominator: Option<u64>,
}

/// Either a built-in `name` with gain `K`, or expressions `kappa` (and `f_p`
/// for dynamic feedback) over `x`, `xp`, `u`, `y` and `params`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub f_p: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    pub alpha: [f64; 2],
    pub theta: [f64; 2],
    pub radius: [f64; 2],
}

/// Reads and parses a config file; type errors carry their JSON path.
pub fn load(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| err("", format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Config, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: Config = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        err(path, e.into_inner())
    })?;
    if config.schema != SCHEMA_VERSION {
        return Err(err("schema", format!("unsupported schema version {}, expected {SCHEMA_VERSION}", config.schema)));
    }
    Ok(config)
}

fn core_err(path: &str, e: nlfreq::Error) -> ConfigError {
    err(path, e)
}

/// Plant, generator and (for LTI models) the exact realization.
pub struct System {
    pub plant: PlantModel,
    pub generator: GeneratorModel,
    pub realization: Option<LtiRealization>,
    pub controlled: Option<ControlledPlant>,
}

fn realization_of(m: &ModelConfig) -> Result<Option<LtiRealization>, ConfigError> {
    if let Some(r) = &m.realization {
        return LtiRealization::from_rows(&r.a, &r.b, &r.c).map(Some).map_err(|e| core_err("model.realization", e));
    }
    if m.name.as_deref() == Some("lti") {
        let get = |k: &str, d: Option<f64>| m.params.get(k).copied().or(d).ok_or_else(|| err(format!("model.params.{k}"), "missing"));
        return LtiRealization::first_order(get("a1", None)?, get("b1", Some(1.0))?, get("c1", Some(1.0))?)
            .map(Some)
            .map_err(|e| core_err("model.params", e));
    }
    Ok(None)
}

impl Config {
    pub fn system(&self) -> Result<System, ConfigError> {
        let m = &self.model;
        let chosen = [m.name.is_some(), m.dsl.is_some(), m.realization.is_some()].iter().filter(|&&b| b).count();
        if chosen != 1 {
            return Err(err("model", "set exactly one of `name`, `dsl`, `realization`"));
        }
        let realization = realization_of(m)?;
        let mut controlled = None;
        let (plant, default_generator) = if let Some(name) = &m.name {
            let (p, g) = builtin_model(name, &m.params).map_err(|e| core_err("model", e))?;
            (p, Some(g))
        } else if let Some(d) = &m.dsl {
            if let Some(cd) = d.control_dim {
                let c = ControlledPlant::from_dsl("dsl", d.state_dim, d.input_dim, cd, &d.f, &d.h, &m.params)
                    .map_err(|e| core_err("model.dsl", e))?;
                let open = c.open_loop().clone();
                controlled = Some(c);
                (open, None)
            } else {
                (dsl_plant("dsl", d.state_dim, d.input_dim, &d.f, &d.h, &m.params).map_err(|e| core_err("model.dsl", e))?, None)
            }
        } else {
            let r = realization.as_ref().expect("checked above");
            (PlantModel::from_realization(r), None)
        };
        let generator = match (&self.generator, default_generator) {
            (Some(g), _) => self.build_generator(g)?,
            (None, Some(g)) => g,
            (None, None) => harmonic_generator(HarmonicStart::Sine),
        };
        if generator.input_dim() != plant.input_dim() {
            return Err(err("generator", format!("produces {} input(s), plant takes {}", generator.input_dim(), plant.input_dim())));
        }
        Ok(System { plant, generator, realization, controlled })
    }

    fn build_generator(&self, g: &GeneratorConfig) -> Result<GeneratorModel, ConfigError> {
        Ok(match g {
            GeneratorConfig::Harmonic { start, phi_u } => match (start, phi_u) {
                (_, Some(phi)) if !phi.is_finite() => return Err(err("generator.phi_u", "must be finite")),
                (Some(_), Some(_)) => return Err(err("generator", "set either `start` or `phi_u`")),
                (_, Some(phi)) => harmonic_generator(HarmonicStart::Phase(*phi)),
                (Some(StartConfig::Cosine), None) => harmonic_generator(HarmonicStart::Cosine),
                (Some(StartConfig::Sine) | None, None) => harmonic_generator(HarmonicStart::Sine),
            },
            GeneratorConfig::Cveticanin { exponent } => cveticanin_generator(*exponent).map_err(|e| core_err("generator.exponent", e))?,
            GeneratorConfig::Dsl { s, ell, ell_dot, z0, period, params } => {
                let source =
                    GeneratorSource { s: s.clone(), ell: ell.clone(), ell_dot: ell_dot.clone(), z0: z0.clone(), period: period.clone() };
                dsl_generator("dsl", &source, params).map_err(|e| core_err("generator", e))?
            }
        })
    }

    pub fn grid(&self) -> Result<SweepGrid, ConfigError> {
        let g = self.grids.as_ref().ok_or_else(|| err("grids", "required for this subcommand"))?;
        let varpi = axis("grids", "varpi", &g.varpi_values, &g.varpi)?;
        let a_u = axis("grids", "a_u", &g.a_u_values, &g.a_u)?;
        SweepGrid::new(varpi, a_u).map_err(|e| core_err("grids", e))
    }

    pub fn settings(&self) -> Result<IntegratorSettings, ConfigError> {
        let c = &self.integrator;
        let d = IntegratorSettings::default();
        let settings = IntegratorSettings {
            rtol: c.rtol.unwrap_or(d.rtol),
            atol: c.atol.unwrap_or(d.atol),
            samples_per_period: c.samples_per_period.unwrap_or(d.samples_per_period),
            settle_tol: c.settle_tol.unwrap_or(d.settle_tol),
            washout_periods: c.washout_periods.unwrap_or(d.washout_periods),
            max_periods: c.max_periods.unwrap_or(d.max_periods),
            max_steps_per_period: c.max_steps_per_period.unwrap_or(d.max_steps_per_period),
            x_init: c.x_init.clone(),
            quadrature: match c.quadrature {
                Some(QuadratureConfig::Simpson) => Quadrature::Simpson,
                _ => Quadrature::Trapezoid,
            },
        };
        settings.validate().map_err(|e| match e {
            nlfreq::Error::InvalidParameter { name, reason } => err(format!("integrator.{name}"), reason),
            other => core_err("integrator", other),
        })?;
        Ok(settings)
    }

    pub fn supply(&self) -> Result<SupplyRate, ConfigError> {
        let s = self.supply.as_ref().ok_or_else(|| err("supply", "required for this subcommand"))?;
        let rate = match s {
            SupplyConfig::L2Gain { gamma } => SupplyRate::L2Gain { gamma: *gamma },
            SupplyConfig::Passivity => SupplyRate::Passivity,
            SupplyConfig::Counterclockwise => SupplyRate::Counterclockwise,
            SupplyConfig::OutputStrict { gamma1 } => SupplyRate::OutputStrict { gamma1: *gamma1 },
            SupplyConfig::InputStrict { gamma2 } => SupplyRate::InputStrict { gamma2: *gamma2 },
            SupplyConfig::VeryStrict { gamma1, gamma2 } => SupplyRate::VeryStrict { gamma1: *gamma1, gamma2: *gamma2 },
            SupplyConfig::Custom { expression } => {
                SupplyRate::Custom(nlfreq::dsl::parse_expression(expression).map_err(|e| err("supply.expression", e))?)
            }
        };
        rate.validate().map_err(|e| match e {
            nlfreq::Error::InvalidParameter { name, reason } => err(format!("supply.{name}"), reason),
            other => core_err("supply", other),
        })?;
        Ok(rate)
    }

    pub fn multi(&self, input_dim: usize) -> Result<MultiInputSpec, ConfigError> {
        let m = self.multi.as_ref().ok_or_else(|| err("multi", "required for this subcommand"))?;
        if m.tones.is_empty() {
            return Err(err("multi.tones", "need at least one tone"));
        }
        let mut tones = Vec::with_capacity(m.tones.len());
        for (i, t) in m.tones.iter().enumerate() {
            let path = format!("multi.tones[{i}]");
            let mut omega = point(&path, t.varpi, t.a_u)?;
            if let Some(phi) = t.phi_u {
                omega = omega.with_phase(phi).map_err(|e| core_err(&format!("{path}.phi_u"), e))?;
            }
            let weight = match &t.weight {
                WeightConfig::Scalar(w) => DMatrix::identity(input_dim, input_dim) * *w,
                WeightConfig::Matrix(rows) => {
                    if rows.len() != input_dim || rows.iter().any(|r| r.len() != input_dim) {
                        return Err(err(format!("{path}.weight"), format!("must be {input_dim}x{input_dim}")));
                    }
                    DMatrix::from_fn(input_dim, input_dim, |r, c| rows[r][c])
                }
            };
            if weight.iter().any(|v| !v.is_finite()) {
                return Err(err(format!("{path}.weight"), "must be finite"));
            }
            tones.push(Tone { omega, weight });
        }
        if tones.iter().all(|t| t.weight.iter().all(|&v| v == 0.0)) {
            return Err(err("multi.tones", "all weights are zero, so the input vanishes"));
        }
        let mut spec = MultiInputSpec::new(tones).map_err(|e| core_err("multi", e))?;
        if let Some(q) = m.max_denominator {
            if q == 0 {
                return Err(err("multi.max_denominator", "must be at least 1"));
            }
            spec = spec.with_max_denominator(q);
        }
        Ok(spec)
    }

    /// Controlled plant and feedback for loop shaping.
    pub fn feedback(&self, system: &System) -> Result<(ControlledPlant, Feedback), ConfigError> {
        let f = self.feedback.as_ref().ok_or_else(|| err("feedback", "required for this subcommand"))?;
        let controlled = match (&system.controlled, self.model.name.as_deref()) {
            (Some(c), _) => c.clone(),
            (None, Some("example5_plant")) => example5_controlled(),
            (None, _) => ControlledPlant::additive(system.plant.clone()),
        };
        let feedback = match (&f.name, &f.kappa) {
            (Some(name), None) => {
                if !f.f_p.is_empty() || !f.params.is_empty() {
                    return Err(err("feedback", "`f_p` and `params` only apply to expression feedback"));
                }
                let k = f.k.ok_or_else(|| err("feedback.K", "missing gain for built-in feedback"))?;
                Feedback::builtin(name, k).map_err(|e| core_err("feedback", e))?
            }
            (None, Some(kappa)) => {
                let mut params = f.params.clone();
                if let Some(k) = f.k {
                    params.insert("K".into(), k);
                }
                let open = controlled.open_loop();
                Feedback::from_dsl(kappa, &f.f_p, open.state_dim(), open.input_dim(), open.output_dim(), &params)
                    .map_err(|e| core_err("feedback", e))?
            }
            _ => return Err(err("feedback", "set exactly one of `name` and `kappa`")),
        };
        if feedback.control_dim() != controlled.control_dim() {
            return Err(err(
                "feedback",
                format!("produces {} control input(s), plant takes {}", feedback.control_dim(), controlled.control_dim()),
            ));
        }
        Ok((controlled, feedback))
    }

    pub fn spec_set(&self) -> Result<Option<SpecSet>, ConfigError> {
        let Some(s) = &self.spec else { return Ok(None) };
        SpecSet::new(Range::new(s.alpha[0], s.alpha[1]), Range::new(s.theta[0], s.theta[1]), Range::new(s.radius[0], s.radius[1]))
            .map(Some)
            .map_err(|e| match e {
                nlfreq::Error::InvalidParameter { name, reason } => err(format!("spec.{}", name.trim_end_matches("_range")), reason),
                other => core_err("spec", other),
            })
    }
}

fn point(path: &str, varpi: f64, a_u: f64) -> Result<ParamPoint, ConfigError> {
    if !(varpi.is_finite() && varpi > 0.0) {
        return Err(err(format!("{path}.varpi"), format!("must be finite and > 0, got {varpi}")));
    }
    if !(a_u.is_finite() && a_u > 0.0) {
        return Err(err(format!("{path}.a_u"), format!("must be finite and > 0, got {a_u}")));
    }
    Ok(ParamPoint { varpi, a_u, phi_u: None })
}

fn axis(prefix: &str, name: &str, values: &Option<Vec<f64>>, spaced: &Option<AxisConfig>) -> Result<Vec<f64>, ConfigError> {
    match (values, spaced) {
        (Some(v), None) => {
            if v.is_empty() {
                return Err(err(format!("{prefix}.{name}_values"), "must be nonempty"));
            }
            for (i, x) in v.iter().enumerate() {
                if !(x.is_finite() && *x > 0.0) {
                    return Err(err(format!("{prefix}.{name}_values[{i}]"), format!("must be finite and > 0, got {x}")));
                }
            }
            if let Some(i) = v.windows(2).position(|w| w[1] <= w[0]) {
                return Err(err(format!("{prefix}.{name}_values[{}]", i + 1), "values must be strictly increasing"));
            }
            Ok(v.clone())
        }
        (None, Some(a)) => {
            let path = format!("{prefix}.{name}");
            if !(a.min.is_finite() && a.min > 0.0) {
                return Err(err(format!("{path}.min"), format!("must be finite and > 0, got {}", a.min)));
            }
            if !(a.max.is_finite() && a.max >= a.min) {
                return Err(err(format!("{path}.max"), format!("must be finite and ≥ min, got {}", a.max)));
            }
            if a.count == 0 || (a.count > 1 && a.max == a.min) {
                return Err(err(format!("{path}.count"), "need count ≥ 1, and min < max when count > 1"));
            }
            Ok(logspace(a.min, a.max, a.count))
        }
        (Some(_), Some(_)) => Err(err(format!("{prefix}.{name}"), format!("set either `{name}` or `{name}_values`, not both"))),
        (None, None) => Err(err(format!("{prefix}.{name}_values"), "missing")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(extra: &str) -> String {
        format!(r#"{{"schema": 1, "model": {{"name": "lti", "params": {{"a1": 0.5}}}}{extra}}}"#)
    }

    #[test]
    fn negative_amplitude_has_path() {
        let c = parse(&base(r#", "grids": {"varpi_values": [1.0], "a_u_values": [-1.0]}"#)).unwrap();
        let e = c.grid().unwrap_err();
        assert_eq!(e.path, "grids.a_u_values[0]");
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = parse(&base(r#", "grids": {"varpi_values": [1.0], "a_u_values": [1.0], "bogus": 1}"#)).unwrap_err();
        assert_eq!(e.path, "grids.bogus");
        assert!(e.message.contains("bogus"));
        let e = parse(&base(r#", "extra": 3"#)).unwrap_err();
        assert!(e.message.contains("extra"));
        let e = parse(&base(r#", "supply": {"kind": "l2_gain", "gamma": 1, "delta": 2}"#)).unwrap_err();
        assert!(e.message.contains("delta"), "{e}");
    }

    #[test]
    fn type_errors_have_path() {
        let e = parse(&base(r#", "grids": {"varpi_values": [1.0, "x"], "a_u_values": [1.0]}"#)).unwrap_err();
        assert_eq!(e.path, "grids.varpi_values[1]");
        let e = parse(r#"{"schema": 2, "model": {"name": "lti"}}"#).unwrap_err();
        assert_eq!(e.path, "schema");
    }

    #[test]
    fn builds_everything() {
        let c = parse(&base(
            r#", "grids": {"varpi": {"min": 0.01, "max": 100, "count": 5}, "a_u_values": [1]},
                 "supply": {"kind": "very_strict", "gamma1": 0.25, "gamma2": 0.25},
                 "multi": {"tones": [{"varpi": 1, "a_u": 0.5}, {"varpi": 2.5, "a_u": 0.5, "weight": [[2.0]]}]},
                 "integrator": {"samples_per_period": 256, "quadrature": "simpson"},
                 "spec": {"alpha": [0, 1], "theta": [-3, 3], "radius": [0.5, 1]}"#,
        ))
        .unwrap();
        let sys = c.system().unwrap();
        assert!(sys.realization.is_some());
        assert_eq!(c.grid().unwrap().varpi_values.len(), 5);
        assert_eq!(c.supply().unwrap(), SupplyRate::VeryStrict { gamma1: 0.25, gamma2: 0.25 });
        assert_eq!(c.multi(1).unwrap().tones[1].weight[(0, 0)], 2.0);
        assert_eq!(c.settings().unwrap().quadrature, Quadrature::Simpson);
        assert!(c.spec_set().unwrap().is_some());
    }

    #[test]
    fn semantic_paths() {
        let c = parse(&base(r#", "integrator": {"rtol": -1}"#)).unwrap();
        assert_eq!(c.settings().unwrap_err().path, "integrator.rtol");
        let c = parse(&base(r#", "supply": {"kind": "l2_gain", "gamma": 0}"#)).unwrap();
        assert_eq!(c.supply().unwrap_err().path, "supply.gamma");
        let c = parse(&base(r#", "multi": {"tones": [{"varpi": 1, "a_u": 0}]}"#)).unwrap();
        assert_eq!(c.multi(1).unwrap_err().path, "multi.tones[0].a_u");
        let c = parse(r#"{"schema": 1, "model": {"name": "nope"}}"#).unwrap();
        assert_eq!(c.system().err().unwrap().path, "model");
        let c = parse(&base(r#", "spec": {"alpha": [0, 1], "theta": [-3, 3], "radius": [0, 1]}"#)).unwrap();
        assert_eq!(c.spec_set().unwrap_err().path, "spec.radius");
    }

    #[test]
    fn feedback_forms() {
        let c = parse(r#"{"schema": 1, "model": {"name": "example5_plant"}, "feedback": {"name": "example5_state", "K": 10}}"#).unwrap();
        let sys = c.system().unwrap();
        assert!(c.feedback(&sys).is_ok());
        let c = parse(r#"{"schema": 1, "model": {"name": "example5_plant"}, "feedback": {"kappa": ["-K*y1", "0"], "K": 10}}"#).unwrap();
        assert!(c.feedback(&c.system().unwrap()).is_ok());
        let c = parse(r#"{"schema": 1, "model": {"name": "example5_plant"}, "feedback": {"kappa": ["-K*y1"], "K": 10}}"#).unwrap();
        assert_eq!(c.feedback(&c.system().unwrap()).err().unwrap().path, "feedback");
    }

    #[test]
    fn shipped_configs_build() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let mut seen = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            let c = load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            let sys = c.system().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            c.settings().unwrap();
            if c.grids.is_some() {
                c.grid().unwrap();
            }
            if c.feedback.is_some() {
                c.feedback(&sys).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
                c.spec_set().unwrap();
            }
            if c.multi.is_some() {
                c.multi(sys.plant.input_dim()).unwrap();
            }
            if c.supply.is_some() {
                c.supply().unwrap();
            }
            seen += 1;
        }
        assert!(seen >= 5);
    }
}
