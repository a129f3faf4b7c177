//! WebAssembly bindings for the browser demo. A [`Session`] holds one
//! plant/generator pair and answers three queries: a gain/phase slice over
//! frequency, the same over amplitude, and one period of steady-state waveform.
//!
//! Results are flat `f64` arrays so they cross into JavaScript as
//! `Float64Array` without serialization.

use std::collections::BTreeMap;

use nlfreq::analysis::{frequency_response, unwrap_phase};
use nlfreq::dsl::dsl_plant;
use nlfreq::model::{builtin_model, harmonic_generator, logspace, GeneratorModel, HarmonicStart, ParamPoint, PlantModel};
use nlfreq::ode::{settle_to_steady_state, IntegratorSettings};
use nlfreq::sweep::evaluate_response;
use wasm_bindgen::prelude::*;

/// Values per point in the slice arrays: axis value, α, unwrapped ϑ, r, status.
pub const SLICE_STRIDE: usize = 5;

pub const STATUS_OK: f64 = 0.0;
pub const STATUS_DEGENERATE: f64 = 1.0;
pub const STATUS_FAILED: f64 = 2.0;

/// Parses `"a1=0.5, a2=1"`; blank input gives no parameters.
pub fn parse_params(text: &str) -> Result<BTreeMap<String, f64>, String> {
    let mut out = BTreeMap::new();
    for item in text.split([',', '\n']).map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = item.split_once('=').ok_or_else(|| format!("expected name=value, got '{item}'"))?;
        let value: f64 = value.trim().parse().map_err(|_| format!("{}: not a number", key.trim()))?;
        out.insert(key.trim().to_string(), value);
    }
    Ok(out)
}

#[wasm_bindgen]
pub struct Session {
    plant: PlantModel,
    generator: GeneratorModel,
    settings: IntegratorSettings,
}

impl Session {
    pub fn from_builtin(name: &str, params: &str) -> Result<Self, String> {
        let params = parse_params(params)?;
        let (plant, generator) = builtin_model(name, &params).map_err(|e| e.to_string())?;
        Ok(Self::with(plant, generator))
    }

    /// Plant given by expressions, one `f` per line, driven by `a_u sin(ϖt)`.
    pub fn from_expressions(f: &str, h: &str, params: &str) -> Result<Self, String> {
        let lines = |s: &str| s.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect::<Vec<_>>();
        let (f, h) = (lines(f), lines(h));
        let params = parse_params(params)?;
        let plant = dsl_plant("custom", f.len(), 1, &f, &h, &params).map_err(|e| e.to_string())?;
        if plant.output_dim() != 1 {
            return Err("the demo plots a single output".into());
        }
        Ok(Self::with(plant, harmonic_generator(HarmonicStart::Sine)))
    }

    fn with(plant: PlantModel, generator: GeneratorModel) -> Self {
        // looser than the CLI defaults so a slice stays interactive
        let settings = IntegratorSettings {
            rtol: 1e-8,
            atol: 1e-10,
            samples_per_period: 256,
            settle_tol: 1e-6,
            max_periods: 400,
            ..Default::default()
        };
        Self { plant, generator, settings }
    }

    fn slice(&self, points: Vec<(f64, ParamPoint)>) -> Vec<f64> {
        let mut rows: Vec<[f64; SLICE_STRIDE]> = points
            .into_iter()
            .map(|(axis, w)| match evaluate_response(&self.plant, &self.generator, &w, &self.settings) {
                Ok(r) if r.sample.degenerate => [axis, r.sample.alpha, f64::NAN, f64::NAN, STATUS_DEGENERATE],
                Ok(r) => [axis, r.sample.alpha, r.sample.theta, r.sample.radius, STATUS_OK],
                Err(_) => [axis, f64::NAN, f64::NAN, f64::NAN, STATUS_FAILED],
            })
            .collect();
        let theta: Vec<f64> = rows.iter().map(|r| r[2]).collect();
        for (row, t) in rows.iter_mut().zip(unwrap_phase(&theta)) {
            row[2] = t;
        }
        rows.concat()
    }

    pub fn frequency_slice_values(&self, a_u: f64, varpi_min: f64, varpi_max: f64, count: usize) -> Result<Vec<f64>, String> {
        let axis = checked_axis(varpi_min, varpi_max, count)?;
        let points = axis.into_iter().map(|v| Ok((v, point(v, a_u)?))).collect::<Result<_, String>>()?;
        Ok(self.slice(points))
    }

    pub fn amplitude_slice_values(&self, varpi: f64, a_min: f64, a_max: f64, count: usize) -> Result<Vec<f64>, String> {
        let axis = checked_axis(a_min, a_max, count)?;
        let points = axis.into_iter().map(|a| Ok((a, point(varpi, a)?))).collect::<Result<_, String>>()?;
        Ok(self.slice(points))
    }

    /// `[α, ϑ, r]` followed by `(t, u, y)` triples over one settled period.
    pub fn waveform_values(&self, varpi: f64, a_u: f64) -> Result<Vec<f64>, String> {
        let w = point(varpi, a_u)?;
        let record = settle_to_steady_state(&self.plant, &self.generator, &w, &self.settings).map_err(|e| e.to_string())?;
        let sample = frequency_response(&record).map_err(|e| e.to_string())?;
        let mut out = vec![sample.alpha, sample.theta, sample.radius];
        for (k, &t) in record.times.iter().enumerate() {
            out.extend([t, record.input.sample(k)[0], record.output.sample(k)[0]]);
        }
        Ok(out)
    }
}

fn point(varpi: f64, a_u: f64) -> Result<ParamPoint, String> {
    ParamPoint::new(varpi, a_u).map_err(|e| e.to_string())
}

fn checked_axis(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>, String> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(format!("need 0 < min < max, got {lo} and {hi}"));
    }
    if !(2..=400).contains(&count) {
        return Err(format!("point count must be 2..400, got {count}"));
    }
    Ok(logspace(lo, hi, count))
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen]
impl Session {
    /// Built-in model by name, parameters as `"a1=0.5, a2=1"`.
    #[wasm_bindgen(constructor)]
    pub fn new(name: &str, params: &str) -> Result<Session, JsError> {
        Self::from_builtin(name, params).map_err(js)
    }

    #[wasm_bindgen(js_name = fromExpressions)]
    pub fn from_expressions_js(f: &str, h: &str, params: &str) -> Result<Session, JsError> {
        Self::from_expressions(f, h, params).map_err(js)
    }

    #[wasm_bindgen(js_name = frequencySlice)]
    pub fn frequency_slice(&self, a_u: f64, varpi_min: f64, varpi_max: f64, count: usize) -> Result<Vec<f64>, JsError> {
        self.frequency_slice_values(a_u, varpi_min, varpi_max, count).map_err(js)
    }

    #[wasm_bindgen(js_name = amplitudeSlice)]
    pub fn amplitude_slice(&self, varpi: f64, a_min: f64, a_max: f64, count: usize) -> Result<Vec<f64>, JsError> {
        self.amplitude_slice_values(varpi, a_min, a_max, count).map_err(js)
    }

    pub fn waveform(&self, varpi: f64, a_u: f64) -> Result<Vec<f64>, JsError> {
        self.waveform_values(varpi, a_u).map_err(js)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_parse() {
        let p = parse_params(" a1 = 0.5,\nb1=2 ").unwrap();
        assert_eq!(p["a1"], 0.5);
        assert_eq!(p["b1"], 2.0);
        assert!(parse_params("").unwrap().is_empty());
        assert!(parse_params("a1").is_err());
        assert!(parse_params("a1=x").is_err());
    }
}
