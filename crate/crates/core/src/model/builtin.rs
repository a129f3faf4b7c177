//! Built-in plants and generators.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::{cveticanin_k_alpha, invalid, GeneratorModel, LtiRealization, PlantModel};
use crate::{Error, Result};

/// Initial condition convention of the harmonic oscillator `ż₁ = ϖz₂, ż₂ = −ϖz₁, u = z₁`.
///
/// A `phi_u` carried by the parameter point always takes precedence and
/// yields `z0 = (a_u sin φ, a_u cos φ)`, i.e. `u = a_u sin(ϖt + φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HarmonicStart {
    /// `z0 = (a_u, 0)`: `u = a_u cos(ϖt)`.
    Cosine,
    /// `z0 = (0, a_u)`: `u = a_u sin(ϖt)`.
    Sine,
    /// `z0 = (a_u sin φ, a_u cos φ)`.
    Phase(f64),
}

pub fn harmonic_generator(start: HarmonicStart) -> GeneratorModel {
    GeneratorModel::new(
        "harmonic",
        2,
        1,
        |w, z, dz| {
            dz[0] = w.varpi * z[1];
            dz[1] = -w.varpi * z[0];
        },
        |_, z, u| u[0] = z[0],
        move |w| {
            let phase = match (w.phi_u, start) {
                (Some(phi), _) | (None, HarmonicStart::Phase(phi)) => phi,
                (None, HarmonicStart::Cosine) => return vec![w.a_u, 0.0],
                (None, HarmonicStart::Sine) => return vec![0.0, w.a_u],
            };
            vec![w.a_u * phase.sin(), w.a_u * phase.cos()]
        },
        |w| 2.0 * PI / w.varpi,
    )
    .with_ell_dot(|w, z, du| du[0] = w.varpi * z[1])
}

/// Nonsmooth oscillator `z̈ = −(ϖk_α/2π)² z |z/a_u|^{α−1}` with `z0 = (a_u, 0)`.
/// Its period is `2π/ϖ` for every amplitude.
pub fn cveticanin_generator(exponent: f64) -> Result<GeneratorModel> {
    let k = cveticanin_k_alpha(exponent)?;
    Ok(GeneratorModel::new(
        "cveticanin",
        2,
        1,
        move |w, z, dz| {
            let c = w.varpi * k / (2.0 * PI);
            dz[0] = z[1];
            dz[1] = -c * c * z[0] * (z[0] / w.a_u).abs().powf(exponent - 1.0);
        },
        |_, z, u| u[0] = z[0],
        |w| vec![w.a_u, 0.0],
        |w| 2.0 * PI / w.varpi,
    )
    .with_ell_dot(|_, z, du| du[0] = z[1]))
}

struct Params<'a> {
    model: &'a str,
    map: &'a BTreeMap<String, f64>,
}

impl Params<'_> {
    fn known(&self, names: &[&str]) -> Result<()> {
        for key in self.map.keys() {
            if !names.contains(&key.as_str()) {
                return Err(invalid(key, format!("not a parameter of `{}`", self.model)));
            }
        }
        Ok(())
    }

    fn get(&self, name: &str) -> Result<f64> {
        let v = *self.map.get(name).ok_or_else(|| Error::MissingParameter(name.to_string()))?;
        if !v.is_finite() {
            return Err(invalid(name, "must be finite"));
        }
        Ok(v)
    }

    fn positive(&self, name: &str) -> Result<f64> {
        let v = self.get(name)?;
        if v <= 0.0 {
            return Err(invalid(name, format!("must be > 0, got {v}")));
        }
        Ok(v)
    }

    fn optional(&self, name: &str, default: f64) -> Result<f64> {
        if self.map.contains_key(name) {
            self.get(name)
        } else {
            Ok(default)
        }
    }
}

/// Equilibrium `(x₁*, x₂*)` of the gene regulatory model at constant input `ū`.
pub fn gene_regulatory_equilibrium(gamma: f64, k_on: f64, k_off: f64, p_tot: f64, u_bar: f64, k: f64, k_u: f64) -> Result<(f64, f64)> {
    let denom = gamma * (k_u + u_bar) - u_bar;
    if denom <= 0.0 {
        return Err(invalid("gamma", "γ(K_u + ū) − ū must be positive for a positive equilibrium"));
    }
    let x1 = k * u_bar / denom;
    let x2 = k_on * p_tot * x1 / (k_off + k_on * x1);
    Ok((x1, x2))
}

/// Looks up a built-in plant together with the generator it is analysed with.
///
/// | name | plant | generator |
/// |------|-------|-----------|
/// | `example1` | quadratic 2-state system (`a1 a2 a3 b1 c1`) | harmonic, cosine start |
/// | `lti` | `c1·b1/(s + a1)` (`a1`; `b1`, `c1` default 1) | harmonic, sine start |
/// | `cveticanin_gen` | nonsmooth plant with `|sin x₁|` | nonsmooth oscillator (`exponent`, default 30) |
/// | `gene_regulatory` | promoter-binding model shifted to its equilibrium | harmonic, sine start, `a_u < ū` |
/// | `example5_plant` | open-loop plant of the loop-shaping example | harmonic, sine start |
/// | `harmonic_gen` | passthrough `y = u` | harmonic (`phi_u`, default 0) |
pub fn builtin_model(name: &str, params: &BTreeMap<String, f64>) -> Result<(PlantModel, GeneratorModel)> {
    let p = Params { model: name, map: params };
    match name {
        "example1" => {
            p.known(&["a1", "a2", "a3", "b1", "c1"])?;
            let a1 = p.positive("a1")?;
            let a2 = p.get("a2")?;
            let a3 = p.positive("a3")?;
            let b1 = p.get("b1")?;
            let c1 = p.get("c1")?;
            let plant = PlantModel::new(
                "example1",
                2,
                1,
                1,
                move |x, u, dx| {
                    dx[0] = -a1 * x[0] + u[0];
                    dx[1] = -a2 * x[0] * x[0] - a3 * x[1] + b1 * x[0] * u[0];
                },
                move |x, _, y| y[0] = x[0] + c1 * x[0] * x[1],
            );
            Ok((plant, harmonic_generator(HarmonicStart::Cosine)))
        }
        "lti" => {
            p.known(&["a1", "b1", "c1"])?;
            let a1 = p.positive("a1")?;
            let b1 = p.optional("b1", 1.0)?;
            let c1 = p.optional("c1", 1.0)?;
            let lti = LtiRealization::first_order(a1, b1, c1)?;
            Ok((PlantModel::from_realization(&lti), harmonic_generator(HarmonicStart::Sine)))
        }
        "cveticanin_gen" => {
            p.known(&["exponent"])?;
            let exponent = p.optional("exponent", 30.0)?;
            let plant = PlantModel::new(
                "cveticanin_plant",
                2,
                1,
                1,
                |x, u, dx| {
                    dx[0] = -0.1 * x[0] + u[0];
                    dx[1] = -10.0 * x[0].sin().abs() - 3.0 * x[1] + 2.0 * x[0];
                },
                |x, _, y| y[0] = 5.0 * x[0] + 3.0 * x[0] * x[1],
            )
            .nonsmooth();
            Ok((plant, cveticanin_generator(exponent)?))
        }
        "gene_regulatory" => {
            p.known(&["gamma", "k_on", "k_off", "p_tot", "u_bar", "K", "K_u"])?;
            let gamma = p.positive("gamma")?;
            let k_on = p.positive("k_on")?;
            let k_off = p.positive("k_off")?;
            let p_tot = p.positive("p_tot")?;
            let u_bar = p.positive("u_bar")?;
            let k = p.positive("K")?;
            let k_u = p.positive("K_u")?;
            let (x1s, x2s) = gene_regulatory_equilibrium(gamma, k_on, k_off, p_tot, u_bar, k, k_u)?;
            let raw = move |x1: f64, x2: f64, u: f64| {
                let w = k_off * x2 - k_on * (p_tot - x2) * x1;
                let d1 = w - gamma * x1 / (k + x1) + u / (k_u + u);
                (d1, -w)
            };
            // rounding residue of the closed-form equilibrium; subtracting it
            // pins f(0, 0) = 0 exactly
            let bias = raw(x1s, x2s, u_bar);
            let plant = PlantModel::new(
                "gene_regulatory",
                2,
                1,
                1,
                move |x, u, dx| {
                    let (d1, d2) = raw(x[0] + x1s, x[1] + x2s, u_bar + u[0]);
                    dx[0] = d1 - bias.0;
                    dx[1] = d2 - bias.1;
                },
                |x, _, y| y[0] = x[0],
            );
            Ok((plant, harmonic_generator(HarmonicStart::Sine).with_amplitude_limit(u_bar)))
        }
        "example5_plant" => {
            p.known(&[])?;
            let plant = PlantModel::new(
                "example5_plant",
                2,
                1,
                1,
                |x, u, dx| {
                    dx[0] = x[0] + u[0];
                    dx[1] = -x[1] + x[0] * u[0];
                },
                |x, _, y| y[0] = x[0] + (x[0] + x[1]).tanh(),
            );
            Ok((plant, harmonic_generator(HarmonicStart::Sine)))
        }
        "harmonic_gen" => {
            p.known(&["phi_u"])?;
            let phi = p.optional("phi_u", 0.0)?;
            Ok((PlantModel::passthrough(1), harmonic_generator(HarmonicStart::Phase(phi))))
        }
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ParamPoint;

    fn point(varpi: f64, a_u: f64) -> ParamPoint {
        ParamPoint { varpi, a_u, phi_u: None }
    }

    fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn gene_params() -> BTreeMap<String, f64> {
        params(&[("gamma", 5.0), ("k_on", 1.0), ("k_off", 0.5), ("p_tot", 20.0), ("u_bar", 100.5), ("K", 0.05), ("K_u", 0.1)])
    }

    #[test]
    fn example1_matches_equations() {
        let (plant, gen) = builtin_model("example1", &params(&[("a1", 0.5), ("a2", 1.0), ("a3", 1.0), ("b1", 1.0), ("c1", 1.0)])).unwrap();
        let mut dx = [0.0; 2];
        plant.dynamics(&[2.0, -1.0], &[0.5], &mut dx);
        assert_eq!(dx, [-0.5 * 2.0 + 0.5, -4.0 + 1.0 + 2.0 * 0.5]);
        assert_eq!(plant.output_vec(&[2.0, -1.0], &[0.5]), vec![2.0 - 2.0]);
        assert_eq!(gen.initial_state(&point(1.0, 0.7)), vec![0.7, 0.0]);
    }

    #[test]
    fn example1_linear_baseline() {
        let (plant, _) = builtin_model("example1", &params(&[("a1", 0.5), ("a2", 0.0), ("a3", 1.0), ("b1", 0.0), ("c1", 0.0)])).unwrap();
        // superposition holds exactly for a linear map
        let (xa, xb, ua, ub) = ([0.3, -1.2], [1.1, 0.4], [0.2], [-0.7]);
        let mut fa = [0.0; 2];
        let mut fb = [0.0; 2];
        let mut fs = [0.0; 2];
        plant.dynamics(&xa, &ua, &mut fa);
        plant.dynamics(&xb, &ub, &mut fb);
        plant.dynamics(&[xa[0] + xb[0], xa[1] + xb[1]], &[ua[0] + ub[0]], &mut fs);
        for i in 0..2 {
            assert!((fs[i] - fa[i] - fb[i]).abs() < 1e-15);
        }
        assert_eq!(plant.output_vec(&[0.3, 5.0], &[0.0]), vec![0.3]);
    }

    #[test]
    fn gene_regulatory_equilibrium_closed_form() {
        let (x1, x2) = gene_regulatory_equilibrium(5.0, 1.0, 0.5, 20.0, 100.5, 0.05, 0.1).unwrap();
        // x1* = Kū/(γ(K_u+ū) − ū) = 5.025/402.5
        assert!((x1 - 0.012_484_472_049_689_441).abs() < 1e-17);
        assert!((x2 - 0.487_213_671_070_173_3).abs() < 1e-15);
        assert!((x1 - 0.012485).abs() < 1e-6);
    }

    #[test]
    fn gene_regulatory_origin_is_equilibrium() {
        let (plant, gen) = builtin_model("gene_regulatory", &gene_params()).unwrap();
        let mut dx = [1.0; 2];
        plant.dynamics(&[0.0, 0.0], &[0.0], &mut dx);
        assert_eq!(dx, [0.0, 0.0]);
        assert!(gen.check(&point(1.0, 100.0)).is_ok());
        assert!(gen.check(&point(1.0, 100.5)).is_err());
    }

    #[test]
    fn gene_regulatory_rejects_bad_rates() {
        let mut p = gene_params();
        p.insert("k_on".into(), 0.0);
        assert!(matches!(builtin_model("gene_regulatory", &p), Err(Error::InvalidParameter { .. })));
        let mut p = gene_params();
        p.remove("K_u");
        assert_eq!(builtin_model("gene_regulatory", &p).unwrap_err(), Error::MissingParameter("K_u".into()));
    }

    #[test]
    fn unknown_names_and_keys() {
        assert_eq!(builtin_model("nope", &BTreeMap::new()).unwrap_err(), Error::UnknownModel("nope".into()));
        assert!(builtin_model("lti", &params(&[("a1", 0.5), ("zeta", 1.0)])).is_err());
        assert!(builtin_model("lti", &BTreeMap::new()).is_err());
    }

    #[test]
    fn harmonic_start_conventions() {
        let w = point(2.0, 3.0);
        assert_eq!(harmonic_generator(HarmonicStart::Cosine).initial_state(&w), vec![3.0, 0.0]);
        assert_eq!(harmonic_generator(HarmonicStart::Sine).initial_state(&w), vec![0.0, 3.0]);
        let z = harmonic_generator(HarmonicStart::Sine).initial_state(&w.with_phase(PI / 6.0).unwrap());
        assert!((z[0] - 1.5).abs() < 1e-15);
        assert!((z[1] - 3.0 * (PI / 6.0).cos()).abs() < 1e-15);
    }

    #[test]
    fn example5_and_cveticanin_shapes() {
        let (plant, gen) = builtin_model("example5_plant", &BTreeMap::new()).unwrap();
        assert_eq!(gen.initial_state(&point(1.0, 2.0)), vec![0.0, 2.0]);
        assert_eq!(plant.output_vec(&[0.0, 0.0], &[0.0]), vec![0.0]);
        let (plant, gen) = builtin_model("cveticanin_gen", &BTreeMap::new()).unwrap();
        assert!(!plant.is_differentiable());
        assert_eq!(gen.initial_state(&point(1.0, 2.0)), vec![2.0, 0.0]);
        assert!(builtin_model("cveticanin_gen", &params(&[("exponent", 0.0)])).is_err());
    }
}
