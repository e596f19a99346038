//! JSON run configurations. Command-line flags are merged over the file
//! contents before the document is deserialized, so both paths share the
//! same validation.

use std::path::{Path, PathBuf};

use magnetic_core::{IntegratorConfig, InverseCase, Sign, SpaceSignature};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::failure::{Failure, Outcome};

/// A config document under construction.
#[derive(Debug, Clone, Default)]
pub struct Document(Map<String, Value>);

impl Document {
    pub fn load(path: Option<&Path>) -> Outcome<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::invalid(format!("cannot read config {}: {e}", path.display())))?;
        match serde_json::from_str(&text)? {
            Value::Object(map) => Ok(Self(map)),
            _ => Err(Failure::invalid("config must be a JSON object")),
        }
    }

    pub fn set<T: Serialize>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.0.insert(key.to_string(), serde_json::to_value(v).expect("serializable flag"));
        }
    }

    /// Sets `outer.key`, creating the nested object when needed.
    pub fn set_nested<T: Serialize>(&mut self, outer: &str, key: &str, value: Option<T>) -> Outcome {
        let Some(v) = value else { return Ok(()) };
        let slot = self.0.entry(outer.to_string()).or_insert_with(|| Value::Object(Map::new()));
        match slot {
            Value::Object(map) => {
                map.insert(key.to_string(), serde_json::to_value(v).expect("serializable flag"));
                Ok(())
            }
            _ => Err(Failure::invalid(format!("config field {outer:?} must be an object"))),
        }
    }

    /// Angle flags replace any angle fields from the file.
    pub fn set_angles(&mut self, flags: &AngleFlags) {
        if flags.any() {
            for key in ANGLE_KEYS {
                self.0.remove(key);
            }
        }
        self.set("cos_theta", flags.cos_theta);
        self.set("theta", flags.theta);
        self.set("cosines", flags.cosines.clone());
        self.set("thetas", flags.thetas.clone());
    }

    pub fn parse<T: DeserializeOwned>(self, known: &[&str]) -> Outcome<T> {
        if let Some(key) = self.0.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Failure::invalid(format!(
                "unknown config field {key:?}; expected one of {}",
                known.join(", ")
            )));
        }
        Ok(serde_json::from_value(Value::Object(self.0))?)
    }
}

pub const ANGLE_KEYS: [&str; 4] = ["cos_theta", "theta", "cosines", "thetas"];

#[derive(Debug, Clone, Default)]
pub struct AngleFlags {
    pub cos_theta: Option<f64>,
    pub theta: Option<f64>,
    pub cosines: Option<Vec<f64>>,
    pub thetas: Option<Vec<f64>>,
}

impl AngleFlags {
    fn any(&self) -> bool {
        self.cos_theta.is_some() || self.theta.is_some() || self.cosines.is_some() || self.thetas.is_some()
    }
}

/// Contact angles given either as cosines or as radians, one value shared by
/// all Reeb directions or one per direction.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct Angles {
    pub cos_theta: Option<f64>,
    pub theta: Option<f64>,
    pub cosines: Option<Vec<f64>>,
    pub thetas: Option<Vec<f64>>,
}

impl Angles {
    /// Per-direction cosines for `s` Reeb fields.
    pub fn resolve(&self, s: usize) -> Outcome<Vec<f64>> {
        let given = [
            self.cos_theta.is_some(),
            self.theta.is_some(),
            self.cosines.is_some(),
            self.thetas.is_some(),
        ];
        if given.iter().filter(|g| **g).count() != 1 {
            return Err(Failure::invalid(
                "give exactly one of cos_theta, theta, cosines or thetas",
            ));
        }
        let cosines = if let Some(c) = self.cos_theta {
            vec![c; s]
        } else if let Some(t) = self.theta {
            vec![t.cos(); s]
        } else if let Some(c) = &self.cosines {
            c.clone()
        } else {
            self.thetas.as_ref().expect("one field is set").iter().map(|t| t.cos()).collect()
        };
        if cosines.len() != s {
            return Err(Failure::invalid(format!(
                "expected {s} contact angles, got {}",
                cosines.len()
            )));
        }
        if cosines.iter().any(|c| !c.is_finite()) {
            return Err(Failure::invalid("contact angles must be finite"));
        }
        Ok(cosines)
    }

    /// A single shared cosine.
    pub fn resolve_slant(&self, s: usize) -> Outcome<f64> {
        let cosines = self.resolve(s)?;
        if cosines.iter().any(|c| *c != cosines[0]) {
            return Err(Failure::invalid(format!(
                "this command needs one contact angle shared by all Reeb directions, got {cosines:?}"
            )));
        }
        Ok(cosines[0])
    }
}

/// The slant cosine when all entries agree.
pub fn common_value(cosines: &[f64]) -> Option<f64> {
    cosines.iter().all(|c| *c == cosines[0]).then(|| cosines[0])
}

#[derive(Debug, Clone, Deserialize)]
pub struct IntegrateConfig {
    pub sig: SpaceSignature,
    pub q: f64,
    #[serde(flatten)]
    pub angles: Angles,
    pub initial_point: Option<Vec<f64>>,
    /// Coefficients of the contact part over `X_1..X_{2n}`.
    pub direction: Option<Vec<f64>>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    pub label: Option<String>,
}

impl IntegrateConfig {
    pub const FIELDS: &'static [&'static str] = &[
        "sig", "q", "cos_theta", "theta", "cosines", "thetas", "initial_point", "direction", "integrator", "label",
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum CaseTag {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "b")]
    B,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    #[serde(default = "default_grid_end")]
    pub t_end: f64,
    #[serde(default = "default_grid_step")]
    pub step: f64,
}

fn default_grid_end() -> f64 {
    10.0
}

fn default_grid_step() -> f64 {
    1e-2
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            t_end: default_grid_end(),
            step: default_grid_step(),
        }
    }
}

impl TimeGrid {
    pub fn times(&self) -> Outcome<Vec<f64>> {
        let cfg = IntegratorConfig::new(self.t_end, self.step, 1)?;
        Ok((0..=cfg.steps()).map(|k| k as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct ClosedFormConfig {
    pub case: Option<CaseTag>,
    pub sig: SpaceSignature,
    pub q: Option<f64>,
    #[serde(flatten)]
    pub angles: Angles,
    pub a: Option<Vec<f64>>,
    pub b: Option<Vec<f64>>,
    pub c: Option<Vec<f64>>,
    pub d: Option<Vec<f64>>,
    pub h: Option<Vec<f64>>,
    /// Draw the free constants from `seed` instead of using the given ones.
    #[serde(default)]
    pub randomize: bool,
    pub seed: Option<u64>,
    #[serde(default)]
    pub grid: TimeGrid,
}

impl ClosedFormConfig {
    pub const FIELDS: &'static [&'static str] = &[
        "case", "sig", "q", "cos_theta", "theta", "a", "b", "c", "d", "h", "randomize", "seed", "grid",
    ];
}

#[derive(Debug, Clone, Deserialize)]
pub struct ClassifyConfig {
    pub trajectory: Option<PathBuf>,
    pub s: Option<usize>,
    pub q: Option<f64>,
    #[serde(flatten)]
    pub angles: Angles,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl ClassifyConfig {
    pub const FIELDS: &'static [&'static str] =
        &["trajectory", "s", "q", "cos_theta", "theta", "cosines", "thetas", "tol"];
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvertConfig {
    pub kappa1: f64,
    pub kappa2: f64,
    pub s: usize,
    pub case: Option<InverseCase>,
    #[serde(default = "plus")]
    pub eps: Sign,
    #[serde(default = "plus")]
    pub branch: Sign,
}

impl InvertConfig {
    pub const FIELDS: &'static [&'static str] = &["kappa1", "kappa2", "s", "case", "eps", "branch"];
}

fn plus() -> Sign {
    Sign::Plus
}

pub fn default_tol() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Deserialize)]
pub struct SweepSpec {
    #[serde(default = "one")]
    pub n: Vec<usize>,
    #[serde(default = "one")]
    pub s: Vec<usize>,
    pub q: Vec<f64>,
    pub cos_theta: Option<Vec<f64>>,
    pub theta: Option<Vec<f64>>,
    /// Cosines as fractions of the slant bound `1/√s`.
    pub cos_fraction: Option<Vec<f64>>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_sweep_integrator")]
    pub integrator: IntegratorConfig,
}

impl SweepSpec {
    pub const FIELDS: &'static [&'static str] =
        &["n", "s", "q", "cos_theta", "theta", "cos_fraction", "tol", "seed", "integrator"];
}

fn one() -> Vec<usize> {
    vec![1]
}

fn default_sweep_integrator() -> IntegratorConfig {
    IntegratorConfig::new(3.0, 1e-3, 1).expect("valid default")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(v: Value) -> Document {
        match v {
            Value::Object(m) => Document(m),
            _ => unreachable!(),
        }
    }

    #[test]
    fn theta_is_converted_once() {
        let a = Angles {
            theta: Some(std::f64::consts::FRAC_PI_3),
            ..Angles::default()
        };
        let c = a.resolve(2).unwrap();
        assert_eq!(c, vec![std::f64::consts::FRAC_PI_3.cos(); 2]);
        assert!((c[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn angles_must_be_unique_and_sized() {
        let both = Angles {
            theta: Some(1.0),
            cos_theta: Some(0.5),
            ..Angles::default()
        };
        assert!(both.resolve(1).is_err());
        assert!(Angles::default().resolve(1).is_err());
        let short = Angles {
            cosines: Some(vec![0.1]),
            ..Angles::default()
        };
        assert!(short.resolve(2).is_err());
        let unequal = Angles {
            cosines: Some(vec![0.1, 0.2]),
            ..Angles::default()
        };
        assert!(unequal.resolve_slant(2).is_err());
    }

    #[test]
    fn flags_override_file_fields() {
        let mut d = doc(serde_json::json!({"sig": {"n": 1, "s": 1}, "q": 2.0, "theta": 1.0}));
        d.set("q", Some(3.0));
        d.set_angles(&AngleFlags {
            cos_theta: Some(0.25),
            ..AngleFlags::default()
        });
        d.set_nested("integrator", "step", Some(0.01)).unwrap();
        let cfg: IntegrateConfig = d.parse(IntegrateConfig::FIELDS).unwrap();
        assert_eq!(cfg.q, 3.0);
        assert_eq!(cfg.angles.resolve(1).unwrap(), vec![0.25]);
        assert_eq!(cfg.integrator.step, 0.01);
        assert_eq!(cfg.integrator.t_end, 10.0);
    }

    #[test]
    fn unknown_fields_and_zero_step_are_rejected() {
        let d = doc(serde_json::json!({"sig": {"n": 1, "s": 1}, "q": 2.0, "cos_theta": 0.5, "qq": 1}));
        let err = d.parse::<IntegrateConfig>(IntegrateConfig::FIELDS).unwrap_err();
        assert!(err.to_string().contains("qq"));
        let d = doc(serde_json::json!({"sig": {"n": 1, "s": 1}, "q": 2.0, "cos_theta": 0.5, "integrator": {"step": 0.0}}));
        let err = d.parse::<IntegrateConfig>(IntegrateConfig::FIELDS).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("step must be positive"), "{err}");
    }

    #[test]
    fn signs_and_cases_parse_from_json() {
        let d = doc(serde_json::json!({"kappa1": 1.0, "kappa2": 0.0, "s": 2, "case": "iii", "eps": -1}));
        let cfg: InvertConfig = d.parse(InvertConfig::FIELDS).unwrap();
        assert_eq!(cfg.case, Some(InverseCase::Circle));
        assert_eq!(cfg.eps, Sign::Minus);
        assert_eq!(cfg.branch, Sign::Plus);
    }
}
