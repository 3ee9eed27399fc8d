use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SpinDissipative,
    OscillatorDissipative,
    MeanfieldMacro,
    MeanfieldFluct,
    CltCheck,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::SpinDissipative => "spin-dissipative",
            Scenario::OscillatorDissipative => "oscillator-dissipative",
            Scenario::MeanfieldMacro => "meanfield-macro",
            Scenario::MeanfieldFluct => "meanfield-fluct",
            Scenario::CltCheck => "clt-check",
        }
    }

    fn uses_temperature(self) -> bool {
        matches!(
            self,
            Scenario::SpinDissipative | Scenario::OscillatorDissipative | Scenario::CltCheck
        )
    }

    /// Required keys, then optional keys with their defaults. Temperature is handled separately.
    fn keys(self) -> (&'static [&'static str], &'static [(&'static str, f64)]) {
        match self {
            Scenario::SpinDissipative => (
                &["gamma"],
                &[("epsilon", 1.0), ("J0", 1.0), ("squeeze", 1.0)],
            ),
            Scenario::OscillatorDissipative => (&["lambda"], &[("epsilon", 1.0), ("squeeze", 1.0)]),
            Scenario::MeanfieldMacro => (&["omega1", "omega2", "omega3"], &[]),
            Scenario::MeanfieldFluct => (&["a", "b", "zeta"], &[]),
            Scenario::CltCheck => (&[], &[("epsilon", 1.0)]),
        }
    }

    fn needs_grid(self) -> bool {
        !matches!(self, Scenario::CltCheck)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub t_max: f64,
    pub dt: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks keys and grid, and returns the parameters with defaults filled in
    /// and temperature expressed as `beta`.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let scenario = self.scenario;
        let (required, optional) = scenario.keys();
        let mut params = BTreeMap::new();
        for (key, value) in &self.params {
            let known = required.contains(&key.as_str())
                || optional.iter().any(|(k, _)| k == key)
                || (scenario.uses_temperature() && (key == "T" || key == "beta"));
            if !known {
                return Err(CliError::Validation(format!(
                    "unknown parameter {key:?} for scenario {}",
                    scenario.name()
                )));
            }
            if !value.is_finite() {
                return Err(CliError::Validation(format!(
                    "parameter {key} must be finite"
                )));
            }
        }
        for key in required {
            let v = self.params.get(*key).ok_or_else(|| {
                CliError::Validation(format!(
                    "missing parameter {key:?} for scenario {}",
                    scenario.name()
                ))
            })?;
            params.insert(key.to_string(), *v);
        }
        for (key, default) in optional {
            params.insert(key.to_string(), *self.params.get(*key).unwrap_or(default));
        }
        if scenario.uses_temperature() {
            let beta = match (self.params.get("T"), self.params.get("beta")) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Validation(
                        "give either T or beta, not both".into(),
                    ))
                }
                (Some(&t), None) => {
                    if t <= 0.0 {
                        return Err(CliError::Validation(format!("T > 0 required (got {t})")));
                    }
                    params.insert("T".into(), t);
                    1.0 / t
                }
                (None, Some(&b)) => b,
                (None, None) => {
                    return Err(CliError::Validation(format!(
                        "missing temperature: scenario {} needs T or beta",
                        scenario.name()
                    )))
                }
            };
            params.insert("beta".into(), beta);
        }
        let grid = match (&self.grid, scenario.needs_grid()) {
            (Some(g), _) => {
                if !(g.t_max.is_finite() && g.t_max > 0.0) {
                    return Err(CliError::Validation(format!(
                        "t_max > 0 required (got {})",
                        g.t_max
                    )));
                }
                if !(g.dt.is_finite() && g.dt > 0.0) {
                    return Err(CliError::Validation(format!(
                        "dt > 0 required (got {})",
                        g.dt
                    )));
                }
                if g.sample_stride == 0 {
                    return Err(CliError::Validation("sample_stride >= 1 required".into()));
                }
                Some(g.clone())
            }
            (None, true) => {
                return Err(CliError::Validation(format!(
                    "scenario {} needs a grid",
                    scenario.name()
                )))
            }
            (None, false) => None,
        };
        Ok(Resolved {
            scenario,
            params,
            grid,
        })
    }
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub scenario: Scenario,
    pub params: BTreeMap<String, f64>,
    pub grid: Option<Grid>,
}

impl Resolved {
    pub fn get(&self, key: &str) -> f64 {
        self.params[key]
    }

    /// Sample times `k * dt` for `k` a multiple of the stride, plus `t_max` itself.
    pub fn times(&self) -> Vec<f64> {
        let g = self.grid.as_ref().expect("time scenarios carry a grid");
        let (n, h) = steps(g);
        let mut out: Vec<f64> = (0..=n)
            .step_by(g.sample_stride)
            .map(|k| k as f64 * h)
            .collect();
        if n % g.sample_stride != 0 {
            out.push(g.t_max);
        }
        out
    }
}

/// Number of steps and the step that lands exactly on `t_max`.
pub(crate) fn steps(g: &Grid) -> (usize, f64) {
    let n = ((g.t_max / g.dt) - 1e-9).ceil().max(1.0) as usize;
    (n, g.t_max / n as f64)
}
