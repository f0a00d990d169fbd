//! Run configuration: the JSON schema, dotted-path overrides and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use axion_core::mixing::{to_natural_units, LabInputs, MixingParams};
use axion_core::scenarios::{Numerics, ScenarioKind, ScenarioSpec};
use axion_core::states::{CoherentAmplitude, PhotonAddition, SqueezeParam, StateOrdering};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Classical,
    #[serde(alias = "single")]
    SinglePhoton,
    #[serde(alias = "survival")]
    PhotonSurvival,
    Coherent,
    #[serde(alias = "squeezed")]
    SqueezedCoherentAdded,
}

impl Kind {
    pub fn scenario(self) -> Option<ScenarioKind> {
        match self {
            Kind::Classical => None,
            Kind::SinglePhoton => Some(ScenarioKind::SinglePhoton),
            Kind::PhotonSurvival => Some(ScenarioKind::PhotonSurvival),
            Kind::Coherent => Some(ScenarioKind::Coherent),
            Kind::SqueezedCoherentAdded => Some(ScenarioKind::SqueezedCoherentAdded),
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Kind::Classical => "classical",
            Kind::SinglePhoton => "single_photon",
            Kind::PhotonSurvival => "photon_survival",
            Kind::Coherent => "coherent",
            Kind::SqueezedCoherentAdded => "squeezed_coherent_added",
        };
        f.write_str(name)
    }
}

/// Complex amplitude in polar form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Polar {
    pub abs: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Polar {
    fn amplitude(self, name: &str) -> Result<CoherentAmplitude, String> {
        CoherentAmplitude::from_polar(self.abs, self.phase).map_err(|e| format!("scenario.{name}: {e}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Squeeze {
    pub r: f64,
    #[serde(default)]
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Filled from the subcommand when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    pub lab: LabInputs,
    /// Generator coupling in eV, replacing `g B / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Dimensionless `λ U |f|`; rescales `λ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixing_angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Polar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Polar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub squeeze: Option<Squeeze>,
    #[serde(default)]
    pub photons_added: usize,
    #[serde(default)]
    pub normalize: bool,
    #[serde(default)]
    pub ordering: StateOrdering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    L,
    #[serde(rename = "m")]
    Mass,
    #[serde(rename = "E_gamma")]
    EGamma,
    #[serde(rename = "g")]
    Coupling,
    #[serde(rename = "B_T")]
    Field,
    #[serde(rename = "r")]
    Squeeze,
    #[serde(rename = "beta_abs")]
    BetaAbs,
    #[serde(rename = "delta")]
    Delta,
    N,
    #[serde(rename = "lambda")]
    Lambda,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::L => "L",
            SweepParameter::Mass => "m",
            SweepParameter::EGamma => "E_gamma",
            SweepParameter::Coupling => "g",
            SweepParameter::Field => "B_T",
            SweepParameter::Squeeze => "r",
            SweepParameter::BetaAbs => "beta_abs",
            SweepParameter::Delta => "delta",
            SweepParameter::N => "N",
            SweepParameter::Lambda => "lambda",
        }
    }

    /// Writes `value` into the scenario, creating the enclosing field if needed.
    pub fn apply(self, s: &mut ScenarioConfig, value: f64) {
        match self {
            SweepParameter::L => s.lab.l = value,
            SweepParameter::Mass => s.lab.m = value,
            SweepParameter::EGamma => s.lab.e_gamma = value,
            SweepParameter::Coupling => s.lab.g = value,
            SweepParameter::Field => s.lab.b_t = value,
            SweepParameter::Squeeze => s.squeeze.get_or_insert(Squeeze { r: 0.0, phi: 0.0 }).r = value,
            SweepParameter::BetaAbs => s.beta.get_or_insert(Polar { abs: 0.0, phase: 0.0 }).abs = value,
            SweepParameter::Delta => s.beta.get_or_insert(Polar { abs: 0.0, phase: 0.0 }).phase = value,
            SweepParameter::N => s.photons_added = value.round() as usize,
            SweepParameter::Lambda => {
                s.lambda = Some(value);
                s.mixing_angle = None;
            }
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let t = i as f64 / last;
                let v = match self.scale {
                    Scale::Linear => self.from + (self.to - self.from) * t,
                    Scale::Log => (self.from.ln() + (self.to.ln() - self.from.ln()) * t).exp(),
                };
                if i + 1 == self.points {
                    self.to
                } else {
                    v
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<(), (String, String)> {
        if !self.from.is_finite() || !self.to.is_finite() {
            return Err(("sweep.from".into(), "sweep bounds must be finite".into()));
        }
        if self.points < 2 {
            return Err(("sweep.points".into(), format!("must be >= 2, got {}", self.points)));
        }
        if self.scale == Scale::Log && (self.from <= 0.0 || self.to <= 0.0) {
            return Err(("sweep.scale".into(), "log scale needs positive bounds".into()));
        }
        if self.parameter == SweepParameter::N && (self.from < 0.0 || self.to < 0.0) {
            return Err(("sweep.from".into(), "photon number must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: None,
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn kind(&self) -> Kind {
        self.scenario.kind.unwrap_or(Kind::SinglePhoton)
    }

    /// Single-point config for one sweep value, as echoed in results.
    pub fn at_point(&self, point: Option<(SweepParameter, f64)>) -> RunConfig {
        let mut scenario = self.scenario.clone();
        scenario.kind = Some(self.kind());
        if let Some((p, v)) = point {
            p.apply(&mut scenario, v);
        }
        RunConfig {
            scenario,
            sweep: None,
            numerics: self.numerics,
            output: OutputConfig::default(),
            seed: self.seed,
        }
    }

    /// Every evaluation point, in sweep order.
    pub fn points(&self) -> Vec<(Option<(SweepParameter, f64)>, RunConfig)> {
        match &self.sweep {
            None => vec![(None, self.at_point(None))],
            Some(s) => s
                .values()
                .into_iter()
                .map(|v| (Some((s.parameter, v)), self.at_point(Some((s.parameter, v)))))
                .collect(),
        }
    }

    pub fn mixing_params(&self) -> Result<MixingParams, String> {
        let s = &self.scenario;
        let params = to_natural_units(&s.lab).map_err(|e| format!("scenario.lab: {e}"))?;
        match (s.lambda, s.mixing_angle) {
            (Some(_), Some(_)) => Err("scenario.lambda: lambda and mixing_angle are mutually exclusive".into()),
            (Some(l), None) if !l.is_finite() => Err(format!("scenario.lambda: must be finite, got {l}")),
            (Some(l), None) => Ok(params.with_lambda(l)),
            (None, Some(a)) => params
                .with_mixing_angle(a)
                .map_err(|e| format!("scenario.mixing_angle: {e}")),
            (None, None) => Ok(params),
        }
    }

    /// The core scenario, or `None` for the classical formula.
    pub fn scenario_spec(&self) -> Result<Option<ScenarioSpec>, String> {
        let params = self.mixing_params()?;
        let s = &self.scenario;
        let Some(kind) = self.kind().scenario() else {
            let quantum_only = [
                ("alpha", s.alpha.is_some()),
                ("beta", s.beta.is_some()),
                ("squeeze", s.squeeze.is_some()),
                ("photons_added", s.photons_added != 0),
                ("normalize", s.normalize),
                ("ordering", s.ordering != StateOrdering::default()),
            ];
            if let Some((name, _)) = quantum_only.iter().find(|(_, set)| *set) {
                return Err(format!("scenario.{name}: not used by the classical formula"));
            }
            return Ok(None);
        };
        let mut spec = ScenarioSpec::new(kind, params);
        if let Some(a) = s.alpha {
            spec.alpha = a.amplitude("alpha")?;
        }
        if let Some(b) = s.beta {
            spec.beta = b.amplitude("beta")?;
        }
        if let Some(z) = s.squeeze {
            spec.zeta = SqueezeParam::new(z.r, z.phi).map_err(|e| format!("scenario.squeeze: {e}"))?;
        }
        spec.addition = PhotonAddition {
            n: s.photons_added,
            normalize: s.normalize,
        };
        spec.ordering = s.ordering;
        spec.numerics = self.numerics;
        spec.validate().map_err(|e| format!("scenario: {e}"))?;
        Ok(Some(spec))
    }

    fn validate(&self) -> Result<(), (String, String)> {
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        if self.output.formats.is_empty() {
            return Err(("output.formats".into(), "at least one format is required".into()));
        }
        for (point, cfg) in self.points() {
            cfg.scenario_spec().map_err(|e| {
                let at = point.map(|(p, v)| format!(" (at {p} = {v})")).unwrap_or_default();
                let path = e.split(':').next().unwrap_or("scenario").to_string();
                (path, format!("{e}{at}"))
            })?;
        }
        Ok(())
    }
}

/// Replaces the value at a dotted path such as `scenario.lab.L`.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--param {assignment}: expected key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        if key.is_empty() {
            return Err(CliError::Config(format!("--param {assignment}: empty key in path")));
        }
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
        let Value::Object(map) = node else {
            return Err(CliError::Config(format!(
                "--param {assignment}: {} is not an object",
                keys[..i].join(".")
            )));
        };
        if i + 1 == keys.len() {
            map.insert(key.to_string(), value);
            return Ok(());
        }
        node = map.entry(key.to_string()).or_insert(Value::Null);
    }
    unreachable!("split yields at least one key")
}

/// 1-based line of the first occurrence of `"key"` for the last path segment.
fn locate(text: &str, path: &str) -> Option<usize> {
    let key = path.rsplit('.').next()?;
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

pub fn parse_config_str(text: &str, origin: &str, overrides: &[String]) -> Result<RunConfig, CliError> {
    let config: RunConfig = if overrides.is_empty() {
        let mut de = serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(&mut de)
            .map_err(|e| CliError::Config(format!("{origin}: {}: {}", e.path(), e.inner())))?
    } else {
        let mut doc: Value = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column())))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        serde_path_to_error::deserialize(doc)
            .map_err(|e| CliError::Config(format!("{origin} (with --param): {}: {}", e.path(), e.inner())))?
    };
    config.validate().map_err(|(path, msg)| {
        let line = locate(text, &path).map(|l| format!(":{l}")).unwrap_or_default();
        CliError::Config(format!("{origin}{line}: {path}: {msg}"))
    })?;
    Ok(config)
}

pub fn parse_config(path: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: cannot read config: {e}", path.display())))?;
    parse_config_str(&text, &path.display().to_string(), overrides)
}
