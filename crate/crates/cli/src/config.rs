//! Run configuration: a TOML document with a top-level `command` and the
//! sections `model`, `grid`, `stepper`, `scenario`, `fit`, `output`, plus
//! `linear`, `rates`, `sweep` and `box` for the commands that use them.
//! Every section and key is optional except `command`; unknown keys are errors.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use eas_core::diagnostics::EnergyWeights;
use eas_core::scenario::{ScenarioKind, ScenarioSpec};
use eas_core::timestepper::{Formulation, Scheme, StepperConfig};
use eas_core::PhysParams;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    LinearDecay,
    GreenAudit,
    LowerBound,
    Rates,
    Sweep,
    BoxSensitivity,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::LinearDecay => "linear-decay",
            Self::GreenAudit => "green-audit",
            Self::LowerBound => "lower-bound",
            Self::Rates => "rates",
            Self::Sweep => "sweep",
            Self::BoxSensitivity => "box-sensitivity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub alpha: f64,
    pub mu: f64,
    pub gamma: f64,
    pub dimension: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            mu: 1.0,
            gamma: 1.0,
            dimension: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub points: usize,
    pub length: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            points: 128,
            length: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepperSection {
    pub dt: f64,
    pub scheme: Scheme,
    pub dealias: bool,
    pub rho_min: f64,
    pub max_steps: usize,
    pub output_stride: usize,
    pub formulation: Formulation,
    pub linear_only: bool,
    pub dt_max: f64,
}

impl Default for StepperSection {
    fn default() -> Self {
        let c = StepperConfig::default();
        Self {
            dt: c.dt,
            scheme: c.scheme,
            dealias: c.dealias,
            rho_min: c.rho_min,
            max_steps: c.max_steps,
            output_stride: c.output_stride,
            formulation: c.formulation,
            linear_only: c.linear_only,
            dt_max: c.dt_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub kind: ScenarioKind,
    pub amplitude: f64,
    pub width: f64,
    pub mean_a: Option<f64>,
    pub momentum: Option<[f64; 2]>,
    pub seed: u64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let s = ScenarioSpec::default();
        Self {
            kind: s.kind,
            amplitude: s.amplitude,
            width: s.width,
            mean_a: s.mean_a,
            momentum: s.momentum,
            seed: s.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    /// `[t_start, t_stop]`; `[t_end/10, t_end]` when absent.
    pub window: Option<[f64; 2]>,
    pub quantities: Vec<String>,
    /// Sobolev order of the higher-order functional `Ỹ`.
    pub sobolev_s: f64,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            window: None,
            quantities: vec!["L2_a".into(), "L2_u".into()],
            sobolev_s: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

/// Time and frequency grids of the quadrature-based commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearSection {
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
    pub xi_min: f64,
    pub xi_max: f64,
    pub xi_points: usize,
    /// Record times of the `linear-decay` series, log-spaced on `[t_end/1000, t_end]`.
    pub series_points: usize,
}

impl Default for LinearSection {
    fn default() -> Self {
        Self {
            t_min: 1e2,
            t_max: 1e5,
            t_points: 31,
            xi_min: 1e-3,
            xi_max: 1e3,
            xi_points: 100,
            series_points: 61,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatesSection {
    /// Interior α values on `(0, 2)`.
    pub points: usize,
}

impl Default for RatesSection {
    fn default() -> Self {
        Self { points: 199 }
    }
}

/// Cartesian product of values; an empty list keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub alpha: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoxSection {
    /// Box lengths in increasing order; the grid spacing `grid.length/grid.points` is kept.
    pub lengths: Vec<f64>,
    pub tolerance: f64,
}

impl Default for BoxSection {
    fn default() -> Self {
        Self {
            lengths: vec![100.0, 200.0, 400.0],
            tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub stepper: StepperSection,
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub linear: LinearSection,
    #[serde(default)]
    pub rates: RatesSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default, rename = "box")]
    pub box_study: BoxSection,
}

fn default_t_end() -> f64 {
    100.0
}

fn range(key: &str, value: impl std::fmt::Display, allowed: &str) -> CliError {
    CliError::Config(format!("{key} = {value} is out of range; allowed: {allowed}"))
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Config(e.to_string()))?;
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("at `{path}`: {}", e.into_inner().message()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Whether the command advances the nonlinear solver.
    fn uses_solver(&self) -> bool {
        matches!(
            self.command,
            Command::Simulate | Command::Sweep | Command::BoxSensitivity
        )
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let m = &self.model;
        let solver = self.uses_solver() || self.command == Command::LinearDecay;
        if self.command != Command::Rates {
            if !(m.alpha > 0.0 && m.alpha <= 1.0) {
                let what = if solver { "(0, 1] (solver range)" } else { "(0, 1]" };
                return Err(range("model.alpha", m.alpha, what));
            }
            if !(m.mu > 0.0 && m.mu.is_finite()) {
                return Err(range("model.mu", m.mu, "(0, inf)"));
            }
            if !(m.gamma >= 1.0 && m.gamma.is_finite()) {
                return Err(range("model.gamma", m.gamma, "[1, inf)"));
            }
        }
        let dims = if solver { "1 or 2" } else { ">= 1" };
        if m.dimension == 0 || (solver && m.dimension > 2) {
            return Err(range("model.dimension", m.dimension, dims));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(range("t_end", self.t_end, "(0, inf)"));
        }
        if solver {
            let g = &self.grid;
            if g.points < 4 || !g.points.is_multiple_of(2) {
                return Err(range("grid.points", g.points, "even and >= 4"));
            }
            if !(g.length > 0.0 && g.length.is_finite()) {
                return Err(range("grid.length", g.length, "(0, inf)"));
            }
            let s = &self.stepper;
            if !(s.dt > 0.0 && s.dt.is_finite()) {
                return Err(range("stepper.dt", s.dt, "(0, inf)"));
            }
            if !(s.rho_min > 0.0 && s.rho_min < 1.0) {
                return Err(range("stepper.rho_min", s.rho_min, "(0, 1)"));
            }
            if s.output_stride == 0 {
                return Err(range("stepper.output_stride", 0, ">= 1"));
            }
            if s.max_steps == 0 {
                return Err(range("stepper.max_steps", 0, ">= 1"));
            }
            if !(s.dt_max > 0.0) {
                return Err(range("stepper.dt_max", s.dt_max, "(0, inf)"));
            }
            let sc = &self.scenario;
            if !(sc.amplitude > 0.0 && sc.amplitude.is_finite()) {
                return Err(range("scenario.amplitude", sc.amplitude, "(0, inf)"));
            }
            if !(sc.width > 0.0 && sc.width.is_finite()) {
                return Err(range("scenario.width", sc.width, "(0, inf)"));
            }
            if !(self.fit.sobolev_s > 0.0 && self.fit.sobolev_s.is_finite()) {
                return Err(range("fit.sobolev_s", self.fit.sobolev_s, "(0, inf)"));
            }
        }
        if let Some([a, b]) = self.fit.window {
            if !(a >= 0.0 && b > a) {
                return Err(CliError::Config(format!(
                    "fit.window = [{a}, {b}] is out of range; allowed: 0 <= start < stop"
                )));
            }
        }
        for q in &self.fit.quantities {
            if !eas_core::diagnostics::COLUMNS.contains(&q.as_str()) || q == "t" {
                return Err(CliError::Config(format!(
                    "fit.quantities: unknown quantity `{q}`; allowed: the series columns after `t`"
                )));
            }
        }
        let l = &self.linear;
        if !(l.t_min > 0.0 && l.t_max > l.t_min) || l.t_points < 3 {
            return Err(CliError::Config(
                "linear: need 0 < t_min < t_max and t_points >= 3".into(),
            ));
        }
        if !(l.xi_min > 0.0 && l.xi_max > l.xi_min) || l.xi_points < 2 || l.series_points < 3 {
            return Err(CliError::Config(
                "linear: need 0 < xi_min < xi_max, xi_points >= 2 and series_points >= 3".into(),
            ));
        }
        if self.rates.points == 0 {
            return Err(range("rates.points", 0, ">= 1"));
        }
        if self.command == Command::Sweep {
            if let Some(a) = self.sweep.alpha.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
                return Err(range("sweep.alpha", a, "(0, 1] (solver range)"));
            }
            if let Some(a) = self.sweep.amplitude.iter().find(|a| !(**a > 0.0)) {
                return Err(range("sweep.amplitude", a, "(0, inf)"));
            }
        }
        if self.command == Command::BoxSensitivity {
            let b = &self.box_study;
            if b.lengths.len() < 2 || b.lengths.windows(2).any(|w| !(w[1] > w[0])) || b.lengths[0] <= 0.0 {
                return Err(CliError::Config(
                    "box.lengths must hold at least two positive, increasing lengths".into(),
                ));
            }
            if !(b.tolerance > 0.0) {
                return Err(range("box.tolerance", b.tolerance, "(0, inf)"));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<PhysParams, CliError> {
        let m = &self.model;
        Ok(PhysParams::new(m.alpha, m.mu, m.gamma, m.dimension)?)
    }

    pub fn stepper_config(&self) -> StepperConfig {
        let s = &self.stepper;
        StepperConfig {
            dt: s.dt,
            scheme: s.scheme,
            dealias: s.dealias,
            rho_min: s.rho_min,
            max_steps: s.max_steps,
            output_stride: s.output_stride,
            formulation: s.formulation,
            linear_only: s.linear_only,
            dt_max: s.dt_max,
        }
    }

    pub fn scenario_spec(&self) -> ScenarioSpec {
        let s = &self.scenario;
        ScenarioSpec {
            kind: s.kind,
            amplitude: s.amplitude,
            width: s.width,
            mean_a: s.mean_a,
            momentum: s.momentum,
            seed: s.seed,
        }
    }

    pub fn energy(&self, p: &PhysParams) -> EnergyWeights {
        EnergyWeights::for_params(p, self.fit.sobolev_s)
    }

    pub fn window(&self) -> [f64; 2] {
        self.fit.window.unwrap_or([self.t_end / 10.0, self.t_end])
    }

    /// Hex SHA-256 of the resolved configuration's JSON form, with the output
    /// directory blanked so that moving a run does not change its identity.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.dir = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config("command = \"simulate\"").unwrap();
        assert_eq!(c.model, ModelSection::default());
        assert_eq!(c.stepper_config(), StepperConfig::default());
        assert_eq!(c.scenario_spec(), ScenarioSpec::default());
        assert_eq!(c.window(), [10.0, 100.0]);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = parse_config("command = \"simulate\"\n[model]\naplha = 0.5\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("aplha") && msg.contains("model"), "{msg}");
        assert_eq!(e.exit_code(), 2);
        assert!(parse_config("command = \"simulate\"\nt_ned = 3.0\n").is_err());
        assert!(parse_config("command = \"simulat\"").is_err());
        assert!(parse_config("[model]\nalpha = 0.5").is_err());
    }

    #[test]
    fn alpha_above_one_is_a_range_error_for_the_solver() {
        let e = parse_config("command = \"simulate\"\n[model]\nalpha = 1.5\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("1.5") && msg.contains("(0, 1]"), "{msg}");
        assert!(parse_config("command = \"rates\"\n[model]\nalpha = 1.5\n").is_ok());
    }

    #[test]
    fn type_errors_carry_the_key_path() {
        let msg = parse_config("command = \"simulate\"\n[stepper]\ndt = \"fast\"\n")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("stepper.dt"), "{msg}");
    }

    #[test]
    fn hash_tracks_content() {
        let a = parse_config("command = \"simulate\"").unwrap();
        let b = parse_config("command = \"simulate\"\n[scenario]\nseed = 1\n").unwrap();
        assert_eq!(a.hash(), parse_config("command = \"simulate\"").unwrap().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
