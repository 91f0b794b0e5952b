//! Line-oriented experiment configuration.
//!
//! ```text
//! # comment
//! experiment = DisorderedInstability
//! [params]
//! gamma0 = -1
//! alpha = 0.1
//! [grid]
//! length = 20pi
//! [perturbation]
//! tracked = 5,5; 7,1
//! ```
//!
//! Keys inside a `[section]` are prefixed with the section name; a dotted key
//! such as `solver.dt` may also be written outside any section. Values are
//! unquoted (surrounding double quotes are stripped). Unknown and repeated
//! keys are errors.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::integrator::{Scheme, SolverConfig};
use crate::model::{ModelParams, StateKind, TransformedSystem};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("override `{0}`: expected key=value")]
    BadOverride(String),
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExperimentKind {
    Dispersion,
    PhaseDiagram,
    NonlinearDecay,
    DisorderedInstability,
    OrderedInstability,
    OrderedContractivity,
    FreeRun,
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match norm.as_str() {
            "dispersion" => Self::Dispersion,
            "phasediagram" => Self::PhaseDiagram,
            "nonlineardecay" => Self::NonlinearDecay,
            "disorderedinstability" => Self::DisorderedInstability,
            "orderedinstability" => Self::OrderedInstability,
            "orderedcontractivity" => Self::OrderedContractivity,
            "freerun" => Self::FreeRun,
            _ => return Err(format!("unknown experiment `{s}`")),
        })
    }
}

impl ExperimentKind {
    fn default_state(self) -> StateKind {
        match self {
            Self::OrderedInstability | Self::OrderedContractivity => StateKind::Ordered,
            _ => StateKind::Disordered,
        }
    }

    fn default_linearized(self) -> bool {
        matches!(self, Self::Dispersion | Self::OrderedContractivity)
    }
}

/// How the initial perturbation is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PerturbationShape {
    /// Solenoidal Gaussian random field with RMS `amplitude`.
    Random,
    /// Fastest-growing eigenvector of the symbol at every tracked wavevector,
    /// each with mode amplitude `amplitude`.
    Eigenmode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Perturbation {
    pub amplitude: f64,
    pub k0: f64,
    pub tracked: Vec<Vec<i64>>,
    pub shape: PerturbationShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseRange {
    pub gamma0: (f64, f64),
    pub alpha: (f64, f64),
    pub resolution: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Checks {
    /// Relative tolerance on fitted growth rates.
    pub rate_tolerance: f64,
    /// Relative tolerance on energy identities.
    pub energy_tolerance: f64,
    /// Growth-fit window in multiples of the initial mode amplitude.
    pub window: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub params: ModelParams,
    pub state: StateKind,
    pub direction: Vec<f64>,
    pub n: usize,
    pub length: f64,
    pub solver: SolverConfig,
    pub perturbation: Perturbation,
    pub phase: PhaseRange,
    pub checks: Checks,
    pub output_dir: PathBuf,
}

const KEYS: &[&str] = &[
    "experiment",
    "output_dir",
    "params.lambda0",
    "params.lambda1",
    "params.alpha",
    "params.beta",
    "params.gamma0",
    "params.gamma2",
    "params.dim",
    "state.kind",
    "state.direction",
    "grid.n",
    "grid.length",
    "solver.dt",
    "solver.t_end",
    "solver.scheme",
    "solver.diagnostics_interval",
    "solver.snapshot_interval",
    "solver.seed",
    "solver.linearized",
    "perturbation.amplitude",
    "perturbation.k0",
    "perturbation.tracked",
    "perturbation.shape",
    "phase.gamma0_min",
    "phase.gamma0_max",
    "phase.alpha_min",
    "phase.alpha_max",
    "phase.n_gamma0",
    "phase.n_alpha",
    "checks.rate_tolerance",
    "checks.energy_tolerance",
    "checks.window_low",
    "checks.window_high",
];

/// Raw `key → (value, line)` table; line 0 marks an override.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = Self::default();
        let mut section = String::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = strip_comment(line).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Parse {
                    line: lineno,
                    message: "unterminated section header".into(),
                })?;
                let name = name.trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
                    return Err(ConfigError::Parse {
                        line: lineno,
                        message: format!("invalid section name `{name}`"),
                    });
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: lineno,
                message: format!("expected key = value, found `{line}`"),
            })?;
            let key = key.trim();
            let full = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            raw.insert(&full, value, lineno)?;
        }
        Ok(raw)
    }

    fn insert(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError::Parse {
                line,
                message: format!("unknown key `{key}`"),
            });
        }
        let value = unquote(value.trim()).to_string();
        if line != 0 {
            if let Some((_, prev)) = self.entries.get(key) {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("key `{key}` already set on line {prev}"),
                });
            }
        }
        self.entries.insert(key.to_string(), (value, line));
        Ok(())
    }

    /// Apply a `key=value` override (replacing any existing value).
    pub fn apply_override(&mut self, setting: &str) -> Result<(), ConfigError> {
        let (k, v) = setting
            .split_once('=')
            .ok_or_else(|| ConfigError::BadOverride(setting.to_string()))?;
        self.insert(k.trim(), v, 0).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Validation(format!("override: {message}")),
            other => other,
        })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|e| located(*line, key, e)),
        }
    }

    fn get_with<T>(
        &self,
        key: &str,
        f: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<T>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => f(v).map(Some).map_err(|e| located(*line, key, e)),
        }
    }

    pub fn build(&self) -> Result<ExperimentConfig, ConfigError> {
        let experiment: ExperimentKind = self
            .get_with("experiment", |s| s.parse())?
            .ok_or_else(|| ConfigError::Validation("`experiment` is required".into()))?;
        let defaults = ModelParams::default();
        let params = ModelParams {
            lambda0: self.get_with("params.lambda0", parse_real)?.unwrap_or(defaults.lambda0),
            lambda1: self.get_with("params.lambda1", parse_real)?.unwrap_or(defaults.lambda1),
            alpha: self.get_with("params.alpha", parse_real)?.unwrap_or(defaults.alpha),
            beta: self.get_with("params.beta", parse_real)?.unwrap_or(defaults.beta),
            gamma0: self.get_with("params.gamma0", parse_real)?.unwrap_or(defaults.gamma0),
            gamma2: self.get_with("params.gamma2", parse_real)?.unwrap_or(defaults.gamma2),
            dim: self.get::<usize>("params.dim")?.unwrap_or(defaults.dim),
        };
        let state = self
            .get_with("state.kind", |s| match s.to_ascii_lowercase().as_str() {
                "disordered" => Ok(StateKind::Disordered),
                "ordered" => Ok(StateKind::Ordered),
                _ => Err(format!("unknown state `{s}` (disordered or ordered)")),
            })?
            .unwrap_or(experiment.default_state());
        let direction = self
            .get_with("state.direction", parse_real_list)?
            .unwrap_or_else(|| {
                let mut e = vec![0.0; params.dim];
                if let Some(first) = e.first_mut() {
                    *first = 1.0;
                }
                e
            });
        let n = self.get::<usize>("grid.n")?.unwrap_or(64);
        let length = self.get_with("grid.length", parse_real)?.unwrap_or(20.0 * PI);
        let dt = self.get_with("solver.dt", parse_real)?.unwrap_or(1e-3);
        let solver = SolverConfig {
            dt,
            t_end: self.get_with("solver.t_end", parse_real)?.unwrap_or(10.0),
            scheme: self
                .get_with("solver.scheme", |s| match s.to_ascii_lowercase().as_str() {
                    "etdrk4" => Ok(Scheme::Etdrk4),
                    "imexeuler" | "imex_euler" | "imex" => Ok(Scheme::ImexEuler),
                    _ => Err(format!("unknown scheme `{s}` (etdrk4 or imex_euler)")),
                })?
                .unwrap_or(Scheme::Etdrk4),
            snapshot_interval: self.get_with("solver.snapshot_interval", parse_real)?,
            diagnostics_interval: self
                .get_with("solver.diagnostics_interval", parse_real)?
                .unwrap_or(10.0 * dt),
            seed: self.get::<u64>("solver.seed")?.unwrap_or(0),
            linearized: self
                .get::<bool>("solver.linearized")?
                .unwrap_or(experiment.default_linearized()),
        };
        let perturbation = Perturbation {
            amplitude: self.get_with("perturbation.amplitude", parse_real)?.unwrap_or(1e-4),
            k0: self.get_with("perturbation.k0", parse_real)?.unwrap_or(1.0),
            tracked: self
                .get_with("perturbation.tracked", parse_lattice_list)?
                .unwrap_or_default(),
            shape: self
                .get_with("perturbation.shape", |s| match s.to_ascii_lowercase().as_str() {
                    "random" => Ok(PerturbationShape::Random),
                    "eigenmode" => Ok(PerturbationShape::Eigenmode),
                    _ => Err(format!("unknown shape `{s}` (random or eigenmode)")),
                })?
                .unwrap_or(if experiment == ExperimentKind::Dispersion {
                    PerturbationShape::Eigenmode
                } else {
                    PerturbationShape::Random
                }),
        };
        let phase = PhaseRange {
            gamma0: (
                self.get_with("phase.gamma0_min", parse_real)?.unwrap_or(-2.0),
                self.get_with("phase.gamma0_max", parse_real)?.unwrap_or(2.0),
            ),
            alpha: (
                self.get_with("phase.alpha_min", parse_real)?.unwrap_or(-1.0),
                self.get_with("phase.alpha_max", parse_real)?.unwrap_or(2.0),
            ),
            resolution: (
                self.get::<usize>("phase.n_gamma0")?.unwrap_or(81),
                self.get::<usize>("phase.n_alpha")?.unwrap_or(61),
            ),
        };
        let checks = Checks {
            rate_tolerance: self
                .get_with("checks.rate_tolerance", parse_real)?
                .unwrap_or(if solver.linearized { 1e-3 } else { 0.05 }),
            energy_tolerance: self.get_with("checks.energy_tolerance", parse_real)?.unwrap_or(1e-6),
            window: (
                self.get_with("checks.window_low", parse_real)?.unwrap_or(2.0),
                self.get_with("checks.window_high", parse_real)?.unwrap_or(10.0),
            ),
        };
        let output_dir = self
            .get::<String>("output_dir")?
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("lf_out"));
        let config = ExperimentConfig {
            experiment,
            params,
            state,
            direction,
            n,
            length,
            solver,
            perturbation,
            phase,
            checks,
            output_dir,
        };
        config.validate()?;
        Ok(config)
    }
}

fn located(line: usize, key: &str, e: impl std::fmt::Display) -> ConfigError {
    if line == 0 {
        ConfigError::Validation(format!("override `{key}`: {e}"))
    } else {
        ConfigError::Parse {
            line,
            message: format!("`{key}`: {e}"),
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn unquote(s: &str) -> &str {
    s.strip_prefix('"')
        .and_then(|r| r.strip_suffix('"'))
        .unwrap_or(s)
}

/// A real number, optionally multiplied by π: `3.5`, `20pi`, `20*pi`, `pi`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let lower = t.to_ascii_lowercase();
    let value = if let Some(head) = lower.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let factor = if head.is_empty() {
            1.0
        } else {
            head.parse::<f64>().map_err(|_| format!("`{s}` is not a number"))?
        };
        factor * PI
    } else {
        t.parse::<f64>().map_err(|_| format!("`{s}` is not a number"))?
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_real_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(parse_real).collect()
}

/// `m1,m2[,m3]` tuples separated by `;`.
pub fn parse_lattice_list(s: &str) -> Result<Vec<Vec<i64>>, String> {
    s.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.trim_start_matches('(')
                .trim_end_matches(')')
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<i64>()
                        .map_err(|_| format!("`{t}` is not an integer lattice vector"))
                })
                .collect()
        })
        .collect()
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    RawConfig::parse(text)?.build()
}

/// Parse `text`, apply `key=value` overrides in order, then validate.
pub fn parse_config_with_overrides(
    text: &str,
    overrides: &[String],
) -> Result<ExperimentConfig, ConfigError> {
    let mut raw = RawConfig::parse(text)?;
    for o in overrides {
        raw.apply_override(o)?;
    }
    raw.build()
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let v = |m: String| Err(ConfigError::Validation(m));
        if let Err(e) = self.params.validate() {
            return v(e.to_string().trim_start_matches("invalid parameters: ").to_string());
        }
        let d = self.params.dim;
        if !self.n.is_multiple_of(2) || self.n < 8 {
            return v(format!("grid.n must be even and >= 8 (got {})", self.n));
        }
        if !(self.length > 0.0) {
            return v(format!("grid.length must be > 0 (got {})", self.length));
        }
        if let Err(e) = self.solver.validate() {
            return v(e.to_string());
        }
        if !(self.perturbation.amplitude >= 0.0) {
            return v("perturbation.amplitude must be >= 0".into());
        }
        if !(self.perturbation.k0 > 0.0) {
            return v("perturbation.k0 must be > 0".into());
        }
        let half = (self.n / 2) as i64;
        for m in &self.perturbation.tracked {
            if m.len() != d {
                return v(format!("tracked wavevector {m:?} must have {d} components"));
            }
            if m.iter().all(|&c| c == 0) {
                return v("tracked wavevector must be non-zero".into());
            }
            if m.iter().any(|&c| c.abs() >= half) {
                return v(format!(
                    "tracked wavevector {m:?} is not a resolved lattice mode (|m_i| < {half})"
                ));
            }
        }
        if self.direction.len() != d {
            return v(format!("state.direction must have {d} components"));
        }
        if let Err(e) = self.system() {
            return v(e.to_string());
        }
        let (wl, wh) = self.checks.window;
        if !(wl > 0.0 && wh > wl) {
            return v("checks.window_low must be > 0 and below checks.window_high".into());
        }
        if !(self.checks.rate_tolerance > 0.0 && self.checks.energy_tolerance > 0.0) {
            return v("check tolerances must be > 0".into());
        }
        match self.experiment {
            ExperimentKind::Dispersion if self.perturbation.tracked.is_empty() => {
                v("Dispersion needs perturbation.tracked".into())
            }
            ExperimentKind::OrderedContractivity if self.state != StateKind::Ordered => {
                v("OrderedContractivity needs state.kind = ordered".into())
            }
            ExperimentKind::OrderedContractivity if self.params.gamma0 < 0.0 => {
                v("OrderedContractivity needs gamma0 >= 0".into())
            }
            ExperimentKind::NonlinearDecay if self.state != StateKind::Disordered => {
                v("NonlinearDecay applies to the disordered state".into())
            }
            ExperimentKind::PhaseDiagram
                if self.phase.resolution.0 < 2 || self.phase.resolution.1 < 2 =>
            {
                v("phase.n_gamma0 and phase.n_alpha must be >= 2".into())
            }
            _ => Ok(()),
        }
    }

    pub fn system(&self) -> Result<TransformedSystem, crate::model::ModelError> {
        match self.state {
            StateKind::Disordered => TransformedSystem::disordered(&self.params),
            StateKind::Ordered => TransformedSystem::ordered(&self.params, &self.direction),
        }
    }
}
