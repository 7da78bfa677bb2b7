//! JSON job files: schema, parsing and validation.
//!
//! A job file carries exactly one `command` plus its inputs. The schemas are
//! strict (`deny_unknown_fields`), so typos fail fast before any computation
//! starts, with serde's line/column diagnostics for syntax errors and field
//! paths for semantic ones.

use std::fmt;
use std::path::Path;

use relorbit_core::homotopy::HomotopyWord;
use relorbit_core::loopspace::MarginNorm;
use relorbit_core::optimizer::SolveSettings;
use relorbit_core::potentials::{Perturbation, PotentialConfig};
use relorbit_core::Vec2;
use serde::Deserialize;

use crate::tolerances::ToleranceOverrides;

/// CLI-level error with enough context to print a useful diagnostic.
#[derive(Debug)]
pub enum CliError {
    Io(std::io::Error),
    /// JSON syntax or schema mismatch, with serde's line/column text.
    Parse(String),
    /// Semantically invalid field values, with a field path.
    Invalid(String),
    Core(relorbit_core::Error),
    /// A verification threshold was exceeded (nonzero exit, artifacts kept).
    VerificationFailed(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(e) => write!(f, "io error: {e}"),
            CliError::Parse(m) => write!(f, "job file parse error: {m}"),
            CliError::Invalid(m) => write!(f, "invalid job: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::VerificationFailed(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<relorbit_core::Error> for CliError {
    fn from(e: relorbit_core::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Potential configuration as written in job files.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub centers: Vec<[f64; 2]>,
    pub strengths: Vec<f64>,
    pub alpha: f64,
    pub m: f64,
    pub c: f64,
    #[serde(default)]
    pub perturbation: PerturbationSpec,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PerturbationSpec {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    Gaussian {
        amplitude: f64,
        width: f64,
        offset: f64,
    },
}

impl PotentialSpec {
    pub fn build(&self) -> CliResult<PotentialConfig> {
        let perturbation = match self.perturbation {
            PerturbationSpec::Zero => Perturbation::Zero,
            PerturbationSpec::Constant { value } => Perturbation::Constant { offset: value },
            PerturbationSpec::Gaussian {
                amplitude,
                width,
                offset,
            } => Perturbation::GaussianBump {
                amplitude,
                width,
                offset,
            },
        };
        PotentialConfig::new(
            self.centers.iter().map(|&p| Vec2::from(p)).collect(),
            self.strengths.clone(),
            self.alpha,
            perturbation,
            self.m,
            self.c,
        )
        .map_err(|e| CliError::Invalid(format!("potential: {e}")))
    }
}

/// Single-centre model parameters for the `circular` and `limit` commands.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kappa: f64,
    pub alpha: f64,
    pub m: f64,
    pub c: f64,
}

impl ModelSpec {
    pub fn build(&self) -> CliResult<relorbit_core::circular::ModelConfig> {
        relorbit_core::circular::ModelConfig::new(self.kappa, self.alpha, self.m, self.c)
            .map_err(|e| CliError::Invalid(format!("model: {e}")))
    }
}

/// Optimizer settings as written in job files (all optional; defaults from
/// [`SolveSettings::default`]).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSettingsSpec {
    pub epsilon: Option<f64>,
    /// "sup" (pointwise margin, default) or "h1".
    pub norm: Option<String>,
    pub max_iterations: Option<usize>,
    pub gradient_tol_rel: Option<f64>,
    pub refinement_schedule: Option<Vec<usize>>,
    pub push_off_lambda: Option<f64>,
    pub initial_step: Option<f64>,
}

impl SolveSettingsSpec {
    pub fn build(&self) -> CliResult<SolveSettings> {
        let mut s = SolveSettings::default();
        if let Some(e) = self.epsilon {
            s.epsilon = e;
        }
        if let Some(norm) = &self.norm {
            s.norm = match norm.as_str() {
                "sup" => MarginNorm::Sup,
                "h1" => MarginNorm::H1,
                other => {
                    return Err(CliError::Invalid(format!(
                        "settings.norm must be \"sup\" or \"h1\", got \"{other}\""
                    )))
                }
            };
        }
        if let Some(v) = self.max_iterations {
            s.max_iterations = v;
        }
        if let Some(v) = self.gradient_tol_rel {
            s.gradient_tol_rel = v;
        }
        if let Some(v) = &self.refinement_schedule {
            s.refinement_schedule = v.clone();
        }
        if let Some(v) = self.push_off_lambda {
            s.push_off_lambda = v;
        }
        if let Some(v) = self.initial_step {
            s.step_rule.initial_step = v;
        }
        Ok(s)
    }
}

/// Initial phase-space data for `integrate`: position plus either momentum
/// or (subluminal) velocity.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateSpec {
    pub x: [f64; 2],
    pub p: Option<[f64; 2]>,
    pub v: Option<[f64; 2]>,
}

/// The job file: exactly one command.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case", deny_unknown_fields)]
pub enum JobSpec {
    Solve {
        potential: PotentialSpec,
        h: f64,
        word: String,
        #[serde(default)]
        settings: SolveSettingsSpec,
        #[serde(default)]
        tolerances: ToleranceOverrides,
    },
    Integrate {
        potential: PotentialSpec,
        initial: InitialStateSpec,
        t_end: f64,
        rtol: Option<f64>,
        atol: Option<f64>,
    },
    CircularProfile {
        model: ModelSpec,
        r_min: f64,
        r_max: f64,
        points: usize,
    },
    CircularRadius {
        model: ModelSpec,
        energy: f64,
    },
    CircularClassify {
        model: ModelSpec,
        energy: f64,
        angular_momentum: f64,
    },
    Limit {
        model: ModelSpec,
        h: f64,
        light_speeds: Vec<f64>,
    },
    Sweep {
        base: Box<JobSpec>,
        axes: SweepAxes,
    },
}

impl JobSpec {
    pub fn command_name(&self) -> &'static str {
        match self {
            JobSpec::Solve { .. } => "solve",
            JobSpec::Integrate { .. } => "integrate",
            JobSpec::CircularProfile { .. } => "circular-profile",
            JobSpec::CircularRadius { .. } => "circular-radius",
            JobSpec::CircularClassify { .. } => "circular-classify",
            JobSpec::Limit { .. } => "limit",
            JobSpec::Sweep { .. } => "sweep",
        }
    }

    pub fn from_file(path: &Path) -> CliResult<JobSpec> {
        let text = std::fs::read_to_string(path)?;
        let job: JobSpec =
            serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))?;
        job.validate()?;
        Ok(job)
    }

    pub fn validate(&self) -> CliResult<()> {
        match self {
            JobSpec::Solve {
                potential,
                h,
                word,
                settings,
                ..
            } => {
                let cfg = potential.build()?;
                if !(cfg.alpha() > 1.0) {
                    return Err(CliError::Invalid(format!(
                        "potential.alpha = {} violates the strong-force requirement alpha > 1",
                        cfg.alpha()
                    )));
                }
                if !(*h > 0.0) {
                    return Err(CliError::Invalid(format!(
                        "h = {h} must be > 0 for prescribed-energy solves"
                    )));
                }
                let parsed = HomotopyWord::parse(word, cfg.n_centers())
                    .map_err(|e| CliError::Invalid(format!("word: {e}")))?;
                if parsed.is_trivial() {
                    return Err(CliError::Invalid(
                        "word reduces to the trivial class".into(),
                    ));
                }
                settings.build()?;
                Ok(())
            }
            JobSpec::Integrate {
                potential,
                initial,
                t_end,
                rtol,
                atol,
            } => {
                potential.build()?;
                if initial.p.is_none() == initial.v.is_none() {
                    return Err(CliError::Invalid(
                        "initial state needs exactly one of `p` or `v`".into(),
                    ));
                }
                if !(*t_end > 0.0) {
                    return Err(CliError::Invalid(format!("t_end = {t_end} must be > 0")));
                }
                for (name, v) in [("rtol", rtol), ("atol", atol)] {
                    if let Some(v) = v {
                        if !(*v > 0.0) {
                            return Err(CliError::Invalid(format!("{name} must be > 0")));
                        }
                    }
                }
                Ok(())
            }
            JobSpec::CircularProfile {
                model,
                r_min,
                r_max,
                points,
            } => {
                model.build()?;
                if !(*r_min > 0.0 && r_max > r_min && *points >= 2) {
                    return Err(CliError::Invalid(
                        "profile needs 0 < r_min < r_max and points >= 2".into(),
                    ));
                }
                Ok(())
            }
            JobSpec::CircularRadius { model, .. } => model.build().map(|_| ()),
            JobSpec::CircularClassify {
                model,
                angular_momentum,
                ..
            } => {
                model.build()?;
                if !(*angular_momentum > 0.0) {
                    return Err(CliError::Invalid("angular_momentum must be > 0".into()));
                }
                Ok(())
            }
            JobSpec::Limit {
                model,
                h,
                light_speeds,
            } => {
                model.build()?;
                if !(*h > 0.0) {
                    return Err(CliError::Invalid(format!("h = {h} must be > 0")));
                }
                if light_speeds.is_empty() {
                    return Err(CliError::Invalid("light_speeds must be non-empty".into()));
                }
                if light_speeds.windows(2).any(|w| w[0] >= w[1])
                    || light_speeds.iter().any(|&c| !(c > 0.0))
                {
                    return Err(CliError::Invalid(
                        "light_speeds must be positive and strictly ascending".into(),
                    ));
                }
                Ok(())
            }
            JobSpec::Sweep { base, axes } => {
                if matches!(**base, JobSpec::Sweep { .. }) {
                    return Err(CliError::Invalid("nested sweeps are not supported".into()));
                }
                base.validate()?;
                axes.validate()
            }
        }
    }
}

/// Sweep axes; the cartesian product in the fixed order
/// `h, alpha, c, angular_momentum, word` defines the cell index.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    pub h: Option<Vec<f64>>,
    pub alpha: Option<Vec<f64>>,
    pub c: Option<Vec<f64>>,
    pub angular_momentum: Option<Vec<f64>>,
    pub word: Option<Vec<String>>,
}

impl SweepAxes {
    pub fn validate(&self) -> CliResult<()> {
        let mut any = false;
        for (name, len) in [
            ("h", self.h.as_ref().map(Vec::len)),
            ("alpha", self.alpha.as_ref().map(Vec::len)),
            ("c", self.c.as_ref().map(Vec::len)),
            (
                "angular_momentum",
                self.angular_momentum.as_ref().map(Vec::len),
            ),
            ("word", self.word.as_ref().map(Vec::len)),
        ] {
            match len {
                Some(0) => {
                    return Err(CliError::Invalid(format!("sweep axis `{name}` is empty")))
                }
                Some(_) => any = true,
                None => {}
            }
        }
        if !any {
            return Err(CliError::Invalid("sweep declares no axes".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> CliResult<JobSpec> {
        let job: JobSpec =
            serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        job.validate()?;
        Ok(job)
    }

    const MODEL_POTENTIAL: &str = r#""potential": {
        "centers": [[0.0, 0.0]], "strengths": [1.0],
        "alpha": 2.0, "m": 1.0, "c": 1.0,
        "perturbation": {"kind": "zero"}}"#;

    #[test]
    fn test_solve_job_parses() {
        let text = format!(
            r#"{{"command": "solve", {MODEL_POTENTIAL}, "h": 0.5, "word": "a1"}}"#
        );
        let job = parse(&text).unwrap();
        assert_eq!(job.command_name(), "solve");
    }

    #[test]
    fn test_negative_h_rejected() {
        let text = format!(
            r#"{{"command": "solve", {MODEL_POTENTIAL}, "h": -0.1, "word": "a1"}}"#
        );
        match parse(&text) {
            Err(CliError::Invalid(m)) => assert!(m.contains("h = -0.1")),
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn test_alpha_one_rejected_with_strong_force_message() {
        let text = r#"{"command": "solve",
            "potential": {"centers": [[0,0]], "strengths": [1.0],
                          "alpha": 1.0, "m": 1.0, "c": 1.0},
            "h": 0.5, "word": "a1"}"#;
        match parse(text) {
            Err(CliError::Invalid(m)) => assert!(m.contains("strong-force"), "{m}"),
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn test_unknown_field_rejected() {
        let text = format!(
            r#"{{"command": "solve", {MODEL_POTENTIAL}, "h": 0.5, "word": "a1", "zzz": 1}}"#
        );
        assert!(matches!(parse(&text), Err(CliError::Parse(_))));
    }

    #[test]
    fn test_trivial_word_rejected() {
        let text = format!(
            r#"{{"command": "solve", {MODEL_POTENTIAL}, "h": 0.5, "word": "a1 a1^-1"}}"#
        );
        assert!(matches!(parse(&text), Err(CliError::Invalid(_))));
    }

    #[test]
    fn test_integrate_needs_exactly_one_of_p_v() {
        let both = format!(
            r#"{{"command": "integrate", {MODEL_POTENTIAL},
                "initial": {{"x": [1.0, 0.0], "p": [0.0, 1.0], "v": [0.0, 0.5]}},
                "t_end": 1.0}}"#
        );
        assert!(matches!(parse(&both), Err(CliError::Invalid(_))));
        let ok = format!(
            r#"{{"command": "integrate", {MODEL_POTENTIAL},
                "initial": {{"x": [1.0, 0.0], "v": [0.0, 0.5]}},
                "t_end": 1.0}}"#
        );
        assert!(parse(&ok).is_ok());
    }

    #[test]
    fn test_empty_sweep_axis_rejected() {
        let text = format!(
            r#"{{"command": "sweep",
                 "base": {{"command": "solve", {MODEL_POTENTIAL}, "h": 0.5, "word": "a1"}},
                 "axes": {{"h": []}}}}"#
        );
        assert!(matches!(parse(&text), Err(CliError::Invalid(_))));
        let none = format!(
            r#"{{"command": "sweep",
                 "base": {{"command": "solve", {MODEL_POTENTIAL}, "h": 0.5, "word": "a1"}},
                 "axes": {{}}}}"#
        );
        assert!(matches!(parse(&none), Err(CliError::Invalid(_))));
    }

    #[test]
    fn test_limit_job() {
        let text = r#"{"command": "limit",
            "model": {"kappa": 1.0, "alpha": 3.0, "m": 1.0, "c": 1.0},
            "h": 1.0, "light_speeds": [1.0, 2.0, 4.0]}"#;
        assert!(parse(text).is_ok());
        let bad = r#"{"command": "limit",
            "model": {"kappa": 1.0, "alpha": 3.0, "m": 1.0, "c": 1.0},
            "h": 1.0, "light_speeds": [4.0, 2.0]}"#;
        assert!(matches!(parse(bad), Err(CliError::Invalid(_))));
    }
}
