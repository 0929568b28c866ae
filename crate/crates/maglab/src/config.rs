//! TOML run configuration.
//!
//! ```toml
//! suites = ["tensors", "jacobi"]
//! seed = 7
//!
//! [system]
//! builtin = "larmor-t2"
//! b = 0.5
//!
//! [tolerances]
//! bianchi = 1e-9
//! ```
//!
//! Unknown keys are rejected at every level.

use crate::manifold::{self, MagneticSystem, ManifoldError};
use crate::par::Execution;
use crate::tolerances as tol;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    System(#[from] ManifoldError),
    #[error("parameter `{param}` does not apply to builtin `{builtin}`")]
    Parameter { builtin: String, param: &'static str },
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("invalid value: {0}")]
    Invalid(String),
}

/// Verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Tensors,
    Brackets,
    Jacobi,
    Pestov,
    Localized,
    Pinching,
    Tomo,
    Poincare,
    Fmquad,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Tensors,
        Suite::Brackets,
        Suite::Jacobi,
        Suite::Pestov,
        Suite::Localized,
        Suite::Pinching,
        Suite::Tomo,
        Suite::Poincare,
        Suite::Fmquad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Tensors => "tensors",
            Suite::Brackets => "brackets",
            Suite::Jacobi => "jacobi",
            Suite::Pestov => "pestov",
            Suite::Localized => "localized",
            Suite::Pinching => "pinching",
            Suite::Tomo => "tomo",
            Suite::Poincare => "poincare",
            Suite::Fmquad => "fmquad",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| ConfigError::UnknownSuite(s.to_string()))
    }
}

/// Builtin name plus optional field-strength overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub builtin: String,
    /// Field strength for `larmor-t2` and `hyperbolic3-magnetic`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Kähler constant for `kahler-t4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Use finite-difference metric jets with this step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
}

impl SystemSpec {
    pub fn named(name: &str) -> Self {
        SystemSpec {
            builtin: name.to_string(),
            b: None,
            c: None,
            fd_step: None,
        }
    }

    pub fn build(&self) -> Result<MagneticSystem, ConfigError> {
        let name = self.builtin.as_str();
        let bad = |param| ConfigError::Parameter {
            builtin: name.to_string(),
            param,
        };
        let mut s = match (name, self.b, self.c) {
            ("larmor-t2", Some(b), None) => manifold::constant_field_torus(b),
            ("hyperbolic3-magnetic", Some(b), None) => manifold::hyperbolic_magnetic(3, b),
            ("kahler-t4", None, Some(c)) => manifold::kahler_t4(c),
            (_, None, None) => manifold::builtin(name)?,
            (_, Some(_), _) => return Err(bad("b")),
            (_, None, Some(_)) => return Err(bad("c")),
        };
        if let Some(h) = self.fd_step {
            if !(h > 0.0) {
                return Err(ConfigError::Invalid(format!("fd_step = {h}")));
            }
            s.metric = s.metric.with_mode(manifold::DerivativeMode::FiniteDifference { h });
        }
        Ok(s)
    }
}

impl Default for SystemSpec {
    fn default() -> Self {
        SystemSpec::named("conformal-t2")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExecutionMode {
    Sequential,
    #[default]
    Parallel,
}

impl From<ExecutionMode> for Execution {
    fn from(m: ExecutionMode) -> Self {
        match m {
            ExecutionMode::Sequential => Execution::Sequential,
            ExecutionMode::Parallel => Execution::Parallel,
        }
    }
}

/// Sample counts and grid sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grids {
    /// Random frame points per pointwise suite.
    pub points: usize,
    /// Circle-bundle grid `N × N × N`.
    pub pestov: usize,
    /// Random fields per Pestov run.
    pub pestov_samples: usize,
    /// Base Fourier degree of random fields.
    pub base_degree: usize,
    /// Fiber degrees of random Pestov fields are `0..=fiber_degree`.
    pub fiber_degree: usize,
    /// Degrees of the localized identity.
    pub localized_degrees: Vec<usize>,
    /// Haar resolution on SO(3).
    pub haar: usize,
    /// Random functions in the Poincaré suite.
    pub poincare_samples: usize,
    /// Torus and Haar resolutions of the frame-bundle quadrature.
    pub fm_torus: usize,
    pub fm_haar: usize,
    pub tomo_max_m: u32,
    pub tomo_max_n: u32,
    pub pinching_max_n: usize,
    /// Planes sampled when estimating pinching constants.
    pub plane_mesh: usize,
    pub jacobi_time: f64,
    pub jacobi_dt: f64,
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            points: 20,
            pestov: 64,
            pestov_samples: 20,
            base_degree: 4,
            fiber_degree: 4,
            localized_degrees: vec![2, 3, 4],
            haar: 48,
            poincare_samples: 50,
            fm_torus: 6,
            fm_haar: 8,
            tomo_max_m: 40,
            tomo_max_n: 40,
            pinching_max_n: 64,
            plane_mesh: 2000,
            jacobi_time: 5.0,
            jacobi_dt: 1e-2,
        }
    }
}

/// Finite-difference steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Steps {
    pub bracket: f64,
    pub jacobi_fd: f64,
}

impl Default for Steps {
    fn default() -> Self {
        Steps {
            bracket: tol::BRACKET_STEP,
            jacobi_fd: tol::JACOBI_FD_EPS,
        }
    }
}

/// Residual budgets; defaults from [`crate::tolerances`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub structure: f64,
    pub torsion: f64,
    pub curvature_oracle: f64,
    pub algebraic: f64,
    pub bianchi: f64,
    pub bianchi_kahler: f64,
    pub jacobi: f64,
    pub conjugate_time: f64,
    pub pestov: f64,
    pub localized: f64,
    pub orthogonality: f64,
    pub margin: f64,
    pub poincare: f64,
    pub fm_weak: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            structure: tol::STRUCTURE,
            torsion: tol::TORSION,
            curvature_oracle: tol::CURVATURE_ORACLE,
            algebraic: 1e-10,
            bianchi: tol::BIANCHI,
            bianchi_kahler: tol::BIANCHI_KAHLER,
            jacobi: tol::JACOBI,
            conjugate_time: tol::CONJUGATE_TIME,
            pestov: tol::PESTOV,
            localized: tol::LOCALIZED,
            orthogonality: tol::ORTHOGONALITY,
            margin: tol::MARGIN,
            poincare: tol::POINCARE,
            fm_weak: tol::FM_WEAK,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    /// Directory for CSV detail files and the JSON summary.
    pub dir: PathBuf,
    pub summary: String,
}

impl Default for Output {
    fn default() -> Self {
        Output {
            dir: PathBuf::from("maglab-out"),
            summary: "summary.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub system: SystemSpec,
    pub suites: Vec<Suite>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub execution: ExecutionMode,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub steps: Steps,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Output,
}

impl RunConfig {
    /// All defaults for the given suites on the given builtin.
    pub fn new(system: SystemSpec, suites: Vec<Suite>) -> Self {
        RunConfig {
            system,
            suites,
            seed: 0,
            execution: ExecutionMode::default(),
            grids: Grids::default(),
            steps: Steps::default(),
            tolerances: Tolerances::default(),
            output: Output::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.system.build()?;
        let g = &self.grids;
        if g.points == 0 || g.pestov_samples == 0 || g.poincare_samples == 0 {
            return Err(ConfigError::Invalid("sample counts must be positive".into()));
        }
        if !(g.jacobi_time > 0.0 && g.jacobi_dt > 0.0) {
            return Err(ConfigError::Invalid("jacobi_time and jacobi_dt must be positive".into()));
        }
        if !(self.steps.bracket > 0.0 && self.steps.jacobi_fd > 0.0) {
            return Err(ConfigError::Invalid("steps must be positive".into()));
        }
        Ok(())
    }

    pub fn exec(&self) -> Execution {
        self.execution.into()
    }
}
