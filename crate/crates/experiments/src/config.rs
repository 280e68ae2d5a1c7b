//! Experiment configuration: TOML file, CLI overrides, per-experiment defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use stmg_core::multigrid::SolverConfig;
use stmg_core::optimisation::RestartMode;
use stmg_core::problems::{Problem, DEFAULT_RESOLUTION};
use stmg_core::rediscretisation::RediscretisationMethod;
use stmg_core::transfer::InterpolationMethod;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown experiment '{0}' (expected one of anisotropy-sweep, contrast-sweep, levels-sweep, feature-sweep, optimise)")]
    UnknownExperiment(String),
    #[error("no experiment given")]
    MissingExperiment,
    #[error("invalid level range '{0}': expected A..B with 2 <= A <= B")]
    LevelRange(String),
    #[error("invalid method list '{0}'")]
    Methods(String),
    #[error("invalid restart mode '{0}' (expected warm or cold)")]
    Restart(String),
    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("config file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    AnisotropySweep,
    ContrastSweep,
    LevelsSweep,
    FeatureSweep,
    Optimise,
}

impl Experiment {
    pub const ALL: [Self; 5] = [
        Self::AnisotropySweep,
        Self::ContrastSweep,
        Self::LevelsSweep,
        Self::FeatureSweep,
        Self::Optimise,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::AnisotropySweep => "anisotropy-sweep",
            Self::ContrastSweep => "contrast-sweep",
            Self::LevelsSweep => "levels-sweep",
            Self::FeatureSweep => "feature-sweep",
            Self::Optimise => "optimise",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s.trim())
            .ok_or_else(|| ConfigError::UnknownExperiment(s.to_string()))
    }
}

/// Inclusive range of level counts, written `A..B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelRange {
    pub first: usize,
    pub last: usize,
}

impl LevelRange {
    pub fn single(n: usize) -> Self {
        Self { first: n, last: n }
    }

    pub fn iter(self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }
}

impl FromStr for LevelRange {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let err = || ConfigError::LevelRange(s.to_string());
        let t = s.trim();
        let (a, b) = match t.split_once("..") {
            Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
            None => (t, t),
        };
        let first: usize = a.trim().parse().map_err(|_| err())?;
        let last: usize = b.trim().parse().map_err(|_| err())?;
        if first < 2 || first > last {
            return Err(err());
        }
        Ok(Self { first, last })
    }
}

impl fmt::Display for LevelRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.first, self.last)
    }
}

/// Comma-separated method names such as `CK,CR,BP`, or `all`.
pub fn parse_methods(s: &str) -> Result<Vec<RediscretisationMethod>, ConfigError> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(RediscretisationMethod::all().to_vec());
    }
    let methods = s
        .split(',')
        .map(|m| m.trim().parse::<RediscretisationMethod>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| ConfigError::Methods(s.to_string()))?;
    if methods.is_empty() {
        return Err(ConfigError::Methods(s.to_string()));
    }
    Ok(methods)
}

pub fn parse_restart(s: &str) -> Result<RestartMode, ConfigError> {
    s.trim().parse().map_err(|_| ConfigError::Restart(s.to_string()))
}

/// Contents of a config file. Every field is optional and named as in
/// [`ExperimentConfig`].
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<String>,
    pub problems: Option<Vec<u8>>,
    pub methods: Option<Vec<String>>,
    pub levels: Option<String>,
    pub restarts: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub resolution: Option<usize>,
    pub lambda_crit: Option<f64>,
    pub smoothing: Option<usize>,
    pub omega: Option<f64>,
    pub tolerance: Option<f64>,
    pub max_cycles: Option<usize>,
    pub lambda_exponents: Option<[i32; 2]>,
    pub points_per_octave: Option<u32>,
    pub gap_exponents: Option<[u32; 2]>,
    pub resolution_guards: Option<Vec<usize>>,
    pub diagnostics: Option<bool>,
    pub optimisation_cycles: Option<usize>,
    pub snapshot_cycles: Option<Vec<usize>>,
}

impl ConfigFile {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

/// Values given on the command line. They win over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment: Option<String>,
    pub problem: Option<u8>,
    pub methods: Option<String>,
    pub restart: Option<String>,
    pub levels: Option<String>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub problems: Vec<u8>,
    /// For the two-grid sweeps only the first method is used, for its reassembly rule.
    pub methods: Vec<RediscretisationMethod>,
    pub levels: LevelRange,
    pub restarts: Vec<RestartMode>,
    pub out: PathBuf,
    pub resolution: usize,
    pub lambda_crit: f64,
    pub solver: SolverConfig,
    /// Anisotropy sweep: lambda = 2^k for k in this inclusive range.
    pub lambda_exponents: (i32, i32),
    /// Contrast sweep: final times are powers of 2^(1/points_per_octave).
    pub points_per_octave: u32,
    /// Feature sweep: gap fraction 2^(-n/3) for n in this inclusive range.
    pub gap_exponents: (u32, u32),
    pub resolution_guards: Vec<usize>,
    /// Contrast sweep: also report the alternative lambda_eff formulas.
    pub diagnostics: bool,
    pub optimisation_cycles: usize,
    pub snapshot_cycles: Vec<usize>,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let method = |s: &str| s.parse::<RediscretisationMethod>().expect("known method");
        let base = Self {
            experiment,
            problems: vec![],
            methods: vec![method("CK")],
            levels: LevelRange::single(2),
            restarts: vec![RestartMode::Warm],
            out: PathBuf::from("results"),
            resolution: DEFAULT_RESOLUTION,
            lambda_crit: 0.25,
            solver: SolverConfig::default(),
            lambda_exponents: (-10, 10),
            points_per_octave: 4,
            gap_exponents: (6, 24),
            resolution_guards: vec![8, 16, 32, 64, 128],
            diagnostics: false,
            optimisation_cycles: 500,
            snapshot_cycles: vec![0, 10, 50],
        };
        match experiment {
            Experiment::AnisotropySweep => Self { problems: vec![0], ..base },
            Experiment::ContrastSweep => Self { problems: (1..=6).collect(), ..base },
            Experiment::LevelsSweep => Self {
                problems: vec![7, 8, 9],
                methods: RediscretisationMethod::all().to_vec(),
                levels: LevelRange { first: 2, last: 10 },
                ..base
            },
            Experiment::FeatureSweep => Self {
                problems: vec![8],
                methods: vec![method("CK"), method("CR")],
                levels: LevelRange::single(6),
                solver: SolverConfig::default().with_smoothing(20),
                ..base
            },
            Experiment::Optimise => Self {
                methods: vec![method("BR"), method("CR"), method("CP")],
                levels: LevelRange::single(6),
                restarts: vec![RestartMode::Warm, RestartMode::Cold],
                solver: SolverConfig::default().with_smoothing(20),
                ..base
            },
        }
    }

    /// Defaults for the chosen experiment, then the file, then the CLI.
    pub fn resolve(file: ConfigFile, cli: Overrides) -> Result<Self, ConfigError> {
        let name = cli.experiment.or(file.experiment).ok_or(ConfigError::MissingExperiment)?;
        let mut cfg = Self::defaults(name.parse()?);

        if let Some(p) = file.problems {
            cfg.problems = p;
        }
        if let Some(m) = file.methods {
            cfg.methods = parse_methods(&m.join(","))?;
        }
        if let Some(l) = file.levels {
            cfg.levels = l.parse()?;
        }
        if let Some(r) = file.restarts {
            cfg.restarts = r.iter().map(|s| parse_restart(s)).collect::<Result<_, _>>()?;
        }
        if let Some(o) = file.out {
            cfg.out = o;
        }
        if let Some(v) = file.resolution {
            cfg.resolution = v;
        }
        if let Some(v) = file.lambda_crit {
            cfg.lambda_crit = v;
        }
        if let Some(v) = file.smoothing {
            cfg.solver = cfg.solver.with_smoothing(v);
        }
        if let Some(v) = file.omega {
            cfg.solver.omega = v;
        }
        if let Some(v) = file.tolerance {
            cfg.solver.tolerance = v;
        }
        if let Some(v) = file.max_cycles {
            cfg.solver.max_cycles = v;
        }
        if let Some([a, b]) = file.lambda_exponents {
            cfg.lambda_exponents = (a, b);
        }
        if let Some(v) = file.points_per_octave {
            cfg.points_per_octave = v;
        }
        if let Some([a, b]) = file.gap_exponents {
            cfg.gap_exponents = (a, b);
        }
        if let Some(v) = file.resolution_guards {
            cfg.resolution_guards = v;
        }
        if let Some(v) = file.diagnostics {
            cfg.diagnostics = v;
        }
        if let Some(v) = file.optimisation_cycles {
            cfg.optimisation_cycles = v;
        }
        if let Some(v) = file.snapshot_cycles {
            cfg.snapshot_cycles = v;
        }

        if let Some(p) = cli.problem {
            cfg.problems = vec![p];
        }
        if let Some(m) = cli.methods {
            cfg.methods = parse_methods(&m)?;
        }
        if let Some(r) = cli.restart {
            cfg.restarts = vec![parse_restart(&r)?];
        }
        if let Some(l) = cli.levels {
            cfg.levels = l.parse()?;
        }
        if let Some(o) = cli.out {
            cfg.out = o;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.solver.validate().map_err(|e| invalid("solver", e.to_string()))?;
        if self.methods.is_empty() {
            return Err(ConfigError::Methods(String::new()));
        }
        if self.resolution < 2 || !self.resolution.is_power_of_two() {
            return Err(invalid("resolution", "must be a power of two, at least 2"));
        }
        if !(self.lambda_crit > 0.0) {
            return Err(invalid("lambda_crit", "must be positive"));
        }
        for &p in &self.problems {
            Problem::preset(p).map_err(|e| invalid("problems", e.to_string()))?;
        }
        let problems_in = |allowed: &[u8], what: &str| -> Result<(), ConfigError> {
            if self.problems.is_empty() || self.problems.iter().any(|p| !allowed.contains(p)) {
                return Err(invalid("problems", format!("{} takes {what}", self.experiment)));
            }
            Ok(())
        };
        match self.experiment {
            Experiment::AnisotropySweep => {
                problems_in(&[0], "problem 0 only")?;
                if self.methods[0].interp != InterpolationMethod::Causal {
                    return Err(invalid("methods", "full space-time coarsening needs causal interpolation"));
                }
                if self.lambda_exponents.0 > self.lambda_exponents.1 {
                    return Err(invalid("lambda_exponents", "empty range"));
                }
            }
            Experiment::ContrastSweep => {
                problems_in(&[0, 1, 2, 3, 4, 5, 6], "problems 0 to 6")?;
                if self.points_per_octave == 0 {
                    return Err(invalid("points_per_octave", "must be at least 1"));
                }
            }
            Experiment::LevelsSweep => problems_in(&[0, 1, 2, 3, 4, 5, 6, 7, 8, 9], "problems 0 to 9")?,
            Experiment::FeatureSweep => {
                problems_in(&[8, 9], "the gap problems 8 and 9")?;
                if self.gap_exponents.0 > self.gap_exponents.1 || self.gap_exponents.0 == 0 {
                    return Err(invalid("gap_exponents", "need 1 <= first <= last"));
                }
                if self.resolution_guards.is_empty() {
                    return Err(invalid("resolution_guards", "must not be empty"));
                }
            }
            Experiment::Optimise => {
                if !self.problems.is_empty() {
                    return Err(invalid("problems", "optimise uses its own fixed setup"));
                }
                if self.restarts.is_empty() {
                    return Err(invalid("restarts", "must not be empty"));
                }
                if self.optimisation_cycles == 0 {
                    return Err(invalid("optimisation_cycles", "must be at least 1"));
                }
            }
        }
        Ok(())
    }
}

/// One line, used as the `#` comment heading every CSV.
impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: Vec<String>| v.join(",");
        write!(
            f,
            "experiment={} problems={} methods={} levels={} restarts={} resolution={} lambda_crit={} \
             pre_smooth={} post_smooth={} omega={} tolerance={:e} divergence={:e} max_cycles={} \
             lambda_exponents={}..{} points_per_octave={} gap_exponents={}..{} resolution_guards={} \
             diagnostics={} optimisation_cycles={} snapshot_cycles={}",
            self.experiment,
            join(self.problems.iter().map(|p| p.to_string()).collect()),
            join(self.methods.iter().map(|m| m.name()).collect()),
            self.levels,
            join(self.restarts.iter().map(|r| r.to_string()).collect()),
            self.resolution,
            self.lambda_crit,
            self.solver.pre_smooth,
            self.solver.post_smooth,
            self.solver.omega,
            self.solver.tolerance,
            self.solver.divergence_threshold,
            self.solver.max_cycles,
            self.lambda_exponents.0,
            self.lambda_exponents.1,
            self.points_per_octave,
            self.gap_exponents.0,
            self.gap_exponents.1,
            join(self.resolution_guards.iter().map(|m| m.to_string()).collect()),
            self.diagnostics,
            self.optimisation_cycles,
            join(self.snapshot_cycles.iter().map(|c| c.to_string()).collect()),
        )
    }
}
