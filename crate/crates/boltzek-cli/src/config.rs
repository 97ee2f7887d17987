//! Run configuration, read from TOML.

use crate::error::{CliError, CliResult};
use boltzek::discretization::Scheme;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Landscape,
    Predict,
    Spectrum,
    Quasimode,
    Semigroup,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Landscape, Stage::Predict, Stage::Spectrum, Stage::Quasimode, Stage::Semigroup];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Landscape => "landscape",
            Stage::Predict => "predict",
            Stage::Spectrum => "spectrum",
            Stage::Quasimode => "quasimode",
            Stage::Semigroup => "semigroup",
        }
    }

    pub fn prerequisite(self) -> Option<Stage> {
        match self {
            Stage::Landscape => None,
            Stage::Predict => Some(Stage::Landscape),
            Stage::Spectrum | Stage::Quasimode => Some(Stage::Predict),
            Stage::Semigroup => Some(Stage::Spectrum),
        }
    }

    /// Artifact written by the stage.
    pub fn artifact(self) -> &'static str {
        match self {
            Stage::Landscape => "labeling.json",
            Stage::Predict => "ek.json",
            Stage::Spectrum => "spectrum.csv",
            Stage::Quasimode => "quasimode.csv",
            Stage::Semigroup => "timeseries.csv",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s.trim())
            .ok_or_else(|| CliError::config("stages", format!("unknown stage '{s}'")))
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    /// `double_well`, `tilted_double_well`, `triple_well` or `tilted_double_well_2d`.
    pub builtin: Option<String>,
    /// One-dimensional polynomial, increasing degree.
    pub coefficients: Option<Vec<f64>>,
    pub window: Option<[f64; 2]>,
    /// Landscape grid points per axis.
    pub resolution: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollisionSpec {
    /// `mild_relaxation`, `linear`, or an expression in `t`.
    pub rho: String,
    /// Multiplies the named rates.
    pub scale: f64,
    /// Constant symmetric matrix `M_0`; replaces `rho` when present.
    pub m0: Option<Vec<Vec<f64>>>,
    /// Coercivity constant `C`.
    pub coercivity: f64,
    /// Hermite levels checked for coercivity.
    pub check_levels: usize,
}

impl Default for CollisionSpec {
    fn default() -> Self {
        Self { rho: "mild_relaxation".into(), scale: 1.0, m0: None, coercivity: 2.0, check_levels: 200 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub nx: usize,
    pub n_hermite: usize,
    pub scheme: Scheme,
    pub window: Option<[f64; 2]>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { nx: 400, n_hermite: 30, scheme: Scheme::Staggered, window: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    /// Eigenvalues to compute; `n0 + 2` when absent.
    pub count: Option<usize>,
    pub c: f64,
    pub ctilde: f64,
    /// Points per circle of the resolvent probe; 0 disables it.
    pub resolvent_samples: usize,
    pub tol: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { count: None, c: 1.5, ctilde: 1.0, resolvent_samples: 16, tol: 1e-12 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuasimodeConfig {
    pub gamma_factor: f64,
    pub levels: usize,
    pub gh_nodes: usize,
    pub plot_nx: usize,
    pub plot_nv: usize,
}

impl Default for QuasimodeConfig {
    fn default() -> Self {
        Self { gamma_factor: 10.0, levels: 40, gh_nodes: 120, plot_nx: 121, plot_nv: 41 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SemigroupConfig {
    /// Defaults to `h`.
    pub t_start: Option<f64>,
    /// Defaults to `30 h / lambda_1` with `lambda_1` the smallest nonzero eigenvalue.
    pub t_end: Option<f64>,
    pub steps_per_decade: usize,
    pub plateau_threshold: f64,
}

impl Default for SemigroupConfig {
    fn default() -> Self {
        Self { t_start: None, t_end: None, steps_per_decade: 200, plateau_threshold: 1e-3 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// `|lambda / lambda_EK - 1|` at the smallest `h`.
    pub ek_ratio: f64,
    /// Kernel eigenvalue relative to `|A|`.
    pub kernel: f64,
    /// Max/min of `h^2 |R|` across the sweep.
    pub resolvent_spread: f64,
    /// `|RQ / lambda_EK - 1|` at the smallest `h`.
    pub quasimode_band: f64,
    pub transport: f64,
    /// `|rate h / lambda_1 - 1|`.
    pub rate_band: f64,
    pub kernel_drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { ek_ratio: 0.25, kernel: 1e-11, resolvent_spread: 3.0, quasimode_band: 0.1, transport: 1e-10, rate_band: 0.1, kernel_drift: 1e-9 }
    }
}

fn default_seed() -> u64 {
    7
}

fn default_output() -> PathBuf {
    PathBuf::from("boltzek-out")
}

fn default_stages() -> Vec<Stage> {
    Stage::ALL.to_vec()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_stages")]
    pub stages: Vec<Stage>,
    pub h_list: Vec<f64>,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub collision: CollisionSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub quasimode: QuasimodeConfig,
    #[serde(default)]
    pub semigroup: SemigroupConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> CliResult<Self> {
        let de = toml::Deserializer::parse(s).map_err(|e| CliError::config("<document>", e.message().to_string()))?;
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(path, e.into_inner().message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::from_toml_str(&text)
    }

    pub fn has(&self, stage: Stage) -> bool {
        self.stages.contains(&stage)
    }

    /// Enabled stages in dependency order.
    pub fn ordered_stages(&self) -> Vec<Stage> {
        Stage::ALL.into_iter().filter(|s| self.has(*s)).collect()
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.version != CONFIG_VERSION {
            return Err(CliError::config("version", format!("unsupported version {}, expected {CONFIG_VERSION}", self.version)));
        }
        if self.h_list.is_empty() {
            return Err(CliError::config("h_list", "empty"));
        }
        for (i, &h) in self.h_list.iter().enumerate() {
            if !(h > 0.0 && h <= 0.5) {
                return Err(CliError::config(format!("h_list[{i}]"), format!("{h} not in (0, 0.5]")));
            }
        }
        if let Some(i) = self.h_list.windows(2).position(|w| w[1] >= w[0]) {
            return Err(CliError::config(format!("h_list[{}]", i + 1), "h_list must be strictly decreasing"));
        }
        if self.stages.is_empty() {
            return Err(CliError::config("stages", "no stage enabled"));
        }
        for s in &self.stages {
            if let Some(pre) = s.prerequisite() {
                if !self.has(pre) {
                    return Err(CliError::config("stages", format!("stage {s} needs {pre}")));
                }
            }
        }
        let p = &self.potential;
        match (&p.builtin, &p.coefficients) {
            (Some(_), Some(_)) => return Err(CliError::config("potential", "give either builtin or coefficients")),
            (None, None) => return Err(CliError::config("potential", "missing builtin or coefficients")),
            (None, Some(c)) => {
                if c.len() < 3 || c.iter().any(|x| !x.is_finite()) {
                    return Err(CliError::config("potential.coefficients", "need at least 3 finite coefficients"));
                }
                if p.window.is_none() {
                    return Err(CliError::config("potential.window", "required with coefficients"));
                }
            }
            (Some(_), None) => {}
        }
        if let Some([lo, hi]) = p.window {
            if lo >= hi {
                return Err(CliError::config("potential.window", "lower bound must be below upper bound"));
            }
        }
        if let Some(m0) = &self.collision.m0 {
            let n = m0.len();
            if n == 0 || m0.iter().any(|r| r.len() != n) {
                return Err(CliError::config("collision.m0", "must be a nonempty square matrix"));
            }
        }
        if self.collision.coercivity <= 0.0 {
            return Err(CliError::config("collision.coercivity", "must be positive"));
        }
        if self.spectrum.c <= self.spectrum.ctilde || self.spectrum.ctilde <= 0.0 {
            return Err(CliError::config("spectrum.c", "need c > ctilde > 0"));
        }
        if self.semigroup.steps_per_decade < 20 {
            return Err(CliError::config("semigroup.steps_per_decade", "need at least 20"));
        }
        Ok(())
    }
}
