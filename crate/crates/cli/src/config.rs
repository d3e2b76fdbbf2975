//! TOML run configuration. Every section is optional; missing keys take the
//! defaults below. Unknown keys are rejected so typos surface as errors.

use std::path::{Path, PathBuf};

use awgnbc_core::symmetric::SearchConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub fig_blocklength: FigBlocklength,
    pub fig_sumrate: FigSumrate,
    pub rate_region: RateRegion,
    pub simulate: Simulate,
    pub optimize: Optimize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FigBlocklength {
    pub power: f64,
    pub users: usize,
    pub points: usize,
    /// `γ = γ_lb + margin·(1−γ_lb)`.
    pub margin: f64,
    /// When set, evaluate only `R = C_nf + fraction·Δ`.
    pub fraction: Option<f64>,
}

impl Default for FigBlocklength {
    fn default() -> Self {
        Self { power: 10.0, users: 2, points: 25, margin: 0.2, fraction: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Search {
    pub lmin: usize,
    pub lmax: usize,
    pub beta_grid: usize,
    pub gamma_grid: usize,
    pub refine_rounds: usize,
}

impl Default for Search {
    fn default() -> Self {
        let d = SearchConfig::default();
        Self { lmin: d.lmin, lmax: d.lmax, beta_grid: d.beta_grid, gamma_grid: d.gamma_grid, refine_rounds: d.refine_rounds }
    }
}

impl Search {
    pub fn to_core(&self, lmax: Option<usize>) -> SearchConfig {
        SearchConfig {
            lmin: self.lmin,
            lmax: lmax.unwrap_or(self.lmax),
            beta_grid: self.beta_grid,
            gamma_grid: self.gamma_grid,
            refine_rounds: self.refine_rounds,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FigSumrate {
    pub power: f64,
    pub users: usize,
    pub sigma_n2: Vec<f64>,
    pub search: Search,
}

impl Default for FigSumrate {
    fn default() -> Self {
        Self { power: 10.0, users: 2, sigma_n2: vec![1e-3, 1e-4, 1e-5, 1e-6], search: Search::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateRegion {
    pub power: f64,
    pub forward_noise1: f64,
    pub forward_noise2: f64,
    pub feedback_noise1: f64,
    pub points: usize,
}

impl Default for RateRegion {
    fn default() -> Self {
        Self { power: 10.0, forward_noise1: 1.0, forward_noise2: 1.0, feedback_noise1: 0.0, points: 101 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    General,
    #[default]
    Symmetric,
    Sk,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainRule {
    #[default]
    Optimal,
    NoiselessLimit,
    LargeBlocklength,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymmetricSection {
    pub users: usize,
    pub ltilde: usize,
    pub beta: f64,
    pub gamma: f64,
    pub power: f64,
    pub feedback_noise: f64,
    pub gains: GainRule,
}

impl Default for SymmetricSection {
    fn default() -> Self {
        Self { users: 2, ltilde: 8, beta: 0.5, gamma: 0.5, power: 10.0, feedback_noise: 1e-3, gains: GainRule::Optimal }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkSection {
    pub blocklength: usize,
    pub power: f64,
    pub forward_noise: f64,
    pub feedback_noise: f64,
    pub delta_is: f64,
}

impl Default for SkSection {
    fn default() -> Self {
        Self { blocklength: 50, power: 10.0, forward_noise: 1.0, feedback_noise: 1e-2, delta_is: 0.0 }
    }
}

/// An explicit code. `feedback_noise` entries that are negative mean "no link".
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneralSection {
    pub power: f64,
    pub forward_noise: Vec<f64>,
    pub feedback_noise: Vec<f64>,
    pub gains: Vec<Vec<f64>>,
    pub filters: Vec<Vec<Vec<f64>>>,
    pub combiners: Vec<Vec<f64>>,
    pub msg_power: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Simulate {
    pub scheme: Scheme,
    pub trials: usize,
    pub pam_order: usize,
    pub hard_decision: bool,
    pub symmetric: SymmetricSection,
    pub sk: SkSection,
    pub general: GeneralSection,
}

impl Default for Simulate {
    fn default() -> Self {
        Self {
            scheme: Scheme::Symmetric,
            trials: 100_000,
            pam_order: 2,
            hard_decision: false,
            symmetric: SymmetricSection::default(),
            sk: SkSection::default(),
            general: GeneralSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Optimize {
    pub power: f64,
    pub users: usize,
    pub sigma_n2: f64,
    pub search: Search,
}

impl Default for Optimize {
    fn default() -> Self {
        Self { power: 10.0, users: 2, sigma_n2: 1e-5, search: Search::default() }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(e.to_string()))
    }
}
