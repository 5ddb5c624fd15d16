//! Run configuration: TOML with one table per subcommand.
//!
//! ```toml
//! seed = 7
//!
//! [g_table]
//! b_grid = [0.0, 0.5, 1.0]
//! r_list = [8.0, 12.0, 16.0]
//!
//! [minimize]
//! kappa = 8.0
//! h_field = 4.0
//! profile = "constant(1)"
//! nodes = 65
//! ```
//!
//! Unknown keys are rejected with the offending line and column.

use std::path::{Path, PathBuf};

use glbulk::limit_g::{default_b_grid, default_r_list};
use glbulk::minimize::REDUCED_SPACING;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub g_table: Option<GTableConfig>,
    pub minimize: Option<MinimizeConfig>,
    pub verify: Option<VerifyConfig>,
    pub phase_check: Option<PhaseCheckConfig>,
    pub poisson_check: Option<PoissonCheckConfig>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct GTableConfig {
    pub b_grid: Vec<f64>,
    pub r_list: Vec<f64>,
    /// Grid spacing of the cell problems.
    pub h: f64,
    pub out: Option<PathBuf>,
}

impl Default for GTableConfig {
    fn default() -> Self {
        Self {
            b_grid: default_b_grid(),
            r_list: default_r_list(),
            h: REDUCED_SPACING,
            out: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MinimizeConfig {
    pub kappa: f64,
    pub h_field: f64,
    pub profile: String,
    pub nodes: usize,
    #[serde(default = "unit_side")]
    pub side: [f64; 2],
    /// Needed for the `ψ⁴` right-hand side; left blank without it.
    pub table: Option<PathBuf>,
    /// Writes `x, y, |ψ|` per node.
    pub dump_psi: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub table: PathBuf,
    pub kappas: Vec<f64>,
    /// `H/κ`, shared by every run.
    pub ratio: f64,
    pub profile: String,
    /// Nodes along `x₁`, one entry per `κ`.
    pub nodes: Vec<usize>,
    #[serde(default = "unit_side")]
    pub side: [f64; 2],
    /// Cell side and cutoff; the `κ`-schedule is used when absent.
    pub ell: Option<f64>,
    pub eps: Option<f64>,
    /// Bound on `|E_min|/κ²` when the bulk prediction vanishes.
    #[serde(default = "default_zero_tol")]
    pub zero_tol: f64,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseCheckConfig {
    pub profile: String,
    pub nodes: usize,
    #[serde(default = "unit_side")]
    pub side: [f64; 2],
    pub x0: [f64; 2],
    /// Expansion point; defaults to `x0`.
    pub x_tilde: Option<[f64; 2]>,
    pub ells: Vec<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoissonCheckConfig {
    pub nodes: Vec<usize>,
    pub out: Option<PathBuf>,
}

impl Default for PoissonCheckConfig {
    fn default() -> Self {
        Self {
            nodes: vec![17, 33, 65],
            out: None,
        }
    }
}

fn unit_side() -> [f64; 2] {
    [1.0, 1.0]
}

fn default_zero_tol() -> f64 {
    0.05
}

impl Config {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("{origin}: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }
}

/// One-line rendering of a section for provenance comments.
pub fn one_line<T: Serialize>(seed: u64, section: &T) -> String {
    let body = toml::to_string(section).unwrap_or_default();
    let mut parts = vec![format!("seed = {seed}")];
    parts.extend(
        body.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from),
    );
    parts.join("; ")
}
