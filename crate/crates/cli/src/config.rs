use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// A failed run: the message goes to stderr, the code becomes the exit status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub const CHECK_FAILED: u8 = 1;
    pub const USAGE: u8 = 2;

    pub fn usage(message: impl fmt::Display) -> Self {
        CliError { code: Self::USAGE, message: message.to_string() }
    }

    pub fn failed(message: impl fmt::Display) -> Self {
        CliError { code: Self::CHECK_FAILED, message: message.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// Flags shared by every subcommand. Each may also come from the JSON file
/// given by `--config`; flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat-connection parameters, one per periodic pair (a single value applies to all)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lambda: Option<Vec<f64>>,
    /// Fourier truncation |n| <= kmax
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Grid points per noncompact direction (odd, at least 3)
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Grid half-width L of [-L, L]
    #[arg(long)]
    pub grid_l: Option<f64>,
    /// Rotational constant I of the spherical top
    #[arg(long)]
    pub inertia: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Human-readable table instead of JSON/CSV
    #[arg(long)]
    pub pretty: bool,
    /// JSON file supplying any of the flags
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Everything a config file may set. Keys are the flag names with dashes
/// replaced by underscores.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lambda: Option<Vec<f64>>,
    pub kmax: Option<usize>,
    pub grid_n: Option<usize>,
    pub grid_l: Option<f64>,
    pub inertia: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub pretty: Option<bool>,
    pub f: Option<String>,
    pub g: Option<String>,
    pub structure: Option<String>,
    pub bivector: Option<PathBuf>,
    pub at: Option<Vec<String>>,
    pub samples: Option<usize>,
    pub hamiltonian: Option<String>,
    pub phase_space: Option<String>,
    pub ladder: Option<Vec<usize>>,
    pub matrix_out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {}", path.display(), e)))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("bad config {}: {}", path.display(), e)))
    }
}

/// Resolved shared settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub lambda: Vec<f64>,
    pub kmax: usize,
    pub grid_n: usize,
    pub grid_l: f64,
    pub inertia: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub pretty: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            lambda: vec![0.0],
            kmax: 4,
            grid_n: 201,
            grid_l: 10.0,
            inertia: 1.0,
            seed: 42,
            out: None,
            format: Format::Json,
            pretty: false,
        }
    }
}

impl CommonArgs {
    /// Reads the config file, if any, and overlays the flags on it.
    pub fn resolve(&self) -> Result<(Settings, RunConfig), CliError> {
        let file = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let d = Settings::default();
        let settings = Settings {
            lambda: self.lambda.clone().or_else(|| file.lambda.clone()).unwrap_or(d.lambda),
            kmax: self.kmax.or(file.kmax).unwrap_or(d.kmax),
            grid_n: self.grid_n.or(file.grid_n).unwrap_or(d.grid_n),
            grid_l: self.grid_l.or(file.grid_l).unwrap_or(d.grid_l),
            inertia: self.inertia.or(file.inertia).unwrap_or(d.inertia),
            seed: self.seed.or(file.seed).unwrap_or(d.seed),
            out: self.out.clone().or_else(|| file.out.clone()),
            format: self.format.or(file.format).unwrap_or(d.format),
            pretty: self.pretty || file.pretty.unwrap_or(false),
        };
        if settings.lambda.is_empty() {
            return Err(CliError::usage("--lambda needs at least one value"));
        }
        Ok((settings, file))
    }
}
