use std::path::{Path, PathBuf};

use apfeas_core::problems::FamilySpec;
use apfeas_core::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Aphl,
    Apm,
    Bregman,
    PlainAp,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Aphl => "aphl",
            Method::Apm => "apm",
            Method::Bregman => "bregman",
            Method::PlainAp => "plain_ap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    #[default]
    Entropy,
    FermiDirac,
}

impl KernelChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelChoice::Entropy => "entropy",
            KernelChoice::FermiDirac => "fermi_dirac",
        }
    }
}

/// Settings read only by the Bregman method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BregmanOptions {
    pub kernel: KernelChoice,
    /// The generated start is pushed this far into the kernel's domain.
    pub interior_margin: f64,
}

impl Default for BregmanOptions {
    fn default() -> Self {
        Self { kernel: KernelChoice::Entropy, interior_margin: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub plot: bool,
    /// Fill the timing columns of CSV outputs. Off by default so reruns are byte-identical;
    /// the summary JSON and the bench text table always carry wall time.
    pub record_timing: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), plot: false, record_timing: false }
    }
}

/// One solve of one generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,
    #[serde(default)]
    pub seed: u64,
    pub problem: FamilySpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub bregman: BregmanOptions,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A group of bench cells: every method on every seed of one problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchEntry {
    pub problem: FamilySpec,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default)]
    pub suite: Vec<BenchEntry>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub bregman: BregmanOptions,
    #[serde(default)]
    pub output: OutputConfig,
    /// Worker threads; 0 picks the number of available cores.
    #[serde(default)]
    pub threads: usize,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.solver.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_toml(&read(path)?)
    }
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.solver.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let cells: usize = cfg.suite.iter().map(|e| e.methods.len() * e.seeds.len()).sum();
        if cells == 0 {
            return Err(CliError::Config("bench suite is empty".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_toml(&read(path)?)
    }
}
