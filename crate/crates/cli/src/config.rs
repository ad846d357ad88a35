//! Strict experiment configuration: TOML text, dotted-path overrides, content hash.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stablefp::analysis::RateWindow;
use stablefp::fpe::{KernelDescriptor, KernelSpec, NegativityPolicy, SolverConfig};
use stablefp::particles::{DriftMode, EulerConfig, Interpolation};
use stablefp::stable::StableParams;
use stablefp::Grid;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub alpha: f64,
    pub dim: usize,
    pub grid: GridBlock,
    pub kernel: KernelDescriptor,
    pub solver: SolverBlock,
    pub initial: InitialBlock,
    pub particles: Option<ParticleBlock>,
    pub analysis: Option<AnalysisBlock>,
    pub sampling: Option<SamplingBlock>,
    pub pathwise: Option<PathwiseBlock>,
    pub kbe: Option<KbeBlock>,
    pub besov: Option<BesovBlock>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub n: usize,
    /// Side length of the periodic cell.
    pub side: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "default_order")]
    pub order: u8,
    #[serde(default = "default_true")]
    pub dealias: bool,
    #[serde(default = "default_policy")]
    pub negativity_policy: NegativityPolicy,
}

/// Periodized Gaussian centred at the origin.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    pub width: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleBlock {
    pub count: usize,
    pub bandwidth: f64,
    pub drift_mode: DriftMode,
    #[serde(default = "default_interp")]
    pub interpolation: Interpolation,
    /// Observation times; the horizon is always observed.
    #[serde(default)]
    pub observe: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    /// Regularity indices delta for `B^delta_{1,inf}` norms.
    #[serde(default)]
    pub deltas: Vec<f64>,
    /// Observation times for `fpe`; the horizon is always observed.
    #[serde(default)]
    pub observe: Vec<f64>,
    pub window: Option<RateWindow>,
    /// Largest accepted compensated spread in `rate`.
    pub spread_max: Option<f64>,
    /// Accepted shortfall of the fitted slope below `-delta/alpha`.
    #[serde(default = "default_slack")]
    pub slope_slack: f64,
    pub beta: Option<f64>,
    /// Time integrability exponent; `inf` allowed.
    pub q: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingBlock {
    pub count: usize,
    pub dt: f64,
    /// Frequencies probed; each has `dim` components.
    pub frequencies: Vec<Vec<f64>>,
    /// Tolerance is `factor / sqrt(count)`.
    #[serde(default = "default_tol_factor")]
    pub tolerance_factor: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathwiseBlock {
    pub x0: Vec<f64>,
    /// Second start for the gap series; omitted means no gap series.
    pub x0_other: Option<Vec<f64>>,
    pub h0: f64,
    pub levels: usize,
    pub samples: usize,
}

/// Terminal datum `cos(2 pi m . x / side)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KbeBlock {
    pub mode: Vec<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesovBlock {
    pub source: FieldSource,
    /// Triples `[s, p, q]`.
    pub indices: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSource {
    Synthetic { beta: f64, seed: u64 },
    Initial,
    File { path: PathBuf },
}

fn default_order() -> u8 {
    2
}

fn default_true() -> bool {
    true
}

fn default_policy() -> NegativityPolicy {
    NegativityPolicy::Report
}

fn default_interp() -> Interpolation {
    Interpolation::Linear
}

fn default_slack() -> f64 {
    0.2
}

fn default_tol_factor() -> f64 {
    4.0
}

impl ExperimentConfig {
    /// Parse `text`, apply `key.path=value` overrides, then validate.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(CliError::config(format!("name must be a non-empty path component, got {:?}", self.name)));
        }
        StableParams::new(self.alpha, self.dim)?;
        let grid = self.grid()?;
        self.solver_config().validate()?;
        if !(self.solver.horizon > 0.0 && self.solver.horizon.is_finite()) {
            return Err(CliError::config(format!("solver.horizon must be positive, got {}", self.solver.horizon)));
        }
        if !(self.initial.width > 0.0) {
            return Err(CliError::config(format!("initial.width must be positive, got {}", self.initial.width)));
        }
        self.kernel_spec().validate()?;
        if let Some(p) = &self.particles {
            if p.count == 0 {
                return Err(CliError::config("particles.count must be at least 1"));
            }
            self.euler_config().unwrap().validate(&grid)?;
        }
        if let Some(a) = &self.analysis {
            if let Some(w) = a.window {
                w.times(self.solver.dt)?;
            }
        }
        if let Some(s) = &self.sampling {
            if s.count == 0 || !(s.dt > 0.0) || s.frequencies.iter().any(|xi| xi.len() != self.dim) {
                return Err(CliError::config(format!(
                    "sampling needs count >= 1, dt > 0 and {}-component frequencies",
                    self.dim
                )));
            }
        }
        if let Some(p) = &self.pathwise {
            let bad = |x: &Vec<f64>| x.len() != self.dim;
            if bad(&p.x0) || p.x0_other.as_ref().is_some_and(bad) {
                return Err(CliError::config(format!("pathwise starts must have {} components", self.dim)));
            }
        }
        if let Some(k) = &self.kbe {
            if k.mode.len() != self.dim {
                return Err(CliError::config(format!("kbe.mode must have {} components", self.dim)));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::new(self.dim, self.grid.n, self.grid.side)?)
    }

    pub fn params(&self) -> StableParams {
        StableParams::new(self.alpha, self.dim).expect("validated")
    }

    pub fn kernel_spec(&self) -> KernelSpec {
        self.kernel.into()
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            dt: self.solver.dt,
            dealias: self.solver.dealias,
            negativity_policy: self.solver.negativity_policy,
            order: self.solver.order,
        }
    }

    pub fn euler_config(&self) -> Option<EulerConfig> {
        self.particles.as_ref().map(|p| EulerConfig {
            dt: self.solver.dt,
            drift_mode: p.drift_mode,
            bandwidth: p.bandwidth,
            interpolation: p.interpolation,
        })
    }

    pub fn analysis(&self) -> AnalysisBlock {
        self.analysis.clone().unwrap_or(AnalysisBlock {
            deltas: Vec::new(),
            observe: Vec::new(),
            window: None,
            spread_max: None,
            slope_slack: default_slack(),
            beta: None,
            q: None,
        })
    }

    /// Canonical TOML text of the effective configuration (overrides and defaults applied).
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`Self::canonical`].
    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.canonical()))
    }
}

/// `a.b.c=value`; the value is read as a TOML literal, falling back to a bare string.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override {spec:?} is not key=value")))?;
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let keys: Vec<&str> = path.trim().split('.').collect();
    let (last, parents) = keys.split_last().unwrap();
    let mut cur = table;
    for k in parents {
        let entry = cur.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::config(format!("override {path:?}: {k:?} is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
