//! Config file schema. TOML with an explicit schema version; unknown keys
//! are rejected so typos in scenario files fail loudly instead of silently
//! falling back to defaults.

use std::path::Path;

use serde::Deserialize;

use mest::harness::{FitSettings, Scenario, Thresholds};
use mest::scoring::ScoreRule;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub id: String,
    /// Master seed; the `--seed` flag overrides it. One of the two must be
    /// present (no silent time-seeding).
    pub seed: Option<u64>,
    pub scenario: Scenario,
    #[serde(default = "default_rule")]
    pub rule: ScoreRule,
    #[serde(default)]
    pub fit: FitSettings,
    pub simulate: Option<SimulateSection>,
    pub experiment: Option<ExperimentSection>,
    pub check: Option<CheckSection>,
}

fn default_rule() -> ScoreRule {
    ScoreRule::Log
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub n: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub n_schedule: Vec<usize>,
    pub replications: usize,
    #[serde(default)]
    pub thresholds: Option<Thresholds>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckSection {
    /// Suites to run: any of "doa-uniform", "min-divergence",
    /// "identifiability", "propriety", "tail-envelope".
    pub suites: Vec<String>,
    pub mc_size: usize,
    pub replications: usize,
    /// Threshold level for the minimum-divergence bound check.
    pub y_threshold: f64,
    pub r_schedule: Vec<usize>,
    pub n_schedule: Vec<usize>,
    pub propriety_pairs: usize,
    pub grid_points_per_dim: usize,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self {
            suites: vec!["identifiability".into(), "tail-envelope".into()],
            mc_size: 2000,
            replications: 200,
            y_threshold: 2.0,
            r_schedule: vec![100, 1000, 10_000],
            n_schedule: vec![250, 1000],
            propriety_pairs: 20,
            grid_points_per_dim: 3,
        }
    }
}

pub const SUPPORTED_SCHEMA_VERSION: u32 = 1;

/// Resolve a `{ type = "file", path = "..." }` covariate design into fixed
/// rows read from the file (relative paths resolve against the config file's
/// directory). Other designs pass through untouched.
fn resolve_file_design(value: &mut toml::Value, config_dir: &Path) -> Result<(), CliError> {
    let Some(design) = value
        .get_mut("scenario")
        .and_then(|s| s.get_mut("design"))
    else {
        return Ok(());
    };
    if design.get("type").and_then(|t| t.as_str()) != Some("file") {
        return Ok(());
    }
    let file = design
        .get("path")
        .and_then(|p| p.as_str())
        .ok_or_else(|| CliError::config("file design needs a `path` field".into()))?;
    let full = config_dir.join(file);
    let text = std::fs::read_to_string(&full)
        .map_err(|e| CliError::config(format!("covariate file {}: {e}", full.display())))?;
    let rows = mest::designs::read_covariate_rows(&text)
        .map_err(|e| CliError::config(format!("covariate file {}: {e}", full.display())))?;
    let rows_value = toml::Value::Array(
        rows.into_iter()
            .map(|r| toml::Value::Array(r.into_iter().map(toml::Value::Float).collect()))
            .collect(),
    );
    let mut table = toml::map::Map::new();
    table.insert("type".into(), toml::Value::String("fixed".into()));
    table.insert("rows".into(), rows_value);
    *design = toml::Value::Table(table);
    Ok(())
}

/// Load and validate a config file; errors carry the file position where
/// TOML can provide one.
pub fn load(path: &Path) -> Result<(RunConfig, String), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let mut value: toml::Value = toml::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    resolve_file_design(&mut value, path.parent().unwrap_or(Path::new(".")))?;
    let cfg: RunConfig = value
        .try_into()
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    if cfg.schema_version != SUPPORTED_SCHEMA_VERSION {
        return Err(CliError::config(format!(
            "unsupported schema_version {} (this build reads {})",
            cfg.schema_version, SUPPORTED_SCHEMA_VERSION
        )));
    }
    if cfg.id.is_empty() || cfg.id.contains(['/', '\\']) {
        return Err(CliError::config(
            "id must be a nonempty name without path separators".into(),
        ));
    }
    cfg.scenario
        .validate()
        .map_err(|e| CliError::config(format!("scenario: {e}")))?;
    cfg.scenario
        .check_rule(&cfg.rule)
        .map_err(|e| CliError::config(format!("rule: {e}")))?;
    Ok((cfg, text))
}

impl RunConfig {
    pub fn resolve_seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        flag.or(self.seed).ok_or_else(|| {
            CliError::config(
                "no seed: set `seed` in the config or pass --seed (runs are never time-seeded)"
                    .into(),
            )
        })
    }

    pub fn simulate_section(&self) -> Result<&SimulateSection, CliError> {
        self.simulate
            .as_ref()
            .ok_or_else(|| CliError::config("missing [simulate] section (field `simulate.n`)".into()))
    }

    pub fn experiment_section(&self) -> Result<&ExperimentSection, CliError> {
        self.experiment.as_ref().ok_or_else(|| {
            CliError::config(
                "missing [experiment] section (fields `experiment.n_schedule`, `experiment.replications`)"
                    .into(),
            )
        })
    }

    pub fn check_section(&self) -> CheckSection {
        self.check.clone().unwrap_or_default()
    }
}
