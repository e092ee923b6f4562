use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizers::GaConfig;
use crate::problems::ProblemSpec;
use crate::scalarise::DEFAULT_RHO;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    /// One GP on augmented Tchebycheff values, closed-form EI.
    MonoEI,
    /// m GPs, Gumbel fit to the scalarised distribution, MC EI.
    MultiEiGumbel,
    /// m GPs, MC EI directly over max-of-Gaussians draws (diagnostic
    /// extension isolating the Gumbel step).
    MultiEiExactMC,
    /// m GPs, MC expected hypervolume improvement.
    MultiEHVI,
    /// Uniform random proposals.
    RandomSearch,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::MonoEI,
        Algorithm::MultiEiGumbel,
        Algorithm::MultiEiExactMC,
        Algorithm::MultiEHVI,
        Algorithm::RandomSearch,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::MonoEI => "MonoEI",
            Algorithm::MultiEiGumbel => "MultiEiGumbel",
            Algorithm::MultiEiExactMC => "MultiEiExactMC",
            Algorithm::MultiEHVI => "MultiEHVI",
            Algorithm::RandomSearch => "RandomSearch",
        }
    }

    pub fn is_extension(&self) -> bool {
        matches!(self, Algorithm::MultiEiExactMC)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .iter()
            .copied()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::config("algorithm", format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McCounts {
    /// Draws per acquisition evaluation during the GA search.
    #[serde(default = "default_search")]
    pub search: usize,
    /// Draws for reporting-quality estimates.
    #[serde(default = "default_report")]
    pub report: usize,
}

fn default_search() -> usize {
    1000
}
fn default_report() -> usize {
    100_000
}

impl Default for McCounts {
    fn default() -> Self {
        McCounts {
            search: default_search(),
            report: default_report(),
        }
    }
}

fn default_rho() -> f64 {
    DEFAULT_RHO
}
fn default_gumbel_samples() -> usize {
    1000
}
fn default_gp_restarts() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub algorithm: Algorithm,
    /// Defaults to 10·n.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_size: Option<usize>,
    /// Defaults to 30·n.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub mc_counts: McCounts,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_gumbel_samples")]
    pub gumbel_sample_count: usize,
    #[serde(default = "default_gp_restarts")]
    pub gp_restarts: usize,
}

impl RunConfig {
    pub fn new(problem: ProblemSpec, algorithm: Algorithm, seed: u64) -> Self {
        RunConfig {
            problem,
            algorithm,
            init_size: None,
            budget: None,
            seed,
            ga: GaConfig::default(),
            mc_counts: McCounts::default(),
            rho: DEFAULT_RHO,
            gumbel_sample_count: default_gumbel_samples(),
            gp_restarts: default_gp_restarts(),
        }
    }

    pub fn init_size(&self) -> usize {
        self.init_size.unwrap_or(10 * self.problem.num_variables)
    }

    pub fn budget(&self) -> usize {
        self.budget.unwrap_or(30 * self.problem.num_variables)
    }

    pub fn acquisition_steps(&self) -> usize {
        self.budget().saturating_sub(self.init_size())
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        self.ga.validate()?;
        if self.init_size() < 2 {
            return Err(Error::config("init_size", "must be >= 2"));
        }
        if self.budget() <= self.init_size() {
            return Err(Error::config("budget", "must exceed init_size"));
        }
        if self.mc_counts.search < 1 {
            return Err(Error::config("mc_counts.search", "must be >= 1"));
        }
        if self.mc_counts.report < 1 {
            return Err(Error::config("mc_counts.report", "must be >= 1"));
        }
        if !(self.rho >= 0.0) {
            return Err(Error::config("rho", "must be >= 0"));
        }
        if self.gumbel_sample_count < 10 {
            return Err(Error::config("gumbel_sample_count", "must be >= 10"));
        }
        if self.gp_restarts < 1 {
            return Err(Error::config("gp_restarts", "must be >= 1"));
        }
        if self.problem.num_objectives > 3 && self.algorithm == Algorithm::MultiEHVI {
            return Err(Error::config(
                "algorithm",
                "MultiEHVI supports at most 3 objectives",
            ));
        }
        Ok(())
    }

    /// Parse, apply `key=value` overrides (dotted keys address nested
    /// tables), and validate.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
        apply_overrides(&mut table, overrides)?;
        let cfg: RunConfig =
            toml::Value::Table(table)
                .try_into()
                .map_err(|e: toml::de::Error| {
                    Error::config(field_hint(e.message()), e.message().to_string())
                })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("RunConfig serialises to TOML")
    }

    /// FNV-1a hash of the canonical JSON form, as 16 hex digits.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("RunConfig serialises to JSON");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in json.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

/// Pull a `field` name out of a serde message such as "missing field `name`".
fn field_hint(message: &str) -> String {
    message
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "<file>".to_string())
}

pub(crate) fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<()> {
    for ov in overrides {
        let (key, raw) = ov
            .split_once('=')
            .ok_or_else(|| Error::config(ov.clone(), "override must look like key=value"))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        let parts: Vec<&str> = key.split('.').collect();
        let mut cursor = &mut *table;
        for part in &parts[..parts.len() - 1] {
            let entry = cursor
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            cursor = entry
                .as_table_mut()
                .ok_or_else(|| Error::config(key, format!("`{part}` is not a table")))?;
        }
        cursor.insert(parts[parts.len() - 1].to_string(), value);
    }
    Ok(())
}
