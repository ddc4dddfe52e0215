use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluation::Aggregation;
use crate::expertise::Thresholds;
use crate::history::{EnumerateOptions, DEFAULT_EXTENSIONS};
use crate::variability::AnalyzerOptions;

/// Bumped whenever cached records would change meaning.
pub const CACHE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
    Markdown,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub repo_path: PathBuf,
    /// `None` analyzes the repository's `HEAD`.
    pub branch: Option<String>,
    pub since: Option<DateTime<Utc>>,
    pub until: Option<DateTime<Utc>>,
    pub extensions: Vec<String>,
    pub exclude_include_guards: bool,
    pub first_parent: bool,
    pub thresholds: Thresholds,
    pub aggregation: Aggregation,
    pub cache_dir: Option<PathBuf>,
    pub output_format: OutputFormat,
    /// Directory receiving every artifact.
    pub out_dir: PathBuf,
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn new(repo_path: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            repo_path: repo_path.into(),
            branch: None,
            since: None,
            until: None,
            extensions: DEFAULT_EXTENSIONS.iter().map(|e| e.to_string()).collect(),
            exclude_include_guards: true,
            first_parent: false,
            thresholds: Thresholds::default(),
            aggregation: Aggregation::Micro,
            cache_dir: None,
            output_format: OutputFormat::Csv,
            out_dir: out_dir.into(),
            jobs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v <= 1.0;
        if !in_unit(self.thresholds.doa) {
            return Err(Error::InvalidConfig(format!(
                "DOA threshold {} outside (0, 1]",
                self.thresholds.doa
            )));
        }
        if !in_unit(self.thresholds.ownership) {
            return Err(Error::InvalidConfig(format!(
                "ownership threshold {} outside (0, 1]",
                self.thresholds.ownership
            )));
        }
        if self
            .extensions
            .iter()
            .all(|e| e.trim_start_matches('.').is_empty())
        {
            return Err(Error::InvalidConfig(
                "no source extensions configured".into(),
            ));
        }
        if let (Some(s), Some(u)) = (self.since, self.until) {
            if s > u {
                return Err(Error::InvalidConfig(format!(
                    "--since {s} is after --until {u}"
                )));
            }
        }
        Ok(())
    }

    pub fn analyzer_options(&self) -> AnalyzerOptions {
        AnalyzerOptions {
            exclude_include_guards: self.exclude_include_guards,
        }
    }

    pub fn enumerate_options(&self) -> EnumerateOptions {
        EnumerateOptions {
            branch: self.branch.clone(),
            since: self.since,
            until: self.until,
            extensions: self.normalized_extensions(),
            first_parent: self.first_parent,
            ..EnumerateOptions::default()
        }
    }

    fn normalized_extensions(&self) -> Vec<String> {
        let mut exts: Vec<String> = self
            .extensions
            .iter()
            .map(|e| e.trim_start_matches('.').to_ascii_lowercase())
            .filter(|e| !e.is_empty())
            .collect();
        exts.sort();
        exts.dedup();
        exts
    }

    /// The settings that determine mined data (not thresholds or output).
    pub fn mining_settings(&self) -> MiningSettings {
        MiningSettings {
            cache_format: CACHE_FORMAT_VERSION,
            branch: self.branch.clone(),
            since: self.since,
            until: self.until,
            extensions: self.normalized_extensions(),
            exclude_include_guards: self.exclude_include_guards,
            rename_threshold: EnumerateOptions::default().rename_threshold,
            first_parent: self.first_parent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningSettings {
    pub cache_format: u32,
    pub branch: Option<String>,
    pub since: Option<DateTime<Utc>>,
    pub until: Option<DateTime<Utc>>,
    pub extensions: Vec<String>,
    pub exclude_include_guards: bool,
    pub rename_threshold: u8,
    pub first_parent: bool,
}

impl MiningSettings {
    /// Hex SHA-256 of the settings' canonical JSON.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("settings serialize");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
