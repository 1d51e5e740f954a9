//! Pipeline configuration file (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::align::{AlignmentParams, BookThresholds};
use crate::annotate::AnnotateConfig;
use crate::error::{Error, Result};
use crate::metrics::RegionGate;
use crate::selftrain::SelectionPolicy;
use crate::tei::SelectorRuleSet;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct MetricOptions {
    pub exclude_background: bool,
    pub gate: RegionGate,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct IoDirs {
    /// Base for relative input paths.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_dir: Option<PathBuf>,
    /// Base for relative output paths.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct PipelineConfig {
    /// Builtin rule-set name (`dta`, `tcp`, `wwo`) or path to a rule file.
    pub rules: String,
    /// Rasterization downscale factor for pixel metrics.
    pub scale: u32,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub seed: u64,
    pub align: AlignmentParams,
    pub books: BookThresholds,
    pub annotate: AnnotateConfig,
    pub metrics: MetricOptions,
    pub selftrain: SelectionPolicy,
    pub io: IoDirs,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            rules: "dta".into(),
            scale: 4,
            jobs: 0,
            seed: 0,
            align: AlignmentParams::default(),
            books: BookThresholds::default(),
            annotate: AnnotateConfig::default(),
            metrics: MetricOptions::default(),
            selftrain: SelectionPolicy::default(),
            io: IoDirs::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.scale == 0 {
            return Err(Error::Config("scale must be at least 1".into()));
        }
        if self.selftrain.per_layout_cap == Some(0) {
            return Err(Error::Config("per-layout-cap must be at least 1".into()));
        }
        self.align.validate()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    pub fn rule_set(&self) -> Result<SelectorRuleSet> {
        if matches!(self.rules.to_ascii_lowercase().as_str(), "dta" | "tcp" | "wwo") {
            SelectorRuleSet::builtin(&self.rules)
        } else {
            SelectorRuleSet::from_file(&self.resolve_input(&self.rules))
        }
    }

    pub fn resolve_input(&self, p: impl AsRef<Path>) -> PathBuf {
        resolve(self.io.input_dir.as_deref(), p.as_ref())
    }

    pub fn resolve_output(&self, p: impl AsRef<Path>) -> PathBuf {
        resolve(self.io.output_dir.as_deref(), p.as_ref())
    }
}

fn resolve(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    }
}
