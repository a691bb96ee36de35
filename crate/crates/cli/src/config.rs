use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use ontorel::corpus::FilterPolicy;
use ontorel::embed::BackendDescriptor;
use ontorel::owl::TagSetConfig;
use ontorel::selection::{GridSpec, Scoring};
use ontorel::{Error, Result};
use serde::Deserialize;

/// Pipeline settings read from `--config`. Every field is optional;
/// command-line flags win over the file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub tag_sets: Option<TagSetConfig>,
    pub annotation_min_length: Option<usize>,
    pub filter: FilterConfig,
    pub backend: Option<String>,
    pub split: SplitConfig,
    pub grids: Vec<GridSpec>,
    pub folds: Option<usize>,
    pub scoring: Option<Scoring>,
    pub alpha: Option<f64>,
    /// Per-stage seeds (`split`, `tune`, `train`); `default` applies to
    /// stages without their own entry.
    pub seeds: BTreeMap<String, u64>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub min_length: Option<usize>,
    pub banned_sections: Option<BTreeSet<String>>,
    pub drop_headings: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub train_fraction: Option<f64>,
    pub n_test_partitions: Option<usize>,
    pub undersample: Option<String>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        let config: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if let Some(tags) = &config.tag_sets {
            for t in tags.tag_sets() {
                t.validate()?;
            }
        }
        Ok(config)
    }

    pub fn filter_policy(&self) -> FilterPolicy {
        let mut policy = FilterPolicy::default();
        if let Some(n) = self.filter.min_length {
            policy.min_length = n;
        }
        if let Some(b) = &self.filter.banned_sections {
            policy.banned_sections = b.clone();
        }
        if let Some(d) = self.filter.drop_headings {
            policy.drop_headings = d;
        }
        policy
    }

    pub fn grid(&self, kind: ontorel::classifiers::ClassifierKind) -> GridSpec {
        self.grids
            .iter()
            .find(|g| g.kind == kind)
            .cloned()
            .unwrap_or_else(|| GridSpec::default_for(kind))
    }
}

/// Resolved global options shared by all commands.
pub struct Context {
    pub config: PipelineConfig,
    pub seed: Option<u64>,
    pub backend: Option<String>,
    pub dim: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Context {
    pub fn seed(&self, stage: &str) -> u64 {
        self.seed
            .or_else(|| self.config.seeds.get(stage).copied())
            .or_else(|| self.config.seeds.get("default").copied())
            .unwrap_or(0)
    }

    /// `--out`, else `default_name` inside the configured output directory.
    pub fn out(&self, default_name: &str) -> Result<PathBuf> {
        if let Some(out) = &self.out {
            return Ok(out.clone());
        }
        match &self.config.output_dir {
            Some(dir) => Ok(dir.join(default_name)),
            None => Err(Error::InvalidInput(
                "no output path: pass --out or set output_dir in the config".into(),
            )),
        }
    }

    pub fn backend(&self) -> Result<BackendDescriptor> {
        let text = self
            .backend
            .clone()
            .or_else(|| self.config.backend.clone())
            .unwrap_or_else(|| "hashing".to_string());
        let mut descriptor: BackendDescriptor = text.parse()?;
        if let Some(d) = self.dim {
            match &mut descriptor {
                BackendDescriptor::Hashing { dim } | BackendDescriptor::Remote { dim, .. } => *dim = d,
                BackendDescriptor::Store { .. } => {}
            }
        }
        Ok(descriptor)
    }
}
