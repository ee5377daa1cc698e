//! Run configuration: TOML file, `key=value` overrides, then flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use lrp_transfer::channels::{ChannelRegistry, DEFAULT_STUDY_SETS};
use lrp_transfer::eval::EvalConfig;
use lrp_transfer::onset::OnsetParams;
use lrp_transfer::synth::SynthConfig;
use lrp_transfer::{ChannelSet, ConditionId};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::AtPath;

/// Environment variable naming the default directory of cached sessions.
pub const DATA_DIR_ENV: &str = "LRPX_DATA_DIR";

/// Extension of cached sessions.
pub const SESSION_EXT: &str = "lrpc";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Directory scanned for `*.lrpc` session caches.
    pub cache_dir: Option<PathBuf>,
    /// Explicit session caches, used in addition to `cache_dir`.
    pub sessions: Vec<PathBuf>,
}

/// Virtual subjects generated in memory instead of reading caches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthStudy {
    pub seeds: Vec<u64>,
    #[serde(default = "default_subjects")]
    pub subjects: usize,
    /// Generator settings shared by every subject; seed and subject are overwritten.
    #[serde(default)]
    pub generator: SynthConfig,
}

fn default_subjects() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputFlags {
    /// One box plot per condition × channel set.
    pub svg: bool,
}

impl Default for OutputFlags {
    fn default() -> Self {
        Self { svg: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub synth: Option<SynthStudy>,
    /// Channel-set registry overrides.
    pub channels_file: Option<PathBuf>,
    pub channel_sets: Vec<String>,
    pub conditions: Vec<ConditionId>,
    pub eval: EvalConfig,
    pub onset: OnsetParams,
    pub output: Option<PathBuf>,
    pub formats: OutputFlags,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: DataConfig::default(),
            synth: None,
            channels_file: None,
            channel_sets: DEFAULT_STUDY_SETS.iter().map(|s| s.to_string()).collect(),
            conditions: vec![ConditionId::A, ConditionId::B, ConditionId::C],
            eval: EvalConfig::default(),
            onset: OnsetParams::default(),
            output: None,
            formats: OutputFlags::default(),
            jobs: None,
        }
    }
}

/// Sets `a.b.c = value` in `table`, creating intermediate tables.
///
/// `value` is parsed as a TOML value; anything unparsable is taken as a string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> anyhow::Result<()> {
    let Some((key, raw)) = assignment.split_once('=') else {
        bail!("override `{assignment}` is not of the form key=value");
    };
    let value: toml::Value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("override key `{key}` has an empty component");
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let next = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match next {
            toml::Value::Table(t) => t,
            _ => bail!("override key `{key}`: `{p}` is not a table"),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    /// Reads `path` (if any) and applies `overrides` in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> anyhow::Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| AtPath(p.to_path_buf()))?;
                text.parse::<toml::Table>().with_context(|| AtPath(p.to_path_buf()))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(table).try_into().context("invalid run configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.channel_sets.is_empty() {
            bail!("no channel sets selected");
        }
        if self.conditions.is_empty() {
            bail!("no conditions selected");
        }
        if let Some(s) = &self.synth {
            if s.seeds.is_empty() {
                bail!("synth.seeds must list at least one seed");
            }
            if s.subjects == 0 {
                bail!("synth.subjects must be at least 1");
            }
            s.generator.validate()?;
        }
        if self.jobs == Some(0) {
            bail!("jobs must be at least 1");
        }
        Ok(())
    }

    /// Uses `$LRPX_DATA_DIR` when neither data paths nor a synthetic study are configured.
    pub fn resolve_data_dir(&mut self) {
        if self.synth.is_none() && self.data.cache_dir.is_none() && self.data.sessions.is_empty() {
            if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
                self.data.cache_dir = Some(PathBuf::from(dir));
            }
        }
    }

    pub fn registry(&self) -> anyhow::Result<ChannelRegistry> {
        registry(self.channels_file.as_deref())
    }

    pub fn selected_sets(&self) -> anyhow::Result<Vec<ChannelSet>> {
        let reg = self.registry()?;
        self.channel_sets
            .iter()
            .map(|n| Ok(reg.get(n)?.clone()))
            .collect()
    }

    /// The configuration as written to the output directory.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serialises")
    }

    /// Hex SHA-256 of [`RunConfig::to_toml`].
    pub fn hash(&self) -> String {
        sha256_hex(self.to_toml().as_bytes())
    }
}

/// Every `*.lrpc` file directly inside `dir`, sorted.
pub fn session_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| AtPath(dir.to_path_buf()))? {
        let p = entry.with_context(|| AtPath(dir.to_path_buf()))?.path();
        if p.extension().is_some_and(|e| e == SESSION_EXT) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

pub fn registry(overrides: Option<&Path>) -> anyhow::Result<ChannelRegistry> {
    Ok(match overrides {
        Some(p) => ChannelRegistry::builtin_with_overrides(p).with_context(|| AtPath(p.to_path_buf()))?,
        None => ChannelRegistry::builtin(),
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_create_nested_keys() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "eval.train.fold_seed=7").unwrap();
        apply_override(&mut t, "channel_sets=[\"custom-4\"]").unwrap();
        apply_override(&mut t, "eval.relabel=exclude-fixed").unwrap();
        let cfg: RunConfig = toml::Value::Table(t).try_into().unwrap();
        assert_eq!(cfg.eval.train.fold_seed, 7);
        assert_eq!(cfg.channel_sets, ["custom-4"]);
        assert_eq!(cfg.eval.relabel, lrp_transfer::eval::RelabelScan::ExcludeFixed);
        assert!(apply_override(&mut toml::Table::new(), "novalue").is_err());
    }

    #[test]
    fn echoed_config_reloads_identically() {
        let mut cfg = RunConfig::default();
        cfg.synth = Some(SynthStudy {
            seeds: vec![3, 4],
            subjects: 2,
            generator: SynthConfig::default(),
        });
        cfg.eval.train.fold_seed = 11;
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("config.toml");
        fs::write(&p, cfg.to_toml()).unwrap();
        let back = RunConfig::load(Some(&p), &[]).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn unknown_keys_and_missing_seeds_are_rejected() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "colour=1").unwrap();
        assert!(toml::Value::Table(t).try_into::<RunConfig>().is_err());
        let t: toml::Table = "[synth]\nsubjects = 2\n".parse().unwrap();
        assert!(toml::Value::Table(t).try_into::<RunConfig>().is_err());
    }
}
