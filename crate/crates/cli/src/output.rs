//! Output files and their manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use crate::config::sha256_hex;
use crate::AtPath;

pub fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| AtPath(dir.to_path_buf()))?;
    }
    fs::write(path, bytes).with_context(|| AtPath(path.to_path_buf()))
}

/// Effective configuration as TOML and its hex SHA-256.
pub fn config_text<C: Serialize>(config: &C) -> anyhow::Result<(String, String)> {
    let text = toml::to_string(config).context("serialising the effective configuration")?;
    let hash = sha256_hex(text.as_bytes());
    Ok((text, hash))
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_sha256: &'a str,
    config: &'a str,
    outputs: BTreeMap<String, String>,
}

/// Writes `manifest` listing the SHA-256 of every output, keyed by file
/// name relative to the manifest's directory.
pub fn write_manifest<C: Serialize>(manifest: &Path, command: &str, config: &C, outputs: &[PathBuf]) -> anyhow::Result<String> {
    let (text, hash) = config_text(config)?;
    let base = manifest.parent().unwrap_or(Path::new(""));
    let mut hashes = BTreeMap::new();
    for p in outputs {
        let bytes = fs::read(p).with_context(|| AtPath(p.clone()))?;
        let key = p.strip_prefix(base).unwrap_or(p).to_string_lossy().replace('\\', "/");
        hashes.insert(key, sha256_hex(&bytes));
    }
    let m = Manifest {
        command,
        config_sha256: &hash,
        config: &text,
        outputs: hashes,
    };
    let mut json = serde_json::to_vec_pretty(&m).expect("manifest serialises");
    json.push(b'\n');
    write_file(manifest, &json)?;
    Ok(hash)
}

/// `<file>.manifest.json` next to a single-file output.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}
