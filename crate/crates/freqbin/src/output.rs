//! CSV datasets and the JSON run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{ScenarioConfig, SCHEMA_VERSION};

/// One CSV file held in memory until the run succeeds.
pub struct Dataset {
    pub name: String,
    pub rows: usize,
    pub bytes: Vec<u8>,
}

impl Dataset {
    pub fn from_rows<T: Serialize>(name: impl Into<String>, rows: &[T]) -> anyhow::Result<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for row in rows {
            writer.serialize(row)?;
        }
        let bytes = writer.into_inner().context("flushing CSV")?;
        Ok(Self {
            name: name.into(),
            rows: rows.len(),
            bytes,
        })
    }
}

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub schema_version: u32,
    pub command: &'a str,
    pub seed: u64,
    pub config_sha256: String,
    pub outputs: Vec<OutputEntry>,
    pub summary: serde_json::Value,
    pub config: &'a ScenarioConfig,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Writes the datasets and `<command>.manifest.json` into `dir`; returns the
/// manifest path.
pub fn write_run(
    dir: &Path,
    command: &str,
    config: &ScenarioConfig,
    datasets: &[Dataset],
    summary: serde_json::Value,
) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut outputs = Vec::new();
    for data in datasets {
        let path = dir.join(&data.name);
        fs::write(&path, &data.bytes)
            .with_context(|| format!("cannot write {}", path.display()))?;
        outputs.push(OutputEntry {
            file: data.name.clone(),
            rows: data.rows,
            sha256: sha256_hex(&data.bytes),
        });
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        schema_version: SCHEMA_VERSION,
        command,
        seed: config.seed,
        config_sha256: config.hash(),
        outputs,
        summary,
        config,
    };
    let path = dir.join(format!("{command}.manifest.json"));
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}
