//! Run manifests and atomic artifact writes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

/// Provenance of one CLI run, embedded in or written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub subcommand: String,
    pub args: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tolerances: BTreeMap<String, f64>,
    pub threads: usize,
    pub started_unix_ms: u64,
    pub wall_clock_ms: f64,
    pub outputs: Vec<String>,
}

/// The JSON document written to `--out` (or stdout).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub manifest: RunManifest,
    pub result: serde_json::Value,
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// A table to be written with the csv crate.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn from_records<T: Serialize>(records: &[T]) -> Result<Table, String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in records {
            w.serialize(r).map_err(|e| e.to_string())?;
        }
        let bytes = w.into_inner().map_err(|e| e.to_string())?;
        let mut rd = csv::Reader::from_reader(bytes.as_slice());
        let header = rd.headers().map_err(|e| e.to_string())?.iter().map(str::to_string).collect();
        let rows = rd
            .records()
            .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        Ok(Table { header, rows })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(|e| e.to_string())?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| e.to_string())?;
        }
        w.into_inner().map_err(|e| e.to_string())
    }
}

/// Puts the manifest inside an SVG `<metadata>` element.
pub fn embed_manifest(svg: &str, manifest: &RunManifest) -> String {
    let json = serde_json::to_string(manifest).unwrap_or_default().replace("]]>", "]]]]><![CDATA[>");
    let meta = format!("<metadata><![CDATA[{json}]]></metadata>");
    match svg.find('>') {
        Some(i) => format!("{}{}{}", &svg[..=i], meta, &svg[i + 1..]),
        None => svg.to_string(),
    }
}
