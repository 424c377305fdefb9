//! Deployment metadata joined onto reports by file name.
//!
//! The manifest is a headered CSV table:
//!
//! ```text
//! file,address,compiler_version,optimization
//! Drop.sol,0x5A17000000000000000000000000000000000B0B,v0.8.6,true
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ManifestError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub address: String,
    pub compiler_version: String,
    pub optimization: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    entries: BTreeMap<String, ManifestEntry>,
}

#[derive(Deserialize)]
struct Row {
    file: String,
    address: String,
    #[serde(default)]
    compiler_version: String,
    #[serde(default)]
    optimization: String,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// Parses manifest text. Row numbers in errors count the header as row 1.
    pub fn parse(text: &str) -> Result<Self, ManifestError> {
        let mut entries = BTreeMap::new();
        if text.trim().is_empty() {
            return Ok(Self { entries });
        }
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| ManifestError::Row { row: 1, message: e.to_string() })?.clone();
        for required in ["file", "address"] {
            if !headers.iter().any(|h| h == required) {
                return Err(ManifestError::Row { row: 1, message: format!("missing `{required}` column") });
            }
        }
        for (i, record) in reader.deserialize::<Row>().enumerate() {
            let row = i + 2;
            let record = record.map_err(|e| ManifestError::Row { row, message: e.to_string() })?;
            let entry = validate(record).map_err(|message| ManifestError::Row { row, message })?;
            if entries.contains_key(&entry.file) {
                return Err(ManifestError::Row { row, message: format!("duplicate file `{}`", entry.file) });
            }
            entries.insert(entry.file.clone(), entry);
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, file: &str) -> Option<&ManifestEntry> {
        self.entries.get(file)
    }

    /// Looks up `path` as written, then by its final component.
    pub fn lookup(&self, path: &str) -> Option<&ManifestEntry> {
        let normalized = path.replace('\\', "/");
        self.entries.get(&normalized).or_else(|| {
            let name = normalized.rsplit('/').next()?;
            self.entries.get(name)
        })
    }
}

fn validate(row: Row) -> Result<ManifestEntry, String> {
    if row.file.is_empty() {
        return Err("empty file name".into());
    }
    if !(row.address.starts_with("0x") || row.address.starts_with("0X")) || row.address.len() < 3 {
        return Err(format!("address `{}` is not 0x-prefixed hex", row.address));
    }
    let optimization = match row.optimization.to_ascii_lowercase().as_str() {
        "" | "false" | "0" | "no" => false,
        "true" | "1" | "yes" => true,
        other => return Err(format!("optimization `{other}` is not a boolean")),
    };
    Ok(ManifestEntry { file: row.file, address: row.address, compiler_version: row.compiler_version, optimization })
}
