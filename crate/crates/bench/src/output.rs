//! File writers. Everything is written by the calling thread after the
//! workers finish, so output order never depends on scheduling.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects written files so the manifest can list their hashes.
pub struct OutputDir {
    pub root: PathBuf,
    files: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), files: BTreeMap::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        std::fs::write(&p, bytes)?;
        self.files.insert(name.to_string(), sha256_hex(bytes));
        Ok(p)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(momgmm_core::error::Error::from)?;
        s.push('\n');
        self.write_bytes(name, s.as_bytes())
    }

    /// Header comes from `columns`, so empty tables still carry the schema.
    pub fn write_csv<T: Serialize>(&mut self, name: &str, columns: &[&str], rows: &[T]) -> Result<PathBuf, CliError> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(columns)?;
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        self.write_bytes(name, &bytes)
    }

    /// Records a file written by other code.
    pub fn register(&mut self, name: &str) -> Result<(), CliError> {
        let bytes = std::fs::read(self.path(name))?;
        self.files.insert(name.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn finish(mut self, command: &str, cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
        let files = std::mem::take(&mut self.files);
        let manifest = Manifest {
            tool: "momgmm",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_sha256: cfg.digest(),
            config: cfg.normalized(),
            files,
        };
        self.write_json("manifest.json", &manifest)
    }
}

/// Enough to rerun an experiment and check its outputs bit for bit. Contains
/// no timestamps.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    /// File name to sha256.
    pub files: BTreeMap<String, String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: u32,
        b: f64,
    }

    #[test]
    fn csv_header_survives_empty_tables() {
        let dir = std::env::temp_dir().join(format!("momgmm-out-{}", std::process::id()));
        let mut out = OutputDir::create(&dir).unwrap();
        out.write_csv::<Row>("empty.csv", &["a", "b"], &[]).unwrap();
        out.write_csv("rows.csv", &["a", "b"], &[Row { a: 1, b: f64::NAN }]).unwrap();
        assert_eq!(std::fs::read_to_string(dir.join("empty.csv")).unwrap(), "a,b\n");
        assert_eq!(std::fs::read_to_string(dir.join("rows.csv")).unwrap(), "a,b\n1,NaN\n");
        let m = out.finish("test", &ExperimentConfig::default()).unwrap();
        let text = std::fs::read_to_string(m).unwrap();
        assert!(text.contains("rows.csv"));
        std::fs::remove_dir_all(&dir).ok();
    }
}
