//! Output files stamped with the master seed and config hash.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_sha256: String,
}

impl Provenance {
    /// First line of every CSV output; CSV readers here skip `#` lines.
    pub fn csv_comment(&self) -> String {
        format!("# seed={} config_sha256={}\n", self.seed, self.config_sha256)
    }
}

pub struct OutputDir {
    root: PathBuf,
    provenance: Provenance,
}

impl OutputDir {
    pub fn create(root: &Path, provenance: Provenance) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|source| CliError::Output {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            provenance,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    fn write(&self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|source| CliError::Output {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }

    /// `render` fills the CSV body after the provenance comment.
    pub fn csv<F>(&self, name: &str, render: F) -> CliResult<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> troop_core::Result<()>,
    {
        let mut bytes = self.provenance.csv_comment().into_bytes();
        render(&mut bytes)?;
        self.write(name, &bytes)
    }

    /// Pretty JSON object holding `kind`, `seed` and `config_sha256` next to
    /// the fields of `payload`. Keys are sorted.
    pub fn json<T: Serialize>(&self, name: &str, kind: &str, payload: &T) -> CliResult<PathBuf> {
        let value = stamped(kind, &self.provenance, payload);
        let mut text = serde_json::to_string_pretty(&value).map_err(troop_core::Error::from)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn raw(&self, name: &str, text: &str) -> CliResult<PathBuf> {
        self.write(name, text.as_bytes())
    }
}

pub fn stamped<T: Serialize>(kind: &str, provenance: &Provenance, payload: &T) -> Value {
    let mut map = Map::new();
    map.insert("kind".into(), Value::String(kind.into()));
    map.insert("seed".into(), Value::from(provenance.seed));
    map.insert("config_sha256".into(), Value::String(provenance.config_sha256.clone()));
    match serde_json::to_value(payload).expect("serializable") {
        Value::Object(fields) => map.extend(fields),
        other => {
            map.insert("data".into(), other);
        }
    }
    Value::Object(map)
}
