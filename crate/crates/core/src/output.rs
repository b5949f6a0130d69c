//! Artifact writing: every file is staged in its target directory and renamed
//! into place, and every artifact carries the configuration that produced it.
//!
//! JSON artifacts are objects `{"config": {...}, "result": ...}`. CSV
//! artifacts start with one comment line `# config: {...}` followed by the
//! header row.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::{Error, Result};

/// Prefix of the config line heading every CSV artifact.
pub const CSV_CONFIG_PREFIX: &str = "# config: ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Serialize)]
struct Document<'a, C: Serialize, R: Serialize> {
    config: &'a C,
    result: &'a R,
}

/// Pretty JSON document with a trailing newline.
pub fn json_document<C: Serialize, R: Serialize>(config: &C, result: &R) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(&Document { config, result })?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// CSV body produced by `rows`, preceded by the config line.
pub fn csv_document<C, F>(config: &C, rows: F) -> Result<Vec<u8>>
where
    C: Serialize,
    F: FnOnce(&mut Vec<u8>) -> io::Result<()>,
{
    let mut bytes = Vec::new();
    bytes.extend_from_slice(CSV_CONFIG_PREFIX.as_bytes());
    serde_json::to_writer(&mut bytes, config)?;
    bytes.push(b'\n');
    rows(&mut bytes).map_err(|source| Error::Io {
        path: PathBuf::from("<memory>"),
        source,
    })?;
    Ok(bytes)
}

/// Extracts the embedded config from an artifact: the `config` member of a
/// JSON document, the first line of a CSV artifact, or the whole object when
/// `text` is a plain config file.
pub fn embedded_config(text: &str) -> Result<serde_json::Value> {
    let trimmed = text.trim_start();
    if let Some(rest) = trimmed.strip_prefix(CSV_CONFIG_PREFIX) {
        let line = rest.lines().next().unwrap_or_default();
        return Ok(serde_json::from_str(line)?);
    }
    let value: serde_json::Value = serde_json::from_str(trimmed)?;
    match value {
        serde_json::Value::Object(mut map) => match map.remove("config") {
            Some(inner @ serde_json::Value::Object(_)) => Ok(inner),
            Some(_) => Err(Error::Config("`config` member is not an object".into())),
            None => Ok(serde_json::Value::Object(map)),
        },
        _ => Err(Error::Config("config file must hold a JSON object".into())),
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never see a partial artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Where an artifact goes: a file, or standard output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sink {
    File(PathBuf),
    Stdout,
}

impl Sink {
    pub fn write(&self, bytes: &[u8]) -> Result<()> {
        match self {
            Sink::File(path) => write_atomic(path, bytes),
            Sink::Stdout => {
                let mut out = io::stdout().lock();
                out.write_all(bytes)
                    .and_then(|_| out.flush())
                    .map_err(|source| Error::Io {
                        path: PathBuf::from("<stdout>"),
                        source,
                    })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn missing_directory_is_an_io_error() {
        let err = write_atomic(Path::new("/nonexistent-dir/x.json"), b"x").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn config_survives_both_formats() {
        let config = json!({"epsilon": 0.01, "seed": 3});
        let j = json_document(&config, &json!([1, 2])).unwrap();
        assert_eq!(embedded_config(std::str::from_utf8(&j).unwrap()).unwrap(), config);
        let c = csv_document(&config, |w| writeln!(w, "a,b\n1,2")).unwrap();
        let text = String::from_utf8(c).unwrap();
        assert!(text.starts_with("# config: {"));
        assert_eq!(text.lines().nth(1), Some("a,b"));
        assert_eq!(embedded_config(&text).unwrap(), config);
        assert_eq!(embedded_config(r#"{"epsilon": 0.01, "seed": 3}"#).unwrap(), config);
        assert!(embedded_config("[1]").is_err());
    }
}
