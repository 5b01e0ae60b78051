//! Atomic file writes and CSV row helpers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub use windnet::corrnet::format_number as num;

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.with_context(|| format!("writing {}", path.display()))
}

/// Builds a CSV in memory, then writes it atomically.
pub fn write_csv<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    fill(&mut w)?;
    let bytes = w.into_inner().context("flushing csv buffer")?;
    write_atomic(path, &bytes)
}

/// Collects the bytes of a writer-based emitter, then writes them atomically.
pub fn write_with<F, E>(path: &Path, emit: F) -> Result<()>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), E>,
    E: std::error::Error + Send + Sync + 'static,
{
    let mut buf = Vec::new();
    emit(&mut buf).with_context(|| format!("rendering {}", path.display()))?;
    write_atomic(path, &buf)
}

/// Output paths written by a command, in write order.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Written(pub Vec<PathBuf>);

impl Written {
    pub fn push(&mut self, p: PathBuf) {
        self.0.push(p);
    }

    pub fn extend(&mut self, other: Written) {
        self.0.extend(other.0);
    }
}
