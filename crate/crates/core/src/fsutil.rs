//! Write-to-temp-then-rename helpers so failed commands leave no partial files.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

fn parent_of(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(parent_of(path))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> io::Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec(value).map_err(io::Error::other)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    write_atomic(path, &to_json_bytes(value)?)
}

/// Populates a fresh temporary directory next to `dir` with `fill`, then
/// renames it into place, replacing any previous directory at `dir`.
pub fn write_dir_atomic(dir: &Path, fill: impl FnOnce(&Path) -> io::Result<()>) -> io::Result<()> {
    let parent = parent_of(dir);
    std::fs::create_dir_all(parent)?;
    let tmp = tempfile::Builder::new().prefix(".staging-").tempdir_in(parent)?;
    fill(tmp.path())?;
    if dir.exists() {
        std::fs::remove_dir_all(dir)?;
    }
    let staged = tmp.keep();
    std::fs::rename(&staged, dir).inspect_err(|_| {
        let _ = std::fs::remove_dir_all(&staged);
    })
}
