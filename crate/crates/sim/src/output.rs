//! Atomic file emission into an output directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Result, SimError};

const PROBE_NAME: &str = ".bdirs-write-probe";

/// Creates `dir` if needed and checks that files can be written there.
pub fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let probe = dir.join(PROBE_NAME);
    fs::write(&probe, b"").map_err(|e| SimError::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| SimError::io(&probe, e))
}

/// Writes `contents` to `dir/name` through `dir/name.tmp` and a rename, so a
/// failed write never leaves a truncated final file.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    let target = dir.join(name);
    let tmp = dir.join(format!("{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| SimError::io(&tmp, e))?;
    f.write_all(contents).map_err(|e| SimError::io(&tmp, e))?;
    f.sync_all().map_err(|e| SimError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, &target).map_err(|e| SimError::io(&target, e))?;
    Ok(target)
}
