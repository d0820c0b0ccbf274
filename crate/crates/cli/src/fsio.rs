use std::fs;
use std::path::{Path, PathBuf};

use refmine::{Error, Result};

/// Marker written into directories this tool owns, so they may be replaced.
pub const MARKER: &str = ".refmine";

/// A directory assembled under a temporary name and renamed into place on
/// [`Staged::commit`]. Dropping it uncommitted removes everything written.
pub struct Staged {
    tmp: PathBuf,
    target: PathBuf,
    committed: bool,
}

impl Staged {
    pub fn new(target: &Path) -> Result<Self> {
        let parent = target.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(parent)?;
        let name = target
            .file_name()
            .ok_or_else(|| Error::Config(format!("invalid output path {}", target.display())))?
            .to_string_lossy()
            .into_owned();
        let tmp = parent.join(format!(".{name}.tmp-{}", std::process::id()));
        if tmp.exists() {
            fs::remove_dir_all(&tmp)?;
        }
        fs::create_dir(&tmp)?;
        fs::write(tmp.join(MARKER), b"")?;
        Ok(Staged { tmp, target: target.to_path_buf(), committed: false })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.tmp.join(name)
    }

    pub fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let path = self.path(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, bytes)?;
        Ok(())
    }

    /// Replace the target with the staged tree.
    pub fn commit(mut self) -> Result<()> {
        if self.target.exists() {
            ensure_replaceable(&self.target)?;
            let old = self.tmp.with_extension("old");
            fs::rename(&self.target, &old)?;
            fs::rename(&self.tmp, &self.target)?;
            fs::remove_dir_all(&old)?;
        } else {
            fs::rename(&self.tmp, &self.target)?;
        }
        self.committed = true;
        Ok(())
    }
}

impl Drop for Staged {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.tmp);
        }
    }
}

/// Refuse to overwrite a non-empty directory the tool did not create.
pub fn ensure_replaceable(dir: &Path) -> Result<()> {
    if !dir.is_dir() {
        return Err(Error::Config(format!("{} exists and is not a directory", dir.display())));
    }
    let empty = fs::read_dir(dir)?.next().is_none();
    if empty || dir.join(MARKER).exists() {
        Ok(())
    } else {
        Err(Error::Config(format!("refusing to replace {}: not created by refmine", dir.display())))
    }
}

/// Write one file via a sibling temp file and rename.
pub fn write_atomic(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    if let Err(e) = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path)) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}
