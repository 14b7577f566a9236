//! Output directories: exclusive ownership through a lockfile, and a record
//! of every artifact written.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

pub const ROOT_ENV: &str = "SBP_OUTPUT_ROOT";
const LOCK_NAME: &str = ".sbp.lock";

/// `$SBP_OUTPUT_ROOT`, or `sbp-out` in the working directory.
pub fn output_root() -> PathBuf {
    std::env::var_os(ROOT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("sbp-out"))
}

/// Held for the lifetime of a run; the lockfile is removed on drop.
pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(LOCK_NAME);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => bail!(
                "{} is in use by another run (delete {} if that run is gone)",
                dir.display(),
                path.display()
            ),
            Err(e) => Err(e).with_context(|| format!("creating {}", path.display())),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Writes files under `root/prefix` and remembers their relative names.
pub struct Artifacts {
    root: PathBuf,
    prefix: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    pub fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
            prefix: PathBuf::new(),
            written: Vec::new(),
        }
    }

    /// Writer for a subdirectory; its names are merged back by [`Artifacts::absorb`].
    pub fn child(&self, sub: &str) -> Self {
        Self {
            root: self.root.clone(),
            prefix: self.prefix.join(sub),
            written: Vec::new(),
        }
    }

    pub fn absorb(&mut self, child: Artifacts) {
        self.written.extend(child.written);
    }

    pub fn names(&self) -> &[String] {
        &self.written
    }

    /// Creates and returns a directory under the prefix without registering it.
    pub fn dir(&self, name: &str) -> Result<PathBuf> {
        let full = self.root.join(&self.prefix).join(name);
        fs::create_dir_all(&full).with_context(|| format!("creating {}", full.display()))?;
        Ok(full)
    }

    /// Absolute path for `name`, registered as written.
    pub fn path(&mut self, name: &str) -> Result<PathBuf> {
        let rel = self.prefix.join(name);
        let full = self.root.join(&rel);
        if let Some(parent) = full.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        let rel = rel.to_string_lossy().replace('\\', "/");
        if !self.written.contains(&rel) {
            self.written.push(rel);
        }
        Ok(full)
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let p = self.path(name)?;
        fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.text(name, &text)
    }

    pub fn csv(&mut self, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
        let p = self.path(name)?;
        let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
        Ok(csv::Writer::from_writer(BufWriter::new(f)))
    }

    /// Writes serializable rows as one CSV file.
    pub fn csv_rows<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let mut w = self.csv(name)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let lock = RunLock::acquire(dir.path()).unwrap();
        let err = RunLock::acquire(dir.path()).err().unwrap();
        assert!(err.to_string().contains("in use"), "{err}");
        drop(lock);
        assert!(RunLock::acquire(dir.path()).is_ok());
    }

    #[test]
    fn child_names_are_relative() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::new(dir.path());
        a.text("top.txt", "x").unwrap();
        let mut c = a.child("sub");
        c.text("inner.txt", "y").unwrap();
        a.absorb(c);
        assert_eq!(a.names(), ["top.txt", "sub/inner.txt"]);
        assert_eq!(fs::read_to_string(dir.path().join("sub/inner.txt")).unwrap(), "y");
    }
}
