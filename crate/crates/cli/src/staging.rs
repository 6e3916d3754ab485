//! Outputs are written under a temporary directory next to the destination
//! and moved into place only once the whole command has succeeded.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tempfile::TempDir;

pub struct Staging {
    out: PathBuf,
    tmp: TempDir,
    files: Vec<PathBuf>,
}

impl Staging {
    pub fn new(out: &Path) -> Result<Self> {
        let parent = match out.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent)
            .with_context(|| format!("cannot create `{}`", parent.display()))?;
        let tmp = tempfile::Builder::new()
            .prefix(".survmine-")
            .tempdir_in(&parent)
            .with_context(|| format!("output directory `{}` is not writable", parent.display()))?;
        Ok(Staging {
            out: out.to_path_buf(),
            tmp,
            files: Vec::new(),
        })
    }

    pub fn create(&mut self, rel: &str) -> Result<BufWriter<File>> {
        let path = self.tmp.path().join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        self.files.push(PathBuf::from(rel));
        Ok(BufWriter::new(File::create(&path)?))
    }

    pub fn write(&mut self, rel: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let mut w = self.create(rel)?;
        w.write_all(contents.as_ref())?;
        w.flush()?;
        Ok(())
    }

    /// Moves every staged file into the output directory. Files already
    /// moved are removed again if a later move fails.
    pub fn commit(self) -> Result<()> {
        fs::create_dir_all(&self.out)
            .with_context(|| format!("cannot create `{}`", self.out.display()))?;
        let mut moved: Vec<PathBuf> = Vec::new();
        for rel in &self.files {
            let dest = self.out.join(rel);
            let result = dest
                .parent()
                .map_or(Ok(()), fs::create_dir_all)
                .and_then(|_| fs::rename(self.tmp.path().join(rel), &dest));
            if let Err(e) = result {
                for m in &moved {
                    let _ = fs::remove_file(m);
                }
                return Err(e).with_context(|| format!("cannot write `{}`", dest.display()));
            }
            moved.push(dest);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nothing_lands_until_commit() {
        let root = tempfile::tempdir().unwrap();
        let out = root.path().join("run");
        let mut s = Staging::new(&out).unwrap();
        s.write("a.txt", "a").unwrap();
        s.write("models/b.txt", "b").unwrap();
        assert!(!out.exists());
        s.commit().unwrap();
        assert_eq!(fs::read_to_string(out.join("models/b.txt")).unwrap(), "b");

        let other = root.path().join("failed");
        let mut s = Staging::new(&other).unwrap();
        s.write("a.txt", "a").unwrap();
        drop(s);
        assert!(!other.exists());
        assert_eq!(fs::read_dir(root.path()).unwrap().count(), 1);
    }
}
