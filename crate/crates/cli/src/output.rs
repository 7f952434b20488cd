use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::CliError;

/// A named output file held in memory until the command finishes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self {
            name: name.into(),
            bytes,
        }
    }

    /// Builds the bytes with a writer callback (CSV writers and the like).
    pub fn build<F>(name: impl Into<String>, fill: F) -> Result<Self, CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> desklab::Result<()>,
    {
        let mut bytes = Vec::new();
        fill(&mut bytes)?;
        Ok(Self::new(name, bytes))
    }

    pub fn text(&self) -> &str {
        std::str::from_utf8(&self.bytes).unwrap_or("")
    }
}

/// `key: value` lines.
pub fn manifest(entries: &[(String, String)]) -> Artifact {
    let mut text = String::new();
    for (k, v) in entries {
        text.push_str(k);
        text.push_str(": ");
        text.push_str(v);
        text.push('\n');
    }
    Artifact::new("manifest.txt", text.into_bytes())
}

/// Writes every artifact into `dir` through a temporary file that is renamed
/// into place, so readers never see a partial file.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let mut tmp = NamedTempFile::new_in(dir)?;
        tmp.write_all(&a.bytes)?;
        tmp.as_file().sync_all()?;
        let target = dir.join(&a.name);
        tmp.persist(&target).map_err(|e| CliError::Io(e.error))?;
        written.push(target);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_and_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let a = Artifact::new("x.csv", b"a,b\n".to_vec());
        write_all(dir.path(), &[a]).unwrap();
        let b = Artifact::new("x.csv", b"c\n".to_vec());
        let paths = write_all(dir.path(), &[b]).unwrap();
        assert_eq!(std::fs::read(&paths[0]).unwrap(), b"c\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn manifest_lines() {
        let m = manifest(&[("a".into(), "1".into()), ("b.c".into(), "x".into())]);
        assert_eq!(m.text(), "a: 1\nb.c: x\n");
    }
}
