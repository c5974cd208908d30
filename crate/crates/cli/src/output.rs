//! CSV artifacts with a `#` meta block, written atomically.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct Meta {
    pub command: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    /// Extra `key: value` lines, in order.
    pub extra: Vec<(String, String)>,
}

impl Meta {
    pub fn new(command: &'static str, source: &[u8], seed: u64) -> Self {
        let digest = Sha256::digest(source);
        let config_sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Self { command, config_sha256, seed, extra: Vec::new() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.push((key.to_string(), value.to_string()));
        self
    }

    fn block(&self) -> String {
        let mut s = format!(
            "# meta\n# tool: ldl {VERSION}\n# command: {}\n# config_sha256: {}\n# seed: {}\n",
            self.command, self.config_sha256, self.seed
        );
        for (k, v) in &self.extra {
            s.push_str(&format!("# {k}: {v}\n"));
        }
        s
    }
}

/// A named output file, fully rendered in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

/// Shortest round-trip rendering; identical input gives identical text.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn csv<I, R>(name: &str, meta: &Meta, header: &[&str], rows: I) -> Result<Artifact, CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut buf = meta.block().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let fail = |e: csv::Error| CliError::Io(format!("rendering {name}: {e}"));
        w.write_record(header).map_err(fail)?;
        for r in rows {
            w.write_record(r.into_iter().collect::<Vec<String>>()).map_err(fail)?;
        }
        w.flush()?;
    }
    Ok(Artifact { name: name.to_string(), contents: buf })
}

pub fn text(name: &str, meta: &Meta, body: &str) -> Artifact {
    Artifact { name: name.to_string(), contents: format!("{}{body}", meta.block()).into_bytes() }
}

/// Writes every artifact to a temporary file in `dir` first and renames only
/// after all of them were written, so a failed run leaves no partial output.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let mut staged = Vec::new();
    for a in artifacts {
        let mut tmp = NamedTempFile::new_in(dir)?;
        tmp.write_all(&a.contents)?;
        tmp.as_file().sync_all()?;
        staged.push((tmp, dir.join(&a.name)));
    }
    let mut out = Vec::new();
    for (tmp, path) in staged {
        tmp.persist(&path).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        out.push(path);
    }
    Ok(out)
}
