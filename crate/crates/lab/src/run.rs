use std::fs::{self, File, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{RunConfig, SNAPSHOT_FILE};
use crate::error::{LabError, Result};
use crate::io;

pub const LOG_FILE: &str = "run.log";

/// Output directory of one run. Messages passed to [`RunDir::note`] go to
/// `run.log` and to the `log` facade.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    log: File,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| LabError::io(root, e))?;
        let log_path = root.join(LOG_FILE);
        let log = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(&log_path)
            .map_err(|e| LabError::io(&log_path, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            log,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn note(&mut self, message: &str) {
        log::info!("{message}");
        // a lost log line must not fail the run
        let _ = writeln!(self.log, "{message}");
    }

    pub fn write(&self, name: &str, text: &str) -> Result<PathBuf> {
        let p = self.path(name);
        io::write_text(&p, text)?;
        Ok(p)
    }

    pub fn snapshot(&self, cfg: &RunConfig) -> Result<PathBuf> {
        self.write(SNAPSHOT_FILE, &cfg.to_toml()?)
    }
}

/// Render rows as CSV with a header.
pub fn csv_string<R, I>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| LabError::Compute(e.to_string());
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(r).map_err(wrap)?;
    }
    let bytes = w.into_inner().map_err(|e| LabError::Compute(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| LabError::Compute(e.to_string()))
}
