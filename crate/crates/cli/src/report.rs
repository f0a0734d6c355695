//! Check results, output files and seed bookkeeping for one run.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use flowsde::rng::child_seed;
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub detail: String,
}

impl CheckResult {
    /// Passes when `value <= threshold`; NaN fails.
    pub fn at_most(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: if value <= threshold { Status::Pass } else { Status::Fail },
            value: Some(value),
            threshold: Some(threshold),
            detail: detail.into(),
        }
    }

    pub fn skipped(name: &str, why: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Skipped,
            value: None,
            threshold: None,
            detail: why.into(),
        }
    }

    pub fn line(&self) -> String {
        let status = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        match (self.value, self.threshold) {
            (Some(v), Some(t)) => format!("{}: {status} ({v:.4e} <= {t:.4e}; {})", self.name, self.detail),
            _ => format!("{}: {status} ({})", self.name, self.detail),
        }
    }
}

/// What a subcommand hands back: its checks and free-form details for the
/// summary.
#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<CheckResult>,
    pub details: serde_json::Map<String, serde_json::Value>,
}

impl Outcome {
    pub fn detail(&mut self, key: &str, value: impl Serialize) -> CliResult<()> {
        self.details.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }
}

/// Files written into the output directory, in creation order.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Abort(format!("creating {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn create(&mut self, name: &str) -> CliResult<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| CliError::Abort(format!("creating {}: {e}", path.display())))?;
        if !self.files.iter().any(|n| n == name) {
            self.files.push(name.to_string());
        }
        Ok(BufWriter::new(f))
    }

    /// Runs `body` on a fresh file and flushes it.
    pub fn write(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> CliResult<()>) -> CliResult<()> {
        let mut w = self.create(name)?;
        body(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

/// Stage seeds derived from the master seed as `child_seed(master, salt)`.
#[derive(Debug, Serialize)]
pub struct Seeds {
    pub master: u64,
    pub stages: BTreeMap<String, u64>,
}

impl Seeds {
    pub fn new(master: u64) -> Self {
        Self {
            master,
            stages: BTreeMap::new(),
        }
    }

    pub fn stage(&mut self, name: &str, salt: u64) -> u64 {
        let s = child_seed(self.master, salt);
        self.stages.insert(name.to_string(), s);
        s
    }
}
