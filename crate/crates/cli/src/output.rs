//! Verdict documents, error classes and atomic file output.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thinlap_core::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum RunError {
    /// Invalid config or inputs (exit 1).
    Config(String),
    /// Solver breakdown or non-convergence (exit 3).
    Numeric(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 1,
            RunError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "configuration error: {m}"),
            RunError::Numeric(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. } | Error::Numeric(_) => RunError::Numeric(e.to_string()),
            other => RunError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Config(format!("i/o: {e}"))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Assertion {
    /// `value ≤ threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= threshold,
            value: Some(value),
            threshold: Some(threshold),
            detail: None,
        }
    }

    pub fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, value: None, threshold: None, detail: Some(detail.into()) }
    }
}

/// Contents of `verdict.json`.
#[derive(Debug, Serialize)]
pub struct Verdict {
    pub schema_version: u32,
    pub experiment: String,
    pub kind: String,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
    pub artifacts: Vec<String>,
    pub summary: serde_json::Value,
}

/// What a finished experiment reports back to `main`.
pub struct Outcome {
    pub name: String,
    pub passed: bool,
    pub summary: String,
}

/// Writes experiment artifacts into one directory, atomically per file.
pub struct ArtifactDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl ArtifactDir {
    pub fn create(root: &Path, name: &str) -> Result<Self, RunError> {
        let dir = root.join(name);
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, written: Vec::new() })
    }

    pub fn write(&mut self, file: &str, bytes: &[u8]) -> Result<(), RunError> {
        write_atomic(&self.dir.join(file), bytes)?;
        if !self.written.iter().any(|f| f == file) {
            self.written.push(file.to_string());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, file: &str, value: &T) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| RunError::Numeric(e.to_string()))?;
        text.push('\n');
        self.write(file, text.as_bytes())
    }

    /// Writes `verdict.json` and returns the outcome.
    pub fn finish(
        mut self,
        name: &str,
        kind: &str,
        assertions: Vec<Assertion>,
        summary: serde_json::Value,
    ) -> Result<Outcome, RunError> {
        let passed = assertions.iter().all(|a| a.passed);
        let failed: Vec<&str> = assertions.iter().filter(|a| !a.passed).map(|a| a.name.as_str()).collect();
        let line = if failed.is_empty() {
            format!("{} assertion(s) passed", assertions.len())
        } else {
            format!("failed: {}", failed.join(", "))
        };
        let mut artifacts = self.written.clone();
        artifacts.sort();
        let verdict = Verdict {
            schema_version: SCHEMA_VERSION,
            experiment: name.to_string(),
            kind: kind.to_string(),
            passed,
            assertions,
            artifacts,
            summary,
        };
        self.write_json("verdict.json", &verdict)?;
        Ok(Outcome { name: name.to_string(), passed, summary: line })
    }
}

/// Writes to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let file_name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{file_name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}
