//! Aggregates every `verdict.json` below a directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::output::{write_atomic, RunError, SCHEMA_VERSION};

#[derive(Debug, Serialize)]
struct Entry {
    experiment: String,
    kind: String,
    passed: bool,
    path: String,
    failed_assertions: Vec<String>,
}

#[derive(Serialize)]
struct Report {
    schema_version: u32,
    total: usize,
    passed: usize,
    failed: usize,
    entries: Vec<Entry>,
}

fn collect(dir: &Path, found: &mut Vec<PathBuf>) -> std::io::Result<()> {
    let mut children: Vec<PathBuf> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    children.sort();
    for path in children {
        if path.is_dir() {
            collect(&path, found)?;
        } else if path.file_name().is_some_and(|n| n == "verdict.json") {
            found.push(path);
        }
    }
    Ok(())
}

fn parse(path: &Path, root: &Path) -> Option<Entry> {
    let v: Value = serde_json::from_str(&fs::read_to_string(path).ok()?).ok()?;
    if v.get("schema_version")?.as_u64()? != u64::from(SCHEMA_VERSION) {
        return None;
    }
    let failed_assertions = v
        .get("assertions")?
        .as_array()?
        .iter()
        .filter(|a| a.get("passed").and_then(Value::as_bool) == Some(false))
        .map(|a| a.get("name").and_then(Value::as_str).map(str::to_string))
        .collect::<Option<Vec<_>>>()?;
    let rel = path.strip_prefix(root).unwrap_or(path);
    Some(Entry {
        experiment: v.get("experiment")?.as_str()?.to_string(),
        kind: v.get("kind")?.as_str()?.to_string(),
        passed: v.get("passed")?.as_bool()?,
        path: rel.to_string_lossy().replace('\\', "/"),
        failed_assertions,
    })
}

/// Returns the exit code: 0 when every verdict passed (or there are none),
/// 2 when any failed.
pub fn run(dir: &Path) -> Result<u8, RunError> {
    if !dir.is_dir() {
        return Err(RunError::Config(format!("{} is not a directory", dir.display())));
    }
    let mut found = Vec::new();
    collect(dir, &mut found)?;
    let mut entries = Vec::new();
    let mut corrupt = Vec::new();
    for path in &found {
        match parse(path, dir) {
            Some(e) => entries.push(e),
            None => corrupt.push(path.display().to_string()),
        }
    }
    if !corrupt.is_empty() {
        return Err(RunError::Config(format!("corrupt or unreadable verdicts:\n  {}", corrupt.join("\n  "))));
    }
    entries.sort_by(|a, b| a.passed.cmp(&b.passed).then_with(|| a.path.cmp(&b.path)));
    let failed = entries.iter().filter(|e| !e.passed).count();
    let report = Report { schema_version: SCHEMA_VERSION, total: entries.len(), passed: entries.len() - failed, failed, entries };
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| RunError::Numeric(e.to_string()))?;
    json.push('\n');
    write_atomic(&dir.join("report.json"), json.as_bytes())?;

    let mut text = format!("{} experiment(s): {} passed, {} failed\n", report.total, report.passed, report.failed);
    for e in &report.entries {
        let status = if e.passed { "PASS" } else { "FAIL" };
        text.push_str(&format!("{status} {} ({})", e.experiment, e.kind));
        if !e.failed_assertions.is_empty() {
            text.push_str(&format!(": {}", e.failed_assertions.join(", ")));
        }
        text.push('\n');
    }
    write_atomic(&dir.join("summary.txt"), text.as_bytes())?;
    print!("{text}");
    Ok(if failed > 0 { 2 } else { 0 })
}
