//! One module per subcommand; each loads its config, runs, writes artifacts
//! and a verdict.

use std::path::Path;

use crate::config::Kind;
use crate::output::{Outcome, RunError};

mod capacity;
mod data;
mod exponents;
mod extension;
mod harnack;
pub mod report;
mod solve;

pub fn run(kind: Kind, config: &Path, out: &Path) -> Result<Outcome, RunError> {
    match kind {
        Kind::Exponents => exponents::run(config, out),
        Kind::Solve => solve::run(config, out),
        Kind::ExtensionCheck => extension::run(config, out),
        Kind::Harnack => harnack::run(config, out),
        Kind::Capacity => capacity::run(config, out),
    }
}

/// `{:.16e}`: 17 significant digits, enough to round-trip an `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Whether every entry is strictly below its predecessor.
pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}
