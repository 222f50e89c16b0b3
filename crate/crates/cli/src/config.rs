//! Experiment configs: flat TOML, one experiment per file, unknown keys rejected.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use thinlap_core::{ProblemParams64, Regime};

use crate::output::RunError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Exponents,
    Solve,
    ExtensionCheck,
    Harnack,
    Capacity,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Exponents => "exponents",
            Kind::Solve => "solve",
            Kind::ExtensionCheck => "extension-check",
            Kind::Harnack => "harnack",
            Kind::Capacity => "capacity",
        }
    }
}

fn config_err(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

/// Reads `path`, checks that its `kind` matches the subcommand and
/// deserialises it into `T`. Returns the experiment name as well.
pub fn load<T: DeserializeOwned + Named>(path: &Path, kind: Kind) -> Result<(String, T), RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let table: toml::Table = text.parse().map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    match table.get("kind").and_then(|v| v.as_str()) {
        Some(k) if k == kind.as_str() => {}
        Some(k) => {
            return Err(config_err(format!(
                "{}: field `kind` is {k:?} but the command is {:?}",
                path.display(),
                kind.as_str()
            )))
        }
        None => return Err(config_err(format!("{}: missing string field `kind`", path.display()))),
    }
    let cfg: T = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| config_err(format!("{}: {}", path.display(), e.message())))?;
    let name = match cfg.name() {
        Some(n) => n.to_string(),
        None => path.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment").to_string(),
    };
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) || name.starts_with('.') {
        return Err(config_err(format!("field `name`: {name:?} must be a plain file name ([A-Za-z0-9._-])")));
    }
    Ok((name, cfg))
}

pub trait Named {
    fn name(&self) -> Option<&str>;
}

macro_rules! named {
    ($($t:ty),*) => {$(
        impl Named for $t {
            fn name(&self) -> Option<&str> {
                self.name.as_deref()
            }
        }
    )*};
}
named!(ExponentsConfig, SolveConfig, ExtensionConfig, HarnackConfig, CapacityConfig);

fn default_true() -> bool {
    true
}
fn default_one() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-10
}

pub fn params(d: usize, n: usize, a: f64) -> Result<ProblemParams64, RunError> {
    ProblemParams64::new(d, n, a).map_err(|e| config_err(format!("fields `d`, `n`, `a`: {e}")))
}

fn positive(field: &str, v: f64) -> Result<(), RunError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!("field `{field}` must be positive, got {v}")))
    }
}

fn levels_ok(field: &str, levels: &[usize], min: usize, max: usize) -> Result<(), RunError> {
    if levels.is_empty() {
        return Err(config_err(format!("field `{field}` must list at least one resolution")));
    }
    if let Some(bad) = levels.iter().find(|&&l| l < min || l > max) {
        return Err(config_err(format!("field `{field}`: resolution {bad} outside [{min}, {max}]")));
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsConfig {
    /// Checked against the subcommand before deserialisation.
    #[allow(dead_code)]
    pub kind: String,
    pub name: Option<String>,
    pub a_min: f64,
    pub a_max: f64,
    pub a_step: f64,
    pub n_min: usize,
    pub n_max: usize,
    /// Check that on the slice a+n = 1 the sharpness flag holds exactly for n ≥ 4.
    #[serde(default = "default_true")]
    pub assert_sharpness_slice: bool,
}

impl ExponentsConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        positive("a_step", self.a_step)?;
        if !(self.a_min.is_finite() && self.a_max.is_finite() && self.a_min <= self.a_max) {
            return Err(config_err("fields `a_min`, `a_max`: need finite a_min <= a_max"));
        }
        if self.n_min < 2 || self.n_min > self.n_max {
            return Err(config_err("fields `n_min`, `n_max`: need 2 <= n_min <= n_max"));
        }
        if (self.a_max - self.a_min) / self.a_step > 1e6 {
            return Err(config_err("field `a_step`: the sweep would exceed 10^6 rows"));
        }
        Ok(())
    }

    /// `a_min, a_min + step, ...` strictly below `a_max`, computed by index.
    pub fn a_values(&self) -> Vec<f64> {
        let count = ((self.a_max - self.a_min) / self.a_step - 1e-9).ceil().max(0.0) as usize;
        (0..count).map(|i| self.a_min + i as f64 * self.a_step).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaSpec {
    #[default]
    ConormalHomogeneous,
    ConormalFlux,
    DirichletZero,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum FluxSpec {
    Constant,
    Cosine,
    Bump,
}

/// Built-in boundary data and reference solutions in reduced coordinates.
#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum DataSpec {
    Constant,
    LinearX,
    /// `r^{2-a-n}`.
    Characteristic,
    /// `x₁ r^{2-a-n}`.
    Product,
    /// `cos(k x₁) Σ_j (k r)^{2j} / Π_{i ≤ j} 2i(2i + a + n - 2)`, a conormal solution.
    ConormalMode,
    /// Smooth data that is not itself a solution.
    #[default]
    Generic,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    #[default]
    Reduced,
    /// Full-grid solve against the lifted reduced solve.
    ReductionEquivalence,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    /// Checked against the subcommand before deserialisation.
    #[allow(dead_code)]
    pub kind: String,
    pub name: Option<String>,
    pub d: usize,
    pub n: usize,
    pub a: f64,
    #[serde(default)]
    pub mode: SolveMode,
    #[serde(default)]
    pub bc: SigmaSpec,
    pub flux: Option<FluxSpec>,
    /// Flux amplitude; defaults to `-(2-a-n)` for the constant flux and 1 otherwise.
    pub flux_amplitude: Option<f64>,
    #[serde(default)]
    pub outer: DataSpec,
    #[serde(default = "default_one")]
    pub outer_value: f64,
    /// Wavenumber of the conormal mode; defaults to π/(2X).
    pub mode_k: Option<f64>,
    pub exact: Option<DataSpec>,
    #[serde(default = "default_one")]
    pub x_extent: f64,
    #[serde(default = "default_one")]
    pub r_extent: f64,
    /// Reduced resolutions (dx = dr), or full-grid resolutions per axis in
    /// reduction-equivalence mode (the reduced grid then uses twice as many cells).
    pub levels: Vec<usize>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    pub assert_max_rel_error: Option<f64>,
    #[serde(default)]
    pub assert_decreasing: bool,
    /// Identity residuals and first-row smoothness ratio per level.
    #[serde(default)]
    pub diagnostics: bool,
    /// Largest relative change of the first-row ratio between the last two levels.
    pub assert_smoothness: Option<f64>,
    #[serde(default)]
    pub plot: bool,
}

impl SolveConfig {
    pub fn validate(&self) -> Result<ProblemParams64, RunError> {
        let p = params(self.d, self.n, self.a)?;
        positive("x_extent", self.x_extent)?;
        positive("r_extent", self.r_extent)?;
        positive("tol", self.tol)?;
        let k = p.thin_dim();
        if k == 0 || k > 2 {
            return Err(config_err(format!("fields `d`, `n`: d-n must be 1 or 2 here, got {k}")));
        }
        if p.regime() == Regime::Supersingular {
            return Err(config_err(format!(
                "fields `a`, `n`: a+n = {} is supersingular; the solver needs a+n > 0",
                p.a_plus_n()
            )));
        }
        match self.bc {
            SigmaSpec::ConormalFlux if p.regime() != Regime::MidRange => {
                return Err(config_err(format!(
                    "field `bc`: conormal flux data requires the mid-range regime 0 < a+n < 2, but a+n = {} is {}",
                    p.a_plus_n(),
                    p.regime()
                )))
            }
            SigmaSpec::DirichletZero if p.a_plus_n() >= 2.0 => {
                return Err(config_err(format!(
                    "field `bc`: the Dirichlet condition on the thin set requires a+n < 2, but a+n = {}",
                    p.a_plus_n()
                )))
            }
            _ => {}
        }
        if self.flux.is_some() != (self.bc == SigmaSpec::ConormalFlux) {
            return Err(config_err("field `flux` is required with bc = \"conormal-flux\" and not allowed otherwise"));
        }
        if self.flux_amplitude.is_some() && self.flux.is_none() {
            return Err(config_err("field `flux_amplitude` needs `flux`"));
        }
        match self.mode {
            SolveMode::Reduced => levels_ok("levels", &self.levels, 4, 4096)?,
            SolveMode::ReductionEquivalence => {
                levels_ok("levels", &self.levels, 2, 64)?;
                if self.d > 4 {
                    return Err(config_err("field `d`: reduction-equivalence needs d <= 4"));
                }
                if self.levels.iter().any(|l| l % 2 != 0) {
                    return Err(config_err("field `levels`: full-grid resolutions must be even"));
                }
                if self.bc != SigmaSpec::ConormalHomogeneous {
                    return Err(config_err(
                        "field `bc`: reduction-equivalence compares solutions across the thin set, use conormal-homogeneous",
                    ));
                }
            }
        }
        if self.assert_smoothness.is_some() && !self.diagnostics {
            return Err(config_err("field `assert_smoothness` needs `diagnostics = true`"));
        }
        if self.diagnostics && self.bc != SigmaSpec::ConormalHomogeneous {
            return Err(config_err("field `diagnostics`: identity checks apply to conormal-homogeneous solves"));
        }
        if let Some(k) = self.mode_k {
            positive("mode_k", k)?;
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("field `levels` must be strictly increasing"));
        }
        Ok(p)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionConfig {
    /// Checked against the subcommand before deserialisation.
    #[allow(dead_code)]
    pub kind: String,
    pub name: Option<String>,
    pub d: usize,
    pub n: usize,
    pub a: f64,
    #[serde(default = "default_one")]
    pub x_extent: f64,
    #[serde(default = "default_one")]
    pub r_extent: f64,
    /// Trace `cos(π m x₁ / X)`.
    #[serde(default = "default_mode")]
    pub mode: u32,
    pub dx_levels: Vec<usize>,
    pub dr_levels: Vec<usize>,
    /// Relative L² error of the DtN estimate at the first level.
    pub assert_dtn_baseline: Option<f64>,
    /// Relative L² error of the DtN estimate at the last level.
    pub assert_dtn_refined: Option<f64>,
    /// Max error against `e^{-|ξ| r} cos(ξ x₁)` relative to the trace amplitude (s = 1/2 only).
    pub assert_closed_form: Option<f64>,
    /// Relative error of the energy ratio against d_{a,n} at the last level.
    pub assert_energy: Option<f64>,
    #[serde(default = "default_competitors")]
    pub competitors: usize,
    /// Allowance δ in E(Ext u) ≤ (1+δ) E(competitor).
    pub assert_minimality: Option<f64>,
    /// Max |DtN| for the constant trace.
    pub assert_constant: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub plot: bool,
}

fn default_mode() -> u32 {
    1
}
fn default_competitors() -> usize {
    5
}

impl ExtensionConfig {
    pub fn validate(&self) -> Result<ProblemParams64, RunError> {
        let p = params(self.d, self.n, self.a)?;
        if p.regime() != Regime::MidRange {
            return Err(config_err(format!(
                "fields `a`, `n`: the extension needs the mid-range regime 0 < a+n < 2, but a+n = {} is {}",
                p.a_plus_n(),
                p.regime()
            )));
        }
        let k = p.thin_dim();
        if !(1..=2).contains(&k) {
            return Err(config_err(format!("fields `d`, `n`: d-n must be 1 or 2, got {k}")));
        }
        if (self.d as f64) + self.a < 2.0 {
            return Err(config_err("fields `d`, `a`: the extension needs d+a >= 2"));
        }
        positive("x_extent", self.x_extent)?;
        positive("r_extent", self.r_extent)?;
        if self.mode == 0 {
            return Err(config_err("field `mode` must be at least 1"));
        }
        let max_dx = if k == 1 { 256 } else { 48 };
        levels_ok("dx_levels", &self.dx_levels, 8, max_dx)?;
        levels_ok("dr_levels", &self.dr_levels, 4, 2048)?;
        if self.dx_levels.len() != self.dr_levels.len() {
            return Err(config_err("fields `dx_levels`, `dr_levels` must have the same length"));
        }
        if self.dx_levels.iter().any(|&l| 2 * self.mode as usize >= l) {
            return Err(config_err("field `mode` is not resolved by the smallest dx level"));
        }
        if self.assert_closed_form.is_some() && (p.a_plus_n() != 1.0 || k != 1) {
            return Err(config_err("field `assert_closed_form` applies only to d-n = 1 with a+n = 1"));
        }
        Ok(p)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnackConfig {
    /// Checked against the subcommand before deserialisation.
    #[allow(dead_code)]
    pub kind: String,
    pub name: Option<String>,
    pub d: usize,
    pub n: usize,
    pub a: f64,
    #[serde(default)]
    pub outer: DataSpec,
    /// Amplitude of a first angular harmonic `ũ₁(x, r) cos θ` added to the
    /// solved field; 0 keeps the field axisymmetric.
    #[serde(default)]
    pub angular_amplitude: f64,
    #[serde(default = "default_one")]
    pub x_extent: f64,
    #[serde(default = "default_one")]
    pub r_extent: f64,
    pub levels: Vec<usize>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_k_min")]
    pub k_min: i32,
    #[serde(default = "default_k_max")]
    pub k_max: i32,
    /// Compare the fitted exponent with the cap min(1, α*(b,n)).
    #[serde(default = "default_true")]
    pub assert_exponent: bool,
    #[serde(default = "default_true")]
    pub assert_residual_decreasing: bool,
    /// Max residual of the b-equation at the last level.
    pub assert_residual: Option<f64>,
    /// Max |w·u₀ - u| relative to max |u|.
    #[serde(default = "default_round_trip")]
    pub assert_round_trip: f64,
    #[serde(default)]
    pub plot: bool,
}

fn default_k_min() -> i32 {
    2
}
fn default_k_max() -> i32 {
    5
}
fn default_round_trip() -> f64 {
    1e-13
}

impl HarnackConfig {
    pub fn validate(&self) -> Result<ProblemParams64, RunError> {
        let p = params(self.d, self.n, self.a)?;
        if p.a_plus_n() >= 2.0 {
            return Err(config_err(format!(
                "fields `a`, `n`: the Harnack ratio needs a+n < 2, but a+n = {} is {}",
                p.a_plus_n(),
                p.regime()
            )));
        }
        if p.regime() == Regime::Supersingular {
            return Err(config_err(format!(
                "fields `a`, `n`: a+n = {} is supersingular; the solver needs a+n > 0",
                p.a_plus_n()
            )));
        }
        let k = p.thin_dim();
        if !(1..=2).contains(&k) {
            return Err(config_err(format!("fields `d`, `n`: d-n must be 1 or 2, got {k}")));
        }
        if !matches!(self.outer, DataSpec::Generic | DataSpec::Product) {
            return Err(config_err("field `outer`: Harnack runs use \"generic\" or \"product\" data vanishing on the thin set"));
        }
        if !self.angular_amplitude.is_finite() {
            return Err(config_err("field `angular_amplitude` must be finite"));
        }
        positive("x_extent", self.x_extent)?;
        positive("r_extent", self.r_extent)?;
        positive("tol", self.tol)?;
        levels_ok("levels", &self.levels, 8, 2048)?;
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("field `levels` must be strictly increasing"));
        }
        if self.k_min > self.k_max || self.k_min < 0 {
            return Err(config_err("fields `k_min`, `k_max`: need 0 <= k_min <= k_max"));
        }
        Ok(p)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityConfig {
    /// Checked against the subcommand before deserialisation.
    #[allow(dead_code)]
    pub kind: String,
    pub name: Option<String>,
    pub d: Option<usize>,
    pub n: usize,
    pub a: f64,
    pub eps: Vec<f64>,
    #[serde(default = "default_cap_tol")]
    pub assert_rel_error: f64,
    /// Relative tolerance on the fitted decay rate (superdegenerate only).
    #[serde(default = "default_rate_tol")]
    pub assert_rate: f64,
    /// Number of smallest radii used in the rate fit.
    #[serde(default = "default_rate_points")]
    pub rate_points: usize,
    #[serde(default)]
    pub plot: bool,
}

fn default_cap_tol() -> f64 {
    1e-6
}
fn default_rate_tol() -> f64 {
    0.05
}
fn default_rate_points() -> usize {
    3
}

impl CapacityConfig {
    pub fn validate(&self) -> Result<ProblemParams64, RunError> {
        let p = params(self.d.unwrap_or(self.n), self.n, self.a)?;
        if self.eps.is_empty() {
            return Err(config_err("field `eps` must list at least one radius"));
        }
        if let Some(bad) = self.eps.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
            return Err(config_err(format!("field `eps`: {bad} is not in (0, 1)")));
        }
        if self.rate_points < 2 {
            return Err(config_err("field `rate_points` must be at least 2"));
        }
        Ok(p)
    }
}
