//! Built-in boundary data, flux data and reference solutions.

use std::f64::consts::PI;
use std::sync::Arc;

use thinlap_core::ProblemParams64;

use crate::config::{DataSpec, FluxSpec};

pub type Data = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
pub type Flux = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

fn first(x: &[f64]) -> f64 {
    x.first().copied().unwrap_or(0.0)
}

/// `Σ_j (k r)^{2j} / Π_{i ≤ j} 2i(2i + a + n - 2)`, the regular radial factor
/// of `cos(k x₁)`-modes; summed until the terms stop contributing.
pub fn mode_profile(k: f64, a_plus_n: f64, r: f64) -> f64 {
    let z = (k * r) * (k * r);
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..200 {
        let j = j as f64;
        term *= z / (2.0 * j * (2.0 * j + a_plus_n - 2.0));
        sum += term;
        if term.abs() <= f64::EPSILON * sum.abs() {
            break;
        }
    }
    sum
}

/// Smooth, non-harmonic profile used for "generic" data.
fn generic(x: &[f64], r: f64) -> f64 {
    let x2 = x.get(1).copied().unwrap_or(0.0);
    1.0 + 0.5 * (2.0 * first(x) + 0.3).sin() + 0.25 * x2.cos() + r * r
}

pub fn data(spec: DataSpec, params: &ProblemParams64, value: f64, k: f64) -> Data {
    let t = params.characteristic_exponent();
    let an = params.a_plus_n();
    match spec {
        DataSpec::Constant => Arc::new(move |_, _| value),
        DataSpec::LinearX => Arc::new(move |x, _| value * first(x)),
        DataSpec::Characteristic => Arc::new(move |_, r| value * r.powf(t)),
        DataSpec::Product => Arc::new(move |x, r| value * first(x) * r.powf(t)),
        DataSpec::ConormalMode => Arc::new(move |x, r| value * (k * first(x)).cos() * mode_profile(k, an, r)),
        DataSpec::Generic => Arc::new(move |x, r| value * generic(x, r)),
    }
}

/// Data vanishing on `Σ₀` like the characteristic solution, for Dirichlet runs.
pub fn dirichlet_data(spec: DataSpec, params: &ProblemParams64) -> Data {
    let t = params.characteristic_exponent();
    match spec {
        DataSpec::Product => Arc::new(move |x, r| first(x) * r.powf(t)),
        _ => Arc::new(move |x, r| r.powf(t) * generic(x, r)),
    }
}

/// Outer data of the first angular harmonic in Dirichlet runs.
pub fn angular_data(params: &ProblemParams64, amplitude: f64) -> Data {
    let t = params.characteristic_exponent();
    Arc::new(move |x, r| amplitude * r.powf(t + 1.0) * (0.8 + 0.3 * (first(x) + 0.2).cos()))
}

pub fn flux(spec: FluxSpec, amplitude: f64, x_extent: f64) -> Flux {
    match spec {
        FluxSpec::Constant => Arc::new(move |_| amplitude),
        FluxSpec::Cosine => Arc::new(move |x| amplitude * (PI * first(x) / x_extent).cos()),
        FluxSpec::Bump => Arc::new(move |x| {
            let q = x.iter().map(|v| v * v).sum::<f64>() / (x_extent * x_extent);
            if q < 1.0 {
                amplitude * (1.0 - 1.0 / (1.0 - q)).exp()
            } else {
                0.0
            }
        }),
    }
}
