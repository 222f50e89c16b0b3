use std::path::Path;

use serde_json::json;
use thinlap_core::analysis::{capacity_profile, capacity_rate, CapacityVerdict};
use thinlap_core::Regime;

use super::num;
use crate::config::{self, CapacityConfig, Kind};
use crate::output::{ArtifactDir, Assertion, Outcome, RunError};
use crate::plot;

/// Relative change of `cap` between the two smallest radii below which the
/// sweep is read as having a positive limit.
const STABLE_CHANGE: f64 = 0.05;

pub fn run(path: &Path, out: &Path) -> Result<Outcome, RunError> {
    let (name, cfg): (String, CapacityConfig) = config::load(path, Kind::Capacity)?;
    let p = cfg.validate()?;
    let mut points = capacity_profile(&p, &cfg.eps)?;
    points.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let mut dir = ArtifactDir::create(out, &name)?;
    let mut csv = String::from("eps,cap,closed_form,rel_err\n");
    for pt in &points {
        csv.push_str(&format!("{},{},{},{}\n", num(pt.eps), num(pt.cap), num(pt.closed_form), num(pt.rel_err)));
    }
    dir.write("capacity.csv", csv.as_bytes())?;
    if cfg.plot {
        let num_pts: Vec<(f64, f64)> = points.iter().map(|pt| (pt.eps, pt.cap)).collect();
        let exact: Vec<(f64, f64)> = points.iter().map(|pt| (pt.eps, pt.closed_form)).collect();
        let svg = plot::line_plot("radial capacity", "eps", "cap", &[("numerical", num_pts), ("closed form", exact)], true, true);
        dir.write("capacity.svg", svg.as_bytes())?;
    }

    let verdict = CapacityVerdict::for_params(&p);
    let mut assertions = Vec::new();
    let worst = points.iter().map(|pt| pt.rel_err).fold(0.0, f64::max);
    assertions.push(Assertion::at_most("closed_form_rel_err", worst, cfg.assert_rel_error));

    // Numerical reading of the limit from the two smallest radii.
    let observed = match points.as_slice() {
        [.., prev, last] => {
            let change = ((last.cap - prev.cap) / prev.cap).abs();
            Some(if change < STABLE_CHANGE { CapacityVerdict::PositiveFinite } else { CapacityVerdict::Vanishing })
        }
        _ => None,
    };
    if p.regime() != Regime::Supersingular {
        if let Some(obs) = observed {
            assertions.push(Assertion::flag(
                "limit_verdict",
                obs == verdict,
                format!("observed {}, expected {}", obs.label(), verdict.label()),
            ));
        }
    }
    let rate = capacity_rate(&p, &points, cfg.rate_points);
    if let Some(rate) = &rate {
        assertions.push(Assertion::at_most("rate", rate.rel_err, cfg.assert_rate));
    }
    let summary = json!({
        "a_plus_n": p.a_plus_n(),
        "regime": p.regime().to_string(),
        "verdict": verdict.label(),
        "observed": observed.map(|o| o.label()),
        "rate": rate,
    });
    dir.finish(&name, Kind::Capacity.as_str(), assertions, summary)
}
