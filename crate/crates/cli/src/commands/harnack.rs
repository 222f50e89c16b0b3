use std::path::Path;

use serde_json::json;
use thinlap_core::analysis::{
    angular_eigenvalue, harnack_ratio, harnack_regularity_check, harnack_regularity_check_angular, harnack_residual,
    harnack_residual_angular, multiply_by_characteristic,
};
use thinlap_core::grid::{make_axigrid, Field};
use thinlap_core::solver::{assemble, assemble_angular, solve, BoundaryCondition};
use thinlap_core::ProblemParams64;

use super::data::{self, Data};
use super::{num, opt, strictly_decreasing};
use crate::config::{self, HarnackConfig, Kind};
use crate::output::{ArtifactDir, Assertion, Outcome, RunError};
use crate::plot;

struct Row {
    res: usize,
    residual: f64,
    angular_residual: Option<f64>,
    round_trip: f64,
}

/// `max |w u₀ - u| / max |u|`.
fn round_trip(w: &Field<f64>, u: &Field<f64>, p: &ProblemParams64) -> Result<f64, RunError> {
    let back = multiply_by_characteristic(w, p)?;
    let gap = back.values().iter().zip(u.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(gap / u.max_abs().max(f64::MIN_POSITIVE))
}

fn dirichlet(outer: Data) -> BoundaryCondition<f64> {
    BoundaryCondition::dirichlet_zero(move |x: &[f64], r: f64| outer(x, r))
}

pub fn run(path: &Path, out: &Path) -> Result<Outcome, RunError> {
    let (name, cfg): (String, HarnackConfig) = config::load(path, Kind::Harnack)?;
    let p = cfg.validate()?;
    let angular = cfg.angular_amplitude != 0.0;
    let lambda = angular_eigenvalue::<f64>(1, p.n);
    let bc0 = dirichlet(data::dirichlet_data(cfg.outer, &p));
    let bc1 = dirichlet(data::angular_data(&p, cfg.angular_amplitude));
    let mut dir = ArtifactDir::create(out, &name)?;

    let mut rows = Vec::new();
    let mut last = None;
    for &res in &cfg.levels {
        let axi = make_axigrid(&p, cfg.x_extent, cfg.r_extent, res, res)?;
        let (u0, _) = solve(&assemble(&axi, p.reduced_exponent(), &bc0)?, cfg.tol)?;
        let w0 = harnack_ratio(&u0, &p)?;
        let mut row = Row { res, residual: harnack_residual(&w0, &p)?, angular_residual: None, round_trip: round_trip(&w0, &u0, &p)? };
        let w1 = if angular {
            let (u1, _) = solve(&assemble_angular(&axi, p.reduced_exponent(), lambda, &bc1)?, cfg.tol)?;
            let w1 = harnack_ratio(&u1, &p)?;
            row.angular_residual = Some(harnack_residual_angular(&w1, &p, lambda)?);
            row.round_trip = row.round_trip.max(round_trip(&w1, &u1, &p)?);
            Some(w1)
        } else {
            None
        };
        rows.push(row);
        last = Some((w0, w1));
    }
    let (w0, w1) = last.expect("validated: at least one level");
    let center = vec![0.0; p.thin_dim()];
    let check = match &w1 {
        Some(w1) => harnack_regularity_check_angular(&w0, w1, &p, &center, cfg.k_min, cfg.k_max)?,
        None => harnack_regularity_check(&w0, &p, &center, cfg.k_min, cfg.k_max)?,
    };

    let mut csv = String::from("level,dx,dr,residual,angular_residual,round_trip\n");
    for (i, r) in rows.iter().enumerate() {
        csv.push_str(&format!(
            "{i},{},{},{},{},{}\n",
            r.res,
            r.res,
            num(r.residual),
            opt(r.angular_residual),
            num(r.round_trip)
        ));
    }
    dir.write("residuals.csv", csv.as_bytes())?;
    dir.write("holder.csv", check.fit.to_csv().as_bytes())?;
    let mut buf = Vec::new();
    w0.write_csv(&mut buf)?;
    dir.write("ratio.csv", &buf)?;
    if let Some(w1) = &w1 {
        let mut buf = Vec::new();
        w1.write_csv(&mut buf)?;
        dir.write("ratio_angular.csv", &buf)?;
    }
    if cfg.plot {
        let pts: Vec<(f64, f64)> =
            check.fit.levels.iter().filter(|l| l.oscillation > 0.0).map(|l| (l.radius, l.oscillation)).collect();
        dir.write("holder.svg", plot::line_plot("oscillation decay", "radius", "oscillation", &[("osc", pts)], true, true).as_bytes())?;
    }

    let mut assertions = Vec::new();
    if cfg.assert_residual_decreasing {
        let res: Vec<f64> = rows.iter().map(|r| r.residual).collect();
        assertions.push(Assertion::flag("residual_decreasing", strictly_decreasing(&res), format!("{res:?}")));
        if angular {
            let res: Vec<f64> = rows.iter().filter_map(|r| r.angular_residual).collect();
            assertions.push(Assertion::flag("angular_residual_decreasing", strictly_decreasing(&res), format!("{res:?}")));
        }
    }
    if let Some(tol) = cfg.assert_residual {
        assertions.push(Assertion::at_most("residual", rows.last().map_or(f64::INFINITY, |r| r.residual), tol));
    }
    let worst_rt = rows.iter().map(|r| r.round_trip).fold(0.0, f64::max);
    assertions.push(Assertion::at_most("round_trip", worst_rt, cfg.assert_round_trip));
    if cfg.assert_exponent {
        match check.fit.alpha_hat {
            Some(alpha) => {
                assertions.push(Assertion::at_most("alpha_hat_within_cap", alpha, check.cap + check.allowance));
                assertions.push(Assertion {
                    name: "fit_reliable".into(),
                    passed: check.fit.reliable,
                    value: check.fit.r2,
                    threshold: Some(thinlap_core::analysis::RELIABLE_R2),
                    detail: Some("r2 of the log-log fit".into()),
                });
            }
            None => assertions.push(Assertion::flag("alpha_hat_within_cap", false, "the ratio is constant on every box")),
        }
    }
    let summary = json!({
        "b": p.b()?,
        "cap": check.cap,
        "alpha_hat": check.fit.alpha_hat,
        "r2": check.fit.r2,
        "reliable": check.fit.reliable,
        "angular_amplitude": cfg.angular_amplitude,
    });
    dir.finish(&name, Kind::Harnack.as_str(), assertions, summary)
}
