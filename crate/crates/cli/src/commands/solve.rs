use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use thinlap_core::grid::{lift_axisymmetric, make_axigrid, AxiGrid, Field, FullGrid};
use thinlap_core::solver::{
    angular_derivative_field, assemble, laplacian_identity_residual, solve, solve_full, v_equation_residual,
    BoundaryCondition, SolveReport,
};
use thinlap_core::ProblemParams64;

use super::data::{self, Data};
use super::{num, opt, strictly_decreasing};
use crate::config::{self, FluxSpec, Kind, SigmaSpec, SolveConfig, SolveMode};
use crate::output::{ArtifactDir, Assertion, Outcome, RunError};
use crate::plot;

#[derive(Serialize)]
struct LevelReport {
    level: usize,
    dx: usize,
    dr: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    full_resolution: Option<usize>,
    reduced: SolveReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    full: Option<SolveReport>,
}

#[derive(Default)]
struct Row {
    error: Option<f64>,
    identity: Option<f64>,
    v_residual: Option<f64>,
    first_row: Option<f64>,
}

pub fn run(path: &Path, out: &Path) -> Result<Outcome, RunError> {
    let (name, cfg): (String, SolveConfig) = config::load(path, Kind::Solve)?;
    let p = cfg.validate()?;
    if cfg.assert_max_rel_error.is_some() && cfg.exact.is_none() && cfg.mode == SolveMode::Reduced {
        return Err(RunError::Config("field `assert_max_rel_error` needs `exact` in reduced mode".into()));
    }
    let k = cfg.mode_k.unwrap_or(PI / (2.0 * cfg.x_extent));
    let outer = data::data(cfg.outer, &p, cfg.outer_value, k);
    let exact = cfg.exact.map(|e| data::data(e, &p, cfg.outer_value, k));
    let bc = boundary_condition(&cfg, &p, outer.clone());
    let mut dir = ArtifactDir::create(out, &name)?;

    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut last_field = None;
    for (level, &res) in cfg.levels.iter().enumerate() {
        let (u, row, report) = match cfg.mode {
            SolveMode::Reduced => {
                let axi = make_axigrid(&p, cfg.x_extent, cfg.r_extent, res, res)?;
                let (u, rep) = solve(&assemble(&axi, p.reduced_exponent(), &bc)?, cfg.tol)?;
                let mut row = Row { error: exact.as_ref().map(|ex| max_rel_error(&u, ex)), ..Row::default() };
                if cfg.diagnostics {
                    diagnostics(&u, &p, &mut row)?;
                }
                let report = LevelReport { level, dx: res, dr: res, full_resolution: None, reduced: rep, full: None };
                (u, row, report)
            }
            SolveMode::ReductionEquivalence => {
                let (u, err, rep, full_rep) = equivalence_level(&cfg, &p, &bc, &outer, res)?;
                let mut row = Row { error: Some(err), ..Row::default() };
                if cfg.diagnostics {
                    diagnostics(&u, &p, &mut row)?;
                }
                let report = LevelReport {
                    level,
                    dx: 2 * res,
                    dr: 2 * res,
                    full_resolution: Some(res),
                    reduced: rep,
                    full: Some(full_rep),
                };
                (u, row, report)
            }
        };
        rows.push(row);
        reports.push(report);
        last_field = Some(u);
    }

    let mut csv = String::from("level,dx,dr,iterations,relative_residual,max_rel_error,identity_residual,v_residual,first_row_ratio\n");
    for (rep, row) in reports.iter().zip(&rows) {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            rep.level,
            rep.dx,
            rep.dr,
            rep.reduced.iterations,
            num(rep.reduced.relative_residual),
            opt(row.error),
            opt(row.identity),
            opt(row.v_residual),
            opt(row.first_row)
        ));
    }
    dir.write("levels.csv", csv.as_bytes())?;
    let mut field_csv = Vec::new();
    if let Some(u) = &last_field {
        u.write_csv(&mut field_csv)?;
    }
    dir.write("field.csv", &field_csv)?;
    dir.write_json("report.json", &json!({ "levels": reports }))?;

    let errors: Vec<f64> = rows.iter().filter_map(|r| r.error).collect();
    if cfg.plot && !errors.is_empty() {
        let pts: Vec<(f64, f64)> =
            reports.iter().zip(&errors).map(|(r, &e)| (cfg.x_extent / r.dx as f64, e)).collect();
        dir.write("levels.svg", plot::line_plot("error vs h", "h", "max rel. error", &[("error", pts)], true, true).as_bytes())?;
    }

    let mut assertions = Vec::new();
    if let (Some(tol), Some(&last)) = (cfg.assert_max_rel_error, errors.last()) {
        assertions.push(Assertion::at_most("max_rel_error", last, tol));
    }
    if cfg.assert_decreasing {
        if !errors.is_empty() {
            assertions.push(Assertion::flag(
                "error_decreasing",
                strictly_decreasing(&errors) && errors.len() == rows.len(),
                format!("{errors:?}"),
            ));
        }
        if cfg.diagnostics {
            let id: Vec<f64> = rows.iter().filter_map(|r| r.identity).collect();
            let v: Vec<f64> = rows.iter().filter_map(|r| r.v_residual).collect();
            assertions.push(Assertion::flag("identity_residual_decreasing", strictly_decreasing(&id), format!("{id:?}")));
            assertions.push(Assertion::flag("v_residual_decreasing", strictly_decreasing(&v), format!("{v:?}")));
        }
    }
    if let Some(tol) = cfg.assert_smoothness {
        let ratios: Vec<f64> = rows.iter().filter_map(|r| r.first_row).collect();
        let change = match ratios.as_slice() {
            [.., prev, last] => ((last - prev) / last).abs(),
            _ => f64::INFINITY,
        };
        assertions.push(Assertion::at_most("first_row_ratio_change", change, tol));
    }
    let summary = json!({
        "mode": match cfg.mode { SolveMode::Reduced => "reduced", SolveMode::ReductionEquivalence => "reduction-equivalence" },
        "bc": bc.at_sigma0.name(),
        "levels": cfg.levels,
        "max_rel_error": errors,
    });
    dir.finish(&name, Kind::Solve.as_str(), assertions, summary)
}

fn boundary_condition(cfg: &SolveConfig, p: &ProblemParams64, outer: Data) -> BoundaryCondition<f64> {
    let outer = move |x: &[f64], r: f64| outer(x, r);
    match cfg.bc {
        SigmaSpec::ConormalHomogeneous => BoundaryCondition::conormal_homogeneous(outer),
        SigmaSpec::DirichletZero => BoundaryCondition::dirichlet_zero(outer),
        SigmaSpec::ConormalFlux => {
            let spec = cfg.flux.unwrap_or(FluxSpec::Constant);
            let amplitude = cfg.flux_amplitude.unwrap_or(match spec {
                FluxSpec::Constant => -p.characteristic_exponent(),
                _ => 1.0,
            });
            let g = data::flux(spec, amplitude, cfg.x_extent);
            BoundaryCondition::conormal_flux(move |x: &[f64]| g(x), outer)
        }
    }
}

fn max_rel_error(u: &Field<f64>, exact: &Data) -> f64 {
    let g = u.grid();
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for idx in 0..g.len() {
        let ex = exact(&g.column_x(g.column_of(idx)), g.r_at(g.row_of(idx)));
        err = err.max((u.values()[idx] - ex).abs());
        scale = scale.max(ex.abs());
    }
    err / scale
}

fn diagnostics(u: &Field<f64>, p: &ProblemParams64, row: &mut Row) -> Result<(), RunError> {
    let v = angular_derivative_field(u, u.grid())?;
    row.identity = Some(laplacian_identity_residual(u, &v, p)?);
    row.v_residual = Some(v_equation_residual(&v, p));
    row.first_row = Some((0..u.grid().columns()).map(|c| v.at(c, 0).abs()).fold(0.0, f64::max));
    Ok(())
}

/// Full solve at resolution `res` per axis against the lifted reduced solve
/// at `2 res`; returns the reduced field and the relative max-norm gap on
/// probes `|x|∞ ≤ X/2`, `|y| ≤ R/2`.
fn equivalence_level(
    cfg: &SolveConfig,
    p: &ProblemParams64,
    bc: &BoundaryCondition<f64>,
    outer: &Data,
    res: usize,
) -> Result<(Field<f64>, f64, SolveReport, SolveReport), RunError> {
    let full = FullGrid::new(p, cfg.x_extent, cfg.r_extent, res, res)?;
    let outer_full = |x: &[f64], y: &[f64]| outer(x, y.iter().map(|v| v * v).sum::<f64>().sqrt());
    let (full_u, full_rep) = solve_full(&full, p, &outer_full, cfg.tol)?;
    // The reduced grid must reach the corners of the y-cube.
    let r_max = cfg.r_extent * (p.n as f64).sqrt();
    let axi = AxiGrid::new(p.thin_dim(), cfg.x_extent, r_max, 2 * res, 2 * res)?;
    let (u, rep) = solve(&assemble(&axi, p.reduced_exponent(), bc)?, cfg.tol)?;
    let lifted = lift_axisymmetric(&u, &full)?;
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for idx in 0..full.len() {
        let (x, _) = full.split_center(idx);
        if x.iter().all(|v| v.abs() <= cfg.x_extent / 2.0) && full.radius(idx) <= cfg.r_extent / 2.0 {
            err = err.max((full_u.values()[idx] - lifted.values()[idx]).abs());
            scale = scale.max(full_u.values()[idx].abs());
        }
    }
    if !(scale > 0.0) {
        return Err(RunError::Config("the full solution vanishes on every probe; choose other outer data".into()));
    }
    Ok((u, err / scale, rep, full_rep))
}
