use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thinlap_core::extension::{dtn, extend, extension_energy, TraceFunction};
use thinlap_core::grid::{make_axigrid, Field};

use super::{num, opt};
use crate::config::{self, ExtensionConfig, Kind};
use crate::output::{ArtifactDir, Assertion, Outcome, RunError};
use crate::plot;

struct Row {
    dx: usize,
    dr: usize,
    dtn_error: f64,
    misfit: f64,
    unresolved: bool,
    closed_form: Option<f64>,
    ratio: f64,
}

pub fn run(path: &Path, out: &Path) -> Result<Outcome, RunError> {
    let (name, cfg): (String, ExtensionConfig) = config::load(path, Kind::ExtensionCheck)?;
    let p = cfg.validate()?;
    let s = p.s()?;
    let d_an = p.extension_constant()?;
    let xi = PI * cfg.mode as f64 / cfg.x_extent;
    let k = p.thin_dim();
    let mut dir = ArtifactDir::create(out, &name)?;

    let mut rows = Vec::new();
    let mut last = None;
    for (&dx, &dr) in cfg.dx_levels.iter().zip(&cfg.dr_levels) {
        let u = TraceFunction::from_fn(k, cfg.x_extent, dx, |x| (xi * x[0]).cos())?;
        let axi = make_axigrid(&p, cfg.x_extent, cfg.r_extent, dx, dr)?;
        let ext = extend(&u, &axi, &p)?;
        let est = dtn(&ext, &p)?;
        let target = d_an * xi.powf(2.0 * s);
        let (num_sq, den_sq) = est
            .values
            .samples()
            .iter()
            .zip(u.samples())
            .fold((0.0, 0.0), |(a, b), (&v, &ui)| (a + (v - target * ui).powi(2), b + (target * ui).powi(2)));
        let closed_form = cfg.assert_closed_form.map(|_| {
            let g = ext.grid();
            (0..g.len())
                .map(|idx| {
                    let x = g.column_x(g.column_of(idx))[0];
                    let exact = (-xi * g.r_at(g.row_of(idx))).exp() * (xi * x).cos();
                    (ext.values()[idx] - exact).abs()
                })
                .fold(0.0, f64::max)
        });
        let ratio = extension_energy(&ext, &p)? / u.ds_norm_sq(s);
        rows.push(Row {
            dx,
            dr,
            dtn_error: (num_sq / den_sq).sqrt(),
            misfit: est.max_misfit,
            unresolved: est.unresolved,
            closed_form,
            ratio,
        });
        last = Some((u, ext, est));
    }
    let (u, ext, est) = last.expect("validated: at least one level");

    let mut csv = String::from("level,dx,dr,dtn_rel_error,max_misfit,unresolved,closed_form_error\n");
    let mut energy = String::from("level,dx,dr,ratio,d_an,rel_err\n");
    for (i, r) in rows.iter().enumerate() {
        csv.push_str(&format!(
            "{i},{},{},{},{},{},{}\n",
            r.dx,
            r.dr,
            num(r.dtn_error),
            num(r.misfit),
            r.unresolved,
            opt(r.closed_form)
        ));
        energy.push_str(&format!("{i},{},{},{},{},{}\n", r.dx, r.dr, num(r.ratio), num(d_an), num((r.ratio / d_an - 1.0).abs())));
    }
    dir.write("levels.csv", csv.as_bytes())?;
    dir.write("energy.csv", energy.as_bytes())?;
    let mut buf = Vec::new();
    u.write_csv(&mut buf)?;
    dir.write("trace.csv", &buf)?;
    let mut buf = Vec::new();
    est.values.write_csv(&mut buf)?;
    dir.write("dtn.csv", &buf)?;

    // Competitors: Ext u plus perturbations vanishing at r = 0 and r = R.
    let ext_energy = extension_energy(&ext, &p)?;
    let mut comp = String::from("index,energy,ext_energy,ratio\n");
    let mut worst = f64::INFINITY;
    for i in 0..cfg.competitors {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i as u64));
        let amp = rng.gen_range(0.05..0.5);
        let coeffs: Vec<(f64, f64)> = (1..=3).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))).collect();
        let r_ext = cfg.r_extent;
        let x_ext = cfg.x_extent;
        let competitor = ext.map_with_coords(|x, r, v| {
            let q = r / r_ext;
            let psi: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(j, &(c, phase))| c * ((j + 1) as f64 * PI * x[0] / x_ext + phase).cos())
                .sum();
            v + amp * q * q * (1.0 - q) * (1.0 - q) * psi
        });
        let e = extension_energy(&competitor, &p)?;
        worst = worst.min(e / ext_energy);
        comp.push_str(&format!("{i},{},{},{}\n", num(e), num(ext_energy), num(e / ext_energy)));
    }
    dir.write("competitors.csv", comp.as_bytes())?;

    let constant_dtn = {
        let one = TraceFunction::from_fn(k, cfg.x_extent, u.resolution(), |_| 1.0)?;
        let ext_one: Field<f64> = extend(&one, ext.grid(), &p)?;
        dtn(&ext_one, &p)?.values.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    };

    if cfg.plot {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (cfg.x_extent / r.dx as f64, r.dtn_error)).collect();
        dir.write("dtn.svg", plot::line_plot("DtN error", "h_x", "rel. L2 error", &[("dtn", pts)], true, true).as_bytes())?;
    }

    let first = &rows[0];
    let last_row = rows.last().expect("non-empty");
    let mut assertions = Vec::new();
    if let Some(tol) = cfg.assert_dtn_baseline {
        assertions.push(Assertion::at_most("dtn_baseline", first.dtn_error, tol));
    }
    if let Some(tol) = cfg.assert_dtn_refined {
        assertions.push(Assertion::at_most("dtn_refined", last_row.dtn_error, tol));
    }
    if let (Some(tol), Some(err)) = (cfg.assert_closed_form, last_row.closed_form) {
        assertions.push(Assertion::at_most("closed_form", err, tol));
    }
    if let Some(tol) = cfg.assert_energy {
        assertions.push(Assertion::at_most("energy_ratio", (last_row.ratio / d_an - 1.0).abs(), tol));
    }
    if let Some(delta) = cfg.assert_minimality {
        if cfg.competitors > 0 {
            // E(Ext u) ≤ (1+δ) E(competitor) for every competitor.
            assertions.push(Assertion {
                name: "minimality".into(),
                passed: 1.0 <= (1.0 + delta) * worst,
                value: Some(worst),
                threshold: Some(1.0 / (1.0 + delta)),
                detail: Some("smallest competitor/extension energy ratio".into()),
            });
        }
    }
    if let Some(tol) = cfg.assert_constant {
        assertions.push(Assertion::at_most("constant_trace_dtn", constant_dtn, tol));
    }
    let summary = json!({
        "s": s,
        "d_an": d_an,
        "xi": xi,
        "dtn_rel_error": rows.iter().map(|r| r.dtn_error).collect::<Vec<_>>(),
        "energy_ratio": rows.iter().map(|r| r.ratio).collect::<Vec<_>>(),
        "unresolved": rows.iter().any(|r| r.unresolved),
    });
    dir.finish(&name, Kind::ExtensionCheck.as_str(), assertions, summary)
}
