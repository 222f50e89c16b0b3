use std::path::Path;

use serde_json::json;
use thinlap_core::ProblemParams64;

use super::{num, opt};
use crate::config::{self, ExponentsConfig, Kind};
use crate::output::{ArtifactDir, Assertion, Outcome, RunError};

struct Row {
    a: f64,
    n: usize,
    p: ProblemParams64,
    d_an: Option<f64>,
    sharp: Option<bool>,
}

pub fn run(path: &Path, out: &Path) -> Result<Outcome, RunError> {
    let (name, cfg): (String, ExponentsConfig) = config::load(path, Kind::Exponents)?;
    cfg.validate()?;
    let mut rows = Vec::new();
    for n in cfg.n_min..=cfg.n_max {
        for a in cfg.a_values() {
            // d only enters through d - n, which no column depends on.
            let p = config::params(n, n, a)?;
            rows.push(Row { a, n, p, d_an: p.extension_constant().ok(), sharp: p.sharpness_holds().ok() });
        }
    }
    let mut csv = String::from("a,n,regime,s,b,alpha_star,alpha_star_b,d_an,sharp\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            num(r.a),
            r.n,
            r.p.regime(),
            opt(r.p.s().ok()),
            opt(r.p.b().ok()),
            num(r.p.alpha_star()),
            opt(r.p.alpha_star_b().ok()),
            opt(r.d_an),
            r.sharp.map(|s| s.to_string()).unwrap_or_default()
        ));
    }
    let mut dir = ArtifactDir::create(out, &name)?;
    dir.write("exponents.csv", csv.as_bytes())?;

    let slice: Vec<&Row> = rows.iter().filter(|r| r.p.a_plus_n() == 1.0).collect();
    let mut assertions = Vec::new();
    let worst_d = slice.iter().filter_map(|r| r.d_an).map(|d| (d - 1.0).abs()).fold(0.0, f64::max);
    assertions.push(Assertion::at_most("d_an_is_one_on_slice", worst_d, 1e-10));
    if cfg.assert_sharpness_slice {
        let bad: Vec<String> = slice
            .iter()
            .filter(|r| r.sharp != Some(r.n >= 4))
            .map(|r| format!("(a={}, n={})", r.a, r.n))
            .collect();
        let detail = if bad.is_empty() {
            format!("{} rows with a+n = 1 checked", slice.len())
        } else {
            format!("mismatch at {}", bad.join(", "))
        };
        assertions.push(Assertion::flag("sharpness_slice", bad.is_empty(), detail));
    }
    let sharp_rows: Vec<String> =
        rows.iter().filter(|r| r.sharp == Some(true)).map(|r| format!("a={} n={}", r.a, r.n)).collect();
    let summary = json!({ "rows": rows.len(), "sharp_rows": sharp_rows });
    dir.finish(&name, Kind::Exponents.as_str(), assertions, summary)
}
