use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use thinlap_core::extension::TraceFunction;
use thinlap_core::grid::Field;

fn thinlap(args: &[&str], cfg: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_thinlap"));
    cmd.args(args);
    if let Some(c) = cfg {
        cmd.arg("--config").arg(c);
    }
    cmd.arg("--out").arg(out).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const SMALL_SOLVE: &str = "kind = \"solve\"\nd = 3\nn = 2\na = -0.5\nbc = \"conormal-flux\"\nflux = \"constant\"\nouter = \"characteristic\"\nexact = \"characteristic\"\nlevels = [8, 16]\n";

#[test]
fn config_errors_exit_one_with_field_names() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown.toml", format!("{SMALL_SOLVE}colour = 3\n"), "colour"),
        ("kind.toml", SMALL_SOLVE.replace("\"solve\"", "\"harnack\""), "kind"),
        ("regime.toml", SMALL_SOLVE.replace("a = -0.5", "a = 0.0"), "`bc`"),
        ("supersingular.toml", SMALL_SOLVE.replace("a = -0.5", "a = -2.5").replace("bc = \"conormal-flux\"\nflux = \"constant\"\n", ""), "supersingular"),
        ("levels.toml", SMALL_SOLVE.replace("[8, 16]", "[]"), "levels"),
        ("syntax.toml", "kind = \"solve\"\nd = ".to_string(), "syntax.toml"),
    ];
    for (name, text, needle) in cases {
        let cfg = write(tmp.path(), name, &text);
        let out = thinlap(&["solve"], Some(&cfg), &tmp.path().join("out"));
        assert_eq!(out.status.code(), Some(1), "{name}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{name}: {err}");
    }
    let harnack = write(tmp.path(), "h.toml", "kind = \"harnack\"\nd = 3\nn = 2\na = 1.0\nlevels = [16]\n");
    assert_eq!(thinlap(&["harnack"], Some(&harnack), tmp.path()).status.code(), Some(1));
}

#[test]
fn assertion_failures_exit_two_and_artifacts_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let pass = write(tmp.path(), "pass.toml", &format!("{SMALL_SOLVE}assert_max_rel_error = 0.5\n"));
    let fail = write(tmp.path(), "fail.toml", &format!("{SMALL_SOLVE}assert_max_rel_error = 1e-12\n"));
    let out = tmp.path().join("out");
    assert_eq!(thinlap(&["solve"], Some(&pass), &out).status.code(), Some(0));
    assert_eq!(thinlap(&["solve"], Some(&fail), &out).status.code(), Some(2));

    let field = Field::<f64>::read_csv(fs::File::open(out.join("pass/field.csv")).map(std::io::BufReader::new).unwrap()).unwrap();
    assert_eq!(field.grid().dr_res(), 16);
    let verdict: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fail/verdict.json")).unwrap()).unwrap();
    assert_eq!(verdict["schema_version"], 1);
    assert_eq!(verdict["passed"], false);

    let report = thinlap(&["report"], None, &out);
    assert_eq!(report.status.code(), Some(2));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert!(lines[1].starts_with("FAIL fail"), "{summary}");
    assert!(lines[2].starts_with("PASS pass"), "{summary}");

    fs::write(out.join("pass/verdict.json"), "{ not json").unwrap();
    let corrupt = thinlap(&["report"], None, &out);
    assert_eq!(corrupt.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&corrupt.stderr).contains("pass"));
}

#[test]
fn empty_report_and_thread_variable() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(thinlap(&["report"], None, tmp.path()).status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["total"], 0);

    let cfg = write(tmp.path(), "e.toml", "kind = \"exponents\"\na_min = -2.0\na_max = 0.5\na_step = 0.5\nn_min = 2\nn_max = 3\n");
    let bad = Command::new(env!("CARGO_BIN_EXE_thinlap"))
        .env("THINLAP_THREADS", "zero")
        .args(["exponents", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(thinlap(&["exponents"], Some(&cfg), tmp.path()).status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("e/exponents.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "a,n,regime,s,b,alpha_star,alpha_star_b,d_an,sharp");
    // a = 0, n = 2 is superdegenerate: s, b, alpha_star_b and d are left empty.
    let row = csv.lines().find(|l| l.starts_with("0.0000000000000000e0,2,")).unwrap();
    let cells: Vec<&str> = row.split(',').collect();
    assert_eq!(cells[2], "superdegenerate");
    assert!(cells[3].is_empty() && cells[4].is_empty() && cells[7].is_empty());
}

#[test]
fn extension_traces_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "x.toml",
        "kind = \"extension-check\"\nd = 3\nn = 2\na = -1.0\ndx_levels = [16]\ndr_levels = [32]\ncompetitors = 1\n",
    );
    assert_eq!(thinlap(&["extension-check"], Some(&cfg), tmp.path()).status.code(), Some(0));
    for f in ["trace.csv", "dtn.csv"] {
        let t = TraceFunction::<f64>::read_csv(std::io::BufReader::new(fs::File::open(tmp.path().join("x").join(f)).unwrap())).unwrap();
        assert_eq!(t.resolution(), 16);
    }
}
