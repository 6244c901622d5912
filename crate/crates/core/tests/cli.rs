use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use volfilter::table::{parse_f64_field, AnalysisTable};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_volfilter"));
    c.env_remove("VOLFILTER_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn sample() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic-expou.tsv")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.tsv");
    let b = dir.path().join("b.tsv");
    ok(&[
        "simulate",
        "--model",
        "ou",
        "--steps",
        "1000",
        "--seed",
        "7",
        "-o",
        s(&a),
    ]);
    ok(&[
        "simulate",
        "--model",
        "ou",
        "--steps",
        "1000",
        "--seed",
        "7",
        "-o",
        s(&b),
    ]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let t = AnalysisTable::load(&a).unwrap();
    assert_eq!(t.rows.len(), 1001);
    assert_eq!(t.columns, ["step", "x", "y", "sigma"]);
}

#[test]
fn seed_from_environment() {
    let flag = ok(&["simulate", "--model", "heston", "--steps", "50", "--seed", "11"]);
    let env = bin()
        .args(["simulate", "--model", "heston", "--steps", "50"])
        .env("VOLFILTER_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(flag.stdout, env.stdout);
}

#[test]
fn presets_load() {
    for (name, k) in [("dji-expou", 4.7e-2), ("dji-ou", 1.4e-3), ("dji-heston", 2.45e-3)] {
        let out = ok(&["simulate", "--preset", name, "--steps", "3"]);
        let t = AnalysisTable::parse(&String::from_utf8(out.stdout).unwrap()).unwrap();
        assert_eq!(parse_f64_field(t.meta("k").unwrap(), 0, "k").unwrap(), k, "{name}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["simulate", "--steps", "10"]).status.code(), Some(1));
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--model", "ou"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "date,close\n2020-01-01,1\n2020-01-02,0\n2020-01-03,2\n").unwrap();
    let out = run(&["estimate", "--prices", s(&bad), "--estimator", "prop"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 3"));

    let missing = dir.path().join("missing.tsv");
    assert_eq!(
        run(&["estimate", "--returns", s(&missing), "--estimator", "prop"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["simulate", "--model", "ou", "--k=-1", "--steps", "3"])
            .status
            .code(),
        Some(2)
    );

    // Zero returns leave the acf undefined: a computation failure, not bad data.
    let flat = dir.path().join("flat.csv");
    fs::write(
        &flat,
        "date,close\n2020-01-01,5\n2020-01-02,5\n2020-01-03,5\n2020-01-04,5\n",
    )
    .unwrap();
    let out = run(&[
        "analyze",
        "--prices",
        s(&flat),
        "--what",
        "acf",
        "--series",
        "returns",
        "--max-lag",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn ml_estimate_has_leading_na_and_warns_on_low_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("v.tsv");
    let out = ok(&[
        "estimate",
        "--sim",
        s(&sample()),
        "--model",
        "expou",
        "--estimator",
        "ml",
        "--iterations",
        "1",
        "-o",
        s(&out_path),
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let t = AnalysisTable::load(&out_path).unwrap();
    assert_eq!(t.columns, ["index", "sigma", "estimator"]);
    let na = t.rows.iter().take_while(|r| r[1] == "NA").count();
    assert_eq!(na, 9);
    assert_eq!(t.rows.len(), 1000);
}

#[test]
fn decon_is_reproducible_and_gbm_is_constant() {
    let a = ok(&["estimate", "--sim", s(&sample()), "--estimator", "decon", "--seed", "3"]);
    let b = ok(&["estimate", "--sim", s(&sample()), "--estimator", "decon", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
    let c = ok(&["estimate", "--sim", s(&sample()), "--estimator", "decon", "--seed", "4"]);
    assert_ne!(a.stdout, c.stdout);

    let g = ok(&["estimate", "--sim", s(&sample()), "--estimator", "gbm"]);
    let t = AnalysisTable::parse(&String::from_utf8(g.stdout).unwrap()).unwrap();
    assert!(t.rows.iter().all(|r| r[1] == t.rows[0][1]));
}

#[test]
fn estimate_output_ignores_thread_count() {
    let args = |threads: &'static str| {
        vec![
            "--threads",
            threads,
            "estimate",
            "--sim",
            s(&sample()).to_owned().leak(),
            "--model",
            "heston",
            "--iterations",
            "300",
            "--seed",
            "5",
        ]
    };
    let one = ok(&args("1"));
    let four = ok(&args("4"));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn prices_input_carries_dates() {
    let prices = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic-prices.csv");
    let out = ok(&["estimate", "--prices", s(&prices), "--estimator", "prop"]);
    let t = AnalysisTable::parse(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(t.columns, ["index", "date", "sigma", "estimator"]);
    assert_eq!(t.rows[0][1], "1990-01-03");
    assert_eq!(t.rows.len(), 1000);
}

#[test]
fn analyze_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&[
        "analyze",
        "--sim",
        s(&sample()),
        "--what",
        "acf",
        "--max-lag",
        "500",
        "-o",
        s(&d.join("acf.tsv")),
    ]);
    let acf = AnalysisTable::load(d.join("acf.tsv")).unwrap();
    assert_eq!(acf.rows.len(), 501);
    assert_eq!(parse_f64_field(&acf.rows[0][1], 1, "c").unwrap(), 1.0);

    ok(&[
        "analyze",
        "--sim",
        s(&sample()),
        "--what",
        "leverage,mfpt",
        "--max-lag",
        "50",
        "--out-dir",
        s(d),
    ]);
    let lev = AnalysisTable::load(d.join("leverage.tsv")).unwrap();
    assert_eq!(lev.rows.len(), 101);
    assert_eq!(lev.rows[0][0], "-50");
    let mfpt = AnalysisTable::load(d.join("mfpt.tsv")).unwrap();
    assert_eq!(
        mfpt.columns,
        ["l", "lambda", "mfpt", "completed", "censored", "exceedances", "status"]
    );
    assert_eq!(mfpt.rows.len(), 30);

    ok(&[
        "analyze",
        "--sim",
        s(&sample()),
        "--what",
        "pdf",
        "--scale",
        "log",
        "--bins",
        "40",
        "-o",
        s(&d.join("p.tsv")),
    ]);
    assert_eq!(AnalysisTable::load(d.join("p.tsv")).unwrap().rows.len(), 40);

    let a = ok(&[
        "analyze",
        "--sim",
        s(&sample()),
        "--what",
        "mfpt",
        "--artificial",
        "--seed",
        "9",
    ]);
    let b = ok(&[
        "analyze",
        "--sim",
        s(&sample()),
        "--what",
        "mfpt",
        "--artificial",
        "--seed",
        "9",
    ]);
    assert_eq!(a.stdout, b.stdout);

    assert_eq!(
        run(&["analyze", "--sim", s(&sample()), "--what", "acf,pdf"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn predict_recovers_planted_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut text = String::from("h\tgamma\n");
    for h in 1..=100 {
        text.push_str(&format!("{h}\t{:e}\n", -0.12 * (h as f64).ln() + 0.82));
    }
    fs::write(d.join("g.tsv"), text).unwrap();
    ok(&[
        "predict",
        "--gamma-table",
        s(&d.join("g.tsv")),
        "--no-split",
        "--out-dir",
        s(d),
    ]);
    let fit = AnalysisTable::load(d.join("gamma-fit.tsv")).unwrap();
    let a = parse_f64_field(&fit.rows[0][1], 1, "a").unwrap();
    let b = parse_f64_field(&fit.rows[0][2], 1, "b").unwrap();
    assert!((a + 0.12).abs() < 1e-12 && (b - 0.82).abs() < 1e-12, "{a} {b}");

    fs::write(d.join("one.tsv"), "h\tgamma\n1\t0.8\n").unwrap();
    let out = run(&["predict", "--gamma-table", s(&d.join("one.tsv")), "--out-dir", s(d)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("segment"));
}

#[test]
fn predict_horizon_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&[
        "predict",
        "--sim",
        s(&sample()),
        "--horizons",
        "1..100",
        "--bins",
        "8",
        "--min-count",
        "10",
        "--out-dir",
        s(d),
    ]);
    let g = AnalysisTable::load(d.join("gamma.tsv")).unwrap();
    assert_eq!(g.rows.len(), 100);
    assert!(d.join("median-regression.tsv").exists());
    assert_eq!(AnalysisTable::load(d.join("gamma-fit.tsv")).unwrap().rows.len(), 2);
}

#[test]
fn compare_rows_and_forced_equality() {
    let out = ok(&["compare", "--sim", s(&sample()), "--iterations", "200"]);
    let t = AnalysisTable::parse(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(t.rows.len(), 3);
    assert!(t.rows.iter().all(|r| parse_f64_field(&r[1], 1, "ratio").unwrap() < 1.0));

    let out = ok(&["compare", "--sim", s(&sample()), "--iterations", "1", "--force-equal"]);
    let t = AnalysisTable::parse(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert!(t
        .rows
        .iter()
        .all(|r| parse_f64_field(&r[1], 1, "ratio").unwrap() == 1.0));
}

#[test]
fn config_file_overrides_preset_and_flags_override_both() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("m.conf");
    fs::write(&conf, "# custom\nk = 2e-3\nm = 1e-2\n").unwrap();
    let out = ok(&[
        "simulate",
        "--preset",
        "dji-ou",
        "--config",
        s(&conf),
        "--m",
        "0.02",
        "--steps",
        "1",
    ]);
    let t = AnalysisTable::parse(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(parse_f64_field(t.meta("k").unwrap(), 0, "k").unwrap(), 2e-3);
    assert_eq!(parse_f64_field(t.meta("m").unwrap(), 0, "m").unwrap(), 0.02);
    assert_eq!(parse_f64_field(t.meta("alpha").unwrap(), 0, "alpha").unwrap(), 5e-2);

    fs::write(&conf, "colour = blue\n").unwrap();
    assert_eq!(
        run(&["simulate", "--config", s(&conf), "--steps", "1"]).status.code(),
        Some(2)
    );
}
