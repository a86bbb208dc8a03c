mod common;

use common::{column, parse_csv, run, scenario, write};
use serde_json::Value;

const ONE_LINK: &str = r#"
mode = "parallel"

[budgets]
p1_db = 6.0
p2_db = 3.0

[parallel]
nu = [1.0]
mu = [4.0]
"#;

fn stdout(out: &std::process::Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str, body: &str| write(dir.path(), name, body).to_str().unwrap().to_string();

    let bad = p("bad.toml", "mode = \"parallel\"\n[budgets]\np1_db = 1\n");
    let out = run(&["region", "--config", &bad]);
    assert_eq!(out.status.code(), Some(1));

    let unsorted = p(
        "unsorted.toml",
        &format!("{ONE_LINK}\n[sweep]\ngamma1 = [2, 1]\n"),
    );
    let out = run(&["region", "--config", &unsorted]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("sweep.gamma1") && err.contains("line"),
        "{err}"
    );

    let out = run(&["region", "--config", "/nonexistent/scenario.toml"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["region"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));

    let fading_only = p(
        "fading.toml",
        &ONE_LINK.replace("\"parallel\"", "\"fading\""),
    );
    assert_eq!(
        run(&["region", "--config", &fading_only]).status.code(),
        Some(1)
    );

    // a budget far beyond what the multiplier range can spend
    let huge = p(
        "huge.toml",
        &ONE_LINK.replace("p1_db = 6.0", "p1_db = 200.0"),
    );
    let out = run(&["region", "--config", &huge, "--format", "json"]);
    assert_eq!(out.status.code(), Some(2));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(doc["metadata"]["row_errors"]
        .as_array()
        .is_some_and(|a| !a.is_empty()));
    assert_eq!(doc["rows"][0]["converged"], false);

    // an oracle grid too coarse to certify anything
    let strict = p(
        "strict.toml",
        &format!("{ONE_LINK}\n[verify]\npoints_per_axis = 8\nrefinement_rounds = 0\n"),
    );
    let out = run(&["verify", "--config", &strict, "--tolerance", "1e-12"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["verify", "--config", &strict, "--tolerance", "-1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn single_weight_zero_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "g0.toml",
        &format!("{ONE_LINK}\n[sweep]\ngamma1 = [0]\n"),
    );
    let out = run(&["region", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    let (_, rows) = parse_csv(&text);
    assert_eq!(rows.len(), 1);
    assert_eq!(column(&text, "r1"), vec![0.0]);
    // all of user 1's power goes to the common message
    let r0 = column(&text, "r0")[0];
    let p1 = 10f64.powf(0.6);
    let p2 = 10f64.powf(0.3);
    let exact = 0.5 * (1.0 + p1 + p2 + 2.0 * (p1 * p2).sqrt()).log2();
    assert!((r0 - exact).abs() < 1e-6, "{r0} vs {exact}");
}

#[test]
fn no_user2_power_makes_async_equal_sync() {
    let dir = tempfile::tempdir().unwrap();
    let body = ONE_LINK
        .replace("p2_db = 3.0", "p2_db = -inf")
        .replace("nu = [1.0]", "nu = [1.0, 3.0]")
        .replace("mu = [4.0]", "mu = [4.0, 2.0]");
    let cfg = write(dir.path(), "p2zero.toml", &body);
    let out = run(&["compare-async", "--config", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    // two independent budget searches, each to 1e-7 relative
    for pair in [("sync_r0", "async_r0"), ("sync_r1", "async_r1")] {
        for (a, b) in column(&text, pair.0).iter().zip(column(&text, pair.1)) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}

#[test]
fn single_link_async_is_certified_by_oracle() {
    let cfg = scenario("async_single_link.toml");
    let out = run(&["compare-async", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    let g = column(&text, "gamma1");
    let r0 = column(&text, "async_r0");
    let r1 = column(&text, "async_r1");
    let oracle = column(&text, "async_oracle_objective");
    for i in 0..g.len() {
        let closed = r0[i] + g[i] * r1[i];
        assert!(
            (closed - oracle[i]).abs() < 1e-3,
            "γ={}: {closed} vs {}",
            g[i],
            oracle[i]
        );
        assert!(oracle[i] <= closed + 1e-6);
    }
    for (s, a) in column(&text, "sync_r0").iter().zip(&r0) {
        assert!(s >= a);
    }
}

#[test]
fn budgets_round_trip_through_db() {
    let dir = tempfile::tempdir().unwrap();
    let body = ONE_LINK
        .replace("p1_db = 6.0", "p1_db = 12.345678")
        .replace("p2_db = 3.0", "p2_db = -7.5");
    let cfg = write(dir.path(), "db.toml", &body);
    let out = run(&[
        "region",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let b = &doc["metadata"]["budgets"];
    assert!((b["p1_db"].as_f64().unwrap() - 12.345678).abs() < 1e-9);
    assert!((b["p2_db"].as_f64().unwrap() + 7.5).abs() < 1e-9);
}

#[test]
fn csv_output_gets_json_mirror_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("parallel_l10.toml");
    let csv = dir.path().join("out").join("region.csv");
    let out = run(&[
        "region",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    let doc: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out").join("region.json")).unwrap(),
    )
    .unwrap();
    let (header, rows) = parse_csv(&text);
    assert_eq!(doc["rows"].as_array().unwrap().len(), rows.len());
    assert_eq!(doc["columns"].as_array().unwrap().len(), header.len());
    assert_eq!(doc["metadata"]["command"], "region");
    assert_eq!(doc["rows"][9]["gamma1"], "inf");

    let svg = dir.path().join("region.svg");
    let out = run(&[
        "plot",
        csv.to_str().unwrap(),
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let body = std::fs::read_to_string(&svg).unwrap();
    assert!(body.starts_with("<svg") && body.contains("<polyline"));
}

#[test]
fn sample_dump_respects_overrides() {
    let cfg = scenario("fading_baseline.toml");
    let out = run(&[
        "sample",
        "--config",
        cfg.to_str().unwrap(),
        "--samples",
        "50",
        "--seed",
        "9",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 50);
    assert_eq!(doc["metadata"]["fading"]["seed"], 9);
    assert!(doc["metadata"]["fading"]["generator"]
        .as_str()
        .unwrap()
        .contains("xoshiro256++"));
    let again = run(&[
        "sample",
        "--config",
        cfg.to_str().unwrap(),
        "--samples",
        "50",
        "--seed",
        "9",
        "--format",
        "json",
    ]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn zero_budgets_are_certified() {
    let dir = tempfile::tempdir().unwrap();
    let body = ONE_LINK
        .replace("p1_db = 6.0", "p1_db = -inf")
        .replace("p2_db = 3.0", "p2_db = -inf");
    let cfg = write(dir.path(), "zero.toml", &body);
    let out = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    assert!(column(&text, "gap").iter().all(|g| *g == 0.0));
}
