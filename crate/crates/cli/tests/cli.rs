use std::process::{Command, Output};

use serde_json::Value;

fn gibbs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gibbs"))
        .args(args)
        .env_remove("GIBBS_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = gibbs(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Header JSON and data rows (column names stripped) of a CSV output.
fn parse_csv(text: &str) -> (Value, Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let head = lines.next().unwrap();
    let meta: Value = serde_json::from_str(head.strip_prefix("# ").expect("provenance line")).unwrap();
    let body: String = lines.map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let cols = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (meta, cols, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn kn_table() {
    let (meta, cols, rows) = parse_csv(&ok(&["kn", "--model", "ewens:theta=1", "--n", "3"]));
    assert_eq!(cols, ["k", "prob"]);
    assert_eq!(meta["model"]["family"], "ewens");
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    let want = [1.0 / 3.0, 0.5, 1.0 / 6.0];
    assert_eq!(rows.len(), 3);
    for (r, w) in rows.iter().zip(want) {
        assert!((num(&r[1]) - w).abs() < 1e-15);
    }
}

#[test]
fn numbers_carry_seventeen_digits() {
    let (_, _, rows) = parse_csv(&ok(&["kn", "--n", "3"]));
    // d.dddddddddddddddde-N
    let mantissa = rows[0][1].split('e').next().unwrap();
    assert_eq!(mantissa.replace('.', "").len(), 17);
}

#[test]
fn stirling_row() {
    let (_, _, rows) = parse_csv(&ok(&["stirling", "--alpha", "0", "--n", "3"]));
    let row = rows.iter().find(|r| r[1] == "2").unwrap();
    assert_eq!((row[0].as_str(), num(&row[2])), ("3", 3.0));
    let (_, _, neg) = parse_csv(&ok(&["stirling", "--alpha", "-1", "--n", "3", "--k", "1"]));
    // S_{-1}(3, 1) = (1 + 1)(2 + 1) = 6
    assert_eq!(num(&neg[0][2]), 6.0);
}

#[test]
fn ik_marginal_values() {
    let text = ok(&["ik-marginal", "--model", "ewens:theta=1", "--k", "2", "--max-i", "5", "--format", "json"]);
    let doc: Value = serde_json::from_str(&text).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    let want = [0.5, 1.0 / 6.0, 1.0 / 12.0, 1.0 / 20.0];
    assert_eq!(rows.len(), 4);
    for (r, w) in rows.iter().zip(want) {
        assert!((r[1].as_f64().unwrap() - w).abs() < 1e-15);
    }
}

#[test]
fn alternating_column_matches() {
    let (_, _, rows) = parse_csv(&ok(&[
        "ik-marginal", "--model", "two_parameter:alpha=0.5,theta=1", "--k", "3", "--max-i", "9", "--alternating",
    ]));
    for r in rows {
        assert!((num(&r[1]) - num(&r[2])).abs() <= 1e-10 * num(&r[1]));
    }
}

#[test]
fn urn_reruns_are_byte_identical() {
    let a = ok(&["urn", "--n", "5", "--draws", "3", "--seed", "7"]);
    let b = ok(&["urn", "--n", "5", "--draws", "3", "--seed", "7"]);
    assert_eq!(a, b);
    let (meta, _, rows) = parse_csv(&a);
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["generator"], "chacha20");
    assert_eq!(rows.len(), 3);
    for r in rows {
        // K equals the number of records
        assert_eq!(r[3].split(',').count().to_string(), r[4]);
    }
}

#[test]
fn output_does_not_depend_on_jobs() {
    let args = ["urn", "--n", "8", "--draws", "9000", "--seed", "3"];
    let one = ok(&[&args[..], &["--jobs", "1"]].concat());
    let three = ok(&[&args[..], &["--jobs", "3"]].concat());
    assert_eq!(one, three);
}

#[test]
fn seed_from_environment() {
    let env = Command::new(env!("CARGO_BIN_EXE_gibbs"))
        .args(["records", "--horizon", "20", "--draws", "4"])
        .env("GIBBS_SEED", "19")
        .output()
        .unwrap();
    assert!(env.status.success());
    let flag = ok(&["records", "--horizon", "20", "--draws", "4", "--seed", "19"]);
    assert_eq!(String::from_utf8(env.stdout).unwrap(), flag);
}

#[test]
fn missing_seed_is_a_config_error() {
    let out = gibbs(&["urn", "--n", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn bad_model_is_a_config_error() {
    assert_eq!(gibbs(&["kn", "--model", "ewens:theta=-1", "--n", "3"]).status.code(), Some(2));
    assert_eq!(gibbs(&["kn", "--model", "nope:x=1", "--n", "3"]).status.code(), Some(2));
    assert_eq!(gibbs(&["kn", "--n"]).status.code(), Some(2));
}

#[test]
fn model_file_matches_inline_model() {
    let path = std::env::temp_dir().join(format!("gibbs-model-{}.json", std::process::id()));
    std::fs::write(&path, r#"{"family":"two_parameter","alpha":0.5,"theta":0.5}"#).unwrap();
    let from_file = ok(&["kn", "--n", "6", "--model-file", path.to_str().unwrap()]);
    let inline = ok(&["kn", "--n", "6", "--model", "two_parameter:alpha=0.5,theta=0.5"]);
    std::fs::remove_file(&path).ok();
    assert_eq!(from_file, inline);
}

#[test]
fn gem_first_frequency_mean() {
    let (_, cols, rows) = parse_csv(&ok(&[
        "gem", "--alpha", "0", "--theta", "1", "--depth", "20", "--draws", "1000", "--seed", "1",
    ]));
    let j = cols.iter().position(|c| c == "X_1").unwrap();
    let xs: Vec<f64> = rows.iter().map(|r| num(&r[j])).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((mean - 0.5).abs() < 4.0 * (var / n).sqrt(), "mean {mean}");
}

#[test]
fn ntl_rows_have_nondecreasing_w() {
    let (meta, cols, rows) = parse_csv(&ok(&[
        "ntl", "--alpha", "0.5", "--records", "1,3,6", "--depth", "3", "--draws", "10", "--seed", "2",
    ]));
    assert_eq!(rows.len(), 10);
    assert_eq!(meta["tail"], "normalized");
    let ws: Vec<usize> = (1..=3).map(|j| cols.iter().position(|c| *c == format!("W_{j}")).unwrap()).collect();
    for r in &rows {
        let w: Vec<f64> = ws.iter().map(|&i| num(&r[i])).collect();
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
        assert!(w.iter().all(|&v| v > 0.0 && v <= 1.0));
    }
}

#[test]
fn ntl_with_theta_draws_the_tail() {
    let (meta, cols, rows) = parse_csv(&ok(&[
        "ntl", "--alpha", "0.5", "--theta", "1", "--records", "1,3,6", "--depth", "3", "--draws", "50", "--seed", "2",
    ]));
    assert_eq!(meta["tail"], "beta");
    let m = cols.iter().position(|c| c == "truncation_mass").unwrap();
    assert!(rows.iter().all(|r| num(&r[m]) > 0.0));
}

#[test]
fn law_tables_are_normalized() {
    let (_, _, rows) = parse_csv(&ok(&["cond-freq", "--model", "two_parameter:alpha=0.3,theta=1", "--records", "1,3", "--n", "7"]));
    let total: f64 = rows.iter().map(|r| num(&r[1])).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let (_, _, rows) = parse_csv(&ok(&["transition", "--model", "ewens:theta=2", "--j", "1", "--current", "1", "--max-next", "400"]));
    let total: f64 = rows.iter().map(|r| num(&r[1])).sum();
    let survival = num(&rows.last().unwrap()[2]);
    assert!((total + survival - 1.0).abs() < 1e-12);
}

#[test]
fn moments_and_mellin_agree_at_integers() {
    let (_, _, mom) = parse_csv(&ok(&["moments", "--model", "two_parameter:alpha=0.5,theta=0.5", "--m", "2", "--i-m", "4", "--max-n", "3"]));
    let (_, _, mel) = parse_csv(&ok(&["mellin", "--model", "two_parameter:alpha=0.5,theta=0.5", "--m", "2", "--i-m", "4", "--phi", "0,1,2,3"]));
    for (a, b) in mom.iter().zip(&mel) {
        // moments: n, E_X, E_W; mellin: phi, E_W, E_X
        assert!((num(&a[1]) - num(&b[2])).abs() <= 1e-9 * num(&a[1]));
        assert!((num(&a[2]) - num(&b[1])).abs() <= 1e-9 * num(&a[2]));
    }
}

#[test]
fn eppf_and_record_marginal() {
    let (_, _, rows) = parse_csv(&ok(&["eppf", "--freqs", "2,1"]));
    // theta = 1: each partition with sizes {2,1} has mass 1/6, and there are three
    assert!((num(&rows[0][1]) - 1.0 / 6.0).abs() < 1e-15);
    assert!((num(&rows[0][3]) - 0.5).abs() < 1e-15);
    let (_, _, rows) = parse_csv(&ok(&["record-marginal", "--records", "1,2", "--n", "3"]));
    // {1,3}{2} and {1}{2,3}
    assert!((num(&rows[0][2]) - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn neglog_rows() {
    let (_, _, rows) = parse_csv(&ok(&["neglog", "--m", "2", "--i-m", "3", "--horizon", "30", "--draws", "20", "--seed", "4"]));
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| num(&r[1]) > 0.0 && num(&r[2]) == 0.0));
}

#[test]
fn verify_oracle_passes() {
    let text = ok(&["verify", "--suite", "oracle", "--model", "ewens:theta=1", "--max-n", "8", "--format", "json"]);
    let doc: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["pass"], true);
    assert_eq!(doc["suites"][0]["suite"], "oracle");
}

#[test]
fn verify_recursion_pk_half() {
    let text = ok(&["verify", "--suite", "recursion", "--model", "pk_half:s=1", "--format", "json"]);
    let doc: Value = serde_json::from_str(&text).unwrap();
    let checks = doc["suites"][0]["checks"].as_array().unwrap();
    let residual = checks.iter().find(|c| c["name"].as_str().unwrap().starts_with("triangle")).unwrap();
    assert!(residual["value"].as_f64().unwrap() < 1e-6);
    assert_eq!(doc["pass"], true);
}

#[test]
fn verify_report_replays_from_its_header() {
    let text = ok(&["verify", "--suite", "nacu", "--seed", "5", "--format", "json"]);
    let doc: Value = serde_json::from_str(&text).unwrap();
    let h = &doc["header"];
    assert_eq!(h["args"]["suite"], "nacu");
    let seed = h["seed"].to_string();
    let model = h["model"].to_string();
    let again = ok(&["verify", "--suite", "nacu", "--seed", &seed, "--model", &model, "--format", "json"]);
    assert_eq!(text, again);
}

#[test]
fn unknown_suite_is_a_config_error() {
    assert_eq!(gibbs(&["verify", "--suite", "bogus"]).status.code(), Some(2));
}

#[test]
fn verify_all_is_deterministic() {
    let args = ["verify", "--suite", "all", "--model", "two_parameter:alpha=0.5,theta=0.5", "--seed", "11", "--format", "json"];
    let a = gibbs(&args);
    let b = gibbs(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
}
