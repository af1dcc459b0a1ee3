use std::process::{Command, Output};

fn lifshitz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lifshitz")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Header line and data rows of a CSV report, metadata stripped.
fn csv(out: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    let text = stdout(out);
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column<'a>(header: &[String], row: &'a [String], name: &str) -> &'a str {
    let i = header.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
    &row[i]
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn cp_ratio_is_one() {
    let out = lifshitz(&["cp", "--alpha1", "1", "--alpha2", "1", "--r", "10"]);
    assert!(out.status.success());
    let (h, rows) = csv(&out);
    assert_eq!(rows.len(), 1);
    assert!((num(column(&h, &rows[0], "ratio")) - 1.0).abs() < 1e-6);
    let expected = -23.0 / (4.0 * std::f64::consts::PI) / 1e7;
    assert!((num(column(&h, &rows[0], "reference")) / expected - 1.0).abs() < 1e-8);
    assert_eq!(column(&h, &rows[0], "status"), "ok");
}

#[test]
fn metadata_header_is_present() {
    let text = stdout(&lifshitz(&["exact", "--h", "1"]));
    for key in ["# program: lifshitz", "# command: exact --h 1", "# units:", "# model1: oscillator:omega0=1"] {
        assert!(text.contains(key), "{key} missing from\n{text}");
    }
    assert!(!text.contains('\r'));
}

#[test]
fn bad_model_exits_with_two() {
    let out = lifshitz(&["exact", "--h", "1", "--model", "plasma:eps=3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_error_row_keeps_the_sweep_going() {
    let out = lifshitz(&["exact", "--h=-1,1"]);
    assert_eq!(out.status.code(), Some(2));
    let (h, rows) = csv(&out);
    assert_eq!(column(&h, &rows[0], "status"), "domain_error");
    assert_eq!(column(&h, &rows[0], "exact"), "");
    assert_eq!(column(&h, &rows[1], "status"), "ok");
    assert!(num(column(&h, &rows[1], "exact")) < 0.0);
}

#[test]
fn csv_is_byte_stable() {
    let args = ["sweep", "--h-min", "0.05", "--h-max", "5", "--points", "5", "--max-order", "6"];
    let a = lifshitz(&args);
    let b = lifshitz(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_rows_follow_input_order() {
    let out = lifshitz(&["sweep", "--h-min", "0.01", "--h-max", "1", "--points", "3", "--scheme", "raw"]);
    let (h, rows) = csv(&out);
    let expected_cols = ["H_over_lambda_p", "exact", "E2", "E3", "E4", "E5", "E6", "E7", "E8", "S2", "S4", "S6", "S8"];
    assert_eq!(&h[..expected_cols.len()], expected_cols);
    assert_eq!(&h[h.len() - 6..], ["ratio2", "ratio4", "ratio6", "ratio8", "verdict", "status"]);
    let hs: Vec<f64> = rows.iter().map(|r| num(&r[0])).collect();
    assert_eq!(hs.len(), 3);
    for (got, want) in hs.iter().zip([0.01, 0.1, 1.0]) {
        assert!((got - want).abs() < 1e-12 * want);
    }
    for r in &rows {
        assert!(["converging", "diverging", "marginal"].contains(&column(&h, r, "verdict")));
    }
}

#[test]
fn series_at_high_resonance_converges() {
    let out = lifshitz(&["series", "--h", "0.1,1,10", "--model", "oscillator:omega0=1.4", "--scheme", "raw"]);
    assert!(out.status.success());
    let (h, rows) = csv(&out);
    for r in &rows {
        assert_eq!(column(&h, r, "verdict"), "converging");
        assert!((num(column(&h, r, "ratio8")) - 1.0).abs() < 0.05);
    }
}

#[test]
fn ratio_only_drops_absolute_columns() {
    let out = lifshitz(&["series", "--h", "1", "--report-ratio-only"]);
    let (h, _) = csv(&out);
    assert_eq!(h, ["H_over_lambda_p", "ratio2", "ratio4", "ratio6", "ratio8", "verdict", "status"]);
    let (h, _) = csv(&lifshitz(&["cp", "--alpha1", "1", "--alpha2", "2", "--r", "5", "--report-ratio-only"]));
    assert!(!h.contains(&"energy".to_string()));
}

#[test]
fn json_output_parses() {
    let out = lifshitz(&["exact", "--h", "0.5,2", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["columns"], serde_json::json!(["H_over_lambda_p", "exact", "status"]));
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert!(v["rows"][0][1].as_f64().unwrap() < 0.0);
    assert_eq!(v["meta"]["scheme"], serde_json::Value::Null);
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let path = std::env::temp_dir().join(format!("lifshitz-cli-test-{}.csv", std::process::id()));
    let args = ["exact", "--h", "1"];
    let direct = lifshitz(&args);
    let mut with_out = args.to_vec();
    let p = path.to_str().unwrap();
    with_out.extend(["--out", p]);
    assert!(lifshitz(&with_out).status.success());
    let written = std::fs::read(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    let strip = |b: &[u8]| {
        String::from_utf8(b.to_vec()).unwrap().lines().filter(|l| !l.starts_with("# command")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip(&written), strip(&direct.stdout));
}

#[test]
fn rough_flat_report_matches_planar() {
    let out = lifshitz(&["rough", "--flat", "--samples", "8"]);
    assert!(out.status.success());
    let (h, rows) = csv(&out);
    assert!(num(column(&h, &rows[0], "rel_diff")) < 1e-9);
}

#[test]
fn rough_sinusoids_report_a_correction() {
    let out = lifshitz(&[
        "rough", "--side", "4", "--samples", "8", "--h1", "sin:amplitude=0.1,nx=1", "--h2", "sin:amplitude=0.1,nx=1,phase=1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = csv(&out);
    let total = num(column(&h, &rows[0], "energy"));
    let sum = num(column(&h, &rows[0], "local")) + num(column(&h, &rows[0], "correction"));
    assert!((total - sum).abs() <= 1e-8 * total.abs());
    assert!(total < 0.0);
}

#[test]
fn matsubara_low_temperature_ratio() {
    let out = lifshitz(&["matsubara", "--t", "1e-3"]);
    assert!(out.status.success());
    let (h, rows) = csv(&out);
    assert!((num(column(&h, &rows[0], "ratio")) - 1.0).abs() < 1e-3);
}

#[test]
fn kernels_dump_nine_components() {
    let out = lifshitz(&["kernels", "--kind", "g", "--zeta", "1", "--at", "0,0,1"]);
    assert!(out.status.success());
    let (h, rows) = csv(&out);
    assert_eq!(rows.len(), 9);
    let g = |i: usize| num(column(&h, &rows[i], "value"));
    assert!((g(0) - g(4)).abs() < 1e-15);
    assert_eq!(g(1), 0.0);
    assert_eq!(lifshitz(&["kernels", "--zeta", "1", "--at", "0,1"]).status.code(), Some(2));
}

#[test]
fn bodies_from_config_file() {
    let path = std::env::temp_dir().join(format!("lifshitz-bodies-{}.txt", std::process::id()));
    std::fs::write(&path, "0,0,0,1,oscillator:omega0=1\n0,0,10,1,oscillator:omega0=1\n").unwrap();
    let out = lifshitz(&["bodies", "--config", path.to_str().unwrap(), "--order", "2", "--resolution", "4"]);
    std::fs::remove_file(&path).unwrap();
    assert!(out.status.success());
    let (h, rows) = csv(&out);
    assert!(num(column(&h, &rows[0], "energy")) < 0.0);
}

#[test]
fn selfcheck_passes() {
    let out = lifshitz(&["selfcheck"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let (h, rows) = csv(&out);
    assert!(rows.iter().all(|r| column(&h, r, "status") == "pass"));
}

#[test]
fn selfcheck_reports_nonconvergence_at_tight_tolerance() {
    let out = lifshitz(&["selfcheck", "--rel-tol", "1e-15", "--abs-tol", "0"]);
    assert_eq!(out.status.code(), Some(3), "{}", stdout(&out));
    let (h, rows) = csv(&out);
    let statuses: Vec<&str> = rows.iter().map(|r| column(&h, r, "status")).collect();
    assert!(statuses.contains(&"nonconvergence"));
    assert!(!statuses.contains(&"fail"));
}
