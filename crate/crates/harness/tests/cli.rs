use std::process::{Command, Output};

fn harness(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wilkinson-harness")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Data rows of one CSV table.
fn table_rows(text: &str, name: &str) -> Vec<Vec<String>> {
    let marker = format!("# table: {name}");
    let body: Vec<&str> = text.lines().skip_while(|l| *l != marker).skip(1).take_while(|l| !l.starts_with('#')).collect();
    let joined = body.join("\n");
    let mut r = csv::Reader::from_reader(joined.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn diagonal_start_is_already_deflated() {
    let o = harness(&["orbit", "--start", "coords:0,0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = table_rows(&stdout(&o), "trace");
    assert_eq!(rows.len(), 1);
    assert!(stdout(&o).contains("# summary.stop: deflated"));
}

#[test]
fn orbit_converges_and_records_header() {
    let o = harness(&["orbit", "--start", "coords:0.5,0.3", "--precision-bits", "256"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("# precision_bits: 256"));
    assert!(text.contains("# config_sha256: "));
    let rows = table_rows(&text, "trace");
    assert!(rows.len() >= 3 && rows.len() <= 8, "{} rows", rows.len());
    assert_eq!(rows.last().unwrap()[1], "0");
}

#[test]
fn config_errors_exit_2() {
    for args in [
        &["orbit", "--tol", "tie=-1"][..],
        &["orbit", "--tol", "bogus=1"],
        &["orbit", "--spectrum", "-1,0,1", "--ap-free", "true"],
        &["orbit", "--spectrum", "2,1,3"],
        &["orbit", "--chart", "1,1,2"],
        &["orbit", "--precision-bits", "20000"],
        &["figures", "--which", "fig9"],
        &["cantor"],
    ] {
        let o = harness(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn config_file_with_units_and_cli_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "# orbit settings\nspectrum = 1, 2, 4\nprecision_bits = 128 bits\nmax_iter = 2 steps\n").unwrap();
    let p = path.to_str().unwrap();
    let o = harness(&["orbit", "--config", p, "--start", "coords:0.5,0.3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("# precision_bits: 128"));
    assert_eq!(table_rows(&stdout(&o), "trace").len(), 3);
    let o = harness(&["orbit", "--config", p, "--max-iter", "1", "--start", "coords:0.5,0.3"]);
    assert_eq!(table_rows(&stdout(&o), "trace").len(), 2);

    std::fs::write(&path, "max_iter = 2 bits\n").unwrap();
    assert_eq!(harness(&["orbit", "--config", p]).status.code(), Some(2));
}

#[test]
fn tie_exits_3_with_the_step() {
    let o = harness(&["orbit", "--spectrum", "-1,0,1", "--start", "matrix:0,0,0;0.6,0.8"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("error at step 0"), "{}", stderr(&o));
    // The partial trace is still written.
    assert_eq!(table_rows(&stdout(&o), "trace").len(), 1);
}

#[test]
fn runs_are_byte_identical() {
    let args = ["rates", "--starts", "4", "--precision-bits", "256", "--seed", "9"];
    let a = harness(&args);
    let b = harness(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = harness(&["rates", "--starts", "4", "--precision-bits", "256", "--seed", "10"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn output_file_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let o = harness(&["chart", "--starts", "3", "--format", "json", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["command"], "chart");
    assert_eq!(v["tables"]["round_trips"]["rows"].as_array().unwrap().len(), 3);
    let worst: f64 = v["summary"]["worst_relative_error"].as_str().unwrap().parse().unwrap();
    assert!(worst < 1e-12);
}

#[test]
fn cantor_itinerary_solution() {
    let o = harness(&[
        "cantor", "--spectrum", "-1,0,1", "--chart", "3,1,2", "--start", "itinerary:(+)@0.1", "--precision-bits", "512",
        "--depth", "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let sol = table_rows(&text, "solution");
    assert!(sol[0][2].starts_with("1.708317657593105799036467607612557764767"), "{}", sol[0][2]);
    assert!(sol[0][3].chars().all(|c| c == '+'));
    let slice = table_rows(&text, "slice");
    assert_eq!(slice.len(), 4);
    let lo: f64 = slice[0][1].parse().unwrap();
    let hi: f64 = slice[0][2].parse().unwrap();
    assert!(lo <= 1.7083176 && 1.7083177 <= hi);
}

#[test]
fn itinerary_rates_on_and_off_the_set() {
    let o = harness(&[
        "rates", "--spectrum", "-1,0,1", "--chart", "3,1,2", "--start", "itinerary:(+)@0.1", "--precision-bits", "512",
        "--max-iter", "7",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = table_rows(&stdout(&o), "rates");
    assert_eq!(rows.len(), 3);
    let off: f64 = rows[1][1].parse().unwrap();
    assert!((off - 3.0).abs() < 0.1, "offset exponent {off}");
}

#[test]
fn fig4_contains_the_cusp_point() {
    let o = harness(&["figures", "--which", "fig4"]);
    assert!(o.status.success());
    let rows = table_rows(&stdout(&o), "fig4");
    assert!(rows.iter().any(|r| r[0].parse::<f64>().unwrap() == 2.0 && r[1].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn every_figure_exports() {
    for f in ["fig2", "fig5", "fig6", "fig7"] {
        let o = harness(&["figures", "--which", f, "--depth", "2"]);
        assert!(o.status.success(), "{f}: {}", stderr(&o));
        assert!(table_rows(&stdout(&o), f).len() > 50, "{f}");
    }
}

#[test]
fn toda_checks_pass() {
    let o = harness(&["toda", "--starts", "3", "--precision-bits", "128"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("# summary.all_positive: true"));
}

#[test]
fn audit_is_json_and_passes() {
    let o = harness(&["audit", "--precision-bits", "256", "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["summary"]["all_pass"], "true");
}

/// `(x, series)` at the lowest exported height, sorted by x.
fn lowest_slice(depth: &str) -> Vec<(f64, String)> {
    let o = harness(&["figures", "--which", "fig7", "--depth", depth, "--precision-bits", "256"]);
    assert!(o.status.success());
    let rows = table_rows(&stdout(&o), "fig7");
    let y0: f64 = rows[0][1].parse().unwrap();
    let mut at: Vec<(f64, String)> = rows
        .iter()
        .filter(|r| r[1].parse::<f64>().unwrap() == y0)
        .map(|r| (r[0].parse().unwrap(), r[2].clone()))
        .collect();
    at.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    at
}

#[test]
fn fig7_gaps_hold_the_arc_crossings() {
    let series: Vec<String> = lowest_slice("1").into_iter().map(|(_, s)| s).collect();
    let first = ["+:lo", "preimage", "+:hi", "r", "-:lo", "preimage", "-:hi"];
    assert_eq!(series, first);
    let series: Vec<String> = lowest_slice("2").into_iter().map(|(_, s)| s).filter(|s| s != "r").collect();
    let second = ["++:lo", "++:hi", "preimage", "+-:lo", "+-:hi", "-+:lo", "-+:hi", "preimage", "--:lo", "--:hi"];
    assert_eq!(series, second);
}

#[test]
fn fig6_image_arcs_meet_tangentially_at_p0() {
    let o = harness(&["figures", "--which", "fig6", "--precision-bits", "128"]);
    assert!(o.status.success());
    let rows = table_rows(&stdout(&o), "fig6");
    let near: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r[2].starts_with("W"))
        .map(|r| (r[0].parse::<f64>().unwrap() - 2.0, r[1].parse::<f64>().unwrap()))
        .filter(|(dx, y)| dx.abs() < 1e-3 && y.abs() < 1e-3 && *dx != 0.0)
        .collect();
    assert!(near.iter().any(|(dx, _)| *dx > 0.0) && near.iter().any(|(dx, _)| *dx < 0.0));
    // Horizontal tangent on both sides: |y| is quadratically small in |x - 2|.
    for (dx, y) in near {
        assert!(y.abs() <= dx * dx, "({dx}, {y})");
    }
}
