use std::path::Path;
use std::process::{Command, Output};

use qbattery::csv::parse_trajectory;
use serde_json::Value;

fn qbattery(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbattery"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn recipe(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../recipes")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn simulate_default_run_has_one_row_per_millijt() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let svg = dir.path().join("run.svg");
    let o = qbattery(&[
        "simulate",
        "--t-final-Jt",
        "20",
        "--out",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(!text.contains('\r'));
    let rows = parse_trajectory(&text).unwrap();
    assert_eq!(rows.len(), 20001);
    assert!((rows.last().unwrap().jt - 20.0).abs() < 1e-9);
    let svg = std::fs::read_to_string(&svg).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
}

#[test]
fn simulate_without_drive_gives_zero_metrics() {
    let o = qbattery(&["simulate", "--epsilon", "0", "--t-final-Jt", "2"]);
    assert!(o.status.success());
    for r in parse_trajectory(&stdout(&o)).unwrap() {
        let m = r.metrics;
        assert_eq!([m.e_b, m.e_b_passive, m.ergotropy, m.e_a], [0.0; 4]);
        assert_eq!(m.power, Some(0.0));
    }
}

#[test]
fn exit_codes_follow_the_contract() {
    let unstable = qbattery(&[
        "simulate",
        "--epsilon",
        "0.15",
        "--kappa",
        "0.06",
        "--gamma",
        "0.5",
    ]);
    assert_eq!(unstable.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&unstable.stderr).contains("0.14"));

    assert_eq!(
        qbattery(&["simulate", "--kappa", "-1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        qbattery(&["simulate", "--config", "/nonexistent/file.conf"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        qbattery(&["steady", "--epsilon", "0.2"]).status.code(),
        Some(3)
    );
    assert_eq!(
        qbattery(&["simulate", "--dt-Jt", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(qbattery(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    for args in [
        &["simulate", "--t-final-Jt", "3"][..],
        &["simulate", "--t-final-Jt", "3", "--format", "json"][..],
        &["steady"][..],
        &[
            "optimize-asymmetry",
            "--kappa",
            "0.02",
            "--x-grid",
            "0.5:3:4",
            "--xi-grid",
            "0.5:3:4",
        ][..],
    ] {
        assert_eq!(qbattery(args).stdout, qbattery(args).stdout, "{args:?}");
    }
}

#[test]
fn steady_reports_symmetric_energy_and_diagnostics() {
    let o = qbattery(&["steady", "--config", &recipe("fig2.conf")]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(
        format!("{:.4}", v["E_b_over_omega"].as_f64().unwrap()),
        "0.1806"
    );
    let ids: Vec<&str> = v["diagnostics"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["formula_id"].as_str().unwrap())
        .collect();
    assert!(ids.contains(&"steady_ergotropy_symmetric_quartic_denominator"));
    assert!(!v["mismatched_formulas"].as_array().unwrap().is_empty());
}

#[test]
fn steady_without_drive_is_all_zero() {
    let o = qbattery(&["steady", "--epsilon", "0"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for (_, z) in v["moments"].as_object().unwrap() {
        assert_eq!(z[0].as_f64(), Some(0.0));
        assert_eq!(z[1].as_f64(), Some(0.0));
    }
    assert_eq!(v["metrics"]["e_b"].as_f64(), Some(0.0));
}

fn sweep_file(dir: &Path, text: &str) -> String {
    let p = dir.join("s.sweep");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn steady_column(csv: &str, col: usize) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn sweep_steady_energy_orders() {
    let dir = tempfile::tempdir().unwrap();
    let kappa = qbattery(&[
        "sweep",
        &sweep_file(
            dir.path(),
            "sweep = kappa\nvalues = 0.10, 0.02, 0.06\nsteady = true\noutputs = E_b, ergotropy\n",
        ),
    ]);
    assert!(kappa.status.success());
    let text = stdout(&kappa);
    assert!(text.starts_with("parameter,value,t,Jt,E_b,ergotropy\n"));
    assert!(text.lines().nth(1).unwrap().contains(",inf,inf,"));
    let e = steady_column(&text, 4);
    assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");

    let eps = qbattery(&[
        "sweep",
        &sweep_file(
            dir.path(),
            "sweep = epsilon\nvalues = 0.03, 0.06, 0.09, 0.12\nsteady = true\nkappa = 0.06\n",
        ),
    ]);
    let e = steady_column(&stdout(&eps), 4);
    assert!(e.windows(2).all(|w| w[1] > w[0]), "{e:?}");
}

#[test]
fn sweep_rows_are_ordered_by_value_then_time() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbattery(&[
        "sweep",
        &sweep_file(
            dir.path(),
            "sweep = kappa\nvalues = 0.1, 0.02\nt_final_Jt = 1\ndt_Jt = 0.1\n",
        ),
    ]);
    let rows: Vec<(f64, f64)> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[1].parse().unwrap(), c[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 22);
    assert!(rows.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn sweep_rejects_empty_values_and_bad_points() {
    let dir = tempfile::tempdir().unwrap();
    for text in [
        "sweep = kappa\nvalues = ,\n",
        "sweep = kappa\nvalues = 0.06, -0.02\n",
        "sweep = epsilon\nvalues = 0.05, 0.2\nsteady = true\n",
    ] {
        let o = qbattery(&["sweep", &sweep_file(dir.path(), text)]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn compare_single_photon_leaves_origin_ratios_empty() {
    let o = qbattery(&[
        "compare-single-photon",
        "--t-final-Jt",
        "2",
        "--dt-Jt",
        "0.5",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,Jt,E_b,E_b1,eta_E,eta_erg,chi"));
    assert!(lines.next().unwrap().ends_with(",,,"));
    assert!(lines.all(|l| !l.ends_with(',')));

    let undriven = qbattery(&[
        "compare-single-photon",
        "--epsilon",
        "0",
        "--t-final-Jt",
        "1",
        "--dt-Jt",
        "0.5",
    ]);
    assert!(stdout(&undriven)
        .lines()
        .skip(1)
        .all(|l| l.ends_with(",,,")));

    let detuned = qbattery(&["compare-single-photon", "--delta", "0.1"]);
    assert_eq!(detuned.status.code(), Some(2));
}

#[test]
fn optimizer_prefers_small_x_and_writes_landscape() {
    let dir = tempfile::tempdir().unwrap();
    let land = dir.path().join("land.csv");
    let o = qbattery(&[
        "optimize-asymmetry",
        "--config",
        &recipe("fig6a.conf"),
        "--x-grid",
        "0.5:3:6",
        "--xi-grid",
        "0.5:3:6",
        "--landscape",
        land.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["ranked"][0]["x"].as_f64(), Some(0.5));
    assert_eq!(std::fs::read_to_string(&land).unwrap().lines().count(), 37);

    let single = qbattery(&[
        "optimize-asymmetry",
        "--kappa",
        "0.02",
        "--x-grid",
        "1:1:1",
        "--xi-grid",
        "2:2:1",
    ]);
    let v: Value = serde_json::from_str(&stdout(&single)).unwrap();
    assert_eq!(v["ranked"].as_array().unwrap().len(), 1);
}

#[test]
fn oracle_check_short_run_passes() {
    let o = qbattery(&["oracle-check", "--t-final-Jt", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pass"], Value::Bool(true));
    assert!(
        v["oracle_vs_dynamics_moments"]["max_tolerance_ratio"]
            .as_f64()
            .unwrap()
            <= 1.0
    );
}

#[test]
fn oracle_check_tiny_cutoff_fails_with_diagnosis() {
    let o = qbattery(&[
        "oracle-check",
        "--n-cut",
        "2",
        "--no-autocutoff",
        "--t-final-Jt",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("too small"));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pass"], Value::Bool(false));
}

#[test]
fn oracle_check_without_drive_passes_trivially() {
    let o = qbattery(&["oracle-check", "--epsilon", "0", "--t-final-Jt", "2"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(
        v["oracle_vs_dynamics_moments"]["max_abs"].as_f64(),
        Some(0.0)
    );
}
