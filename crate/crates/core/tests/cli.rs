use std::process::{Command, Output};

use agecompat::compat::compat_prob;
use agecompat::policy::solve_m;
use agecompat::{CompatQuery, Gaussian, UnitProb};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_agecompat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Rows of a CSV without quoted fields, keyed by the header.
fn csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect();
    (header, rows)
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let (header, rows) = csv(text);
    let i = header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn compat_examples() {
    let out = stdout(&[
        "compat", "--age1", "18", "--age2", "14", "--s1", "0.1", "--s2", "0.1", "--t", "1",
    ]);
    assert!(close(column(&out, "p")[0], 0.118, 5e-4));

    let out = stdout(&[
        "compat", "--age1", "20", "--age2", "16", "--s1", "0.15", "--s2", "0.15", "--t", "1.1284",
    ]);
    assert!(close(column(&out, "p")[0], 0.33, 5e-3));

    let out = stdout(&[
        "compat", "--age1", "20", "--age2", "20", "--s1", "0.1", "--s2", "0.1", "--d", "0",
    ]);
    assert_eq!(column(&out, "p")[0], 0.0);
}

#[test]
fn compat_defaults_to_benchmark() {
    let explicit = stdout(&[
        "compat",
        "--age1",
        "20",
        "--age2",
        "16",
        "--t",
        "1.1283791670955126",
    ]);
    let default = stdout(&["compat", "--age1", "20", "--age2", "16"]);
    assert_eq!(explicit, default);
}

#[test]
fn compat_optional_columns() {
    let out = stdout(&[
        "compat",
        "--age1",
        "20",
        "--age2",
        "16",
        "--normalized",
        "--error-budget",
        "0.1,0.01,0.01",
        "--mc",
        "20000",
    ]);
    let (header, rows) = csv(&out);
    for name in ["p0", "reference", "dp", "mc_estimate", "mc_stderr"] {
        assert!(header.iter().any(|h| h == name), "missing {name}");
    }
    assert_eq!(rows.len(), 1);
    let p = column(&out, "p")[0];
    let mc = column(&out, "mc_estimate")[0];
    let se = column(&out, "mc_stderr")[0];
    assert!((p - mc).abs() < 4.0 * se);
}

#[test]
fn monte_carlo_depends_on_seed_only() {
    let args = [
        "compat", "--age1", "30", "--age2", "25", "--mc", "20000", "--seed", "7",
    ];
    assert_eq!(stdout(&args), stdout(&args));
    let other = stdout(&[
        "compat", "--age1", "30", "--age2", "25", "--mc", "20000", "--seed", "8",
    ]);
    assert_ne!(stdout(&args), other);
}

#[test]
fn digits_flag() {
    let out = stdout(&[
        "--digits", "3", "compat", "--age1", "18", "--age2", "14", "--s1", "0.1", "--s2", "0.1",
        "--t", "1",
    ]);
    assert!(out.ends_with(",0.118\n"), "{out}");
}

#[test]
fn csv_round_trips_through_library() {
    let out = stdout(&[
        "compat", "--age1", "33", "--age2", "27.5", "--s1", "0.12", "--s2", "0.17", "--d", "3.3",
    ]);
    let printed = column(&out, "p")[0];
    let q = CompatQuery::with_d(
        Gaussian::new(33.0, 0.12 * 33.0).unwrap(),
        Gaussian::new(27.5, 0.17 * 27.5).unwrap(),
        3.3,
    )
    .unwrap();
    let exact = compat_prob(&q).value();
    assert!((printed - exact).abs() <= 5e-6 * exact);

    let out = stdout(&[
        "rule",
        "--solve-m",
        "--p",
        "0.1",
        "--s1",
        "0.15",
        "--s2",
        "0.15",
    ]);
    let m = column(&out, "m")[0];
    let exact = solve_m(
        UnitProb::new(0.1).unwrap(),
        0.15,
        0.15,
        agecompat::BENCHMARK_T,
    )
    .unwrap();
    assert!((m - exact).abs() <= 5e-6 * exact);
}

#[test]
fn expect_examples() {
    let out = stdout(&[
        "expect", "--n1", "3780000", "--n2", "3780000", "--p", "0.111111",
    ]);
    assert!(close(column(&out, "pairs")[0], 1.5876e12, 1e8));
    assert_eq!(column(&out, "mean_1_to_2")[0], 420_000.0);
    assert!(close(column(&out, "at_least_one_1")[0], 3.78e6, 1e3));

    let out = stdout(&["expect", "--n1", "10", "--n2", "3", "--p", "0.5"]);
    assert_eq!(column(&out, "at_least_one_1")[0], 8.75);

    let out = stdout(&["expect", "--n1", "0", "--n2", "0", "--p", "0.3"]);
    for name in [
        "pairs",
        "mean_1_to_2",
        "mean_2_to_1",
        "at_least_one_1",
        "at_least_one_2",
    ] {
        assert_eq!(column(&out, name)[0], 0.0);
    }
}

#[test]
fn expect_tails_and_verdict() {
    let out = run(&[
        "expect",
        "--n1",
        "100",
        "--n2",
        "100",
        "--p",
        "0.05",
        "--at-least-k",
        "3",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let exact = column(&text, "tail_exact_1")[0];
    let normal = column(&text, "tail_normal_1")[0];
    assert!(close(exact - normal, 0.0502, 1e-3));
    let (header, rows) = csv(&text);
    let valid = header.iter().position(|h| h == "normal_valid_1").unwrap();
    assert_eq!(rows[0][valid], "false");
    assert!(String::from_utf8_lossy(&out.stderr).contains("normal approximation"));

    let only_exact = stdout(&[
        "expect",
        "--n1",
        "50",
        "--n2",
        "50",
        "--p",
        "0.3",
        "--at-least-k",
        "10",
        "--exact",
    ]);
    assert!(!only_exact.contains("tail_normal"));
    assert!(stdout(&[
        "expect",
        "--n1",
        "5",
        "--n2",
        "5",
        "--age1",
        "20",
        "--age2",
        "16",
        "--at-least-k",
        "1"
    ])
    .contains("tail_exact_1"));
}

#[test]
fn expect_precision_note() {
    let out = run(&[
        "expect",
        "--n1",
        "200000000",
        "--n2",
        "200000000",
        "--p",
        "0.5",
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("2^53"));
}

#[test]
fn limits_examples() {
    let out = stdout(&[
        "limits", "--kind", "min", "--mental", "18", "--p", "0.5", "--s", "0.15",
    ]);
    assert!(close(column(&out, "chrono_limit")[0], 18.0, 1e-9));

    let out = stdout(&[
        "limits", "--kind", "max", "--chrono", "60", "--p", "0.8413", "--s", "0.2",
    ]);
    assert!(close(column(&out, "mental_limit")[0], 72.0, 0.01));

    let out = stdout(&[
        "limits",
        "--kind",
        "min",
        "--chrono",
        "18",
        "--sweep",
        "0.05:0.95:0.05",
        "--s",
        "0.1",
    ]);
    let (header, rows) = csv(&out);
    assert_eq!(header, ["p_limit", "s", "mental_limit"]);
    assert_eq!(rows.len(), 19);

    let out = stdout(&[
        "limits",
        "--kind",
        "min",
        "--chrono",
        "18",
        "--sweep",
        "0.05:0.95:0.05",
        "--s",
        "0.1,0.15,0.2",
    ]);
    assert_eq!(csv(&out).1.len(), 57);
}

#[test]
fn rule_examples() {
    let out = stdout(&[
        "rule",
        "--solve-m",
        "--p",
        "0.05",
        "--s1",
        "0.1",
        "--s2",
        "0.1",
        "--t",
        "1.1284",
    ]);
    assert!(close(column(&out, "m")[0], 0.39, 0.01));

    let out = stdout(&[
        "rule",
        "--mu-grid",
        "15:80:1",
        "--s1",
        "0.15",
        "--s2",
        "0.15",
        "--t",
        "1.1284",
    ]);
    let p = column(&out, "p_min");
    assert_eq!(p.len(), 66);
    let spread =
        p.iter().cloned().fold(f64::MIN, f64::max) - p.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread > 0.1);

    let out = run(&["rule", "--mu-grid", "14:20:1"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("mu = 14"));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(column(&text, "mu"), [15.0, 16.0, 17.0, 18.0, 19.0, 20.0]);
}

#[test]
fn tables_regenerate_deterministically() {
    let first = stdout(&["tables"]);
    assert_eq!(first, stdout(&["tables"]));
    let row = first.lines().find(|l| l.starts_with("p ")).unwrap();
    let values: Vec<&str> = row.split_whitespace().skip(1).collect();
    assert_eq!(values, ["0.52", "0.58", "0.68", "0.84"]);
    let s15 = first.lines().find(|l| l.starts_with("s=0.15")).unwrap();
    assert_eq!(s15.split_whitespace().nth(2), Some("0.51"));
}

#[test]
fn output_format() {
    let out = stdout(&["rule", "--mu-grid", "15:30:1"]);
    assert!(!out.contains('\r'));
    assert!(out.ends_with('\n'));
    assert!(out.lines().all(|l| !l.contains(';')));
}

#[test]
fn exit_codes() {
    assert_eq!(
        run(&["compat", "--age1", "-3", "--age2", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["compat", "--age1", "3"]).status.code(), Some(2));
    assert_eq!(
        run(&["compat", "--age1", "3", "--age2", "4", "--d", "1", "--t", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["expect", "--n1", "1", "--n2", "1", "--p", "1.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    let err = run(&["compat", "--age1", "0", "--age2", "2"]);
    assert_eq!(err.status.code(), Some(2));
    assert!(!err.stderr.is_empty());
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
