use std::process::{Command, Output};

fn digisplit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_digisplit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const HEADER: &str = "experiment,method,mean,variance,rel_accuracy,work,iterations,runs,wall_ms";

#[test]
fn price_writes_a_csv_row() {
    let o = digisplit(&["price", "--n", "500", "--strike", "1.5", "--seeds", "1", "--runs", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), HEADER);
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 9);
    assert_eq!(row[0], "bs-digital-call-ams");
    assert_eq!(row[7], "3");
}

#[test]
fn every_method_runs_from_flags() {
    for (method, n) in [("mc", "2000"), ("mca", "2000"), ("ams", "300")] {
        let o = digisplit(&[
            "price", "--model", "heston", "--contract", "asian-call", "--method", method, "--n", n, "--steps", "10",
            "--seeds", "2", "--runs", "1", "--strike", "1.1",
        ]);
        assert!(o.status.success(), "{method}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = digisplit(&[
        "price", "--contract", "asian-call", "--method", "mlmc", "--levels", "2", "--target-se", "0.01", "--seeds", "1",
        "--runs", "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn json_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let o = digisplit(&[
        "multi-asset", "--n", "300", "--seeds", "1", "--runs", "2", "--format", "json", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.trim_start().starts_with('['));
    assert!(text.contains("\"experiment\": \"multi-gbm-multi-dispersion-ams\""));
}

#[test]
fn validation_failures_exit_nonzero() {
    for args in [
        vec!["price", "--k", "1.5"],
        vec!["price", "--runs", "1", "--seeds", "1"],
        vec!["price", "--importance", "multi-sum"],
        vec!["price", "--method", "mca", "--n", "3"],
        vec!["bench"],
        vec!["price", "--model", "nope"],
    ] {
        let o = digisplit(&args);
        assert!(!o.status.success(), "{args:?} should fail");
    }
}

#[test]
fn bench_reads_a_spec_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bench.toml");
    let out = dir.path().join("out.csv");
    std::fs::write(
        &spec,
        format!(
            r#"
[[experiment]]
id = "small-ams"
model = {{ kind = "bs", r = 0.03, sigma = 0.2, s0 = 1.0 }}
contract = {{ kind = "digital-call", strike = 1.5, maturity = 1.0, steps = 1 }}
method = {{ kind = "ams", n_particles = 200, kill = {{ fraction = 0.3 }}, importance = "bs-analytic" }}
replication = {{ seeds = [1, 2], runs_per_seed = 2 }}

[[experiment]]
id = "small-mc"
model = {{ kind = "bs", r = 0.03, sigma = 0.2, s0 = 1.0 }}
contract = {{ kind = "digital-call", strike = 1.5, maturity = 1.0, steps = 1 }}
method = {{ kind = "mc", n_paths = 1000 }}

[output]
path = "{}"
"#,
            out.display()
        ),
    )
    .unwrap();
    let o = digisplit(&["bench", "--spec", spec.to_str().unwrap(), "--runs", "1", "--seeds", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("small-ams,ams,"));
    assert!(rows[2].starts_with("small-mc,mc,"));
    assert!(rows.iter().skip(1).all(|r| r.split(',').nth(7) == Some("2")));
}

#[test]
fn sweeps_emit_one_row_per_value() {
    let o = digisplit(&[
        "sweep-k", "--n", "200", "--k-values", "0.1,0.3", "--seeds", "1", "--runs", "2", "--strike", "1.5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 3);
    let o = digisplit(&["sweep-n", "--n-values", "100,200", "--seeds", "1", "--runs", "2", "--strike", "1.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("work/(N ln N (-ln p))"));
    let o = digisplit(&["sweep-k", "--method", "mc"]);
    assert!(!o.status.success());
}

#[test]
fn identical_invocations_are_deterministic() {
    let args = ["price", "--n", "300", "--strike", "1.4", "--seeds", "1", "--runs", "2", "--steps", "5"];
    let strip = |o: Output| {
        stdout(&o)
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(digisplit(&args)), strip(digisplit(&args)));
}
