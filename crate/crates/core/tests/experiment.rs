use digisplit::config::ExperimentFile;
use digisplit::experiment::{run_experiment, sweep_n, MethodConfig, Replication};
use digisplit::report::{emit_report, read_csv, read_json, ReportFormat, COLUMNS};
use digisplit::{presets, ExperimentSpec, ImportanceFamily};

fn ams_spec() -> ExperimentSpec {
    ExperimentSpec {
        id: "bs-ams".into(),
        model: presets::black_scholes(),
        contract: presets::digital_call(1.6, 10).unwrap(),
        method: MethodConfig::ams(300, 0.25, ImportanceFamily::BsAnalytic),
        replication: Replication::new(1, 2, 3),
    }
}

#[test]
fn work_is_conserved_across_runs() {
    let out = run_experiment(&ams_spec()).unwrap();
    let per_run: u64 = out.estimates().map(|e| e.work).sum();
    assert_eq!(per_run, out.total_work);
    assert_eq!(out.row.work * out.row.runs as f64, out.total_work as f64);
    assert_eq!(out.row.runs, 6);
    let ids: std::collections::HashSet<_> = out.runs.iter().map(|r| (r.seed, r.run)).collect();
    assert_eq!(ids.len(), 6);
}

#[test]
fn identical_specs_give_identical_reports_except_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let mut row = run_experiment(&ams_spec()).unwrap().row;
        row.wall_ms = 0.0;
        let path = dir.path().join(name);
        emit_report(&[row], ReportFormat::Csv, &path).unwrap();
        texts.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn reports_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let rows = vec![
        run_experiment(&ams_spec()).unwrap().row,
        run_experiment(&ExperimentSpec {
            method: MethodConfig::CrudeMc { n_paths: 500 },
            id: "bs-mc".into(),
            ..ams_spec()
        })
        .unwrap()
        .row,
    ];
    let csv = dir.path().join("r.csv");
    emit_report(&rows, ReportFormat::Csv, &csv).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.lines().all(|l| l.split(',').count() == COLUMNS.len()));
    let json = dir.path().join("r.json");
    emit_report(&rows, ReportFormat::Json, &json).unwrap();
    for back in [read_csv(&csv).unwrap(), read_json(&json).unwrap()] {
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].mean.to_bits(), rows[0].mean.to_bits());
        assert_eq!(back[0].variance.to_bits(), rows[0].variance.to_bits());
        assert!(back[1].iterations.is_nan());
    }
}

#[test]
fn n_sweep_prefactor_is_positive() {
    let rows = sweep_n(&ams_spec(), &[100, 400]).unwrap();
    assert!(rows.iter().all(|r| r.prefactor > 0.0));
    assert!(rows[1].outcome.row.work > rows[0].outcome.row.work);
}

#[test]
fn config_file_drives_experiments() {
    let text = r#"
[[experiment]]
id = "heston-mc"
model = { kind = "heston", r = 0.03, kappa = 2.0, theta = 0.04, vol_of_vol = 0.3, rho = -0.5, v0 = 0.04, s0 = 1.0 }
contract = { kind = "digital-call", strike = 1.2, maturity = 1.0, steps = 10 }
method = { kind = "mc", n_paths = 200 }
replication = { seeds = [4, 5], runs_per_seed = 1 }
"#;
    let specs = ExperimentFile::parse(text).unwrap().specs().unwrap();
    let out = run_experiment(&specs[0]).unwrap();
    assert_eq!(out.row.experiment, "heston-mc");
    assert_eq!(out.row.work, 2000.0);
}
