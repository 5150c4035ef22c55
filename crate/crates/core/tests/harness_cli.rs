use std::path::Path;
use std::process::{Command, Output};

use sgpl::dgp::{gen_dataset, DgpSpec, Pattern};
use sgpl::harness::config::{DatasetMode, DgpSettings, SamplerSettings, ScenarioConfig};
use sgpl::harness::fit_file::{fit_file, FitFileOptions};
use sgpl::harness::metrics::{aggregate, read_replicates_csv, write_metrics_csv, write_replicates_csv, Truth};
use sgpl::harness::scenario::run_scenario;
use sgpl::hexgrid::GridSpec;
use sgpl::pairsampler::{PairSet, SamplerConfig};

fn sgpl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgpl")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small(mode: DatasetMode) -> ScenarioConfig {
    ScenarioConfig {
        n: vec![800],
        lambda_sem: vec![0.0, 0.5],
        patterns: vec![Pattern::Uniform, Pattern::Clustered],
        reps: 12,
        mode,
        sampler: SamplerSettings { q_target: 80, ..Default::default() },
        grid: GridSpec::new(5, 4.0).unwrap(),
        ..Default::default()
    }
}

#[test]
fn noiseless_scenario_recovers_slope_exactly() {
    let cfg = ScenarioConfig {
        n: vec![1000],
        lambda_sem: vec![0.0],
        patterns: vec![Pattern::Uniform],
        reps: 1,
        dgp: DgpSettings { sigma_eps2: 0.0, ..Default::default() },
        grid: GridSpec::new(6, 4.0).unwrap(),
        ..Default::default()
    };
    let out = run_scenario(&cfg).unwrap();
    let r = &out.replicates[0];
    assert!(r.is_ok(), "{}", r.status);
    assert!((r.beta1 - 1.5).abs() < 1e-9, "{}", r.beta1);
}

#[test]
fn metrics_recompute_from_replicate_table() {
    for mode in [DatasetMode::FixedDataset, DatasetMode::FreshDataset] {
        let cfg = ScenarioConfig { benchmark: sgpl::harness::config::Benchmark::MlOracle, ..small(mode) };
        let out = run_scenario(&cfg).unwrap();
        let mut buf = Vec::new();
        write_replicates_csv(&out.replicates, &mut buf).unwrap();
        let back = read_replicates_csv(buf.as_slice()).unwrap();
        assert_eq!(back, out.replicates);
        for row in &out.rows {
            let recs: Vec<_> = back.iter().filter(|r| r.scenario == row.scenario).cloned().collect();
            let truth = Truth { beta1: cfg.dgp.beta1, lambda: row.lambda_sem, sigma2: cfg.dgp.sigma_eps2 };
            let again = aggregate(&recs, mode, truth, &row.benchmark_note).unwrap();
            assert_eq!(&again, row);
            for m in [row.beta1, row.lambda, row.sigma2] {
                assert!(m.mse >= m.bias * m.bias - 1e-12);
                if let (Some(b), Some(re)) = (m.bench_mse, m.relative_efficiency) {
                    assert_eq!(re, b / m.mse);
                }
            }
        }
    }
}

#[test]
fn more_replicates_leave_earlier_ones_unchanged() {
    let base = ScenarioConfig { reps: 100, parallel: true, ..small(DatasetMode::FixedDataset) };
    let a = run_scenario(&base).unwrap();
    let b = run_scenario(&ScenarioConfig { reps: 200, ..base }).unwrap();
    let key = |r: &sgpl::harness::metrics::ReplicateRecord| (r.scenario, r.rep, r.sampler_seed, r.beta1, r.lambda, r.sigma2, r.q);
    let first: Vec<_> = b.replicates.iter().filter(|r| r.rep < 100).map(key).collect();
    assert_eq!(a.replicates.iter().map(key).collect::<Vec<_>>(), first);
}

#[test]
fn simulate_writes_documented_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, serde_json::to_string(&small(DatasetMode::FixedDataset)).unwrap()).unwrap();
    let out = sgpl(&["simulate", p(&cfg_path), "--out-dir", p(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let reps = std::fs::read_to_string(dir.path().join("replicates.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 4);
    assert_eq!(reps.lines().count(), 1 + 4 * 12);
    let mut expected = Vec::new();
    write_metrics_csv(&[], &mut expected).unwrap();
    assert_eq!(metrics.lines().next().unwrap(), String::from_utf8(expected).unwrap().trim_end());
}

#[test]
fn fit_round_trips_generated_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let ds = gen_dataset(&DgpSpec { n: 5000, lambda_sem: 0.3, seed: 12, ..Default::default() }).unwrap();
    ds.points.write_csv(std::fs::File::create(&data).unwrap()).unwrap();
    let opts = FitFileOptions {
        grid: GridSpec::new(6, 4.0).unwrap(),
        sampler: SamplerConfig { q_target: 500, ..Default::default() },
        runs: 20,
        master_seed: 3,
        ..Default::default()
    };
    let s = fit_file(&data, &opts).unwrap();
    assert!((s.mean_beta1 - 1.5).abs() < 0.05, "{}", s.mean_beta1);
    assert!(s.mean_lambda > 0.0);

    let runs = dir.path().join("runs.csv");
    let out = sgpl(&[
        "fit", p(&data), "--resolution", "6", "--q-target", "500", "--runs", "20", "--seed", "3",
        "--runs-out", p(&runs),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains(&format!("beta1 = {}", s.mean_beta1)), "{stdout}");
    assert_eq!(std::fs::read_to_string(&runs).unwrap().lines().count(), 21);
}

#[test]
fn latlon_fit_uses_projected_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("geo.csv");
    // Unit-square data placed on a ~50 km patch near 47.5 N.
    let ds = gen_dataset(&DgpSpec { n: 3000, seed: 4, ..Default::default() }).unwrap();
    let mut w = csv::Writer::from_path(&data).unwrap();
    w.write_record(["lat", "long", "sqft", "price"]).unwrap();
    for i in 0..ds.points.len() {
        let [u, v] = ds.points.coords[i];
        w.write_record([
            (47.5 + 0.45 * v).to_string(),
            (-122.0 + 0.66 * u).to_string(),
            ds.points.x[i].to_string(),
            ds.points.y[i].to_string(),
        ])
        .unwrap();
    }
    w.flush().unwrap();
    let out = sgpl(&[
        "fit", p(&data), "--coord-mode", "latlon", "--c1-col", "lat", "--c2-col", "long", "--x-col", "sqft",
        "--y-col", "price", "--edge", "0.6", "--q-target", "300", "--runs", "10",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let beta: f64 = stdout.lines().find_map(|l| l.strip_prefix("beta1 = ")).unwrap().parse().unwrap();
    assert!((beta - 1.5).abs() < 0.1, "{stdout}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let constant = dir.path().join("constant.csv");
    let mut text = String::from("px,py,x,y\n");
    for i in 0..400 {
        let (u, v) = ((i % 20) as f64 / 20.0, (i / 20) as f64 / 20.0);
        text.push_str(&format!("{u},{v},{},7\n", (i * 37 % 101) as f64));
        text.push_str(&format!("{u},{v},{},7\n", (i * 53 % 97) as f64));
    }
    std::fs::write(&constant, text).unwrap();
    let out = sgpl(&["fit", p(&constant), "--edge", "0.01"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("variance"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "px,py,x\n0,0,1\n1,1,2\n").unwrap();
    let out = sgpl(&["fit", p(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing column"));

    assert_eq!(sgpl(&["fit"]).status.code(), Some(1));
    assert_eq!(sgpl(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(sgpl(&["simulate", p(&dir.path().join("missing.json"))]).status.code(), Some(1));
    assert_eq!(sgpl(&["--help"]).status.code(), Some(0));

    let cfg = dir.path().join("big.json");
    std::fs::write(&cfg, r#"{"n": [5000], "benchmark": "ml_oracle", "reps": 1}"#).unwrap();
    let out = sgpl(&["timing", p(&cfg), "--out", p(&dir.path().join("t.csv"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn export_pairs_cli() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for path in [&a, &b] {
        let out = sgpl(&["export-pairs", "--n", "2000", "--resolution", "6", "--q-target", "1", "--seed", "5", "--out", p(path)]);
        assert!(out.status.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], PairSet::CSV_HEADER.join(","));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["default.json", "recovery_n2000.json", "timing.json"] {
        let cfg = ScenarioConfig::from_path(&dir.join(name)).unwrap();
        cfg.validate().unwrap();
    }
    let d = ScenarioConfig::from_path(&dir.join("default.json")).unwrap();
    assert_eq!(d, ScenarioConfig { parallel: d.parallel, ..Default::default() });
}
