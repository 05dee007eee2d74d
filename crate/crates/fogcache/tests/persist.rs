use std::fs;

use fogcache::config::{ExperimentConfig, MetricGroup, OutputFormat, SchemeChoice, SweepAxis, SweepSection};
use fogcache::harness::run_experiment;
use fogcache::persist::{persist_results, read_manifest, read_table, write_table, Manifest, TABLE_HEADER};
use fogcache::ResultRow;

fn config() -> ExperimentConfig {
    let mut c = ExperimentConfig { replications: 3, master_seed: 2024, ..Default::default() };
    c.sweep = Some(SweepSection::values(SweepAxis::LambdaU, vec![0.004, 0.02]));
    c.content.scheme = SchemeChoice::Both;
    c.metrics = vec![MetricGroup::Activation, MetricGroup::Coverage, MetricGroup::Scdp];
    c.simulation.enabled = true;
    c.output.formats = vec![OutputFormat::Csv, OutputFormat::Manifest, OutputFormat::Series];
    c
}

#[test]
fn table_round_trips_field_for_field() {
    let table = run_experiment(&config()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_table(&path, &table.rows).unwrap();
    assert_eq!(read_table(&path).unwrap(), table.rows);
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), TABLE_HEADER.join(","));
    assert_eq!(
        TABLE_HEADER.join(","),
        "sweep_axis,sweep_value,metric,file_index,scheme,analytical,sim_mean,sim_ci95,replications,seed"
    );
}

#[test]
fn missing_values_are_empty_cells() {
    let row = ResultRow {
        sweep_axis: "none".into(),
        sweep_value: None,
        metric: "tau".into(),
        file_index: None,
        scheme: "rfs".into(),
        analytical: Some(0.125),
        sim_mean: None,
        sim_ci95: None,
        replications: None,
        seed: 9,
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_table(&path, std::slice::from_ref(&row)).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap().lines().nth(1).unwrap(), "none,,tau,,rfs,0.125,,,,9");
    assert_eq!(read_table(&path).unwrap(), vec![row]);
}

#[test]
fn manifest_echoes_config_and_seed() {
    let c = config();
    let table = run_experiment(&c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = persist_results(&table, dir.path(), &c.output.formats, Manifest::new("sweep", &c, &table, 1.5)).unwrap();
    let manifest = read_manifest(&dir.path().join("manifest.toml")).unwrap();
    assert_eq!(manifest.master_seed, c.master_seed);
    assert_eq!(manifest.config, c);
    assert_eq!(manifest.version, env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest.points.len(), 4);
    assert_eq!(manifest.files.len() + 1, written.len());
    assert!(manifest.files.contains(&"table.csv".to_string()));
    assert!(manifest.files.contains(&"series/xi_n1_mrfs_analytical.csv".to_string()));
    assert!(manifest.files.contains(&"series/tau_rfs_simulated.csv".to_string()));
}

#[test]
fn series_files_are_plot_ready() {
    let c = config();
    let table = run_experiment(&c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    persist_results(&table, dir.path(), &[OutputFormat::Series], Manifest::new("sweep", &c, &table, 0.0)).unwrap();
    let text = fs::read_to_string(dir.path().join("series/coverage_n3_rfs_analytical.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.004,"));
    let sim = fs::read_to_string(dir.path().join("series/xi_mrfs_simulated.csv")).unwrap();
    assert_eq!(sim.lines().next().unwrap(), "x,mean,ci95");
    assert!(!dir.path().join("table.csv").exists());
    assert!(!dir.path().join("manifest.toml").exists());
}

#[test]
fn identical_configs_give_identical_bytes() {
    let c = config();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let table = run_experiment(&c).unwrap();
        persist_results(&table, d.path(), &c.output.formats, Manifest::new("sweep", &c, &table, 0.0)).unwrap();
    }
    let read = |d: &tempfile::TempDir, f: &str| fs::read(d.path().join(f)).unwrap();
    assert_eq!(read(&dirs[0], "table.csv"), read(&dirs[1], "table.csv"));
    assert_eq!(read(&dirs[0], "series/tau_mrfs_simulated.csv"), read(&dirs[1], "series/tau_mrfs_simulated.csv"));
}

#[test]
fn io_errors_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let c = ExperimentConfig::default();
    let table = run_experiment(&c).unwrap();
    let err = persist_results(&table, &blocker.join("sub"), &[OutputFormat::Csv], Manifest::new("x", &c, &table, 0.0))
        .unwrap_err();
    assert!(err.to_string().contains("file/sub"), "{err}");
    assert_eq!(err.exit_code(), 1);
}
