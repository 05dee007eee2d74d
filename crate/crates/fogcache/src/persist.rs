//! Result files: the CSV table, the TOML run manifest, and one small CSV per
//! plotted curve.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, OutputFormat, SCHEMA_VERSION};
use crate::error::{HarnessError, Result};
use crate::harness::{PointRecord, ResultRow, ResultTable};

pub const TABLE_HEADER: [&str; 10] = [
    "sweep_axis",
    "sweep_value",
    "metric",
    "file_index",
    "scheme",
    "analytical",
    "sim_mean",
    "sim_ci95",
    "replications",
    "seed",
];

pub const TABLE_FILE: &str = "table.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const SERIES_DIR: &str = "series";

/// Outcome of a qualitative check attached to a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Informational checks are reported but do not fail the run.
    pub gating: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub toolkit: String,
    pub version: String,
    pub schema_version: u32,
    pub command: String,
    pub master_seed: u64,
    pub wall_time_s: f64,
    pub files: Vec<String>,
    #[serde(default)]
    pub points: Vec<PointRecord>,
    #[serde(default)]
    pub checks: Vec<CheckOutcome>,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn new(command: &str, config: &ExperimentConfig, table: &ResultTable, wall_time_s: f64) -> Self {
        Self {
            toolkit: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            master_seed: config.master_seed,
            wall_time_s,
            files: Vec::new(),
            points: table.points.clone(),
            checks: Vec::new(),
            config: config.clone(),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv { path: path.to_path_buf(), source }
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn write_table(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err(path))?;
    wtr.write_record(TABLE_HEADER).map_err(csv_err(path))?;
    for row in rows {
        wtr.serialize(row).map_err(csv_err(path))?;
    }
    wtr.flush().map_err(io_err(path))
}

pub fn read_table(path: &Path) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = rdr.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(TABLE_HEADER) {
        return Err(HarnessError::config(format!("{}: unexpected header {:?}", path.display(), header)));
    }
    rdr.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>().map_err(csv_err(path))
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let text = toml::to_string(manifest).expect("manifest serializes");
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    toml::from_str(&text).map_err(|source| HarnessError::Manifest { path: path.to_path_buf(), source })
}

/// Series file stem for a curve, e.g. `coverage_n2_mrfs` or `tau_rfs`.
pub fn series_name(metric: &str, file_index: Option<usize>, scheme: &str) -> String {
    match file_index {
        Some(n) => format!("{metric}_n{n}_{scheme}"),
        None => format!("{metric}_{scheme}"),
    }
}

/// Writes `<name>_analytical.csv` (`x,y`) and `<name>_simulated.csv`
/// (`x,mean,ci95`) for every curve of a swept table.
pub fn write_series(dir: &Path, table: &ResultTable) -> Result<Vec<PathBuf>> {
    let mut curves: BTreeMap<String, Vec<&ResultRow>> = BTreeMap::new();
    let mut order = Vec::new();
    for row in &table.rows {
        if row.sweep_value.is_none() {
            continue;
        }
        let name = series_name(&row.metric, row.file_index, &row.scheme);
        if !curves.contains_key(&name) {
            order.push(name.clone());
        }
        curves.entry(name).or_default().push(row);
    }
    if curves.is_empty() {
        return Ok(Vec::new());
    }
    create_dir(dir)?;
    let mut written = Vec::new();
    for name in order {
        let rows = &curves[&name];
        if rows.iter().any(|r| r.analytical.is_some()) {
            let path = dir.join(format!("{name}_analytical.csv"));
            let mut wtr = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
            wtr.write_record(["x", "y"]).map_err(csv_err(&path))?;
            for r in rows.iter().filter(|r| r.analytical.is_some()) {
                wtr.serialize((r.sweep_value, r.analytical)).map_err(csv_err(&path))?;
            }
            wtr.flush().map_err(io_err(&path))?;
            written.push(path);
        }
        if rows.iter().any(|r| r.sim_mean.is_some()) {
            let path = dir.join(format!("{name}_simulated.csv"));
            let mut wtr = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
            wtr.write_record(["x", "mean", "ci95"]).map_err(csv_err(&path))?;
            for r in rows.iter().filter(|r| r.sim_mean.is_some()) {
                wtr.serialize((r.sweep_value, r.sim_mean, r.sim_ci95)).map_err(csv_err(&path))?;
            }
            wtr.flush().map_err(io_err(&path))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Writes the requested formats into `dir` and returns the files created.
/// The manifest, if requested, is written last and lists the other files.
pub fn persist_results(
    table: &ResultTable,
    dir: &Path,
    formats: &[OutputFormat],
    mut manifest: Manifest,
) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut written = Vec::new();
    if formats.contains(&OutputFormat::Csv) {
        let path = dir.join(TABLE_FILE);
        write_table(&path, &table.rows)?;
        written.push(path);
    }
    if formats.contains(&OutputFormat::Series) {
        written.extend(write_series(&dir.join(SERIES_DIR), table)?);
    }
    if formats.contains(&OutputFormat::Manifest) {
        let path = dir.join(MANIFEST_FILE);
        manifest.files = written
            .iter()
            .map(|p| p.strip_prefix(dir).unwrap_or(p).to_string_lossy().replace('\\', "/"))
            .collect();
        write_manifest(&path, &manifest)?;
        written.push(path);
    }
    Ok(written)
}
