//! One-command sweeps for each figure family of the evaluation.
//!
//! Every preset starts from the evaluation defaults (`P_u = 1 W` and
//! `I_th = 0.05 W`, i.e. `P_u / I_th = 20`; `theta_u = 1`; `R_d = 10 m`;
//! `gamma = 1`; `alpha = 4`; `N = 5`; `K = 3`; uniform caching;
//! `R_s = 500 m`). The grids are chosen to straddle the qualitative features
//! of each curve (the peak of `xi` in `lambda_u`, the spread of `gamma`):
//!
//! | tag   | x axis            | grid                    | curves                         | runs                 |
//! |-------|-------------------|-------------------------|--------------------------------|----------------------|
//! | fig1a | `lambda_u`        | log, 1e-3..1e-1, 13 pts | `xi` per file, RFS             | one                  |
//! | fig1b | `lambda_u`        | same                    | `xi` per file, MRFS            | one                  |
//! | fig2  | `lambda_u`        | same                    | cache hit per file, RFS        | `lambda_g` 0.005, 0.01 |
//! | fig3  | `lambda_u`        | same                    | cache hit per file, MRFS       | `lambda_g` 0.005, 0.01 |
//! | fig4  | `lambda_u`        | same                    | coverage per file, both        | `lambda_g` 0.005, 0.01 |
//! | fig5  | `I_th`            | log, 5e-3..5, 9 pts     | coverage, OSA and baseline     | one                  |
//! | fig6  | `lambda_u`        | same as fig1            | SCDP, both schemes             | `lambda_g` 0.005, 0.01 |
//! | fig7  | `I_th`            | as fig5                 | SCDP, OSA and baseline         | one                  |
//! | fig8a | `gamma`           | linear, 0..5, 11 pts    | SCDP of three placements, RFS  | one                  |
//! | fig8b | `gamma`           | same                    | same, MRFS                     | one                  |
//!
//! In fig5 and fig7 the baseline keeps each file's active density equal to
//! the opportunistic one, and `I_th` moves the activity level `xi` (also
//! emitted) at fixed `lambda_u = lambda_g = 0.01`. Desk scale runs 2000
//! replications per point, full scale 20000. The fig8 presets are analytical
//! only.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use fogcache_core::Scheme;

use crate::config::{
    ExperimentConfig, MetricGroup, OutputFormat, SchemeChoice, Spacing, SweepAxis, SweepSection,
};
use crate::error::{HarnessError, Result};
use crate::harness::{run_experiment, ResultRow, ResultTable};
use crate::persist::{self, CheckOutcome, Manifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureTag {
    Fig1a,
    Fig1b,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8a,
    Fig8b,
}

impl FigureTag {
    pub const ALL: [FigureTag; 10] = [
        FigureTag::Fig1a,
        FigureTag::Fig1b,
        FigureTag::Fig2,
        FigureTag::Fig3,
        FigureTag::Fig4,
        FigureTag::Fig5,
        FigureTag::Fig6,
        FigureTag::Fig7,
        FigureTag::Fig8a,
        FigureTag::Fig8b,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureTag::Fig1a => "fig1a",
            FigureTag::Fig1b => "fig1b",
            FigureTag::Fig2 => "fig2",
            FigureTag::Fig3 => "fig3",
            FigureTag::Fig4 => "fig4",
            FigureTag::Fig5 => "fig5",
            FigureTag::Fig6 => "fig6",
            FigureTag::Fig7 => "fig7",
            FigureTag::Fig8a => "fig8a",
            FigureTag::Fig8b => "fig8b",
        }
    }
}

impl fmt::Display for FigureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureTag {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        FigureTag::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| HarnessError::UnknownPreset(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    #[default]
    Desk,
    Full,
}

impl Scale {
    pub fn replications(self) -> u64 {
        match self {
            Scale::Desk => 2000,
            Scale::Full => 20000,
        }
    }
}

impl FromStr for Scale {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            other => Err(HarnessError::config(format!("unknown scale `{other}`; expected desk or full"))),
        }
    }
}

/// One sweep of a preset. Figures with a panel per `lambda_g` have two.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetRun {
    pub label: String,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub tag: FigureTag,
    pub runs: Vec<PresetRun>,
}

impl Preset {
    /// Applies the same change to every run, e.g. a seed or replication
    /// override.
    pub fn map_configs(mut self, mut f: impl FnMut(&mut ExperimentConfig)) -> Self {
        for run in &mut self.runs {
            f(&mut run.config);
        }
        self
    }
}

pub fn lambda_u_grid() -> SweepSection {
    SweepSection::generated(SweepAxis::LambdaU, 1e-3, 1e-1, 13, Spacing::Log)
}

fn i_th_grid() -> SweepSection {
    SweepSection::generated(SweepAxis::ITh, 5e-3, 5.0, 9, Spacing::Log)
}

fn gamma_grid() -> SweepSection {
    SweepSection::generated(SweepAxis::Gamma, 0.0, 5.0, 11, Spacing::Linear)
}

pub fn preset(tag: FigureTag, scale: Scale) -> Preset {
    let base = |scheme: SchemeChoice, metrics: Vec<MetricGroup>, sweep: SweepSection| {
        let mut c = ExperimentConfig { replications: scale.replications(), metrics, sweep: Some(sweep), ..Default::default() };
        c.content.scheme = scheme;
        c.simulation.enabled = true;
        c.output.formats = vec![OutputFormat::Csv, OutputFormat::Manifest, OutputFormat::Series];
        c
    };
    let single = |config: ExperimentConfig| vec![PresetRun { label: "default".to_string(), config }];
    let per_lambda_g = |config: ExperimentConfig| {
        [0.005, 0.01]
            .into_iter()
            .map(|lg| {
                let mut c = config.clone();
                c.network.lambda_g = lg;
                PresetRun { label: format!("lambda_g_{lg}"), config: c }
            })
            .collect()
    };
    use MetricGroup::*;
    let runs = match tag {
        FigureTag::Fig1a => single(base(SchemeChoice::Rfs, vec![Activation], lambda_u_grid())),
        FigureTag::Fig1b => single(base(SchemeChoice::Mrfs, vec![Activation], lambda_u_grid())),
        FigureTag::Fig2 => per_lambda_g(base(SchemeChoice::Rfs, vec![CacheHit], lambda_u_grid())),
        FigureTag::Fig3 => per_lambda_g(base(SchemeChoice::Mrfs, vec![CacheHit], lambda_u_grid())),
        FigureTag::Fig4 => per_lambda_g(base(SchemeChoice::Both, vec![Coverage], lambda_u_grid())),
        FigureTag::Fig5 => single(base(SchemeChoice::Both, vec![Activation, Coverage, Baseline], i_th_grid())),
        FigureTag::Fig6 => per_lambda_g(base(SchemeChoice::Both, vec![Scdp], lambda_u_grid())),
        FigureTag::Fig7 => single(base(SchemeChoice::Both, vec![Activation, Scdp, Baseline], i_th_grid())),
        FigureTag::Fig8a | FigureTag::Fig8b => {
            let scheme = if tag == FigureTag::Fig8a { SchemeChoice::Rfs } else { SchemeChoice::Mrfs };
            let mut c = base(scheme, vec![Policies], gamma_grid());
            c.simulation.enabled = false;
            single(c)
        }
    };
    Preset { tag, runs }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureResult {
    pub tag: FigureTag,
    pub tables: Vec<(PresetRun, ResultTable)>,
    pub checks: Vec<CheckOutcome>,
    pub wall_time_s: f64,
}

impl FigureResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.gating)
    }
}

/// Number of sign changes in the first differences of `values`, ignoring
/// exact ties.
pub fn sign_changes(values: &[f64]) -> usize {
    let signs: Vec<bool> = values.windows(2).map(|w| w[1] - w[0]).filter(|d| *d != 0.0).map(|d| d > 0.0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

fn sorted_series<'a>(rows: impl Iterator<Item = &'a ResultRow>) -> Vec<&'a ResultRow> {
    let mut v: Vec<&ResultRow> = rows.collect();
    v.sort_by(|a, b| a.sweep_value.partial_cmp(&b.sweep_value).expect("finite grid"));
    v
}

fn agreement_check(label: &str, table: &ResultTable) -> Option<CheckOutcome> {
    let verdicts: Vec<bool> = table.rows.iter().filter_map(ResultRow::agrees).collect();
    if verdicts.is_empty() {
        return None;
    }
    let inside = verdicts.iter().filter(|&&v| v).count();
    Some(CheckOutcome {
        name: format!("{label}: analytical inside simulated 95% CI"),
        passed: inside == verdicts.len(),
        gating: false,
        detail: format!("{inside} of {} rows", verdicts.len()),
    })
}

fn unimodal_checks(label: &str, table: &ResultTable, scheme: Scheme) -> Vec<CheckOutcome> {
    let files: Vec<usize> = {
        let mut f: Vec<usize> = table.rows_for("xi", scheme).filter_map(|r| r.file_index).collect();
        f.sort_unstable();
        f.dedup();
        f
    };
    files
        .into_iter()
        .map(|n| {
            let series: Vec<f64> = sorted_series(table.rows_for("xi", scheme).filter(|r| r.file_index == Some(n)))
                .iter()
                .filter_map(|r| r.analytical)
                .collect();
            let changes = sign_changes(&series);
            CheckOutcome {
                name: format!("{label}: xi of file {n} rises then falls ({})", scheme.as_str()),
                passed: changes == 1 && series.len() > 2 && series[1] > series[0],
                gating: true,
                detail: format!("{changes} sign changes over {} points", series.len()),
            }
        })
        .collect()
}

/// `upper >= lower` at every sweep value, analytically (up to `tol`) and in
/// simulation (within the two intervals combined).
fn dominance_check(
    name: String,
    upper: Vec<&ResultRow>,
    lower: Vec<&ResultRow>,
    tol: f64,
) -> CheckOutcome {
    let mut analytic_fail = Vec::new();
    let mut sim_fail = Vec::new();
    for (u, l) in upper.iter().zip(&lower) {
        debug_assert_eq!(u.sweep_value, l.sweep_value);
        if let (Some(a), Some(b)) = (u.analytical, l.analytical) {
            if a < b - tol {
                analytic_fail.push(u.sweep_value.unwrap_or(f64::NAN));
            }
        }
        if let (Some(a), Some(ha), Some(b), Some(hb)) = (u.sim_mean, u.sim_ci95, l.sim_mean, l.sim_ci95) {
            if a + ha + hb < b {
                sim_fail.push(u.sweep_value.unwrap_or(f64::NAN));
            }
        }
    }
    CheckOutcome {
        name,
        passed: analytic_fail.is_empty() && sim_fail.is_empty() && upper.len() == lower.len() && !upper.is_empty(),
        gating: true,
        detail: format!(
            "{} points; analytical violations at {:?}; simulated violations at {:?}",
            upper.len(),
            analytic_fail,
            sim_fail
        ),
    }
}

fn gap_check(label: &str, table: &ResultTable, scheme: Scheme) -> CheckOutcome {
    let by = |metric: &str| -> Vec<f64> {
        sorted_series(table.rows_for(metric, scheme)).iter().map(|r| r.analytical.unwrap_or(f64::NAN)).collect()
    };
    let (opt, mpc, uni) = (by("tau_optimized"), by("tau_mpc"), by("tau_uniform"));
    let gap: Vec<f64> = opt.iter().zip(mpc.iter().zip(&uni)).map(|(o, (m, u))| o - m.max(*u)).collect();
    let passed = gap.len() >= 3 && {
        let peak = gap.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let inner = gap[1..gap.len() - 1].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        inner == peak && gap[0] < peak && gap[gap.len() - 1] < peak && gap.iter().all(|g| *g >= -1e-9)
    };
    CheckOutcome {
        name: format!("{label}: optimized gain over the best baseline narrows at both ends of gamma ({})", scheme.as_str()),
        passed,
        gating: true,
        detail: format!("gap = {gap:?}"),
    }
}

/// Quadrature slack for comparing two analytical SCDP or coverage values.
const ANALYTIC_TOL: f64 = 1e-7;

pub fn checks_for(tag: FigureTag, label: &str, table: &ResultTable) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    match tag {
        FigureTag::Fig1a => out.extend(unimodal_checks(label, table, Scheme::Rfs)),
        FigureTag::Fig1b => out.extend(unimodal_checks(label, table, Scheme::Mrfs)),
        FigureTag::Fig5 | FigureTag::Fig7 => {
            let (metric, base) = if tag == FigureTag::Fig5 { ("coverage", "coverage_baseline") } else { ("tau", "tau_baseline") };
            for scheme in [Scheme::Rfs, Scheme::Mrfs] {
                let pick = |m: &'static str| sorted_series(table.rows_for(m, scheme).filter(|r| r.file_index.is_none()));
                out.push(dominance_check(
                    format!("{label}: {metric} with sensing >= without ({})", scheme.as_str()),
                    pick(metric),
                    pick(base),
                    ANALYTIC_TOL,
                ));
            }
        }
        FigureTag::Fig6 => {
            let pick = |s: Scheme| sorted_series(table.rows_for("tau", s));
            out.push(dominance_check(
                format!("{label}: tau(mrfs) >= tau(rfs)"),
                pick(Scheme::Mrfs),
                pick(Scheme::Rfs),
                ANALYTIC_TOL,
            ));
        }
        FigureTag::Fig8a => out.push(gap_check(label, table, Scheme::Rfs)),
        FigureTag::Fig8b => out.push(gap_check(label, table, Scheme::Mrfs)),
        _ => {}
    }
    out.extend(agreement_check(label, table));
    out
}

/// Runs every sweep of `preset` and evaluates its checks. Nothing is written.
pub fn run_preset(preset: &Preset) -> Result<FigureResult> {
    let started = Instant::now();
    let mut tables = Vec::new();
    let mut checks = Vec::new();
    for run in &preset.runs {
        log::info!("{} {}: starting", preset.tag, run.label);
        let table = run_experiment(&run.config)?;
        checks.extend(checks_for(preset.tag, &run.label, &table));
        tables.push((run.clone(), table));
    }
    Ok(FigureResult { tag: preset.tag, tables, checks, wall_time_s: started.elapsed().as_secs_f64() })
}

pub fn reproduce_figure(tag: FigureTag, scale: Scale) -> Result<FigureResult> {
    run_preset(&preset(tag, scale))
}

#[derive(serde::Serialize)]
struct CheckFile<'a> {
    tag: &'a str,
    passed: bool,
    wall_time_s: f64,
    checks: &'a [CheckOutcome],
}

/// Writes `<dir>/<label>/{table.csv, manifest.toml, series/}` per run and
/// `<dir>/checks.toml`.
pub fn persist_figure(result: &FigureResult, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    persist::create_dir(dir)?;
    let mut written = Vec::new();
    for (run, table) in &result.tables {
        let mut manifest = Manifest::new(&format!("reproduce {}", result.tag), &run.config, table, result.wall_time_s);
        manifest.checks = result.checks.iter().filter(|c| c.name.starts_with(&format!("{}:", run.label))).cloned().collect();
        written.extend(persist::persist_results(table, &dir.join(&run.label), &run.config.output.formats, manifest)?);
    }
    let path = dir.join("checks.toml");
    let file = CheckFile { tag: result.tag.as_str(), passed: result.passed(), wall_time_s: result.wall_time_s, checks: &result.checks };
    std::fs::write(&path, toml::to_string(&file).expect("checks serialize"))
        .map_err(|source| HarnessError::Io { path: path.clone(), source })?;
    written.push(path);
    Ok(written)
}
