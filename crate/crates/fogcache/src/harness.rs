//! Sweep orchestration: evaluates the analytics and, optionally, the Monte
//! Carlo simulator at every sweep point and scheme, and collects one row per
//! metric.

use std::time::Instant;

use fogcache_core::analytics::{coverage_baseline, AnalyticalReport, ScdpModel};
use fogcache_core::optimizer::{baselines, optimize_model, OptimizerTrace};
use fogcache_core::simulator::{
    weighted_sum, AccessMode, MonteCarlo, MonteCarloReport, SimulationConfig, SimulationEstimate,
};
use fogcache_core::{CachingPolicy, Scheme};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, MetricGroup, PointParams, PolicySource, SweepAxis};
use crate::error::{HarnessError, Result};

/// One line of the result table. `file_index` counts from 1; an empty file
/// index means the metric is an average or total over files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_axis: String,
    pub sweep_value: Option<f64>,
    pub metric: String,
    pub file_index: Option<usize>,
    pub scheme: String,
    pub analytical: Option<f64>,
    pub sim_mean: Option<f64>,
    pub sim_ci95: Option<f64>,
    pub replications: Option<u64>,
    pub seed: u64,
}

impl ResultRow {
    /// `Some(true)` when the analytical value lies inside the simulated 95%
    /// interval, `None` when either side is missing.
    pub fn agrees(&self) -> Option<bool> {
        match (self.analytical, self.sim_mean, self.sim_ci95) {
            (Some(a), Some(m), Some(h)) => Some((a - m).abs() <= h),
            _ => None,
        }
    }
}

/// Bookkeeping for one (sweep value, scheme) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_value: Option<f64>,
    pub scheme: String,
    pub seed: u64,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub axis: Option<SweepAxis>,
    pub rows: Vec<ResultRow>,
    pub points: Vec<PointRecord>,
}

impl ResultTable {
    pub fn failed_points(&self) -> usize {
        self.points.iter().filter(|p| p.error.is_some()).count()
    }

    pub fn rows_for<'a>(&'a self, metric: &'a str, scheme: Scheme) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.metric == metric && r.scheme == scheme.as_str())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the random streams at one sweep point. It depends on the sweep
/// value itself rather than its position, so adding or removing grid points
/// leaves every other point's results unchanged. Kept to 63 bits so that it
/// fits a TOML integer.
pub fn point_seed(master_seed: u64, sweep_value: Option<f64>, scheme: Scheme) -> u64 {
    let value_key = sweep_value.map_or(0, |v| splitmix64(v.to_bits()));
    let scheme_key = match scheme {
        Scheme::Rfs => 0x5246_5300,
        Scheme::Mrfs => 0x4d52_4653,
    };
    splitmix64(master_seed ^ value_key ^ splitmix64(scheme_key)) >> 1
}

/// Runs every replication in parallel and pools them in replication order,
/// so the result does not depend on the number of worker threads.
pub fn simulate(mc: &MonteCarlo) -> Result<MonteCarloReport> {
    let records = (0..mc.config().replications)
        .into_par_iter()
        .map(|r| mc.replicate(r))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(mc.reduce(&records))
}

/// Optimized placement at one point, keeping the trace.
pub fn optimize_point(config: &ExperimentConfig, model: &ScdpModel) -> Result<(CachingPolicy, OptimizerTrace)> {
    Ok(optimize_model(model, &config.optimizer.config(), config.optimizer.gradient.into())?)
}

struct RowSink<'a> {
    axis: &'a str,
    value: Option<f64>,
    scheme: Scheme,
    seed: u64,
    rows: Vec<ResultRow>,
}

impl RowSink<'_> {
    fn push(&mut self, metric: &str, file: Option<usize>, analytical: Option<f64>, sim: Option<SimulationEstimate>) {
        if analytical.is_none() && sim.is_none() {
            return;
        }
        self.rows.push(ResultRow {
            sweep_axis: self.axis.to_string(),
            sweep_value: self.value,
            metric: metric.to_string(),
            file_index: file.map(|n| n + 1),
            scheme: self.scheme.as_str().to_string(),
            analytical,
            sim_mean: sim.map(|s| s.mean),
            sim_ci95: sim.map(|s| s.half_width_95),
            replications: sim.map(|s| s.replications),
            seed: self.seed,
        });
    }
}

fn pooled(p: &[f64], parts: &[Option<SimulationEstimate>]) -> Option<SimulationEstimate> {
    let parts: Option<Vec<(f64, SimulationEstimate)>> = p.iter().zip(parts).map(|(&w, e)| e.map(|e| (w, e))).collect();
    weighted_sum(&parts?)
}

/// Evaluates one sweep point for one scheme and returns its rows.
pub fn evaluate_point(config: &ExperimentConfig, value: Option<f64>, scheme: Scheme) -> Result<Vec<ResultRow>> {
    let PointParams { network: net, content } = config.point(value, scheme);
    let quad = config.quadrature.config();
    let combos = config.point(value, scheme).combinations()?;
    let pop = config.point(value, scheme).popularity()?;
    let model = ScdpModel::new(&net, scheme, combos.clone(), pop.clone(), &quad)?;
    let wants = |g: MetricGroup| config.metrics.contains(&g);

    let optimized = if config.policy.source == PolicySource::Optimizer || wants(MetricGroup::Policies) {
        Some(optimize_point(config, &model)?)
    } else {
        None
    };
    let policy = match config.fixed_policy(&combos, &pop)? {
        Some(p) => p,
        None => optimized.as_ref().expect("optimizer ran").0.clone(),
    };
    let report: AnalyticalReport = model.evaluate(&policy)?;

    let seed = point_seed(config.master_seed, value, scheme);
    let sim_groups = [MetricGroup::Activation, MetricGroup::CacheHit, MetricGroup::Coverage, MetricGroup::Scdp];
    let sim_config = |access| SimulationConfig {
        replications: config.replications,
        master_seed: seed,
        participation: config.simulation.participation.into(),
        access,
    };
    let sim = if config.simulation.enabled && sim_groups.iter().any(|&g| wants(g)) {
        let mc =
            MonteCarlo::new(&net, scheme, combos.clone(), pop.clone(), policy.clone(), sim_config(AccessMode::Opportunistic))?;
        Some(simulate(&mc)?)
    } else {
        None
    };
    let sim_base = if config.simulation.enabled && wants(MetricGroup::Baseline) {
        let mc = MonteCarlo::new(&net, scheme, combos.clone(), pop.clone(), policy.clone(), sim_config(AccessMode::Baseline))?;
        Some(simulate(&mc)?)
    } else {
        None
    };

    let axis = config.sweep.as_ref().map_or("none", |s| s.axis.as_str());
    let mut out = RowSink { axis, value, scheme, seed, rows: Vec::new() };
    let files = content.library_size;
    let p = pop.probs();
    let s = |f: fn(&MonteCarloReport) -> Option<SimulationEstimate>| sim.as_ref().and_then(f);
    let per_file = |f: fn(&MonteCarloReport) -> &Vec<Option<SimulationEstimate>>, n: usize| sim.as_ref().and_then(|r| f(r)[n]);

    if wants(MetricGroup::Activation) {
        for n in 0..files {
            out.push("xi", Some(n), Some(report.activation.xi_n[n]), per_file(|r| &r.xi_n, n));
        }
        out.push("xi", None, Some(report.activation.xi), s(|r| r.xi));
        for n in 0..files {
            out.push("osa", Some(n), Some(report.activation.vartheta[n]), per_file(|r| &r.activation_given_candidate, n));
        }
    }
    if wants(MetricGroup::CacheHit) {
        for n in 0..files {
            out.push("sigma", Some(n), Some(report.sigma_n[n]), per_file(|r| &r.sigma_n, n));
        }
        out.push("sigma", None, Some(report.sigma), sim.as_ref().and_then(|r| pooled(p, &r.sigma_n)));
    }
    if wants(MetricGroup::Coverage) {
        for n in 0..files {
            out.push("coverage", Some(n), Some(report.coverage_n[n]), per_file(|r| &r.coverage_n, n));
        }
        out.push("coverage", None, Some(report.coverage), sim.as_ref().and_then(|r| pooled(p, &r.coverage_n)));
    }
    if wants(MetricGroup::Scdp) {
        out.push("tau", None, Some(report.tau), s(|r| r.tau));
        out.push("tau_direct", None, Some(report.tau), s(|r| r.tau_direct));
        out.push("throughput", None, Some(report.throughput), s(|r| r.throughput));
    }
    if wants(MetricGroup::Baseline) {
        let base_n = (0..files)
            .map(|n| coverage_baseline(n, &report.densities, &net, &quad))
            .collect::<std::result::Result<Vec<f64>, _>>()?;
        let base_sim = |n: usize| sim_base.as_ref().and_then(|r| r.coverage_n[n]);
        for (n, &c) in base_n.iter().enumerate() {
            out.push("coverage_baseline", Some(n), Some(c), base_sim(n));
        }
        let avg: f64 = p.iter().zip(&base_n).map(|(p, c)| p * c).sum();
        out.push("coverage_baseline", None, Some(avg), sim_base.as_ref().and_then(|r| pooled(p, &r.coverage_n)));
        let tau: f64 = (0..files).map(|n| p[n] * report.sigma_n[n] * base_n[n]).sum();
        out.push("tau_baseline", None, Some(tau), sim_base.as_ref().and_then(|r| r.tau));
    }
    if wants(MetricGroup::Policies) {
        let (uniform, mpc) = baselines(&model)?;
        let best = optimized.as_ref().expect("optimizer ran").1.iterates.last().map(|i| i.tau);
        out.push("tau_uniform", None, Some(uniform), None);
        out.push("tau_mpc", None, Some(mpc), None);
        out.push("tau_optimized", None, best, None);
    }
    Ok(out.rows)
}

/// Validates `config` and evaluates every sweep point for every scheme.
///
/// A point that fails numerically is recorded with its error and contributes
/// no rows; the remaining points still run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let values: Vec<Option<f64>> = match config.sweep_grid()? {
        Some(grid) => grid.into_iter().map(Some).collect(),
        None => vec![None],
    };
    let jobs: Vec<(usize, Option<f64>, Scheme)> = values
        .iter()
        .enumerate()
        .flat_map(|(i, &v)| config.schemes().into_iter().map(move |s| (i, v, s)))
        .collect();
    let axis = config.sweep.as_ref().map(|s| s.axis);
    let results: Vec<(PointRecord, Vec<ResultRow>)> = jobs
        .par_iter()
        .map(|&(index, value, scheme)| {
            let started = Instant::now();
            let outcome = evaluate_point(config, value, scheme);
            let wall_time_s = started.elapsed().as_secs_f64();
            let label = value.map_or_else(|| "base".to_string(), |v| format!("{}={v}", axis.map_or("", |a| a.as_str())));
            let (rows, error) = match outcome {
                Ok(rows) => {
                    log::info!("point {index} {label} {}: {} rows in {wall_time_s:.2} s", scheme.as_str(), rows.len());
                    (rows, None)
                }
                Err(e) => {
                    log::warn!("point {index} {label} {} failed: {e}", scheme.as_str());
                    (Vec::new(), Some(e.to_string()))
                }
            };
            let seed = point_seed(config.master_seed, value, scheme);
            (PointRecord { index, sweep_value: value, scheme: scheme.as_str().to_string(), seed, wall_time_s, error }, rows)
        })
        .collect();
    let mut table = ResultTable { axis, rows: Vec::new(), points: Vec::new() };
    for (point, rows) in results {
        table.points.push(point);
        table.rows.extend(rows);
    }
    Ok(table)
}

/// Like [`run_experiment`] but turns failed points into an error after the
/// fact, for callers that need all-or-nothing semantics.
pub fn require_complete(table: ResultTable) -> Result<ResultTable> {
    match table.failed_points() {
        0 => Ok(table),
        failed => Err(HarnessError::PointsFailed { failed, total: table.points.len() }),
    }
}
