use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgAction, Parser, Subcommand};
use fogcache_core::analytics::ScdpModel;
use fogcache_core::optimizer::baselines;
use fogcache_core::CombinationSet;

use fogcache::config::{ExperimentConfig, OutputFormat};
use fogcache::format::{opt, sig};
use fogcache::harness::{optimize_point, point_seed, ResultRow, ResultTable};
use fogcache::persist::{self, Manifest};
use fogcache::presets::{persist_figure, preset, run_preset, FigureTag, Scale};
use fogcache::{run_experiment, HarnessError, Result};

const LONG_VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\nconfig schema 1");

#[derive(Debug, Parser)]
#[command(name = "fogcache", version, long_version = LONG_VERSION)]
#[command(about = "Analysis, simulation and caching optimization for opportunistic fog-aided D2D delivery")]
#[command(after_help = "Any config key can be overridden with --section.key=value, e.g. --content.gamma=0.")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Master seed, overriding `master_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Replications per point, overriding `replications`.
    #[arg(long, global = true)]
    replications: Option<u64>,

    /// Output directory, overriding `output.directory`.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,

    /// Config override as KEY=VALUE with a dotted key.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// More logging (-v debug, -vv trace).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,

    /// Only warnings and errors on stderr.
    #[arg(short, long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the analytical report at the configured point.
    Analyze { config: Option<PathBuf> },
    /// Simulate the configured point and compare with the analytics.
    Simulate { config: Option<PathBuf> },
    /// Optimize the caching placement at the configured point.
    Optimize { config: Option<PathBuf> },
    /// Run the configured sweep and write the result table.
    Sweep { config: Option<PathBuf> },
    /// Run a figure preset.
    Reproduce {
        /// fig1a, fig1b, fig2, ..., fig7, fig8a, fig8b
        tag: String,
        #[arg(long, default_value = "desk")]
        scale: String,
    },
}

/// Pulls `--a.b=value` arguments out of argv; clap sees the rest.
fn split_overrides(args: impl Iterator<Item = String>) -> (Vec<String>, Vec<String>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    for arg in args {
        let dotted = arg
            .strip_prefix("--")
            .and_then(|s| s.split_once('='))
            .is_some_and(|(key, _)| key.contains('.') && !key.is_empty());
        if dotted {
            overrides.push(arg[2..].to_string());
        } else {
            rest.push(arg);
        }
    }
    (rest, overrides)
}

fn main() -> ExitCode {
    let (args, mut overrides) = split_overrides(std::env::args());
    let cli = Cli::parse_from(args);
    overrides.extend(cli.set.iter().cloned());

    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Warn,
        (false, 0) => log::LevelFilter::Info,
        (false, 1) => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).format_target(false).init();

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().expect("thread pool is configured once");
    }

    match run(&cli, &overrides) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load(cli: &Cli, path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut all = overrides.to_vec();
    if let Some(seed) = cli.seed {
        all.push(format!("master_seed={seed}"));
    }
    if let Some(r) = cli.replications {
        all.push(format!("replications={r}"));
    }
    let mut config = ExperimentConfig::load(path, &all)?;
    if let Some(out) = &cli.out {
        config.output.directory = out.clone();
    }
    Ok(config)
}

fn run(cli: &Cli, overrides: &[String]) -> Result<u8> {
    match &cli.command {
        Command::Analyze { config } => analyze(cli, load(cli, config.as_deref(), overrides)?),
        Command::Simulate { config } => simulate_cmd(load(cli, config.as_deref(), overrides)?),
        Command::Optimize { config } => optimize(load(cli, config.as_deref(), overrides)?),
        Command::Sweep { config } => sweep(load(cli, config.as_deref(), overrides)?),
        Command::Reproduce { tag, scale } => reproduce(cli, tag, scale, overrides),
    }
}

fn files_label(combos: &CombinationSet, i: usize) -> String {
    let files: Vec<String> = combos.combo(i).iter().map(|f| (f + 1).to_string()).collect();
    format!("{{{}}}", files.join(","))
}

fn base_point(mut config: ExperimentConfig) -> ExperimentConfig {
    config.sweep = None;
    config
}

fn analyze(cli: &Cli, config: ExperimentConfig) -> Result<u8> {
    let config = base_point(config);
    for scheme in config.schemes() {
        let point = config.point(None, scheme);
        let combos = point.combinations()?;
        let pop = point.popularity()?;
        let model = ScdpModel::new(&point.network, scheme, combos.clone(), pop.clone(), &config.quadrature.config())?;
        let policy = match config.fixed_policy(&combos, &pop)? {
            Some(p) => p,
            None => optimize_point(&config, &model)?.0,
        };
        let r = model.evaluate(&policy)?;
        println!("scheme {}", scheme.as_str());
        println!("{:>5} {:>16} {:>16} {:>16} {:>16} {:>16}", "file", "p_n", "osa", "xi_n", "sigma_n", "coverage_n");
        for n in 0..pop.len() {
            println!(
                "{:>5} {:>16} {:>16} {:>16} {:>16} {:>16}",
                n + 1,
                sig(pop.get(n)),
                sig(r.activation.vartheta[n]),
                sig(r.activation.xi_n[n]),
                sig(r.sigma_n[n]),
                sig(r.coverage_n[n])
            );
        }
        println!("{:>5} {:>10} {:>16}  xi_in per cached file", "i", "files", "c_i");
        for i in 0..combos.len() {
            let parts: Vec<String> =
                combos.combo(i).iter().map(|&f| format!("{}:{}", f + 1, sig(r.activation.xi_in(i, f as usize)))).collect();
            println!("{:>5} {:>10} {:>16}  {}", i + 1, files_label(&combos, i), sig(policy.get(i)), parts.join(" "));
        }
        println!("xi         {}", sig(r.activation.xi));
        println!("sigma      {}", sig(r.sigma));
        println!("coverage   {}", sig(r.coverage));
        println!("tau        {}", sig(r.tau));
        println!("throughput {}", sig(r.throughput));
        println!();
    }
    if cli.out.is_some() {
        let mut config = config;
        config.simulation.enabled = false;
        persist_table("analyze", &config)?;
    }
    Ok(0)
}

fn persist_table(command: &str, config: &ExperimentConfig) -> Result<ResultTable> {
    let started = Instant::now();
    let table = run_experiment(config)?;
    let manifest = Manifest::new(command, config, &table, started.elapsed().as_secs_f64());
    let written = persist::persist_results(&table, &config.output.directory, &config.output.formats, manifest)?;
    for path in written {
        log::info!("wrote {}", path.display());
    }
    Ok(table)
}

fn simulate_cmd(mut config: ExperimentConfig) -> Result<u8> {
    config = base_point(config);
    config.simulation.enabled = true;
    config.validate()?;
    let table = persist_table("simulate", &config)?;
    println!(
        "{:<12} {:>4} {:>5} {:>16} {:>16} {:>16}  agreement",
        "metric", "file", "scheme", "analytical", "sim_mean", "sim_ci95"
    );
    for row in &table.rows {
        let verdict = match row.agrees() {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "-",
        };
        println!(
            "{:<12} {:>4} {:>5} {:>16} {:>16} {:>16}  {verdict}",
            row.metric,
            row.file_index.map_or_else(|| "all".to_string(), |n| n.to_string()),
            row.scheme,
            opt(row.analytical),
            opt(row.sim_mean),
            opt(row.sim_ci95)
        );
    }
    Ok(if table.failed_points() > 0 { 1 } else { 0 })
}

fn optimize(config: ExperimentConfig) -> Result<u8> {
    let config = base_point(config);
    let dir = config.output.directory.clone();
    let started = Instant::now();
    let mut summary = Vec::new();
    let mut outputs: Vec<(String, String, String)> = Vec::new();
    for scheme in config.schemes() {
        let point = config.point(None, scheme);
        let combos = point.combinations()?;
        let model = ScdpModel::new(&point.network, scheme, combos.clone(), point.popularity()?, &config.quadrature.config())?;
        let (policy, trace) = optimize_point(&config, &model)?;
        let (uniform, mpc) = baselines(&model)?;
        println!("scheme {}", scheme.as_str());
        println!("{:>5} {:>16} {:>16} {:>16}", "t", "tau", "step", "grad_norm");
        for it in &trace.iterates {
            println!("{:>5} {:>16} {:>16} {:>16}", it.t, sig(it.tau), sig(it.step), sig(it.gradient_norm));
        }
        println!("stop: {} after {} iterations", trace.stop_reason.as_str(), trace.iterates.len().saturating_sub(1));
        println!("{:>5} {:>10} {:>16}", "i", "files", "c_i");
        for i in 0..combos.len() {
            println!("{:>5} {:>10} {:>16}", i + 1, files_label(&combos, i), sig(policy.get(i)));
        }
        let best = trace.iterates.last().map_or(f64::NAN, |i| i.tau);
        println!("{:>10} {:>16} {:>16} {:>16}", "", "uniform", "mpc", "optimized");
        println!("{:>10} {:>16} {:>16} {:>16}", "tau", sig(uniform), sig(mpc), sig(best));
        println!();

        let mut policy_csv = String::from("combination,files,weight\n");
        for i in 0..combos.len() {
            let files: Vec<String> = combos.combo(i).iter().map(|f| (f + 1).to_string()).collect();
            policy_csv.push_str(&format!("{},{},{}\n", i + 1, files.join(" "), policy.get(i)));
        }
        let mut trace_csv = String::from("iteration,tau,step,gradient_norm");
        for i in 0..combos.len() {
            trace_csv.push_str(&format!(",c_{}", i + 1));
        }
        trace_csv.push('\n');
        for it in &trace.iterates {
            trace_csv.push_str(&format!("{},{},{},{}", it.t, it.tau, it.step, it.gradient_norm));
            for c in &it.policy {
                trace_csv.push_str(&format!(",{c}"));
            }
            trace_csv.push('\n');
        }
        outputs.push((scheme.as_str().to_string(), policy_csv, trace_csv));
        let seed = point_seed(config.master_seed, None, scheme);
        for (metric, value) in [("tau_uniform", uniform), ("tau_mpc", mpc), ("tau_optimized", best)] {
            summary.push(ResultRow {
                sweep_axis: "none".to_string(),
                sweep_value: None,
                metric: metric.to_string(),
                file_index: None,
                scheme: scheme.as_str().to_string(),
                analytical: Some(value),
                sim_mean: None,
                sim_ci95: None,
                replications: None,
                seed,
            });
        }
    }
    persist::create_dir(&dir)?;
    for (scheme, policy_csv, trace_csv) in outputs {
        for (name, text) in [(format!("policy_{scheme}.csv"), policy_csv), (format!("trace_{scheme}.csv"), trace_csv)] {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|source| HarnessError::Io { path: path.clone(), source })?;
        }
    }
    let table = ResultTable { axis: None, rows: summary, points: Vec::new() };
    let manifest = Manifest::new("optimize", &config, &table, started.elapsed().as_secs_f64());
    persist::persist_results(&table, &dir, &[OutputFormat::Csv, OutputFormat::Manifest], manifest)?;
    Ok(0)
}

fn sweep(config: ExperimentConfig) -> Result<u8> {
    let table = persist_table("sweep", &config)?;
    let failed = table.failed_points();
    if failed > 0 {
        eprintln!("error: {failed} of {} sweep points failed; see the manifest", table.points.len());
        return Ok(1);
    }
    Ok(0)
}

fn reproduce(cli: &Cli, tag: &str, scale: &str, overrides: &[String]) -> Result<u8> {
    let tag: FigureTag = tag.parse()?;
    let scale: Scale = scale.parse()?;
    let mut all = overrides.to_vec();
    if let Some(seed) = cli.seed {
        all.push(format!("master_seed={seed}"));
    }
    if let Some(r) = cli.replications {
        all.push(format!("replications={r}"));
    }
    let mut preset = preset(tag, scale);
    for run in &mut preset.runs {
        run.config = ExperimentConfig::from_toml_str(&run.config.to_toml_string(), &all)?;
    }
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("results")).join(tag.as_str());
    let result = run_preset(&preset)?;
    persist_figure(&result, &dir)?;
    for check in &result.checks {
        let verdict = match (check.passed, check.gating) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "NOTE",
        };
        println!("{verdict} {}: {}", check.name, check.detail);
    }
    println!("wrote {}", dir.display());
    let failed = result.tables.iter().map(|(_, t)| t.failed_points()).sum::<usize>();
    Ok(if failed > 0 || !result.passed() { 1 } else { 0 })
}
