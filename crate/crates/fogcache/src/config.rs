//! Experiment configuration: a TOML document with a fixed schema, plus
//! dotted-key overrides such as `content.gamma=0`.
//!
//! Every section has defaults, so an empty document describes the evaluation
//! setup: `P_u = 1 W`, `I_th = 0.05 W` (only the ratio 20 matters),
//! `theta_u = 1`, `R_d = 10 m`, `alpha = 4`, `R_s = 500 m`,
//! `lambda_g = lambda_u = 0.01`, `N = 5`, `K = 3`, `gamma = 1`, uniform
//! caching.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fogcache_core::content::{enumerate_combinations, mpc_policy, uniform_policy, zipf_popularity};
use fogcache_core::optimizer::OptimizerConfig;
use fogcache_core::simulator::TypicalParticipation;
use fogcache_core::{
    CachingPolicy, CombinationSet, ContentParams, NetworkParams, Popularity, QuadratureConfig, Scheme,
};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Bumped whenever a key is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub replications: u64,
    pub metrics: Vec<MetricGroup>,
    pub network: NetworkSection,
    pub content: ContentSection,
    pub policy: PolicySection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    pub simulation: SimulationSection,
    pub quadrature: QuadratureSection,
    pub optimizer: OptimizerSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: 1,
            replications: 2000,
            metrics: vec![MetricGroup::Activation, MetricGroup::CacheHit, MetricGroup::Coverage, MetricGroup::Scdp],
            network: NetworkSection::default(),
            content: ContentSection::default(),
            policy: PolicySection::default(),
            sweep: None,
            simulation: SimulationSection::default(),
            quadrature: QuadratureSection::default(),
            optimizer: OptimizerSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    pub lambda_g: f64,
    pub lambda_u: f64,
    pub p_g: f64,
    pub p_u: f64,
    pub theta_u: f64,
    #[serde(alias = "I_th")]
    pub i_th: f64,
    pub alpha: f64,
    #[serde(alias = "R_d")]
    pub r_d: f64,
    #[serde(alias = "R_s")]
    pub r_s: f64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self::from(&NetworkParams::default())
    }
}

impl From<&NetworkParams> for NetworkSection {
    fn from(n: &NetworkParams) -> Self {
        Self {
            lambda_g: n.lambda_g,
            lambda_u: n.lambda_u,
            p_g: n.p_g,
            p_u: n.p_u,
            theta_u: n.theta_u,
            i_th: n.i_th,
            alpha: n.alpha,
            r_d: n.r_d,
            r_s: n.r_s,
        }
    }
}

impl NetworkSection {
    pub fn params(&self) -> NetworkParams {
        NetworkParams {
            lambda_g: self.lambda_g,
            lambda_u: self.lambda_u,
            p_g: self.p_g,
            p_u: self.p_u,
            theta_u: self.theta_u,
            i_th: self.i_th,
            alpha: self.alpha,
            r_d: self.r_d,
            r_s: self.r_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeChoice {
    Rfs,
    Mrfs,
    Both,
}

impl SchemeChoice {
    pub fn schemes(self) -> Vec<Scheme> {
        match self {
            SchemeChoice::Rfs => vec![Scheme::Rfs],
            SchemeChoice::Mrfs => vec![Scheme::Mrfs],
            SchemeChoice::Both => vec![Scheme::Rfs, Scheme::Mrfs],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContentSection {
    pub library_size: usize,
    pub cache_size: usize,
    pub gamma: f64,
    pub scheme: SchemeChoice,
}

impl Default for ContentSection {
    fn default() -> Self {
        Self { library_size: 5, cache_size: 3, gamma: 1.0, scheme: SchemeChoice::Mrfs }
    }
}

impl ContentSection {
    pub fn params(&self, scheme: Scheme) -> ContentParams {
        ContentParams { library_size: self.library_size, cache_size: self.cache_size, gamma: self.gamma, scheme }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicySource {
    Uniform,
    Mpc,
    Explicit,
    Optimizer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicySection {
    pub source: PolicySource,
    /// Caching probabilities in lexicographic combination order; only read
    /// when `source = "explicit"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl Default for PolicySection {
    fn default() -> Self {
        Self { source: PolicySource::Uniform, weights: None }
    }
}

/// Parameters that may be swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "lambda_u")]
    LambdaU,
    #[serde(rename = "lambda_g")]
    LambdaG,
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "I_th", alias = "i_th")]
    ITh,
    #[serde(rename = "theta_u")]
    ThetaU,
    #[serde(rename = "R_d", alias = "r_d")]
    RD,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 6] =
        [SweepAxis::LambdaU, SweepAxis::LambdaG, SweepAxis::Gamma, SweepAxis::ITh, SweepAxis::ThetaU, SweepAxis::RD];

    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::LambdaU => "lambda_u",
            SweepAxis::LambdaG => "lambda_g",
            SweepAxis::Gamma => "gamma",
            SweepAxis::ITh => "I_th",
            SweepAxis::ThetaU => "theta_u",
            SweepAxis::RD => "R_d",
        }
    }

    /// Writes `value` into the matching field.
    pub fn apply(self, value: f64, network: &mut NetworkSection, content: &mut ContentSection) {
        match self {
            SweepAxis::LambdaU => network.lambda_u = value,
            SweepAxis::LambdaG => network.lambda_g = value,
            SweepAxis::Gamma => content.gamma = value,
            SweepAxis::ITh => network.i_th = value,
            SweepAxis::ThetaU => network.theta_u = value,
            SweepAxis::RD => network.r_d = value,
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.as_str() == s || a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| HarnessError::config(format!("unknown sweep axis `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Either an explicit `values` list or a generated `start`/`stop`/`points`
/// grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
}

impl SweepSection {
    pub fn values(axis: SweepAxis, values: Vec<f64>) -> Self {
        Self { axis, values: Some(values), start: None, stop: None, points: None, spacing: Spacing::Linear }
    }

    pub fn generated(axis: SweepAxis, start: f64, stop: f64, points: usize, spacing: Spacing) -> Self {
        Self { axis, values: None, start: Some(start), stop: Some(stop), points: Some(points), spacing }
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        let grid = match (&self.values, self.start, self.stop, self.points) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(k)) => generate(a, b, k, self.spacing)?,
            _ => {
                return Err(HarnessError::config(
                    "sweep needs either `values` or all of `start`, `stop` and `points`",
                ))
            }
        };
        if grid.is_empty() {
            return Err(HarnessError::config("sweep grid is empty"));
        }
        if grid.iter().any(|v| !v.is_finite()) {
            return Err(HarnessError::config("sweep grid contains a non-finite value"));
        }
        let up = grid.windows(2).all(|w| w[1] > w[0]);
        let down = grid.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(HarnessError::config("sweep grid must be strictly monotone"));
        }
        Ok(grid)
    }
}

fn generate(start: f64, stop: f64, points: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(HarnessError::config("sweep grid is empty"));
    }
    if points == 1 {
        return Ok(vec![start]);
    }
    let k = (points - 1) as f64;
    match spacing {
        Spacing::Linear => Ok((0..points).map(|i| start + (stop - start) * i as f64 / k).collect()),
        Spacing::Log => {
            if !(start > 0.0 && stop > 0.0) {
                return Err(HarnessError::config("log-spaced sweep needs positive endpoints"));
            }
            let (a, b) = (start.log10(), stop.log10());
            let mut grid: Vec<f64> = (0..points).map(|i| 10f64.powf(a + (b - a) * i as f64 / k)).collect();
            // Pin the endpoints so that e.g. 1e-3 is not printed as 0.0010000000000000002.
            grid[0] = start;
            grid[points - 1] = stop;
            Ok(grid)
        }
    }
}

/// Metric families computed at each sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricGroup {
    /// `xi` per file and in total, and the OSA probability per file.
    Activation,
    /// Conditional cache-hit probability per file and on average.
    CacheHit,
    /// Conditional coverage per file and on average.
    Coverage,
    /// SCDP and throughput.
    Scdp,
    /// Coverage and SCDP without opportunistic access, at matched activity.
    Baseline,
    /// SCDP under the uniform, MPC and optimized placements.
    Policies,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Participation {
    #[default]
    SensingOnly,
    Full,
}

impl From<Participation> for TypicalParticipation {
    fn from(p: Participation) -> Self {
        match p {
            Participation::SensingOnly => TypicalParticipation::SensingOnly,
            Participation::Full => TypicalParticipation::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub enabled: bool,
    /// Whether the typical UE's own request beacon takes part in the
    /// selection phase of nearby F-UEs, or only in their sensing.
    pub participation: Participation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub mrfs_tail_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        Self { rel_tol: q.rel_tol, abs_tol: q.abs_tol, mrfs_tail_tol: q.mrfs_tail_tol, max_subdivisions: q.max_subdivisions }
    }
}

impl QuadratureSection {
    pub fn config(&self) -> QuadratureConfig {
        QuadratureConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            mrfs_tail_tol: self.mrfs_tail_tol,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientChoice {
    #[default]
    Analytic,
    FiniteDifference,
}

impl From<GradientChoice> for fogcache_core::analytics::GradientMode {
    fn from(g: GradientChoice) -> Self {
        match g {
            GradientChoice::Analytic => Self::Analytic,
            GradientChoice::FiniteDifference => Self::FiniteDifference,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub sigma: f64,
    pub max_iterations: usize,
    pub line_search_tol: f64,
    pub gradient: GradientChoice,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let o = OptimizerConfig::default();
        Self {
            sigma: o.sigma,
            max_iterations: o.max_iterations,
            line_search_tol: o.line_search_tol,
            gradient: GradientChoice::Analytic,
        }
    }
}

impl OptimizerSection {
    pub fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            sigma: self.sigma,
            max_iterations: self.max_iterations,
            line_search_tol: self.line_search_tol,
            ..OptimizerConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Manifest,
    Series,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: PathBuf::from("results"), formats: vec![OutputFormat::Csv, OutputFormat::Manifest] }
    }
}

/// The parameters of one sweep point for one scheme, already validated.
#[derive(Debug, Clone)]
pub struct PointParams {
    pub network: NetworkParams,
    pub content: ContentParams,
}

impl PointParams {
    pub fn combinations(&self) -> Result<CombinationSet> {
        Ok(enumerate_combinations(self.content.library_size, self.content.cache_size)?)
    }

    pub fn popularity(&self) -> Result<Popularity> {
        Ok(zipf_popularity(self.content.library_size, self.content.gamma)?)
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| HarnessError::config(format!("malformed config: {e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let config: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads `path` (or starts from the defaults when `None`) and applies
    /// the overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| HarnessError::config(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn schemes(&self) -> Vec<Scheme> {
        self.content.scheme.schemes()
    }

    pub fn sweep_grid(&self) -> Result<Option<Vec<f64>>> {
        self.sweep.as_ref().map(SweepSection::grid).transpose()
    }

    /// Parameters at sweep value `value` (or the base point for `None`).
    pub fn point(&self, value: Option<f64>, scheme: Scheme) -> PointParams {
        let mut network = self.network;
        let mut content = self.content;
        if let (Some(sweep), Some(v)) = (&self.sweep, value) {
            sweep.axis.apply(v, &mut network, &mut content);
        }
        PointParams { network: network.params(), content: content.params(scheme) }
    }

    pub fn explicit_policy(&self, combos: &CombinationSet) -> Result<CachingPolicy> {
        let weights = self
            .policy
            .weights
            .clone()
            .ok_or_else(|| HarnessError::config("policy.source = \"explicit\" needs policy.weights"))?;
        if weights.len() != combos.len() {
            return Err(HarnessError::config(format!(
                "policy.weights has {} entries but there are {} cache combinations",
                weights.len(),
                combos.len()
            )));
        }
        Ok(CachingPolicy::new(weights)?)
    }

    /// Rejects anything that would fail before producing a number: bad
    /// parameters at any sweep point, an empty or non-monotone grid, an
    /// explicit policy of the wrong size.
    pub fn validate(&self) -> Result<()> {
        if self.metrics.is_empty() {
            return Err(HarnessError::config("metrics must list at least one group"));
        }
        if self.simulation.enabled && self.replications == 0 {
            return Err(HarnessError::config("replications must be at least 1"));
        }
        self.quadrature.config().validate()?;
        self.optimizer.config().validate()?;
        if self.policy.source != PolicySource::Explicit && self.policy.weights.is_some() {
            return Err(HarnessError::config("policy.weights is only allowed with source = \"explicit\""));
        }
        let values: Vec<Option<f64>> = match self.sweep_grid()? {
            Some(grid) => grid.into_iter().map(Some).collect(),
            None => vec![None],
        };
        for v in values {
            for scheme in self.schemes() {
                let p = self.point(v, scheme);
                p.network.validate()?;
                p.content.validate()?;
                let combos = p.combinations()?;
                if self.policy.source == PolicySource::Explicit {
                    self.explicit_policy(&combos)?;
                }
            }
        }
        Ok(())
    }

    /// Policy named by `policy.source`, except the optimizer which the
    /// harness runs itself.
    pub fn fixed_policy(&self, combos: &CombinationSet, pop: &Popularity) -> Result<Option<CachingPolicy>> {
        Ok(match self.policy.source {
            PolicySource::Uniform => Some(uniform_policy(combos.len())?),
            PolicySource::Mpc => Some(mpc_policy(combos, pop)?),
            PolicySource::Explicit => Some(self.explicit_policy(combos)?),
            PolicySource::Optimizer => None,
        })
    }
}

/// Applies `a.b.c=value` to a parsed document. The value is read as a TOML
/// value when possible (`0`, `1e-3`, `true`, `[0.1, 0.2]`, `"rfs"`) and as a
/// bare string otherwise.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let spec = spec.trim_start_matches("--");
    let (key, raw) =
        spec.split_once('=').ok_or_else(|| HarnessError::config(format!("override `{spec}` is not key=value")))?;
    let path: Vec<&str> = key.split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(HarnessError::config(format!("override key `{key}` is malformed")));
    }
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut cursor = table;
    for part in &path[..path.len() - 1] {
        let entry = cursor.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| HarnessError::config(format!("override key `{key}`: `{part}` is not a section")))?;
    }
    cursor.insert(path[path.len() - 1].to_string(), value);
    Ok(())
}
