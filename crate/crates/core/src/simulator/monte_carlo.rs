use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::estimate::{column, mean_estimate, ratio_estimate, weighted_sum, SimulationEstimate};
use super::realization::{sample_network_in, splitmix};
use super::slot::{run_slot, sensing_radius, AccessRule, SlotContext, SlotOptions, TypicalParticipation};
use crate::analytics::osa_probability;
use crate::content::{CachingPolicy, CombinationSet, Popularity, Scheme};
use crate::error::{invalid, Result};
use crate::network::NetworkParams;

/// Channel access rule for a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AccessMode {
    #[default]
    Opportunistic,
    /// No sensing; candidates transmit independently with the analytical OSA
    /// probability of their file, so active densities match the
    /// opportunistic rule while interferer fading is unconditioned.
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub replications: u64,
    pub master_seed: u64,
    pub participation: TypicalParticipation,
    pub access: AccessMode,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { replications: 2000, master_seed: 1, participation: TypicalParticipation::default(), access: AccessMode::default() }
    }
}

/// Everything one replication contributes to the pooled estimates.
///
/// A replication is one slot with the typical request drawn from the
/// popularity plus one independent slot per file with the typical request
/// pinned to that file.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    /// F-UEs far enough from the edge that their neighbourhood is complete.
    pub interior_fues: u64,
    pub candidates: Vec<u64>,
    pub active: Vec<u64>,
    pub natural_request: u32,
    pub natural_hit: bool,
    pub natural_success: bool,
    pub pinned_hit: Vec<bool>,
    pub pinned_success: Vec<bool>,
    pub pinned_distance: Vec<Option<f64>>,
}

/// Pooled estimates over all replications. Per-file entries are `None` when
/// their conditioning event never occurred.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub replications: u64,
    pub xi_n: Vec<Option<SimulationEstimate>>,
    pub xi: Option<SimulationEstimate>,
    /// Fraction of file-`n` candidates that were active.
    pub activation_given_candidate: Vec<Option<SimulationEstimate>>,
    pub sigma_n: Vec<Option<SimulationEstimate>>,
    pub coverage_n: Vec<Option<SimulationEstimate>>,
    pub tau: Option<SimulationEstimate>,
    /// Success frequency with the typical request drawn from the popularity.
    pub tau_direct: Option<SimulationEstimate>,
    pub throughput: Option<SimulationEstimate>,
}

/// Monte Carlo driver for one parameter point.
#[derive(Debug, Clone)]
pub struct MonteCarlo {
    net: NetworkParams,
    scheme: Scheme,
    combos: CombinationSet,
    pop: Popularity,
    policy: CachingPolicy,
    config: SimulationConfig,
    access: AccessRule,
    interior: f64,
}

impl MonteCarlo {
    pub fn new(
        net: &NetworkParams,
        scheme: Scheme,
        combos: CombinationSet,
        pop: Popularity,
        policy: CachingPolicy,
        config: SimulationConfig,
    ) -> Result<Self> {
        net.validate()?;
        if config.replications == 0 {
            return Err(invalid("replications", "must be at least 1"));
        }
        if policy.len() != combos.len() || pop.len() != combos.library_size() {
            return Err(invalid("policy", "dimensions disagree with the library"));
        }
        let access = match config.access {
            AccessMode::Opportunistic => AccessRule::Opportunistic,
            AccessMode::Baseline => AccessRule::Thinned((0..pop.len()).map(|n| osa_probability(n, net, &pop)).collect()),
        };
        let interior = net.r_s - net.r_d.max(sensing_radius(net));
        Ok(Self { net: *net, scheme, combos, pop, policy, config, access, interior })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    fn rng(&self, stratum: u64, rep: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(self.config.master_seed ^ splitmix(stratum)));
        rng.set_stream(rep);
        rng
    }

    fn options(&self) -> SlotOptions {
        SlotOptions { scheme: self.scheme, participation: self.config.participation, access: self.access.clone() }
    }

    /// Simulates replication `rep`. Depends only on the master seed and
    /// `rep`, so replications can run in any order or in parallel.
    pub fn replicate(&self, rep: u64) -> Result<ReplicationRecord> {
        let files = self.pop.len();
        let opts = self.options();
        let mut rng = self.rng(0, rep);
        let real = sample_network_in(&self.net, &self.pop, &self.policy, self.net.r_s, None, &mut rng)?;
        let ctx = SlotContext::new(&self.net, &self.combos, &real);
        let out = run_slot(&ctx, &opts);
        let mut candidates = alloc::vec![0u64; files];
        let mut active = alloc::vec![0u64; files];
        let mut interior_fues = 0;
        let inner2 = self.interior * self.interior;
        for (y, p) in real.fue_points.iter().enumerate() {
            if p[0] * p[0] + p[1] * p[1] > inner2 {
                continue;
            }
            interior_fues += 1;
            if let Some(n) = out.fue_candidate[y] {
                candidates[n as usize] += 1;
                if out.fue_active[y] {
                    active[n as usize] += 1;
                }
            }
        }
        let mut record = ReplicationRecord {
            interior_fues,
            candidates,
            active,
            natural_request: real.typical_request,
            natural_hit: out.typical_server.is_some(),
            natural_success: out.typical_success,
            pinned_hit: Vec::with_capacity(files),
            pinned_success: Vec::with_capacity(files),
            pinned_distance: Vec::with_capacity(files),
        };
        for n in 0..files {
            let mut rng = self.rng(n as u64 + 1, rep);
            let real = sample_network_in(&self.net, &self.pop, &self.policy, self.net.r_s, Some(n as u32), &mut rng)?;
            let ctx = SlotContext::new(&self.net, &self.combos, &real);
            let out = run_slot(&ctx, &opts);
            record.pinned_hit.push(out.typical_server.is_some());
            record.pinned_success.push(out.typical_success);
            record.pinned_distance.push(out.typical_distance);
        }
        Ok(record)
    }

    /// Pools replication records in the order given.
    pub fn reduce(&self, records: &[ReplicationRecord]) -> MonteCarloReport {
        reduce(&self.pop, self.net.lambda_u, records)
    }

    /// Sequential run over all replications.
    pub fn run(&self) -> Result<MonteCarloReport> {
        let records = (0..self.config.replications).map(|r| self.replicate(r)).collect::<Result<Vec<_>>>()?;
        Ok(self.reduce(&records))
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Pools replication records into estimates.
pub fn reduce(pop: &Popularity, lambda_u: f64, records: &[ReplicationRecord]) -> MonteCarloReport {
    let files = pop.len();
    let fues = column(records, |r| r.interior_fues as f64);
    let xi_n = (0..files).map(|n| ratio_estimate(&column(records, |r| r.active[n] as f64), &fues)).collect();
    let xi = ratio_estimate(&column(records, |r| r.active.iter().sum::<u64>() as f64), &fues);
    let activation_given_candidate = (0..files)
        .map(|n| ratio_estimate(&column(records, |r| r.active[n] as f64), &column(records, |r| r.candidates[n] as f64)))
        .collect();
    let sigma_n: Vec<Option<SimulationEstimate>> =
        (0..files).map(|n| mean_estimate(&column(records, |r| indicator(r.pinned_hit[n])))).collect();
    let coverage_n = (0..files)
        .map(|n| {
            ratio_estimate(
                &column(records, |r| indicator(r.pinned_success[n])),
                &column(records, |r| indicator(r.pinned_hit[n])),
            )
        })
        .collect();
    let success: Vec<(f64, SimulationEstimate)> = (0..files)
        .filter_map(|n| mean_estimate(&column(records, |r| indicator(r.pinned_success[n]))).map(|e| (pop.get(n), e)))
        .collect();
    let tau = if success.len() == files { weighted_sum(&success) } else { None };
    let tau_direct = mean_estimate(&column(records, |r| indicator(r.natural_success)));
    let throughput = tau.map(|t| t.scaled(lambda_u));
    MonteCarloReport {
        replications: records.len() as u64,
        xi_n,
        xi,
        activation_given_candidate,
        sigma_n,
        coverage_n,
        tau,
        tau_direct,
        throughput,
    }
}

/// Runs `replications` slots with the given configuration and pools them.
pub fn monte_carlo(
    net: &NetworkParams,
    scheme: Scheme,
    combos: &CombinationSet,
    pop: &Popularity,
    policy: &CachingPolicy,
    config: SimulationConfig,
) -> Result<MonteCarloReport> {
    MonteCarlo::new(net, scheme, combos.clone(), pop.clone(), policy.clone(), config)?.run()
}
