use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::estimate::{mean_estimate, SimulationEstimate};
use super::realization::{sample_network_in, splitmix};
use super::slot::{run_slot, sensing_radius, AccessRule, SlotContext, SlotOptions, TypicalParticipation};
use crate::content::{CachingPolicy, CombinationSet, Popularity, Scheme};
use crate::error::{invalid, Result};
use crate::math::PI;
use crate::network::NetworkParams;

const PROFILE_STREAM: u64 = 0x9f0f_11e5;

/// Density of active file-`m` F-UEs in annuli around a typical UE that
/// requests file `n`.
///
/// Only F-UEs within the outer edge are counted, and their decisions depend
/// on nothing beyond `R_d` plus the sensing radius from them, so each slot is
/// simulated in a disk just large enough to hold that neighbourhood.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    net: NetworkParams,
    scheme: Scheme,
    combos: CombinationSet,
    pop: Popularity,
    policy: CachingPolicy,
    requested: u32,
    counted: u32,
    edges: Vec<f64>,
    radius: f64,
    seed: u64,
    participation: TypicalParticipation,
}

impl RadialProfile {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        net: &NetworkParams,
        scheme: Scheme,
        combos: CombinationSet,
        pop: Popularity,
        policy: CachingPolicy,
        requested: usize,
        counted: usize,
        edges: Vec<f64>,
        seed: u64,
        participation: TypicalParticipation,
    ) -> Result<Self> {
        net.validate()?;
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) || edges[0] < 0.0 {
            return Err(invalid("bin edges", "need at least two increasing, non-negative edges"));
        }
        let outer = edges[edges.len() - 1];
        if outer > net.r_s / 2.0 {
            return Err(invalid("bin edges", "outer edge beyond half the region radius"));
        }
        if requested >= pop.len() || counted >= pop.len() {
            return Err(invalid("file", "index beyond the library"));
        }
        let radius = (outer + net.r_d.max(sensing_radius(net))) * 1.05;
        Ok(Self {
            net: *net,
            scheme,
            combos,
            pop,
            policy,
            requested: requested as u32,
            counted: counted as u32,
            edges,
            radius,
            seed,
            participation,
        })
    }

    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    /// Active file-`m` F-UE counts per annulus in replication `rep`.
    pub fn replicate(&self, rep: u64) -> Result<Vec<u32>> {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(self.seed ^ splitmix(PROFILE_STREAM)));
        rng.set_stream(rep);
        let real = sample_network_in(&self.net, &self.pop, &self.policy, self.radius, Some(self.requested), &mut rng)?;
        let ctx = SlotContext::new(&self.net, &self.combos, &real);
        let opts = SlotOptions { scheme: self.scheme, participation: self.participation, access: AccessRule::Opportunistic };
        let out = run_slot(&ctx, &opts);
        let mut counts = alloc::vec![0u32; self.bins()];
        for (y, p) in real.fue_points.iter().enumerate() {
            if !out.fue_active[y] || out.fue_candidate[y] != Some(self.counted) {
                continue;
            }
            let d = crate::math::sqrt(p[0] * p[0] + p[1] * p[1]);
            let bin = self.edges.partition_point(|&e| e <= d);
            if bin >= 1 && bin <= counts.len() {
                counts[bin - 1] += 1;
            }
        }
        Ok(counts)
    }

    /// Per-annulus density estimates from per-replication counts.
    pub fn reduce(&self, counts: &[Vec<u32>]) -> Vec<SimulationEstimate> {
        (0..self.bins())
            .map(|b| {
                let area = PI * (self.edges[b + 1] * self.edges[b + 1] - self.edges[b] * self.edges[b]);
                let per_rep: Vec<f64> = counts.iter().map(|c| f64::from(c[b]) / area).collect();
                let mut e = mean_estimate(&per_rep).unwrap_or(SimulationEstimate {
                    mean: f64::NAN,
                    half_width_95: f64::INFINITY,
                    replications: 0,
                    conditioning_count: 0,
                });
                e.conditioning_count = counts.iter().map(|c| u64::from(c[b])).sum();
                e
            })
            .collect()
    }

    pub fn run(&self, replications: u64) -> Result<Vec<SimulationEstimate>> {
        let counts = (0..replications).map(|r| self.replicate(r)).collect::<Result<Vec<_>>>()?;
        Ok(self.reduce(&counts))
    }
}

/// Sequential radial profile; see [`RadialProfile`].
#[allow(clippy::too_many_arguments)]
pub fn radial_density_profile(
    net: &NetworkParams,
    scheme: Scheme,
    combos: &CombinationSet,
    pop: &Popularity,
    policy: &CachingPolicy,
    requested: usize,
    counted: usize,
    edges: &[f64],
    replications: u64,
    seed: u64,
) -> Result<Vec<SimulationEstimate>> {
    RadialProfile::new(
        net,
        scheme,
        combos.clone(),
        pop.clone(),
        policy.clone(),
        requested,
        counted,
        edges.to_vec(),
        seed,
        TypicalParticipation::default(),
    )?
    .run(replications)
}
