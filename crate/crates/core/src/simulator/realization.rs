use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::content::{CachingPolicy, Popularity};
use crate::error::{invalid, Result};
use crate::math::{self, PI};
use crate::network::NetworkParams;

/// Identifier of the typical conventional UE in pair-keyed draws.
pub const TYPICAL_ID: u32 = u32::MAX;
const SELECTION_SALT: u64 = 0x5e1e_c7ed_f11e_5a17;
const THINNING_SALT: u64 = 0x7a1f_0ff5_ee5a_d001;

#[inline]
pub(crate) fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d1_049b_b133_111e);
    z ^ (z >> 31)
}

/// Uniform in the open interval `(0, 1)`.
#[inline]
fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// One slot of the network: both point processes in the disk, caches,
/// requests, and the key from which all per-pair randomness is derived.
///
/// The typical conventional UE sits at the origin and is not part of
/// `cue_points`; its request is `typical_request`.
#[derive(Debug, Clone)]
pub struct NetworkRealization {
    pub radius: f64,
    pub fue_points: Vec<[f64; 2]>,
    pub fue_cache: Vec<u32>,
    pub cue_points: Vec<[f64; 2]>,
    pub cue_request: Vec<u32>,
    pub typical_request: u32,
    pub slot_key: u64,
}

impl NetworkRealization {
    /// Unit-mean exponential fading between F-UE `fue` and C-UE `cue`.
    ///
    /// A pure function of the slot and the pair, so sensing and downlink
    /// interference see the same coefficient.
    pub fn link_fading(&self, fue: u32, cue: u32) -> f64 {
        let key = (u64::from(fue) << 32) | u64::from(cue);
        -math::ln(open_unit(splitmix(self.slot_key ^ splitmix(key))))
    }

    /// Uniform draw used by F-UE `fue` to pick among tied or eligible files.
    pub fn selection_draw(&self, fue: u32) -> f64 {
        open_unit(splitmix(self.slot_key ^ splitmix(u64::from(fue) ^ SELECTION_SALT)))
    }

    /// Uniform draw for the independent thinning of the unsensed baseline.
    pub fn thinning_draw(&self, fue: u32) -> f64 {
        open_unit(splitmix(self.slot_key ^ splitmix(u64::from(fue) ^ THINNING_SALT)))
    }

    /// Fresh fading from the serving F-UE to the typical UE.
    pub fn server_fading(&self, fue: u32) -> f64 {
        // the server never senses the typical UE, so its pair coefficient is
        // unused before the downlink and therefore independent
        self.link_fading(fue, TYPICAL_ID)
    }
}

fn uniform_in_disk<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> [f64; 2] {
    let r = radius * math::sqrt(rng.random::<f64>());
    let phi = 2.0 * PI * rng.random::<f64>();
    [r * math::cos(phi), r * math::sin(phi)]
}

fn poisson_count<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> Result<usize> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|_| invalid("density", alloc::format!("bad Poisson mean {mean}")))?;
    Ok(dist.sample(rng) as usize)
}

/// Samples one slot in a disk of radius `radius` around the typical UE.
///
/// `typical_request` pins the typical UE's file; `None` draws it from the
/// popularity like every other request.
pub fn sample_network_in<R: Rng + ?Sized>(
    net: &NetworkParams,
    pop: &Popularity,
    policy: &CachingPolicy,
    radius: f64,
    typical_request: Option<u32>,
    rng: &mut R,
) -> Result<NetworkRealization> {
    let area = PI * radius * radius;
    let caches = policy.sampler();
    let requests = crate::content::Categorical::new(pop.probs());
    let n_fue = poisson_count(rng, net.lambda_g * area)?;
    let mut fue_points = Vec::with_capacity(n_fue);
    let mut fue_cache = Vec::with_capacity(n_fue);
    for _ in 0..n_fue {
        fue_points.push(uniform_in_disk(rng, radius));
        fue_cache.push(caches.sample(rng.random()) as u32);
    }
    let n_cue = poisson_count(rng, net.lambda_u * area)?;
    let mut cue_points = Vec::with_capacity(n_cue);
    let mut cue_request = Vec::with_capacity(n_cue);
    for _ in 0..n_cue {
        cue_points.push(uniform_in_disk(rng, radius));
        cue_request.push(requests.sample(rng.random()) as u32);
    }
    let drawn = requests.sample(rng.random()) as u32;
    let slot_key = rng.random::<u64>();
    Ok(NetworkRealization {
        radius,
        fue_points,
        fue_cache,
        cue_points,
        cue_request,
        typical_request: typical_request.unwrap_or(drawn),
        slot_key,
    })
}

/// Samples one slot over the full simulation disk of radius `R_s`.
pub fn sample_network<R: Rng + ?Sized>(
    net: &NetworkParams,
    pop: &Popularity,
    policy: &CachingPolicy,
    rng: &mut R,
) -> Result<NetworkRealization> {
    sample_network_in(net, pop, policy, net.r_s, None, rng)
}

/// Bucket index of points on a square grid, for fixed-radius neighbour
/// queries.
#[derive(Debug, Clone)]
pub struct PointGrid {
    origin: f64,
    cell: f64,
    side: usize,
    starts: Vec<u32>,
    members: Vec<u32>,
}

impl PointGrid {
    pub fn new(points: &[[f64; 2]], radius: f64, cell: f64) -> Self {
        let side = ((2.0 * radius / cell) as usize + 1).max(1);
        let mut grid = Self { origin: -radius, cell, side, starts: alloc::vec![0; side * side + 1], members: Vec::new() };
        let cells: Vec<usize> = points.iter().map(|p| grid.cell_of(p)).collect();
        for &c in &cells {
            grid.starts[c + 1] += 1;
        }
        for c in 0..side * side {
            grid.starts[c + 1] += grid.starts[c];
        }
        let mut fill = grid.starts.clone();
        grid.members = alloc::vec![0; points.len()];
        for (i, &c) in cells.iter().enumerate() {
            grid.members[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        grid
    }

    fn coord(&self, x: f64) -> usize {
        let k = math::floor((x - self.origin) / self.cell);
        if k < 0.0 {
            0
        } else {
            (k as usize).min(self.side - 1)
        }
    }

    fn cell_of(&self, p: &[f64; 2]) -> usize {
        self.coord(p[1]) * self.side + self.coord(p[0])
    }

    /// Calls `f(index, squared distance)` for every point within `range` of `at`.
    pub fn for_each_within<F: FnMut(u32, f64)>(&self, points: &[[f64; 2]], at: [f64; 2], range: f64, mut f: F) {
        let (x0, x1) = (self.coord(at[0] - range), self.coord(at[0] + range));
        let (y0, y1) = (self.coord(at[1] - range), self.coord(at[1] + range));
        let r2 = range * range;
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                let c = cy * self.side + cx;
                for &m in &self.members[self.starts[c] as usize..self.starts[c + 1] as usize] {
                    let p = points[m as usize];
                    let (dx, dy) = (p[0] - at[0], p[1] - at[1]);
                    let d2 = dx * dx + dy * dy;
                    if d2 <= r2 {
                        f(m, d2);
                    }
                }
            }
        }
    }
}
