use alloc::vec::Vec;

use super::realization::{NetworkRealization, PointGrid, TYPICAL_ID};
use crate::content::{CombinationSet, Scheme};
use crate::math;
use crate::network::NetworkParams;

/// How the typical UE takes part in the protocol of the other nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TypicalParticipation {
    /// Its beacon is sensed by F-UEs with another candidate, but its request
    /// does not enter any F-UE's candidate selection.
    #[default]
    SensingOnly,
    /// Its request also counts toward candidate selection of nearby F-UEs.
    Full,
}

/// Channel access rule of F-UEs holding a candidate.
#[derive(Debug, Clone, PartialEq)]
pub enum AccessRule {
    /// Threshold test on the strongest other-file request beacon.
    Opportunistic,
    /// No sensing; each candidate transmits independently with the given
    /// per-file probability. Used to compare both rules at equal densities.
    Thinned(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct SlotOptions {
    pub scheme: Scheme,
    pub participation: TypicalParticipation,
    pub access: AccessRule,
}

/// Per-F-UE decisions and the fate of the typical UE in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub fue_candidate: Vec<Option<u32>>,
    pub fue_active: Vec<bool>,
    pub typical_server: Option<usize>,
    pub typical_distance: Option<f64>,
    pub typical_sir: Option<f64>,
    pub typical_success: bool,
}

/// Distance beyond which a single beacon exceeds the threshold with
/// probability below `1e-12`, i.e. `exp(-I_th D^alpha / P_u) <= 1e-12`.
pub fn sensing_radius(net: &NetworkParams) -> f64 {
    math::powf(-math::ln(1e-12) * net.p_u / net.i_th, 1.0 / net.alpha)
}

/// Spatial index and protocol constants shared by every F-UE in a slot.
pub struct SlotContext<'a> {
    pub net: &'a NetworkParams,
    pub combos: &'a CombinationSet,
    pub realization: &'a NetworkRealization,
    grid: PointGrid,
    sensing_range: f64,
}

impl<'a> SlotContext<'a> {
    pub fn new(net: &'a NetworkParams, combos: &'a CombinationSet, realization: &'a NetworkRealization) -> Self {
        let sensing_range = sensing_radius(net);
        let grid = PointGrid::new(&realization.cue_points, realization.radius, net.r_d.max(sensing_range));
        Self { net, combos, realization, grid, sensing_range }
    }
}

/// Candidate file of F-UE `fue`, or `None` when none of its cached files is
/// requested within `R_d`.
pub fn select_candidate(ctx: &SlotContext<'_>, fue: usize, scheme: Scheme, participation: TypicalParticipation) -> Option<u32> {
    let real = ctx.realization;
    let cached = ctx.combos.combo(real.fue_cache[fue] as usize);
    let mut counts = [0u32; 64];
    let counts = &mut counts[..cached.len().min(64)];
    let at = real.fue_points[fue];
    let mut add = |file: u32| {
        if let Some(slot) = cached.iter().position(|&f| f == file) {
            if slot < counts.len() {
                counts[slot] += 1;
            }
        }
    };
    ctx.grid.for_each_within(&real.cue_points, at, ctx.net.r_d, |j, _| add(real.cue_request[j as usize]));
    if participation == TypicalParticipation::Full && at[0] * at[0] + at[1] * at[1] <= ctx.net.r_d * ctx.net.r_d {
        add(real.typical_request);
    }
    let threshold = match scheme {
        Scheme::Rfs => 1,
        Scheme::Mrfs => *counts.iter().max()?,
    };
    if threshold == 0 {
        return None;
    }
    let eligible = counts.iter().filter(|&&c| c >= threshold && c > 0).count();
    if eligible == 0 {
        return None;
    }
    let pick = ((real.selection_draw(fue as u32) * eligible as f64) as usize).min(eligible - 1);
    counts.iter().enumerate().filter(|&(_, &c)| c >= threshold && c > 0).nth(pick).map(|(slot, _)| cached[slot])
}

/// Threshold test of F-UE `fue` holding candidate `n`: every beacon from a
/// UE requesting another file, the typical UE included, must arrive at or
/// below `I_th`.
pub fn sense_osa(ctx: &SlotContext<'_>, fue: usize, n: u32) -> bool {
    let real = ctx.realization;
    let net = ctx.net;
    let at = real.fue_points[fue];
    let half_alpha = net.alpha / 2.0;
    let loud = |fading: f64, d2: f64| net.p_u * fading * math::powf(d2, -half_alpha) > net.i_th;
    if real.typical_request != n {
        let d2 = at[0] * at[0] + at[1] * at[1];
        if loud(real.link_fading(fue as u32, TYPICAL_ID), d2) {
            return false;
        }
    }
    let mut quiet = true;
    ctx.grid.for_each_within(&real.cue_points, at, ctx.sensing_range, |j, d2| {
        if quiet && real.cue_request[j as usize] != n && loud(real.link_fading(fue as u32, j), d2) {
            quiet = false;
        }
    });
    quiet
}

/// Runs the protocol for every F-UE and delivers to the typical UE.
pub fn run_slot(ctx: &SlotContext<'_>, opts: &SlotOptions) -> SlotOutcome {
    let real = ctx.realization;
    let net = ctx.net;
    let count = real.fue_points.len();
    let mut fue_candidate = Vec::with_capacity(count);
    let mut fue_active = Vec::with_capacity(count);
    for y in 0..count {
        let cand = select_candidate(ctx, y, opts.scheme, opts.participation);
        let active = match (cand, &opts.access) {
            (None, _) => false,
            (Some(n), AccessRule::Opportunistic) => sense_osa(ctx, y, n),
            (Some(n), AccessRule::Thinned(prob)) => real.thinning_draw(y as u32) < prob[n as usize],
        };
        fue_candidate.push(cand);
        fue_active.push(active);
    }

    let want = real.typical_request;
    let r_d2 = net.r_d * net.r_d;
    let mut server: Option<(usize, f64)> = None;
    for y in 0..count {
        if fue_active[y] && fue_candidate[y] == Some(want) {
            let p = real.fue_points[y];
            let d2 = p[0] * p[0] + p[1] * p[1];
            if d2 <= r_d2 && server.is_none_or(|(_, best)| d2 < best) {
                server = Some((y, d2));
            }
        }
    }
    let Some((s, d2)) = server else {
        return SlotOutcome {
            fue_candidate,
            fue_active,
            typical_server: None,
            typical_distance: None,
            typical_sir: None,
            typical_success: false,
        };
    };
    let half_alpha = net.alpha / 2.0;
    let signal = net.p_g * real.server_fading(s as u32) * math::powf(d2, -half_alpha);
    let mut interference = 0.0;
    for y in 0..count {
        if y != s && fue_active[y] {
            let p = real.fue_points[y];
            let e2 = p[0] * p[0] + p[1] * p[1];
            interference += net.p_g * real.link_fading(y as u32, TYPICAL_ID) * math::powf(e2, -half_alpha);
        }
    }
    let sir = if interference > 0.0 { signal / interference } else { f64::INFINITY };
    SlotOutcome {
        fue_candidate,
        fue_active,
        typical_server: Some(s),
        typical_distance: Some(math::sqrt(d2)),
        typical_sir: Some(sir),
        typical_success: sir >= net.theta_u,
    }
}
