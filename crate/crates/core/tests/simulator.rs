use fogcache_core::analytics::{assoc_distance_pdf, ScdpModel};
use fogcache_core::content::*;
use fogcache_core::simulator::*;
use fogcache_core::{NetworkParams, QuadratureConfig, Scheme};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup() -> (NetworkParams, CombinationSet, Popularity, CachingPolicy) {
    (
        NetworkParams::default(),
        enumerate_combinations(5, 3).unwrap(),
        zipf_popularity(5, 1.0).unwrap(),
        uniform_policy(10).unwrap(),
    )
}

#[test]
fn point_counts_are_poisson() {
    let (net, _, pop, policy) = setup();
    let radius = 50.0;
    let mean = net.lambda_g * std::f64::consts::PI * radius * radius;
    let trials = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut total = 0usize;
    for _ in 0..trials {
        total += sample_network_in(&net, &pop, &policy, radius, None, &mut rng).unwrap().fue_points.len();
    }
    let sd = (mean / trials as f64).sqrt();
    assert!((total as f64 / trials as f64 - mean).abs() < 3.0 * sd);
}

#[test]
fn requests_follow_popularity() {
    let (net, _, pop, policy) = setup();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut counts = [0u64; 5];
    let mut total = 0u64;
    while total < 1_000_000 {
        let r = sample_network_in(&net, &pop, &policy, 250.0, None, &mut rng).unwrap();
        for &f in &r.cue_request {
            counts[f as usize] += 1;
        }
        total += r.cue_request.len() as u64;
    }
    for (n, &c) in counts.iter().enumerate() {
        let p = pop.get(n);
        let sd = (total as f64 * p * (1.0 - p)).sqrt();
        assert!((c as f64 - total as f64 * p).abs() < 3.0 * sd, "file {n}");
    }
}

#[test]
fn points_stay_in_disk() {
    let (net, _, pop, policy) = setup();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let r = sample_network(&net, &pop, &policy, &mut rng).unwrap();
    assert!(r.fue_points.iter().chain(&r.cue_points).all(|p| p[0].hypot(p[1]) <= net.r_s));
    assert!(r.fue_cache.iter().all(|&c| c < 10));
}

#[test]
fn same_seed_same_records() {
    let (net, combos, pop, policy) = setup();
    let cfg = SimulationConfig { replications: 3, master_seed: 42, ..Default::default() };
    let mc = MonteCarlo::new(&net, Scheme::Mrfs, combos, pop, policy, cfg).unwrap();
    let a: Vec<_> = (0..3).map(|r| mc.replicate(r).unwrap()).collect();
    let b: Vec<_> = (0..3).rev().map(|r| mc.replicate(r).unwrap()).collect();
    assert_eq!(a[0], b[2]);
    assert_eq!(a[2], b[0]);
    assert_eq!(mc.reduce(&a), mc.run().unwrap());
}

#[test]
fn zero_replications_rejected() {
    let (net, combos, pop, policy) = setup();
    let cfg = SimulationConfig { replications: 0, ..Default::default() };
    assert!(MonteCarlo::new(&net, Scheme::Rfs, combos, pop, policy, cfg).is_err());
}

#[test]
fn success_is_hit_without_sir_target_or_threshold() {
    let (_, combos, pop, policy) = setup();
    let net = NetworkParams { theta_u: 1e-12, i_th: 1e12, ..Default::default() };
    let cfg = SimulationConfig { replications: 4, master_seed: 3, ..Default::default() };
    let mc = MonteCarlo::new(&net, Scheme::Rfs, combos, pop, policy, cfg).unwrap();
    let records: Vec<_> = (0..4).map(|r| mc.replicate(r).unwrap()).collect();
    for r in &records {
        assert_eq!(r.pinned_hit, r.pinned_success);
        assert_eq!(r.natural_hit, r.natural_success);
    }
    let report = mc.reduce(&records);
    let tau = report.tau.unwrap().mean;
    let hit: f64 = (0..5).map(|n| pop_weight(n) * report.sigma_n[n].unwrap().mean).sum();
    assert!((tau - hit).abs() < 1e-12);
}

fn pop_weight(n: usize) -> f64 {
    zipf_popularity(5, 1.0).unwrap().get(n)
}

/// Association distances with the typical UE pinned to file 0, and the mean
/// number of active file-0 F-UEs within `R_d` of it.
fn association_sample(slots: usize, seed: u64) -> (Vec<f64>, f64) {
    // only F-UEs within R_d of the origin can serve, and their decisions
    // depend on nothing beyond R_d plus the sensing radius from them
    let (net, combos, pop, policy) = setup();
    let radius = 2.0 * net.r_d + sensing_radius(&net) + 1.0;
    let opts = SlotOptions { scheme: Scheme::Mrfs, participation: TypicalParticipation::SensingOnly, access: AccessRule::Opportunistic };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut distances = Vec::new();
    let mut servers = 0usize;
    for _ in 0..slots {
        let real = sample_network_in(&net, &pop, &policy, radius, Some(0), &mut rng).unwrap();
        let ctx = SlotContext::new(&net, &combos, &real);
        let out = run_slot(&ctx, &opts);
        if let Some(d) = out.typical_distance {
            distances.push(d);
        }
        servers += real
            .fue_points
            .iter()
            .enumerate()
            .filter(|(y, p)| out.fue_active[*y] && out.fue_candidate[*y] == Some(0) && p[0].hypot(p[1]) <= net.r_d)
            .count();
    }
    (distances, servers as f64 / slots as f64)
}

/// Per-bin probabilities of the association pdf at the density implied by
/// `mean_count` servers within range.
fn bin_probabilities(mean_count: f64, bins: usize) -> Vec<f64> {
    let net = NetworkParams::default();
    let lambda = mean_count / (std::f64::consts::PI * net.r_d * net.r_d);
    let dens = fogcache_core::analytics::DensityReport::from_file_densities(vec![lambda, 0.0, 0.0, 0.0, 0.0]);
    let width = net.r_d / bins as f64;
    (0..bins)
        .map(|b| {
            let (lo, hi) = (b as f64 * width, (b + 1) as f64 * width);
            fogcache_core::quadrature::integrate(
                |l| assoc_distance_pdf(0, l, &dens, &net).unwrap(),
                lo,
                hi,
                &QuadratureConfig::default(),
                "bin",
            )
            .unwrap()
            .value
        })
        .collect()
}

#[test]
fn association_distance_histogram() {
    // the pdf is evaluated at the simulated active density so that the test
    // checks the distance law rather than the activation probability
    let (distances, mean_count) = association_sample(2000, 24);
    let probs = bin_probabilities(mean_count, 10);
    let total = distances.len() as f64;
    for (b, p) in probs.iter().enumerate() {
        let (lo, hi) = (b as f64, b as f64 + 1.0);
        let observed = distances.iter().filter(|&&d| d >= lo && d < hi).count() as f64;
        let sd = (total * p * (1.0 - p)).sqrt();
        assert!((observed - total * p).abs() <= 3.0 * sd, "bin {b}: {observed} vs {}", total * p);
    }
}

#[test]
fn same_file_servers_cluster() {
    // F-UEs near each other share requesters, so active same-file F-UEs
    // cluster and the nearest one is closer than for a Poisson process of
    // equal density; a large sample resolves the shift
    let (distances, mean_count) = association_sample(40_000, 25);
    let probs = bin_probabilities(mean_count, 10);
    let poisson_mean: f64 = probs.iter().enumerate().map(|(b, p)| (b as f64 + 0.5) * p).sum();
    let observed_mean = distances.iter().map(|d| d.floor() + 0.5).sum::<f64>() / distances.len() as f64;
    assert!(observed_mean < poisson_mean, "{observed_mean} vs {poisson_mean}");
}

#[test]
fn pooled_activation_and_edge_effect() {
    let (net, combos, pop, policy) = setup();
    let model = ScdpModel::new(&net, Scheme::Mrfs, combos.clone(), pop.clone(), &QuadratureConfig::default()).unwrap();
    let xi = model.evaluate(&policy).unwrap().activation.xi_n;
    let cfg = SimulationConfig { replications: 60, master_seed: 9, ..Default::default() };
    let small = MonteCarlo::new(&net, Scheme::Mrfs, combos.clone(), pop.clone(), policy.clone(), cfg).unwrap();
    let records: Vec<_> = (0..cfg.replications).map(|r| small.replicate(r).unwrap()).collect();
    let a = small.reduce(&records);
    for n in 0..5 {
        let e = a.xi_n[n].unwrap();
        assert!(((e.mean - xi[n]) / xi[n]).abs() < 0.05 || (e.mean - xi[n]).abs() < 3.0 * e.std_error());
    }

    // replications are independent: the variance of batch means matches the
    // per-replication variance divided by the batch size
    let per_rep: Vec<f64> = records.iter().map(|r| r.active[0] as f64 / r.interior_fues as f64).collect();
    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
    };
    let batch: Vec<f64> = per_rep.chunks(5).map(|c| c.iter().sum::<f64>() / 5.0).collect();
    let ratio = var(&batch) * 5.0 / var(&per_rep);
    assert!((0.5..=2.0).contains(&ratio), "{ratio}");

    let wide_net = NetworkParams { r_s: 1000.0, ..net };
    let wide = MonteCarlo::new(&wide_net, Scheme::Mrfs, combos, pop, policy, SimulationConfig { replications: 60, master_seed: 10, ..Default::default() })
        .unwrap()
        .run()
        .unwrap();
    let (t1, t2) = (a.tau.unwrap(), wide.tau.unwrap());
    assert!((t1.mean - t2.mean).abs() <= t1.half_width_95.hypot(t2.half_width_95));
}

#[test]
fn cross_file_profile_is_thinned_near_requester() {
    let (net, combos, pop, policy) = setup();
    let edges: Vec<f64> = (0..=6).map(|k| k as f64).collect();
    let prof = radial_density_profile(&net, Scheme::Rfs, &combos, &pop, &policy, 0, 1, &edges, 20_000, 5).unwrap();
    assert!(prof[0].mean < 0.2 * prof[5].mean);
    assert!(prof.windows(2).take(3).all(|w| w[0].mean <= w[1].mean + w[1].half_width_95));
}
