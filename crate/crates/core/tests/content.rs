use fogcache_core::content::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn zipf_examples() {
    let p = zipf_popularity(5, 0.0).unwrap();
    assert!(p.probs().iter().all(|&x| (x - 0.2).abs() < 1e-15));
    let h5 = 137.0 / 60.0;
    let p = zipf_popularity(5, 1.0).unwrap();
    for (n, &x) in p.probs().iter().enumerate() {
        assert!((x - 1.0 / ((n + 1) as f64 * h5)).abs() < 1e-15);
    }
    assert_eq!(zipf_popularity(1, 2.7).unwrap().probs(), &[1.0]);
    assert!(zipf_popularity(0, 1.0).is_err());
    assert!(zipf_popularity(3, -0.1).is_err());
    assert!(zipf_popularity(3, f64::NAN).is_err());
}

#[test]
fn combination_examples() {
    let c = enumerate_combinations(5, 3).unwrap();
    assert_eq!(c.len(), 10);
    assert_eq!(c.combo(0), &[0, 1, 2]);
    assert_eq!(c.combo(9), &[2, 3, 4]);
    assert_eq!(enumerate_combinations(3, 3).unwrap().len(), 1);
    let singles = enumerate_combinations(4, 1).unwrap();
    assert_eq!(singles.iter().map(|s| s[0]).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    assert!(enumerate_combinations(3, 4).is_err());
    assert!(enumerate_combinations(40, 20).is_err());
    assert!(enumerate_combinations_capped(10, 5, 100).is_err());
}

#[test]
fn policies() {
    assert!(uniform_policy(10).unwrap().weights().iter().all(|&c| c == 0.1));
    assert_eq!(uniform_policy(1).unwrap().weights(), &[1.0]);
    assert!(uniform_policy(0).is_err());
    let combos = enumerate_combinations(5, 3).unwrap();
    let mpc = mpc_policy(&combos, &zipf_popularity(5, 1.0).unwrap()).unwrap();
    assert_eq!(mpc.get(0), 1.0);
    let flat = mpc_policy(&combos, &zipf_popularity(5, 0.0).unwrap()).unwrap();
    assert_eq!(flat.get(0), 1.0);
    assert!(CachingPolicy::new(vec![0.5, 0.6]).is_err());
    assert!(CachingPolicy::new(vec![-0.1, 1.1]).is_err());
}

#[test]
fn cache_sampling() {
    assert_eq!(sample_cache(&uniform_policy(1).unwrap(), 0.999), 0);
    assert_eq!(sample_cache(&uniform_policy(2).unwrap(), 0.75), 1);

    let policy = CachingPolicy::new(vec![0.1, 0.0, 0.45, 0.05, 0.4]).unwrap();
    let sampler = policy.sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = 1_000_000;
    let mut hits = [0u64; 5];
    for _ in 0..draws {
        let u: f64 = rng.random();
        let i = sampler.sample(u);
        assert_eq!(i, sample_cache(&policy, u));
        hits[i] += 1;
    }
    for (i, &h) in hits.iter().enumerate() {
        let c = policy.get(i);
        let sd = (draws as f64 * c * (1.0 - c)).sqrt();
        assert!((h as f64 - draws as f64 * c).abs() <= 3.0 * sd.max(1e-9), "entry {i}: {h}");
    }
}

#[test]
fn seeded_sampling_is_deterministic() {
    let policy = uniform_policy(10).unwrap();
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        (0..100).map(|_| sample_cache(&policy, rng.random())).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

proptest! {
    #[test]
    fn popularity_sums_to_one(n in 1usize..2000, gamma in 0.0f64..5.0) {
        let p = zipf_popularity(n, gamma).unwrap();
        let total: f64 = p.probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        if gamma > 0.0 {
            prop_assert!(p.probs().windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn each_file_in_binomial_many_combinations(n in 1usize..12, k_frac in 0.0f64..1.0) {
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        let combos = enumerate_combinations(n, k).unwrap();
        prop_assert_eq!(combos.len() as u128, binomial(n, k));
        for f in 0..n {
            prop_assert_eq!(combos.containing(f).len() as u128, binomial(n - 1, k - 1));
        }
        for w in 0..combos.len().saturating_sub(1) {
            prop_assert!(combos.combo(w) < combos.combo(w + 1));
        }
    }
}

#[test]
fn large_library_sums_to_one() {
    for gamma in [0.0, 0.8, 2.5, 5.0] {
        let p = zipf_popularity(10_000, gamma).unwrap();
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
