//! File library, Zipf popularity, cache combinations and probabilistic
//! caching placement.
//!
//! Files and combinations are indexed from zero throughout the crate. Output
//! formats add one when they print a file index.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math;

/// Default upper bound on the number of cache combinations `C(N, K)`.
pub const DEFAULT_COMBINATION_CAP: u128 = 1_000_000;

/// Candidate-file selection rule applied by each fog UE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Uniform choice among the cached files that are requested nearby.
    Rfs,
    /// The cached file with the most nearby requests, ties broken uniformly.
    Mrfs,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Rfs => "rfs",
            Scheme::Mrfs => "mrfs",
        }
    }
}

impl core::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rfs" | "RFS" => Ok(Scheme::Rfs),
            "mrfs" | "MRFS" => Ok(Scheme::Mrfs),
            other => Err(invalid("scheme", alloc::format!("expected rfs or mrfs, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContentParams {
    /// Library size.
    pub library_size: usize,
    /// Files cached per fog UE.
    pub cache_size: usize,
    /// Zipf exponent.
    pub gamma: f64,
    pub scheme: Scheme,
}

impl ContentParams {
    pub fn validate(&self) -> Result<()> {
        if self.library_size == 0 {
            return Err(invalid("content.n", "library must hold at least one file"));
        }
        if self.cache_size == 0 || self.cache_size > self.library_size {
            return Err(invalid(
                "content.k",
                alloc::format!("need 1 <= K <= N, got K = {} with N = {}", self.cache_size, self.library_size),
            ));
        }
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(invalid("content.gamma", alloc::format!("need a finite gamma >= 0, got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Request probabilities `p_n` over the library.
#[derive(Debug, Clone, PartialEq)]
pub struct Popularity {
    probs: Vec<f64>,
}

impl Popularity {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, n: usize) -> f64 {
        self.probs[n]
    }

    /// Builds a popularity vector from arbitrary non-negative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("popularity", "empty library"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("popularity", "weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(invalid("popularity", "weights sum to zero"));
        }
        let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        // second pass absorbs the rounding left by the first division
        let drift: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= drift;
        }
        Ok(Self { probs })
    }
}

/// Zipf popularity `p_n = n^-gamma / sum_j j^-gamma` for `n = 1..=N`.
pub fn zipf_popularity(library_size: usize, gamma: f64) -> Result<Popularity> {
    if library_size == 0 {
        return Err(invalid("content.n", "library must hold at least one file"));
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(invalid("content.gamma", alloc::format!("need a finite gamma >= 0, got {gamma}")));
    }
    let weights: Vec<f64> = (1..=library_size).map(|n| math::powf(n as f64, -gamma)).collect();
    Popularity::from_weights(&weights)
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        let Some(next) = acc.checked_mul((n - i) as u128) else {
            return u128::MAX;
        };
        acc = next / (i as u128 + 1);
    }
    acc
}

/// All `K`-subsets of the library in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombinationSet {
    library_size: usize,
    cache_size: usize,
    files: Vec<u32>,
}

impl CombinationSet {
    pub fn len(&self) -> usize {
        self.files.len() / self.cache_size
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn library_size(&self) -> usize {
        self.library_size
    }

    pub fn cache_size(&self) -> usize {
        self.cache_size
    }

    /// Files of combination `i`, sorted ascending.
    pub fn combo(&self, i: usize) -> &[u32] {
        &self.files[i * self.cache_size..(i + 1) * self.cache_size]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> + '_ {
        self.files.chunks_exact(self.cache_size)
    }

    pub fn contains(&self, i: usize, file: usize) -> bool {
        self.combo(i).binary_search(&(file as u32)).is_ok()
    }

    /// Indices of the combinations that contain `file`.
    pub fn containing(&self, file: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.contains(i, file)).collect()
    }
}

pub fn enumerate_combinations(library_size: usize, cache_size: usize) -> Result<CombinationSet> {
    enumerate_combinations_capped(library_size, cache_size, DEFAULT_COMBINATION_CAP)
}

pub fn enumerate_combinations_capped(library_size: usize, cache_size: usize, cap: u128) -> Result<CombinationSet> {
    if library_size == 0 {
        return Err(invalid("content.n", "library must hold at least one file"));
    }
    if cache_size == 0 || cache_size > library_size {
        return Err(invalid(
            "content.k",
            alloc::format!("need 1 <= K <= N, got K = {cache_size} with N = {library_size}"),
        ));
    }
    let count = binomial(library_size, cache_size);
    if count > cap {
        return Err(Error::TooManyCombinations { n: library_size, k: cache_size, count, cap });
    }
    let mut files = Vec::with_capacity(count as usize * cache_size);
    let mut current: Vec<u32> = (0..cache_size as u32).collect();
    loop {
        files.extend_from_slice(&current);
        // rightmost position that can still be advanced
        let Some(pos) = (0..cache_size).rev().find(|&p| (current[p] as usize) < library_size - cache_size + p) else {
            break;
        };
        current[pos] += 1;
        for q in pos + 1..cache_size {
            current[q] = current[q - 1] + 1;
        }
    }
    Ok(CombinationSet { library_size, cache_size, files })
}

/// Probability of caching each combination.
#[derive(Debug, Clone, PartialEq)]
pub struct CachingPolicy {
    weights: Vec<f64>,
}

impl CachingPolicy {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("policy", "need at least one combination"));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0 || **w > 1.0) {
            return Err(invalid("policy", alloc::format!("entry {w} outside [0, 1]")));
        }
        let total: f64 = weights.iter().sum();
        if math::abs(total - 1.0) > Self::SUM_TOLERANCE {
            return Err(invalid("policy", alloc::format!("entries sum to {total}, expected 1")));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn sampler(&self) -> Categorical {
        Categorical::new(&self.weights)
    }
}

pub fn uniform_policy(combinations: usize) -> Result<CachingPolicy> {
    if combinations == 0 {
        return Err(invalid("policy", "need at least one combination"));
    }
    CachingPolicy::new(alloc::vec![1.0 / combinations as f64; combinations])
}

/// Deterministic placement of the combination with the largest total
/// popularity. Ties go to the lexicographically first combination.
pub fn mpc_policy(combos: &CombinationSet, pop: &Popularity) -> Result<CachingPolicy> {
    if pop.len() != combos.library_size() {
        return Err(invalid("popularity", "length differs from the library size"));
    }
    let mut best = 0;
    let mut best_mass = f64::NEG_INFINITY;
    for (i, combo) in combos.iter().enumerate() {
        let mass: f64 = combo.iter().map(|&f| pop.get(f as usize)).sum();
        if mass > best_mass {
            best = i;
            best_mass = mass;
        }
    }
    let mut weights = alloc::vec![0.0; combos.len()];
    weights[best] = 1.0;
    CachingPolicy::new(weights)
}

/// Inverse-CDF draw of a combination index from a uniform `draw` in `[0, 1)`.
pub fn sample_cache(policy: &CachingPolicy, draw: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in policy.weights().iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
        }
        acc += w;
        if draw < acc {
            return i;
        }
    }
    last_positive
}

/// Precomputed inverse-CDF sampler over a finite set of weights.
#[derive(Debug, Clone)]
pub struct Categorical {
    cdf: Vec<f64>,
    last_positive: usize,
}

impl Categorical {
    pub fn new(weights: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        let last_positive = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        Self { cdf, last_positive }
    }

    /// Same indexing rule as [`sample_cache`]: first `i` with `draw < cdf_i`.
    pub fn sample(&self, draw: f64) -> usize {
        let i = self.cdf.partition_point(|&c| c <= draw);
        if i >= self.cdf.len() {
            self.last_positive
        } else {
            i
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zipf_uniform_and_harmonic() {
        let p = zipf_popularity(5, 0.0).unwrap();
        for &x in p.probs() {
            assert!((x - 0.2).abs() < 1e-15);
        }
        // H_5 = 137/60
        let p = zipf_popularity(5, 1.0).unwrap();
        let expect = [60.0 / 137.0, 30.0 / 137.0, 20.0 / 137.0, 15.0 / 137.0, 12.0 / 137.0];
        for (a, b) in p.probs().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((p.get(0) - 0.437956).abs() < 1e-6);
        assert_eq!(zipf_popularity(1, 3.0).unwrap().probs(), &[1.0]);
    }

    #[test]
    fn zipf_rejects_bad_input() {
        assert!(zipf_popularity(0, 1.0).is_err());
        assert!(zipf_popularity(3, -0.1).is_err());
        assert!(zipf_popularity(3, f64::NAN).is_err());
        assert!(zipf_popularity(3, f64::INFINITY).is_err());
    }

    #[test]
    fn combinations_small_cases() {
        let c = enumerate_combinations(3, 3).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.combo(0), &[0, 1, 2]);

        let c = enumerate_combinations(5, 3).unwrap();
        assert_eq!(c.len(), 10);
        assert_eq!(c.combo(0), &[0, 1, 2]);
        assert_eq!(c.combo(9), &[2, 3, 4]);

        let c = enumerate_combinations(4, 1).unwrap();
        let all: Vec<&[u32]> = c.iter().collect();
        assert_eq!(all, vec![&[0u32][..], &[1], &[2], &[3]]);
    }

    #[test]
    fn combinations_errors() {
        assert!(matches!(enumerate_combinations(3, 4), Err(Error::InvalidParameter { .. })));
        assert!(matches!(enumerate_combinations(3, 0), Err(Error::InvalidParameter { .. })));
        assert!(matches!(enumerate_combinations(40, 20), Err(Error::TooManyCombinations { .. })));
        assert!(matches!(
            enumerate_combinations_capped(5, 3, 9),
            Err(Error::TooManyCombinations { count: 10, .. })
        ));
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 3), 10);
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(40, 20), 137_846_528_820);
        assert_eq!(binomial(3, 4), 0);
    }

    #[test]
    fn uniform_policies() {
        assert_eq!(uniform_policy(1).unwrap().weights(), &[1.0]);
        assert_eq!(uniform_policy(4).unwrap().weights(), &[0.25; 4]);
        assert!(uniform_policy(10).unwrap().weights().iter().all(|&w| (w - 0.1).abs() < 1e-16));
        assert!(uniform_policy(0).is_err());
    }

    #[test]
    fn mpc_picks_top_k() {
        let combos = enumerate_combinations(5, 3).unwrap();
        let pop = zipf_popularity(5, 1.0).unwrap();
        let c = mpc_policy(&combos, &pop).unwrap();
        assert_eq!(c.get(0), 1.0);
        assert_eq!(c.weights().iter().sum::<f64>(), 1.0);

        // uniform popularity: first combination wins the tie
        let pop = zipf_popularity(5, 0.0).unwrap();
        assert_eq!(mpc_policy(&combos, &pop).unwrap().get(0), 1.0);

        let combos = enumerate_combinations(4, 4).unwrap();
        let pop = zipf_popularity(4, 1.0).unwrap();
        assert_eq!(mpc_policy(&combos, &pop).unwrap().weights(), &[1.0]);
    }

    #[test]
    fn policy_validation() {
        assert!(CachingPolicy::new(vec![0.5, 0.6]).is_err());
        assert!(CachingPolicy::new(vec![-0.1, 1.1]).is_err());
        assert!(CachingPolicy::new(vec![]).is_err());
        assert!(CachingPolicy::new(vec![0.3, 0.7]).is_ok());
    }

    #[test]
    fn sample_cache_inverse_cdf() {
        let one = CachingPolicy::new(vec![1.0]).unwrap();
        assert_eq!(sample_cache(&one, 0.0), 0);
        assert_eq!(sample_cache(&one, 0.999_999), 0);
        let half = CachingPolicy::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(sample_cache(&half, 0.75), 1);
        assert_eq!(sample_cache(&half, 0.25), 0);
        let gap = CachingPolicy::new(vec![0.5, 0.0, 0.5]).unwrap();
        assert_eq!(sample_cache(&gap, 0.5), 2);
        assert_eq!(gap.sampler().sample(0.5), 2);
    }

    #[test]
    fn each_file_in_binomial_many_combos() {
        let combos = enumerate_combinations(7, 3).unwrap();
        for n in 0..7 {
            assert_eq!(combos.containing(n).len() as u128, binomial(6, 2));
        }
    }
}
