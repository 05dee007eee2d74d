//! Candidate-selection probabilities under RFS and MRFS, and the OSA
//! probability of a candidate.
//!
//! Both selection probabilities are linear in the caching probability `c_i`.
//! The `*_weight` functions return the `c_i`-free coefficient; the `zeta_*`
//! functions multiply it back in.

use alloc::vec::Vec;

use crate::content::{CachingPolicy, CombinationSet, Popularity};
use crate::error::{Error, Result};
use crate::math::{self, PI};
use crate::network::NetworkParams;
use crate::quadrature::QuadratureConfig;

/// Hard ceiling on the number of terms in the MRFS tie sum.
pub const MRFS_MAX_TERMS: usize = 10_000;

fn check_indices(combos: &CombinationSet, i: usize, n: usize) -> Result<()> {
    if i >= combos.len() {
        return Err(Error::IndexOutOfRange { what: "combination", index: i, len: combos.len() });
    }
    if n >= combos.library_size() {
        return Err(Error::IndexOutOfRange { what: "file", index: n, len: combos.library_size() });
    }
    Ok(())
}

/// Coefficients of `prod_m (absent_m + present_m * z)`, i.e. entry `q` is the
/// sum over all `q`-subsets of "present" factors times the complementary
/// "absent" factors.
fn subset_size_sums(present: &[f64], absent: &[f64]) -> Vec<f64> {
    let mut coeffs = alloc::vec![0.0; present.len() + 1];
    coeffs[0] = 1.0;
    for (m, (&x, &y)) in present.iter().zip(absent).enumerate() {
        for q in (0..=m + 1).rev() {
            let carry = if q > 0 { coeffs[q - 1] * x } else { 0.0 };
            coeffs[q] = coeffs[q] * y + carry;
        }
    }
    coeffs
}

fn weighted_by_group_size(coeffs: &[f64]) -> f64 {
    coeffs.iter().enumerate().map(|(q, c)| c / (q as f64 + 1.0)).sum()
}

/// Probability that an F-UE caching `combo` picks `file` under RFS, per unit
/// caching probability. Zero when `file` is not cached.
pub fn rfs_weight(combo: &[u32], file: usize, net: &NetworkParams, pop: &Popularity) -> f64 {
    if !combo.contains(&(file as u32)) {
        return 0.0;
    }
    let requested = |f: usize| math::one_minus_exp_neg(net.request_mean(pop.get(f)));
    let (present, absent): (Vec<f64>, Vec<f64>) = combo
        .iter()
        .map(|&f| f as usize)
        .filter(|&f| f != file)
        .map(|f| (requested(f), math::exp(-net.request_mean(pop.get(f)))))
        .unzip();
    requested(file) * weighted_by_group_size(&subset_size_sums(&present, &absent))
}

/// MRFS counterpart of [`rfs_weight`]. The sum over the common request count
/// `k` is truncated once the Poisson tail of the largest cached mean drops
/// below `tail_tol`.
pub fn mrfs_weight(combo: &[u32], file: usize, net: &NetworkParams, pop: &Popularity, tail_tol: f64) -> Result<f64> {
    if !combo.contains(&(file as u32)) {
        return Ok(0.0);
    }
    let own_mean = net.request_mean(pop.get(file));
    let others: Vec<f64> =
        combo.iter().map(|&f| f as usize).filter(|&f| f != file).map(|f| net.request_mean(pop.get(f))).collect();
    let max_mean = others.iter().copied().fold(own_mean, f64::max);

    // running P(N_j <= k - 1) per competing file
    let mut below: Vec<f64> = others.iter().map(|&mu| math::exp(-mu)).collect();
    let mut ties: Vec<f64> = alloc::vec![0.0; others.len()];
    let mut total = 0.0;
    for k in 1..=MRFS_MAX_TERMS as u32 {
        let own = math::poisson_pmf(k, own_mean);
        for (tie, &mu) in ties.iter_mut().zip(&others) {
            *tie = math::poisson_pmf(k, mu);
        }
        total += own * weighted_by_group_size(&subset_size_sums(&ties, &below));
        for (b, t) in below.iter_mut().zip(&ties) {
            *b += t;
        }
        if poisson_tail_bound(k, max_mean) <= tail_tol {
            return Ok(total);
        }
    }
    Err(Error::Truncation { terms: MRFS_MAX_TERMS })
}

/// Upper bound on `P(X > k)` for `X ~ Poisson(mean)`; infinite while the
/// geometric bound does not apply.
fn poisson_tail_bound(k: u32, mean: f64) -> f64 {
    let next = f64::from(k) + 2.0;
    if next <= mean {
        return f64::INFINITY;
    }
    math::poisson_pmf(k + 1, mean) * next / (next - mean)
}

/// `zeta_i^n` under RFS.
pub fn zeta_rfs(
    i: usize,
    n: usize,
    net: &NetworkParams,
    combos: &CombinationSet,
    pop: &Popularity,
    policy: &CachingPolicy,
) -> Result<f64> {
    check_indices(combos, i, n)?;
    Ok(policy.get(i) * rfs_weight(combos.combo(i), n, net, pop))
}

/// `zeta_i^n` under MRFS.
pub fn zeta_mrfs(
    i: usize,
    n: usize,
    net: &NetworkParams,
    combos: &CombinationSet,
    pop: &Popularity,
    policy: &CachingPolicy,
    quad: &QuadratureConfig,
) -> Result<f64> {
    check_indices(combos, i, n)?;
    Ok(policy.get(i) * mrfs_weight(combos.combo(i), n, net, pop, quad.mrfs_tail_tol)?)
}

/// `2 pi Gamma(2/alpha) (P_u / I_th)^(2/alpha) / alpha`: the mean number of
/// request beacons above threshold per unit density of interfering requesters.
pub fn osa_exponent_coefficient(net: &NetworkParams) -> f64 {
    let delta = 2.0 / net.alpha;
    2.0 * PI * math::gamma(delta) * math::powf(net.p_u / net.i_th, delta) / net.alpha
}

/// Probability that a file-`n` candidate sees no other-file request beacon
/// above the interference threshold.
pub fn osa_probability(n: usize, net: &NetworkParams, pop: &Popularity) -> f64 {
    math::exp(-osa_exponent_coefficient(net) * net.lambda_u * (1.0 - pop.get(n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::content::{enumerate_combinations, zipf_popularity};

    fn net_pi() -> NetworkParams {
        // lambda_u * pi * R_d^2 = pi
        NetworkParams { lambda_u: 0.01, r_d: 10.0, ..Default::default() }
    }

    #[test]
    fn group_sums_match_expansion() {
        let c = subset_size_sums(&[0.2, 0.3], &[0.8, 0.7]);
        assert!((c[0] - 0.56).abs() < 1e-15);
        assert!((c[1] - (0.2 * 0.7 + 0.3 * 0.8)).abs() < 1e-15);
        assert!((c[2] - 0.06).abs() < 1e-15);
    }

    #[test]
    fn single_file_cache() {
        let net = net_pi();
        let pop = zipf_popularity(5, 1.0).unwrap();
        let expect = 1.0 - (-PI * pop.get(2)).exp();
        assert!((rfs_weight(&[2], 2, &net, &pop) - expect).abs() < 1e-15);
        let m = mrfs_weight(&[2], 2, &net, &pop, 1e-14).unwrap();
        assert!((m - expect).abs() < 1e-13);
    }

    #[test]
    fn rfs_two_file_value() {
        let net = net_pi();
        let pop = zipf_popularity(5, 1.0).unwrap();
        let z = rfs_weight(&[0, 1], 0, &net, &pop);
        // a1 * (1 - a2 + a2 / 2) with a_m = 1 - exp(-pi p_m)
        assert!((z - 0.561_512_580_168_812).abs() < 1e-12, "{z}");
    }

    #[test]
    fn mrfs_two_file_closure() {
        let net = net_pi();
        let pop = zipf_popularity(5, 1.0).unwrap();
        let a = mrfs_weight(&[0, 1], 0, &net, &pop, 1e-14).unwrap();
        let b = mrfs_weight(&[0, 1], 1, &net, &pop, 1e-14).unwrap();
        assert!((a + b - 0.873_031_974_432_765).abs() < 1e-12, "{}", a + b);
        assert!(a > b);
    }

    #[test]
    fn vanishing_popularity() {
        let net = net_pi();
        let pop = Popularity::from_weights(&[1.0, 1e-14, 1.0]).unwrap();
        assert!(rfs_weight(&[0, 1, 2], 1, &net, &pop) < 1e-12);
        assert!(mrfs_weight(&[0, 1, 2], 1, &net, &pop, 1e-14).unwrap() < 1e-12);
    }

    #[test]
    fn uncached_file_is_zero() {
        let net = net_pi();
        let pop = zipf_popularity(5, 1.0).unwrap();
        assert_eq!(rfs_weight(&[0, 1], 3, &net, &pop), 0.0);
        assert_eq!(mrfs_weight(&[0, 1], 3, &net, &pop, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn index_errors() {
        let net = net_pi();
        let combos = enumerate_combinations(5, 3).unwrap();
        let pop = zipf_popularity(5, 1.0).unwrap();
        let policy = crate::content::uniform_policy(10).unwrap();
        assert!(zeta_rfs(10, 0, &net, &combos, &pop, &policy).is_err());
        assert!(zeta_rfs(0, 5, &net, &combos, &pop, &policy).is_err());
    }

    #[test]
    fn osa_value_and_limits() {
        let net = NetworkParams::default();
        let pop = zipf_popularity(5, 1.0).unwrap();
        assert!((osa_probability(0, &net, &pop) - 0.93241).abs() < 5e-6);
        let certain = Popularity::from_weights(&[1.0]).unwrap();
        assert_eq!(osa_probability(0, &net, &certain), 1.0);
        let loose = NetworkParams { i_th: 1e12, ..net };
        assert!(osa_probability(4, &loose, &pop) > 1.0 - 1e-6);
    }

    #[test]
    fn mrfs_truncation_ceiling() {
        // mean so large the tail bound cannot fall below tolerance in time
        let net = NetworkParams { lambda_u: 1e3, ..Default::default() };
        let pop = zipf_popularity(2, 0.0).unwrap();
        assert!(matches!(mrfs_weight(&[0, 1], 0, &net, &pop, 1e-12), Err(Error::Truncation { .. })));
    }
}
