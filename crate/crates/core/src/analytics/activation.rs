use alloc::vec::Vec;

use super::selection::{mrfs_weight, osa_probability, rfs_weight};
use crate::content::{CachingPolicy, CombinationSet, Popularity, Scheme};
use crate::error::{invalid, Result};
use crate::network::NetworkParams;
use crate::quadrature::QuadratureConfig;

/// Per-combination, per-file selection and activation probabilities.
///
/// Matrices are `J x N`, row-major by combination.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTable {
    pub combinations: usize,
    pub files: usize,
    /// Selection probability per unit caching probability, `zeta_i^n / c_i`.
    pub selection_weight: Vec<f64>,
    pub zeta: Vec<f64>,
    pub vartheta: Vec<f64>,
    pub xi_in: Vec<f64>,
    pub xi_n: Vec<f64>,
    pub xi: f64,
}

impl ActivationTable {
    pub fn zeta(&self, i: usize, n: usize) -> f64 {
        self.zeta[i * self.files + n]
    }

    pub fn xi_in(&self, i: usize, n: usize) -> f64 {
        self.xi_in[i * self.files + n]
    }

    pub fn selection_weight(&self, i: usize, n: usize) -> f64 {
        self.selection_weight[i * self.files + n]
    }
}

/// `c_i`-free selection weights for every (combination, file) pair.
pub fn selection_weights(
    net: &NetworkParams,
    combos: &CombinationSet,
    pop: &Popularity,
    scheme: Scheme,
    quad: &QuadratureConfig,
) -> Result<Vec<f64>> {
    let files = combos.library_size();
    let mut out = alloc::vec![0.0; combos.len() * files];
    for (i, combo) in combos.iter().enumerate() {
        for &f in combo {
            let f = f as usize;
            out[i * files + f] = match scheme {
                Scheme::Rfs => rfs_weight(combo, f, net, pop),
                Scheme::Mrfs => mrfs_weight(combo, f, net, pop, quad.mrfs_tail_tol)?,
            };
        }
    }
    Ok(out)
}

pub(crate) fn table_from_weights(
    selection_weight: Vec<f64>,
    vartheta: Vec<f64>,
    policy: &CachingPolicy,
) -> ActivationTable {
    let files = vartheta.len();
    let combinations = policy.len();
    let mut zeta = alloc::vec![0.0; combinations * files];
    let mut xi_in = alloc::vec![0.0; combinations * files];
    let mut xi_n = alloc::vec![0.0; files];
    for i in 0..combinations {
        let c = policy.get(i);
        for n in 0..files {
            let z = c * selection_weight[i * files + n];
            zeta[i * files + n] = z;
            xi_in[i * files + n] = z * vartheta[n];
            xi_n[n] += z * vartheta[n];
        }
    }
    let xi = xi_n.iter().sum();
    ActivationTable { combinations, files, selection_weight, zeta, vartheta, xi_in, xi_n, xi }
}

/// Activation probabilities `xi_i^n = zeta_i^n * vartheta_n` and their sums
/// over combinations and files.
pub fn activation_table(
    net: &NetworkParams,
    combos: &CombinationSet,
    pop: &Popularity,
    scheme: Scheme,
    policy: &CachingPolicy,
    quad: &QuadratureConfig,
) -> Result<ActivationTable> {
    if policy.len() != combos.len() {
        return Err(invalid("policy", alloc::format!("{} entries for {} combinations", policy.len(), combos.len())));
    }
    if pop.len() != combos.library_size() {
        return Err(invalid("popularity", "length differs from the library size"));
    }
    let weights = selection_weights(net, combos, pop, scheme, quad)?;
    let vartheta = (0..pop.len()).map(|n| osa_probability(n, net, pop)).collect();
    Ok(table_from_weights(weights, vartheta, policy))
}

/// Densities of active F-UEs per candidate file.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityReport {
    pub lambda_n: Vec<f64>,
    pub lambda_a: f64,
    /// Density of active F-UEs transmitting any other file, `lambda_a - lambda_n`.
    pub lambda_bar_n: Vec<f64>,
}

impl DensityReport {
    pub fn from_file_densities(lambda_n: Vec<f64>) -> Self {
        let lambda_a: f64 = lambda_n.iter().sum();
        // summing the others directly keeps lambda_bar_n >= 0 exactly
        let lambda_bar_n = (0..lambda_n.len())
            .map(|n| lambda_n.iter().enumerate().filter(|&(m, _)| m != n).map(|(_, l)| l).sum())
            .collect();
        Self { lambda_n, lambda_a, lambda_bar_n }
    }
}

pub fn active_densities(table: &ActivationTable, net: &NetworkParams) -> DensityReport {
    DensityReport::from_file_densities(table.xi_n.iter().map(|x| net.lambda_g * x).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::content::{enumerate_combinations, uniform_policy, zipf_popularity};
    use crate::math;

    #[test]
    fn single_file_library() {
        let net = NetworkParams::default();
        let combos = enumerate_combinations(1, 1).unwrap();
        let pop = zipf_popularity(1, 1.0).unwrap();
        let policy = uniform_policy(1).unwrap();
        for scheme in [Scheme::Rfs, Scheme::Mrfs] {
            let t = activation_table(&net, &combos, &pop, scheme, &policy, &Default::default()).unwrap();
            let expect = math::one_minus_exp_neg(net.request_mean(1.0));
            assert!((t.xi - expect).abs() < 1e-12);
            assert_eq!(t.vartheta[0], 1.0);
        }
    }

    #[test]
    fn sparse_requesters_silence_everyone() {
        let net = NetworkParams { lambda_u: 1e-12, ..Default::default() };
        let combos = enumerate_combinations(5, 3).unwrap();
        let pop = zipf_popularity(5, 1.0).unwrap();
        let policy = uniform_policy(10).unwrap();
        let t = activation_table(&net, &combos, &pop, Scheme::Mrfs, &policy, &Default::default()).unwrap();
        assert!(t.xi < 1e-8);
        assert!(t.vartheta.iter().all(|&v| v > 1.0 - 1e-9));
    }

    #[test]
    fn xi_decreases_with_file_rank() {
        let net = NetworkParams::default();
        let combos = enumerate_combinations(5, 3).unwrap();
        let pop = zipf_popularity(5, 1.0).unwrap();
        let policy = uniform_policy(10).unwrap();
        for scheme in [Scheme::Rfs, Scheme::Mrfs] {
            let t = activation_table(&net, &combos, &pop, scheme, &policy, &Default::default()).unwrap();
            for w in t.xi_n.windows(2) {
                assert!(w[0] > w[1], "{scheme:?}: {:?}", t.xi_n);
            }
            for (i, combo) in combos.iter().enumerate() {
                for n in 0..5 {
                    let cached = combo.contains(&(n as u32));
                    assert_eq!(t.xi_in(i, n) > 0.0, cached);
                    assert!((t.xi_in(i, n) - t.zeta(i, n) * t.vartheta[n]).abs() < 1e-18);
                }
            }
        }
    }

    #[test]
    fn densities_add_up() {
        let net = NetworkParams::default();
        let combos = enumerate_combinations(5, 3).unwrap();
        let pop = zipf_popularity(5, 1.0).unwrap();
        let policy = uniform_policy(10).unwrap();
        let t = activation_table(&net, &combos, &pop, Scheme::Rfs, &policy, &Default::default()).unwrap();
        let d = active_densities(&t, &net);
        let sum: f64 = d.lambda_n.iter().sum();
        assert_eq!(sum, d.lambda_a);
        assert!(d.lambda_bar_n.iter().all(|&l| l >= 0.0));
        assert!(d.lambda_n.iter().all(|&l| l <= net.lambda_g));

        let zero = DensityReport::from_file_densities(alloc::vec![0.0; 3]);
        assert_eq!(zero.lambda_a, 0.0);
        let one = DensityReport::from_file_densities(alloc::vec![0.01 * 0.05]);
        assert!((one.lambda_n[0] - 5e-4).abs() < 1e-18);
    }
}
