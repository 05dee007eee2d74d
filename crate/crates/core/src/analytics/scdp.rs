//! Successful content delivery probability and its gradient with respect to
//! the caching policy.

use alloc::vec::Vec;

use super::activation::{active_densities, selection_weights, table_from_weights, ActivationTable, DensityReport};
use super::coverage::{cache_hit, coverage, InterferenceKernel};
use super::selection::osa_probability;
use crate::content::{CachingPolicy, CombinationSet, ContentParams, Popularity, Scheme};
use crate::error::{invalid, Error, Result};
use crate::math::{self, PI};
use crate::network::NetworkParams;
use crate::quadrature::{integrate, QuadratureConfig};

/// Finite-difference step along simplex directions.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticalReport {
    pub activation: ActivationTable,
    pub densities: DensityReport,
    pub sigma_n: Vec<f64>,
    pub sigma: f64,
    pub coverage_n: Vec<f64>,
    pub coverage: f64,
    pub tau: f64,
    /// Successful deliveries per square metre per slot.
    pub throughput: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMode {
    Analytic,
    FiniteDifference,
}

/// Everything about an instance that does not depend on the caching policy.
///
/// Selection weights, OSA probabilities and the interference kernel are
/// computed once; each evaluation then costs only the coverage integrals.
#[derive(Debug, Clone)]
pub struct ScdpModel {
    net: NetworkParams,
    scheme: Scheme,
    combos: CombinationSet,
    pop: Popularity,
    weights: Vec<f64>,
    vartheta: Vec<f64>,
    kernel: InterferenceKernel,
    quad: QuadratureConfig,
}

impl ScdpModel {
    pub fn new(
        net: &NetworkParams,
        scheme: Scheme,
        combos: CombinationSet,
        pop: Popularity,
        quad: &QuadratureConfig,
    ) -> Result<Self> {
        net.validate()?;
        quad.validate()?;
        if pop.len() != combos.library_size() {
            return Err(invalid("popularity", "length differs from the library size"));
        }
        let weights = selection_weights(net, &combos, &pop, scheme, quad)?;
        let vartheta = (0..pop.len()).map(|n| osa_probability(n, net, &pop)).collect();
        let kernel = InterferenceKernel::new(net, quad)?;
        Ok(Self { net: *net, scheme, combos, pop, weights, vartheta, kernel, quad: *quad })
    }

    /// Builds the model from content parameters, enumerating combinations and
    /// the Zipf popularity.
    pub fn from_content(net: &NetworkParams, content: &ContentParams, quad: &QuadratureConfig) -> Result<Self> {
        content.validate()?;
        let combos = crate::content::enumerate_combinations(content.library_size, content.cache_size)?;
        let pop = crate::content::zipf_popularity(content.library_size, content.gamma)?;
        Self::new(net, content.scheme, combos, pop, quad)
    }

    pub fn network(&self) -> &NetworkParams {
        &self.net
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn combinations(&self) -> &CombinationSet {
        &self.combos
    }

    pub fn popularity(&self) -> &Popularity {
        &self.pop
    }

    pub fn vartheta(&self) -> &[f64] {
        &self.vartheta
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quad
    }

    /// Same model with another quadrature configuration.
    pub fn with_quadrature(&self, quad: &QuadratureConfig) -> Result<Self> {
        Self::new(&self.net, self.scheme, self.combos.clone(), self.pop.clone(), quad)
    }

    fn check_policy(&self, policy: &CachingPolicy) -> Result<()> {
        if policy.len() != self.combos.len() {
            return Err(invalid(
                "policy",
                alloc::format!("{} entries for {} combinations", policy.len(), self.combos.len()),
            ));
        }
        Ok(())
    }

    /// Active density per file for raw policy weights (no simplex check, so
    /// finite differences and line searches can probe freely).
    fn file_densities(&self, c: &[f64]) -> Vec<f64> {
        let files = self.pop.len();
        let mut lambda = alloc::vec![0.0; files];
        for (i, &ci) in c.iter().enumerate() {
            for (n, l) in lambda.iter_mut().enumerate() {
                *l += ci * self.weights[i * files + n] * self.vartheta[n];
            }
        }
        lambda.iter().map(|x| self.net.lambda_g * x).collect()
    }

    /// `exp(-lambda_n (pi l^2 + same) - lambda_bar cross)` and its pieces.
    fn merged_exponent(&self, l: f64, lambda: f64, other: f64) -> Result<(f64, f64, f64)> {
        let near = PI * l * l + self.kernel.same_file(l);
        let cross = self.kernel.cross_file(l)?;
        Ok((math::exp(-lambda * near - other * cross), near, cross))
    }

    fn integrate_file<F>(&self, label: &'static str, quad: &QuadratureConfig, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let mut failure = None;
        let est = integrate(
            |l| match f(l) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            0.0,
            self.net.r_d,
            quad,
            label,
        )?;
        match failure {
            Some(e) => Err(e),
            None => Ok(est.value),
        }
    }

    /// `tau` from the single merged integral per file, for raw weights.
    pub fn tau_raw(&self, c: &[f64]) -> Result<f64> {
        if c.len() != self.combos.len() {
            return Err(invalid("policy", "length differs from the number of combinations"));
        }
        let report = DensityReport::from_file_densities(self.file_densities(c));
        let mut tau = 0.0;
        for n in 0..self.pop.len() {
            let (lambda, other) = (report.lambda_n[n], report.lambda_bar_n[n]);
            if lambda <= 0.0 {
                continue;
            }
            let per_file = self.integrate_file("scdp", &self.quad, |l| {
                let (e, _, _) = self.merged_exponent(l, lambda, other)?;
                Ok(2.0 * PI * lambda * l * e)
            })?;
            tau += self.pop.get(n) * per_file;
        }
        Ok(tau)
    }

    pub fn tau(&self, policy: &CachingPolicy) -> Result<f64> {
        self.check_policy(policy)?;
        self.tau_raw(policy.weights())
    }

    /// Full pipeline: activation, densities, cache hit, coverage, SCDP.
    pub fn evaluate(&self, policy: &CachingPolicy) -> Result<AnalyticalReport> {
        self.check_policy(policy)?;
        let activation = table_from_weights(self.weights.clone(), self.vartheta.clone(), policy);
        let densities = active_densities(&activation, &self.net);
        let files = self.pop.len();
        let sigma_n: Vec<f64> = (0..files).map(|n| cache_hit(n, &densities, &self.net)).collect();
        let coverage_n =
            (0..files).map(|n| coverage(n, &densities, &self.net, &self.quad)).collect::<Result<Vec<f64>>>()?;
        let p = self.pop.probs();
        let sigma = p.iter().zip(&sigma_n).map(|(p, s)| p * s).sum();
        let cov = p.iter().zip(&coverage_n).map(|(p, c)| p * c).sum();
        let tau: f64 = (0..files).map(|n| p[n] * sigma_n[n] * coverage_n[n]).sum();
        if !tau.is_finite() {
            return Err(Error::NonFinite { what: "scdp", iteration: 0 });
        }
        Ok(AnalyticalReport {
            activation,
            densities,
            sigma_n,
            sigma,
            coverage_n,
            coverage: cov,
            tau,
            throughput: self.net.lambda_u * tau,
        })
    }

    /// Projected gradient `P grad tau`, i.e. with the mean component removed.
    pub fn gradient(&self, policy: &CachingPolicy, mode: GradientMode) -> Result<Vec<f64>> {
        self.check_policy(policy)?;
        let raw = match mode {
            GradientMode::Analytic => self.analytic_gradient(policy.weights())?,
            GradientMode::FiniteDifference => self.fd_gradient(policy.weights())?,
        };
        Ok(project(&raw))
    }

    /// Unprojected partial derivatives through the linear dependence of each
    /// file's active density on the caching probabilities.
    pub fn analytic_gradient(&self, c: &[f64]) -> Result<Vec<f64>> {
        let files = self.pop.len();
        let report = DensityReport::from_file_densities(self.file_densities(c));
        // derivative of each file's tau term with respect to its own density
        // and to the density of the other files
        let mut d_own = alloc::vec![0.0; files];
        let mut d_other = alloc::vec![0.0; files];
        for n in 0..files {
            let (lambda, other) = (report.lambda_n[n], report.lambda_bar_n[n]);
            let p = self.pop.get(n);
            d_own[n] = p * self.integrate_file("scdp gradient", &self.quad, |l| {
                let (e, near, _) = self.merged_exponent(l, lambda, other)?;
                Ok(2.0 * PI * l * (1.0 - lambda * near) * e)
            })?;
            if lambda > 0.0 {
                d_other[n] = -p * self.integrate_file("scdp gradient", &self.quad, |l| {
                    let (e, _, cross) = self.merged_exponent(l, lambda, other)?;
                    Ok(2.0 * PI * l * lambda * cross * e)
                })?;
            }
        }
        let mut grad = alloc::vec![0.0; c.len()];
        for (i, g) in grad.iter_mut().enumerate() {
            let row: Vec<f64> =
                (0..files).map(|m| self.net.lambda_g * self.vartheta[m] * self.weights[i * files + m]).collect();
            let total: f64 = row.iter().sum();
            *g = (0..files).map(|n| d_own[n] * row[n] + d_other[n] * (total - row[n])).sum();
        }
        Ok(grad)
    }

    /// Central differences along `e_i - 1/J`, the simplex-preserving
    /// directions. Needs every `c_i >= FD_STEP`.
    fn fd_gradient(&self, c: &[f64]) -> Result<Vec<f64>> {
        let j = c.len();
        if c.iter().any(|&x| x < FD_STEP) {
            return Err(invalid("policy", "finite differences need every entry at least the step size"));
        }
        let mut grad = alloc::vec![0.0; j];
        let shift = FD_STEP / j as f64;
        for (i, g) in grad.iter_mut().enumerate() {
            let probe = |sign: f64| -> Vec<f64> {
                c.iter().enumerate().map(|(k, &x)| x + sign * (if k == i { FD_STEP } else { 0.0 } - shift)).collect()
            };
            *g = (self.tau_raw(&probe(1.0))? - self.tau_raw(&probe(-1.0))?) / (2.0 * FD_STEP);
        }
        Ok(grad)
    }
}

/// `v - mean(v)`: projection onto the tangent space of the simplex.
pub fn project(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - mean).collect()
}

/// One-shot SCDP evaluation.
pub fn scdp(
    net: &NetworkParams,
    content: &ContentParams,
    policy: &CachingPolicy,
    quad: &QuadratureConfig,
) -> Result<AnalyticalReport> {
    ScdpModel::from_content(net, content, quad)?.evaluate(policy)
}

/// One-shot projected gradient of the SCDP.
pub fn scdp_gradient(
    net: &NetworkParams,
    content: &ContentParams,
    policy: &CachingPolicy,
    quad: &QuadratureConfig,
    mode: GradientMode,
) -> Result<Vec<f64>> {
    ScdpModel::from_content(net, content, quad)?.gradient(policy, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::content::{mpc_policy, uniform_policy};

    fn content(scheme: Scheme) -> ContentParams {
        ContentParams { library_size: 5, cache_size: 3, gamma: 1.0, scheme }
    }

    #[test]
    fn merged_form_matches_product_form() {
        let net = NetworkParams::default();
        for scheme in [Scheme::Rfs, Scheme::Mrfs] {
            let model = ScdpModel::from_content(&net, &content(scheme), &Default::default()).unwrap();
            let policy = uniform_policy(10).unwrap();
            let report = model.evaluate(&policy).unwrap();
            let merged = model.tau(&policy).unwrap();
            assert!((report.tau - merged).abs() < 1e-9, "{} vs {merged}", report.tau);
            assert!(report.tau > 0.0 && report.tau <= report.sigma);
            assert_eq!(report.throughput, net.lambda_u * report.tau);
        }
    }

    #[test]
    fn mrfs_beats_rfs_at_defaults() {
        let net = NetworkParams::default();
        let policy = uniform_policy(10).unwrap();
        let q = QuadratureConfig::default();
        let rfs = scdp(&net, &content(Scheme::Rfs), &policy, &q).unwrap().tau;
        let mrfs = scdp(&net, &content(Scheme::Mrfs), &policy, &q).unwrap().tau;
        assert!(mrfs >= rfs, "{mrfs} < {rfs}");
    }

    #[test]
    fn no_users_no_delivery() {
        let net = NetworkParams { lambda_u: 1e-12, ..Default::default() };
        let r = scdp(&net, &content(Scheme::Rfs), &uniform_policy(10).unwrap(), &Default::default()).unwrap();
        assert!(r.tau < 1e-9);
    }

    #[test]
    fn tiny_sir_target_reduces_to_cache_hit() {
        let net = NetworkParams { theta_u: 1e-8, ..Default::default() };
        let r = scdp(&net, &content(Scheme::Mrfs), &uniform_policy(10).unwrap(), &Default::default()).unwrap();
        assert!((r.tau - r.sigma).abs() < 1e-6);
    }

    #[test]
    fn single_combination_has_zero_projected_gradient() {
        let net = NetworkParams::default();
        let c = ContentParams { library_size: 3, cache_size: 3, gamma: 1.0, scheme: Scheme::Rfs };
        let g = scdp_gradient(&net, &c, &uniform_policy(1).unwrap(), &Default::default(), GradientMode::Analytic)
            .unwrap();
        assert_eq!(g, alloc::vec![0.0]);
    }

    #[test]
    fn symmetric_library_gradient_is_flat() {
        let net = NetworkParams::default();
        let c = ContentParams { gamma: 0.0, ..content(Scheme::Mrfs) };
        let model = ScdpModel::from_content(&net, &c, &Default::default()).unwrap();
        let raw = model.analytic_gradient(uniform_policy(10).unwrap().weights()).unwrap();
        for g in &raw {
            assert!((g - raw[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn analytic_gradient_matches_differences_off_uniform() {
        let net = NetworkParams::default();
        let model = ScdpModel::from_content(&net, &content(Scheme::Rfs), &Default::default()).unwrap();
        let fine = model.with_quadrature(&QuadratureConfig::default().tightened(1e-3)).unwrap();
        let mut w: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let policy = CachingPolicy::new(w).unwrap();
        let a = model.gradient(&policy, GradientMode::Analytic).unwrap();
        let f = fine.gradient(&policy, GradientMode::FiniteDifference).unwrap();
        let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (x, y) in a.iter().zip(&f) {
            assert!((x - y).abs() < 1e-5 * scale, "{x} vs {y}");
        }
    }

    #[test]
    fn fd_refuses_boundary_policies() {
        let net = NetworkParams::default();
        let model = ScdpModel::from_content(&net, &content(Scheme::Rfs), &Default::default()).unwrap();
        let mpc = mpc_policy(model.combinations(), model.popularity()).unwrap();
        assert!(model.gradient(&mpc, GradientMode::FiniteDifference).is_err());
        assert!(model.gradient(&mpc, GradientMode::Analytic).is_ok());
    }
}
