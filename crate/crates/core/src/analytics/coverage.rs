//! Cache-hit, association distance and SIR coverage at a typical requester.

use super::activation::DensityReport;
use crate::error::{Error, Result};
use crate::math::{self, PI};
use crate::network::NetworkParams;
use crate::quadrature::{integrate, integrate_to_infinity, QuadratureConfig};

/// Density of active file-`m` F-UEs at distance `r` from a file-`n` requester.
///
/// Same-file transmitters ignore the requester; other files are thinned by
/// the chance that the requester's beacon stays below the threshold.
pub fn conditional_active_density(m: usize, n: usize, r: f64, dens: &DensityReport, net: &NetworkParams) -> f64 {
    let lambda = dens.lambda_n[m];
    if m == n {
        return lambda;
    }
    lambda * math::one_minus_exp_neg(net.i_th * math::powf(r, net.alpha) / net.p_u)
}

/// `1 - exp(-lambda_n pi R_d^2)`: an active file-`n` F-UE lies within range.
pub fn cache_hit(n: usize, dens: &DensityReport, net: &NetworkParams) -> f64 {
    math::one_minus_exp_neg(dens.lambda_n[n] * PI * net.r_d * net.r_d)
}

/// Density of the distance to the nearest active file-`n` F-UE, conditioned
/// on one existing within `R_d`.
pub fn assoc_distance_pdf(n: usize, l: f64, dens: &DensityReport, net: &NetworkParams) -> Result<f64> {
    let lambda = dens.lambda_n[n];
    if lambda <= 0.0 {
        return Err(Error::Undefined("association distance with no active server density"));
    }
    if !(0.0..=net.r_d).contains(&l) {
        return Ok(0.0);
    }
    let norm = math::one_minus_exp_neg(lambda * PI * net.r_d * net.r_d);
    Ok(2.0 * lambda * PI * l * math::exp(-lambda * PI * l * l) / norm)
}

/// Interference exponents per unit density, independent of the densities
/// themselves so one kernel serves every file and every policy.
#[derive(Debug, Clone)]
pub struct InterferenceKernel {
    alpha: f64,
    theta: f64,
    /// `I_th / P_u`
    threshold_ratio: f64,
    /// `int_1^inf v / (1 + v^alpha / theta) dv`
    same_file: f64,
    far_coef: f64,
    credit: f64,
    beacon_scale: f64,
    quad: QuadratureConfig,
}

impl InterferenceKernel {
    pub fn new(net: &NetworkParams, quad: &QuadratureConfig) -> Result<Self> {
        net.validate()?;
        quad.validate()?;
        let alpha = net.alpha;
        let theta = net.theta_u;
        let delta = 2.0 / alpha;
        let same_file = integrate_to_infinity(
            |v| v / (1.0 + math::powf(v, alpha) / theta),
            1.0,
            math::powf(theta, 1.0 / alpha).max(1.0),
            quad,
            "same-file interference",
        )?
        .value;
        Ok(Self {
            alpha,
            theta,
            threshold_ratio: net.i_th / net.p_u,
            same_file,
            far_coef: 2.0 * PI * PI * math::powf(theta, delta) / (alpha * math::sin(2.0 * PI / alpha)),
            credit: 2.0 * PI / alpha * math::powf(net.p_u / net.i_th, delta) * math::gamma(delta),
            beacon_scale: math::powf(net.p_u / net.i_th, 1.0 / alpha),
            quad: *quad,
        })
    }

    /// Same-file exponent per unit density at link distance `l`:
    /// `2 pi int_l^inf u / (1 + u^alpha / (theta l^alpha)) du`.
    pub fn same_file(&self, l: f64) -> f64 {
        2.0 * PI * l * l * self.same_file
    }

    /// Cross-file exponent per unit density without the threshold conditioning.
    pub fn cross_file_unconditioned(&self, l: f64) -> f64 {
        self.far_coef * l * l
    }

    /// Cross-file exponent per unit density for interferers whose fading
    /// toward the requester is conditioned on passing the OSA test.
    pub fn cross_file(&self, l: f64) -> Result<f64> {
        Ok(self.far_coef * l * l - self.credit + 2.0 * PI * self.truncated_fading(l)?)
    }

    fn truncated_fading(&self, l: f64) -> Result<f64> {
        let la = math::powf(l, self.alpha);
        let prefactor = math::exp(-self.theta * self.threshold_ratio * la);
        if prefactor == 0.0 {
            return Ok(0.0);
        }
        let (alpha, tl, ratio) = (self.alpha, self.theta * la, self.threshold_ratio);
        let inner = integrate_to_infinity(
            |u| {
                let ua = math::powf(u, alpha);
                ua / (tl + ua) * math::exp(-ratio * ua) * u
            },
            0.0,
            self.beacon_scale,
            &self.quad,
            "truncated-fading interference",
        )?;
        Ok(prefactor * inner.value)
    }
}

fn coverage_with<F>(n: usize, dens: &DensityReport, net: &NetworkParams, quad: &QuadratureConfig, mut cross: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let lambda = dens.lambda_n[n];
    if lambda <= 0.0 {
        return Ok(0.0);
    }
    let kernel = InterferenceKernel::new(net, quad)?;
    let other = dens.lambda_bar_n[n];
    let mut failure = None;
    let est = integrate(
        |l| {
            let c = match cross(l) {
                Ok(c) => c,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            };
            assoc_distance_pdf(n, l, dens, net).unwrap_or(0.0) * math::exp(-lambda * kernel.same_file(l) - other * c)
        },
        0.0,
        net.r_d,
        quad,
        "coverage",
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(est.value),
    }
}

/// Probability that a file-`n` requester served by its nearest active file-`n`
/// F-UE within range achieves the SIR target. Zero when no such F-UE can exist.
pub fn coverage(n: usize, dens: &DensityReport, net: &NetworkParams, quad: &QuadratureConfig) -> Result<f64> {
    let kernel = InterferenceKernel::new(net, quad)?;
    coverage_with(n, dens, net, quad, |l| kernel.cross_file(l))
}

/// Coverage when F-UEs transmit without the threshold test, at the same
/// active densities.
pub fn coverage_baseline(n: usize, dens: &DensityReport, net: &NetworkParams, quad: &QuadratureConfig) -> Result<f64> {
    let kernel = InterferenceKernel::new(net, quad)?;
    coverage_with(n, dens, net, quad, |l| Ok(kernel.cross_file_unconditioned(l)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn dens() -> DensityReport {
        DensityReport::from_file_densities(vec![2e-3, 1e-3, 5e-4])
    }

    #[test]
    fn thinned_density_limits() {
        let net = NetworkParams::default();
        let d = dens();
        assert_eq!(conditional_active_density(0, 0, 3.0, &d, &net), 2e-3);
        assert_eq!(conditional_active_density(1, 0, 0.0, &d, &net), 0.0);
        assert!((conditional_active_density(1, 0, 100.0, &d, &net) - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn cache_hit_inversion() {
        let net = NetworkParams::default();
        let d = DensityReport::from_file_densities(vec![math::ln(2.0) / (PI * 100.0), 0.0]);
        assert!((cache_hit(0, &d, &net) - 0.5).abs() < 1e-15);
        assert_eq!(cache_hit(1, &d, &net), 0.0);
    }

    #[test]
    fn pdf_normalized() {
        let net = NetworkParams::default();
        let d = dens();
        let est = integrate(|l| assoc_distance_pdf(0, l, &d, &net).unwrap(), 0.0, 10.0, &Default::default(), "pdf").unwrap();
        assert!((est.value - 1.0).abs() < 1e-10);
        assert_eq!(assoc_distance_pdf(0, 0.0, &d, &net).unwrap(), 0.0);
        let zero = DensityReport::from_file_densities(vec![0.0, 1e-3]);
        assert!(assoc_distance_pdf(0, 1.0, &zero, &net).is_err());
    }

    #[test]
    fn same_file_closed_form_alpha_four() {
        for theta in [0.1, 1.0, 4.0] {
            let net = NetworkParams { theta_u: theta, ..Default::default() };
            let k = InterferenceKernel::new(&net, &Default::default()).unwrap();
            let st = math::sqrt(theta);
            let exact = st / 2.0 * (PI / 2.0 - libm::atan(1.0 / st));
            assert!((k.same_file(1.0) / (2.0 * PI) - exact).abs() < 1e-10, "theta {theta}");
        }
    }

    #[test]
    fn cross_file_between_bounds() {
        let net = NetworkParams::default();
        let k = InterferenceKernel::new(&net, &Default::default()).unwrap();
        assert!(k.cross_file(0.0).unwrap().abs() < 1e-9);
        for l in [0.5, 1.0, 2.0, 5.0, 10.0] {
            let c = k.cross_file(l).unwrap();
            let far = k.cross_file_unconditioned(l);
            assert!(c <= far + 1e-12 && c >= far - k.credit - 1e-12, "l {l}: {c} vs {far}");
        }
    }

    #[test]
    fn saturates_without_sir_target() {
        let net = NetworkParams { theta_u: 1e-8, ..Default::default() };
        let d = dens();
        for n in 0..3 {
            let c = coverage(n, &d, &net, &Default::default()).unwrap();
            assert!(c <= 1.0 && c >= 1.0 - 1e-6, "{c}");
        }
        // without the threshold credit the far field only vanishes like theta^(2/alpha)
        let net = NetworkParams { theta_u: 1e-16, ..Default::default() };
        for n in 0..3 {
            let b = coverage_baseline(n, &d, &net, &Default::default()).unwrap();
            assert!(b <= 1.0 && b >= 1.0 - 1e-6, "{b}");
        }
    }

    #[test]
    fn osa_never_hurts_coverage() {
        for i_th in [0.01, 0.05, 0.5] {
            for theta_u in [0.5, 1.0, 2.0] {
                let net = NetworkParams { i_th, theta_u, ..Default::default() };
                let d = dens();
                for n in 0..3 {
                    let c = coverage(n, &d, &net, &Default::default()).unwrap();
                    let b = coverage_baseline(n, &d, &net, &Default::default()).unwrap();
                    assert!(c >= b - 1e-10 && c <= 1.0);
                }
            }
        }
    }

    #[test]
    fn no_server_means_no_coverage() {
        let d = DensityReport::from_file_densities(vec![0.0, 1e-3]);
        assert_eq!(coverage(0, &d, &NetworkParams::default(), &Default::default()).unwrap(), 0.0);
    }
}
