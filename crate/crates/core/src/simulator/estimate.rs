use alloc::vec::Vec;

use crate::math;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Monte Carlo estimate with a normal-approximation confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationEstimate {
    pub mean: f64,
    pub half_width_95: f64,
    pub replications: u64,
    /// Number of slots in which the conditioning event occurred.
    pub conditioning_count: u64,
}

impl SimulationEstimate {
    pub fn contains(&self, value: f64) -> bool {
        math::abs(value - self.mean) <= self.half_width_95
    }

    pub fn std_error(&self) -> f64 {
        self.half_width_95 / Z95
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { mean: self.mean * factor, half_width_95: self.half_width_95 * math::abs(factor), ..*self }
    }
}

/// Sample mean of per-replication values.
pub fn mean_estimate(values: &[f64]) -> Option<SimulationEstimate> {
    let r = values.len();
    if r == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / r as f64;
    let half = if r > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1) as f64;
        Z95 * math::sqrt(var / r as f64)
    } else {
        f64::INFINITY
    };
    Some(SimulationEstimate { mean, half_width_95: half, replications: r as u64, conditioning_count: r as u64 })
}

/// `sum(y) / sum(x)` over replications, with the linearized variance of a
/// ratio estimator so that within-replication correlation is respected.
pub fn ratio_estimate(numer: &[f64], denom: &[f64]) -> Option<SimulationEstimate> {
    let r = numer.len();
    let total: f64 = denom.iter().sum();
    if r == 0 || total <= 0.0 {
        return None;
    }
    let ratio = numer.iter().sum::<f64>() / total;
    let mean_x = total / r as f64;
    let half = if r > 1 {
        let var = numer.iter().zip(denom).map(|(y, x)| (y - ratio * x) * (y - ratio * x)).sum::<f64>() / (r - 1) as f64;
        Z95 * math::sqrt(var / r as f64) / mean_x
    } else {
        f64::INFINITY
    };
    Some(SimulationEstimate { mean: ratio, half_width_95: half, replications: r as u64, conditioning_count: total as u64 })
}

/// `sum_k w_k X_k` for independent estimates.
pub fn weighted_sum(parts: &[(f64, SimulationEstimate)]) -> Option<SimulationEstimate> {
    let first = parts.first()?;
    let mean = parts.iter().map(|(w, e)| w * e.mean).sum();
    let var: f64 = parts.iter().map(|(w, e)| w * w * e.std_error() * e.std_error()).sum();
    let conditioning_count = parts.iter().map(|(_, e)| e.conditioning_count).sum();
    Some(SimulationEstimate { mean, half_width_95: Z95 * math::sqrt(var), replications: first.1.replications, conditioning_count })
}

pub(crate) fn column<T, F: Fn(&T) -> f64>(rows: &[T], f: F) -> Vec<f64> {
    rows.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_have_zero_width() {
        let e = mean_estimate(&[0.5; 10]).unwrap();
        assert_eq!(e.mean, 0.5);
        assert_eq!(e.half_width_95, 0.0);
        assert!(mean_estimate(&[]).is_none());
    }

    #[test]
    fn ratio_of_proportional_samples_is_exact() {
        let x = [10.0, 20.0, 5.0];
        let y = [2.0, 4.0, 1.0];
        let e = ratio_estimate(&y, &x).unwrap();
        assert!((e.mean - 0.2).abs() < 1e-15);
        assert!(e.half_width_95 < 1e-12);
        assert!(ratio_estimate(&[0.0], &[0.0]).is_none());
    }
}
