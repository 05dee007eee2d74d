use crate::error::{invalid, Result};

/// Physical-layer and geometry constants of the network.
///
/// Densities are points per square metre, powers in watts, lengths in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    /// Fog UE density.
    pub lambda_g: f64,
    /// Conventional UE density.
    pub lambda_u: f64,
    /// Fog UE transmit power. Cancels in the SIR but kept for the simulator.
    pub p_g: f64,
    /// Request beacon power of conventional UEs.
    pub p_u: f64,
    /// SIR target (linear).
    pub theta_u: f64,
    /// Interference threshold for opportunistic access.
    pub i_th: f64,
    /// Pathloss exponent.
    pub alpha: f64,
    /// D2D communication range.
    pub r_d: f64,
    /// Radius of the simulated disk.
    pub r_s: f64,
}

impl Default for NetworkParams {
    /// Evaluation defaults: `P_u / I_th = 20`, `theta_u = 1`, `R_d = 10 m`,
    /// `alpha = 4`, `R_s = 500 m`, both densities `0.01`.
    fn default() -> Self {
        Self {
            lambda_g: 0.01,
            lambda_u: 0.01,
            p_g: 1.0,
            p_u: 1.0,
            theta_u: 1.0,
            i_th: 0.05,
            alpha: 4.0,
            r_d: 10.0,
            r_s: 500.0,
        }
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("network.lambda_g", self.lambda_g),
            ("network.lambda_u", self.lambda_u),
            ("network.p_g", self.p_g),
            ("network.p_u", self.p_u),
            ("network.theta_u", self.theta_u),
            ("network.i_th", self.i_th),
            ("network.alpha", self.alpha),
            ("network.r_d", self.r_d),
            ("network.r_s", self.r_s),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(invalid(name, alloc::format!("must be positive and finite, got {value}")));
            }
        }
        if self.alpha <= 2.0 {
            return Err(invalid("network.alpha", alloc::format!("pathloss exponent must exceed 2, got {}", self.alpha)));
        }
        if self.r_s < 10.0 * self.r_d {
            return Err(invalid(
                "network.r_s",
                alloc::format!("region radius {} must be at least 10 x R_d = {}", self.r_s, 10.0 * self.r_d),
            ));
        }
        Ok(())
    }

    /// Mean number of conventional UEs requesting a file of popularity `p`
    /// within the D2D range of a point.
    pub fn request_mean(&self, p: f64) -> f64 {
        self.lambda_u * p * crate::math::PI * self.r_d * self.r_d
    }
}
