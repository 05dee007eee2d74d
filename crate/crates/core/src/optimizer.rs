//! Gradient projection over the simplex of caching probabilities.

use alloc::vec::Vec;

use crate::analytics::scdp::{project, GradientMode, ScdpModel};
use crate::content::{mpc_policy, uniform_policy, CachingPolicy, ContentParams};
use crate::error::{invalid, Error, Result};
use crate::math;
use crate::network::NetworkParams;
use crate::quadrature::QuadratureConfig;

const GOLDEN: f64 = 0.618_033_988_749_894_9;
/// Entries this close to a bound count as sitting on it.
const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Stop once an iteration improves the SCDP by less than this.
    pub sigma: f64,
    pub max_iterations: usize,
    /// Bracket width at which the golden-section search stops.
    pub line_search_tol: f64,
    /// Extra starting policies; the best result over all starts is kept.
    pub seeds: Vec<CachingPolicy>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { sigma: 1e-6, max_iterations: 500, line_search_tol: 1e-6, seeds: Vec::new() }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(invalid("optimizer.sigma", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(invalid("optimizer.max_iterations", "must be at least 1"));
        }
        if !(self.line_search_tol > 0.0) {
            return Err(invalid("optimizer.line_search_tol", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Improvement fell below `sigma`.
    Converged,
    MaxIterations,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxIterations => "max_iterations",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub t: usize,
    pub policy: Vec<f64>,
    pub tau: f64,
    /// Step taken from this iterate to the next; zero for the last one.
    pub step: f64,
    /// Norm of the projected ascent direction at this iterate.
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerTrace {
    pub iterates: Vec<Iterate>,
    pub converged: bool,
    pub stop_reason: StopReason,
}

/// `v - mean(v) 1`, the projection onto the tangent space of the simplex.
pub fn projection_matrix_apply(v: &[f64]) -> Vec<f64> {
    project(v)
}

/// Largest `s` with `c + s d` inside `[0, 1]^J`. Zero for a zero direction.
pub fn stepsize_bounds(c: &[f64], d: &[f64]) -> f64 {
    let mut upper = f64::INFINITY;
    let mut lower = f64::INFINITY;
    for (&ci, &di) in c.iter().zip(d) {
        if di > 0.0 {
            upper = upper.min((1.0 - ci) / di);
        } else if di < 0.0 {
            lower = lower.min(-ci / di);
        }
    }
    let s = upper.min(lower);
    if s.is_finite() {
        s.max(0.0)
    } else {
        0.0
    }
}

/// Ascent direction: the projected gradient with components that would
/// leave the feasible set at an active bound removed, re-projected onto the
/// remaining face.
pub fn face_direction(c: &[f64], gradient: &[f64]) -> Vec<f64> {
    let j = c.len();
    let mut free: Vec<bool> = alloc::vec![true; j];
    loop {
        let count = free.iter().filter(|&&f| f).count();
        if count == 0 {
            return alloc::vec![0.0; j];
        }
        let mean = (0..j).filter(|&i| free[i]).map(|i| gradient[i]).sum::<f64>() / count as f64;
        let d: Vec<f64> = (0..j).map(|i| if free[i] { gradient[i] - mean } else { 0.0 }).collect();
        let mut changed = false;
        for i in 0..j {
            if free[i] && ((c[i] <= BOUND_SLACK && d[i] < 0.0) || (c[i] >= 1.0 - BOUND_SLACK && d[i] > 0.0)) {
                free[i] = false;
                changed = true;
            }
        }
        if !changed {
            return d;
        }
    }
}

fn along(c: &[f64], d: &[f64], s: f64) -> Vec<f64> {
    let mut x: Vec<f64> = c.iter().zip(d).map(|(ci, di)| (ci + s * di).clamp(0.0, 1.0)).collect();
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    x
}

/// Golden-section search for the step on `[0, s_bar]` maximizing
/// `objective(c + s d)`. Returns `(s, value)`; the step is zero when no
/// probed point beats the starting value `at_zero`.
pub fn line_search<F>(mut objective: F, c: &[f64], d: &[f64], s_bar: f64, at_zero: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(s_bar > 0.0) {
        return Ok((0.0, at_zero));
    }
    let mut phi = |s: f64| objective(&along(c, d, s));
    let (mut a, mut b) = (0.0, s_bar);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = phi(x1)?;
    let mut f2 = phi(x2)?;
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = phi(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = phi(x1)?;
        }
    }
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    let edge = phi(s_bar)?;
    if edge > best.1 {
        best = (s_bar, edge);
    }
    if best.1 > at_zero {
        Ok(best)
    } else {
        Ok((0.0, at_zero))
    }
}

fn norm(v: &[f64]) -> f64 {
    math::sqrt(v.iter().map(|x| x * x).sum())
}

fn ascend(
    model: &ScdpModel,
    start: &CachingPolicy,
    config: &OptimizerConfig,
    mode: GradientMode,
) -> Result<(CachingPolicy, OptimizerTrace)> {
    let mut c = start.weights().to_vec();
    let mut tau = model.tau_raw(&c)?;
    let mut iterates = Vec::new();
    for t in 1..=config.max_iterations {
        if !tau.is_finite() {
            return Err(Error::NonFinite { what: "scdp", iteration: t });
        }
        let gradient = match mode {
            GradientMode::Analytic => model.analytic_gradient(&c)?,
            GradientMode::FiniteDifference => model.gradient(&CachingPolicy::new(c.clone())?, mode)?,
        };
        if gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite { what: "scdp gradient", iteration: t });
        }
        let d = face_direction(&c, &gradient);
        let s_bar = stepsize_bounds(&c, &d);
        let (s, next_tau) = line_search(|x| model.tau_raw(x), &c, &d, s_bar, tau, config.line_search_tol)?;
        iterates.push(Iterate { t, policy: c.clone(), tau, step: s, gradient_norm: norm(&d) });
        let gain = next_tau - tau;
        if s > 0.0 {
            c = along(&c, &d, s);
            tau = next_tau;
        }
        if math::abs(gain) < config.sigma {
            iterates.push(Iterate { t: t + 1, policy: c.clone(), tau, step: 0.0, gradient_norm: f64::NAN });
            let last = iterates.len() - 1;
            let g = match mode {
                GradientMode::Analytic => model.analytic_gradient(&c)?,
                GradientMode::FiniteDifference => gradient,
            };
            iterates[last].gradient_norm = norm(&face_direction(&c, &g));
            let policy = CachingPolicy::new(c)?;
            return Ok((policy, OptimizerTrace { iterates, converged: true, stop_reason: StopReason::Converged }));
        }
    }
    let policy = CachingPolicy::new(c)?;
    Ok((policy, OptimizerTrace { iterates, converged: false, stop_reason: StopReason::MaxIterations }))
}

/// Maximizes the SCDP from the uniform policy and any configured seeds,
/// keeping the best run.
pub fn optimize_model(
    model: &ScdpModel,
    config: &OptimizerConfig,
    mode: GradientMode,
) -> Result<(CachingPolicy, OptimizerTrace)> {
    config.validate()?;
    let j = model.combinations().len();
    let mut best = ascend(model, &uniform_policy(j)?, config, mode)?;
    for seed in &config.seeds {
        if seed.len() != j {
            return Err(invalid("optimizer.seeds", "seed policy has the wrong length"));
        }
        let run = ascend(model, seed, config, mode)?;
        if final_tau(&run.1) > final_tau(&best.1) {
            best = run;
        }
    }
    Ok(best)
}

fn final_tau(trace: &OptimizerTrace) -> f64 {
    trace.iterates.last().map_or(f64::NEG_INFINITY, |i| i.tau)
}

/// Builds the model for `net` and `content` and optimizes it.
pub fn optimize_caching(
    net: &NetworkParams,
    content: &ContentParams,
    config: &OptimizerConfig,
    mode: GradientMode,
    quad: &QuadratureConfig,
) -> Result<(CachingPolicy, OptimizerTrace)> {
    let model = ScdpModel::from_content(net, content, quad)?;
    optimize_model(&model, config, mode)
}

/// Final SCDP of a trace together with the uniform and MPC baselines.
pub fn baselines(model: &ScdpModel) -> Result<(f64, f64)> {
    let uniform = model.tau(&uniform_policy(model.combinations().len())?)?;
    let mpc = model.tau(&mpc_policy(model.combinations(), model.popularity())?)?;
    Ok((uniform, mpc))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_examples() {
        assert_eq!(projection_matrix_apply(&[1.0, 1.0, 1.0]), alloc::vec![0.0, 0.0, 0.0]);
        assert_eq!(projection_matrix_apply(&[1.0, -1.0]), alloc::vec![1.0, -1.0]);
    }

    #[test]
    fn step_bound_examples() {
        assert_eq!(stepsize_bounds(&[0.5, 0.5], &[0.5, -0.5]), 1.0);
        assert_eq!(stepsize_bounds(&[1.0, 0.0], &[0.3, -0.3]), 0.0);
        assert_eq!(stepsize_bounds(&[0.2, 0.8], &[0.0, 0.0]), 0.0);
    }

    #[test]
    fn face_direction_drops_blocked_components() {
        let d = face_direction(&[0.0, 0.5, 0.5], &[-1.0, 1.0, 0.0]);
        assert_eq!(d[0], 0.0);
        assert!((d[1] - 0.5).abs() < 1e-15 && (d[2] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn line_search_finds_interior_max() {
        let c = [0.5, 0.5];
        let d = [0.25, -0.25];
        // objective in s: -(s - 1.3)^2 through c_0 = 0.5 + s / 4
        let f = |x: &[f64]| Ok(-((x[0] - 0.5) * 4.0 - 1.3) * ((x[0] - 0.5) * 4.0 - 1.3));
        let (s, _) = line_search(f, &c, &d, 2.0, -1.69, 1e-6).unwrap();
        assert!((s - 1.3).abs() < 1e-5, "{s}");
        let up = |x: &[f64]| Ok(x[0]);
        let (s, _) = line_search(up, &c, &d, 2.0, 0.5, 1e-6).unwrap();
        assert_eq!(s, 2.0);
        let (s, _) = line_search(up, &c, &d, 0.0, 0.5, 1e-6).unwrap();
        assert_eq!(s, 0.0);
    }
}
