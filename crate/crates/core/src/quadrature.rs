//! Adaptive 15-point Gauss–Kronrod integration with a bisection strategy, plus
//! a rational change of variable for semi-infinite ranges.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Tolerances shared by every numerical routine in the analytics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Bound on the neglected tail of the MRFS tie sum.
    pub mrfs_tail_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-12, mrfs_tail_tol: 1e-12, max_subdivisions: 500 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(self.rel_tol) || !ok(self.abs_tol) || !ok(self.mrfs_tail_tol) || self.max_subdivisions == 0 {
            return Err(crate::error::invalid("quadrature", "tolerances must be positive and finite"));
        }
        Ok(())
    }

    /// Same configuration with both integration tolerances scaled by `factor`.
    pub fn tightened(self, factor: f64) -> Self {
        Self { rel_tol: self.rel_tol * factor, abs_tol: self.abs_tol * factor, ..self }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Integral estimate with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

/// One application of the G7/K15 pair on `[a, b]`, returning the Kronrod
/// value and a QUADPACK-style error estimate.
pub fn gauss_kronrod_15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);
    let mut gauss = f_center * WG[3];
    let mut kronrod = f_center * WGK[7];
    let mut res_abs = math::abs(kronrod);
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (math::abs(f1) + math::abs(f2));
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[7] * math::abs(f_center - mean);
    for j in 0..7 {
        res_asc += WGK[j] * (math::abs(fv1[j] - mean) + math::abs(fv2[j] - mean));
    }
    let value = kronrod * half;
    let res_abs = res_abs * math::abs(half);
    let res_asc = res_asc * math::abs(half);
    let mut err = math::abs((kronrod - gauss) * half);
    if res_asc != 0.0 && err != 0.0 {
        let scale = math::powf(200.0 * err / res_asc, 1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Adaptive integration of `f` over the finite interval `[a, b]`.
///
/// `label` names the integral in the error returned on non-convergence.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
    label: &'static str,
) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0, subdivisions: 0 });
    }
    let (value, error) = gauss_kronrod_15(&mut f, a, b);
    let mut segments: Vec<Segment> = alloc::vec![Segment { a, b, value, error }];
    let mut total = value;
    let mut total_err = error;
    let mut subdivisions = 0;
    loop {
        let tolerance = cfg.abs_tol.max(cfg.rel_tol * math::abs(total));
        if !total.is_finite() {
            return Err(Error::Quadrature { integral: label, error: f64::INFINITY, tolerance, subdivisions });
        }
        if total_err <= tolerance {
            return Ok(Estimate { value: total, error: total_err, subdivisions });
        }
        if subdivisions >= cfg.max_subdivisions {
            return Err(Error::Quadrature { integral: label, error: total_err, tolerance, subdivisions });
        }
        // bisect the segment with the largest error; ties keep the earliest
        let mut worst = 0;
        for (i, s) in segments.iter().enumerate() {
            if s.error > segments[worst].error {
                worst = i;
            }
        }
        let Segment { a: sa, b: sb, value: sv, error: se } = segments.swap_remove(worst);
        let mid = 0.5 * (sa + sb);
        if mid <= sa.min(sb) || mid >= sa.max(sb) {
            return Err(Error::Quadrature { integral: label, error: total_err, tolerance, subdivisions });
        }
        let (v1, e1) = gauss_kronrod_15(&mut f, sa, mid);
        let (v2, e2) = gauss_kronrod_15(&mut f, mid, sb);
        total += v1 + v2 - sv;
        total_err += e1 + e2 - se;
        segments.push(Segment { a: sa, b: mid, value: v1, error: e1 });
        segments.push(Segment { a: mid, b: sb, value: v2, error: e2 });
        subdivisions += 1;
        // the running sums drift; refresh them from the segment list
        if subdivisions % 16 == 0 {
            total = segments.iter().map(|s| s.value).sum();
            total_err = segments.iter().map(|s| s.error).sum();
        }
    }
}

/// Integral of `f` over `[a, inf)` through `u = a + scale * t / (1 - t)`.
///
/// `scale` should be the length over which `f` varies; any positive value is
/// correct, a good one saves subdivisions.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    scale: f64,
    cfg: &QuadratureConfig,
    label: &'static str,
) -> Result<Estimate> {
    integrate(
        |t| {
            let one_minus = 1.0 - t;
            let u = a + scale * t / one_minus;
            let jac = scale / (one_minus * one_minus);
            let v = f(u) * jac;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        cfg,
        label,
    )
}
