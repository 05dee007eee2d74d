//! Fixed-precision number formatting for terminal output.

/// Significant digits in printed values.
pub const DIGITS: usize = 9;

/// Formats `x` with nine significant digits, in positional notation for
/// magnitudes in `[1e-4, 1e9)` and scientific notation otherwise.
pub fn sig(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return format!("{:.*}", DIGITS - 1, 0.0);
    }
    let exponent = x.abs().log10().floor() as i32;
    if !(-4..9).contains(&exponent) {
        return format!("{:.*e}", DIGITS - 1, x);
    }
    let decimals = (DIGITS as i32 - 1 - exponent).max(0) as usize;
    let text = format!("{x:.decimals$}");
    // Rounding may carry into a new leading digit (9.9999999996 -> 10.00000000).
    let digits = text.chars().filter(|c| c.is_ascii_digit()).skip_while(|&c| c == '0').count();
    if digits > DIGITS && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        text
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), sig)
}
