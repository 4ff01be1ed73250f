//! Log-gamma, log-beta and log-sum-exp.
//!
//! Every probability in the crate is carried on the natural-log scale; these
//! are the primitives the likelihood, prior and evidence code build on.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];
const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 || x.is_infinite() {
        return Err(Error::Domain(format!("ln_gamma requires a finite x > 0, got {x}")));
    }
    Ok(ln_gamma_pos(x))
}

/// Unchecked variant for callers that already guarantee `x > 0`.
pub(crate) fn ln_gamma_pos(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx), with sin(πx) > 0 on (0, 0.5)
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma_pos(1.0 - x);
    }
    let x = x - 1.0;
    let mut series = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    HALF_LN_TWO_PI + (x + 0.5) * t.ln() - t + series.ln()
}

/// Natural log of the beta function `B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!(
            "ln_beta requires finite positive arguments, got ({a}, {b})"
        )));
    }
    Ok(ln_beta_pos(a, b))
}

pub(crate) fn ln_beta_pos(a: f64, b: f64) -> f64 {
    ln_gamma_pos(a) + ln_gamma_pos(b) - ln_gamma_pos(a + b)
}

/// `ln Σ exp(v_i)`, shifted by the maximum so that neither overflow nor
/// underflow occurs. Entries equal to `-inf` carry zero mass.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("log_sum_exp needs at least one value"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("log_sum_exp input contains NaN".into()));
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Domain("log_sum_exp: every entry is -inf".into()));
    }
    if max == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Streaming log-sum-exp accumulator.
///
/// Keeps a running maximum and a rescaled sum so that partial results stay
/// finite no matter how the magnitudes drift along the stream.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExpAccumulator {
    max: f64,
    scaled_sum: f64,
    count: usize,
}

impl Default for LogSumExpAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExpAccumulator {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled_sum: 0.0,
            count: 0,
        }
    }

    pub fn push(&mut self, value: f64) {
        self.count += 1;
        if value == f64::NEG_INFINITY {
            return;
        }
        if value > self.max {
            self.scaled_sum = self.scaled_sum * (self.max - value).exp() + 1.0;
            self.max = value;
        } else {
            self.scaled_sum += (value - self.max).exp();
        }
    }

    /// Number of values pushed so far, including `-inf` entries.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Current value of `ln Σ exp(v_i)`; `-inf` while no finite mass has been seen.
    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled_sum.ln()
        }
    }
}

/// Normalizes log weights in place into probabilities and returns them.
pub(crate) fn normalize_log_weights(log_weights: &[f64], out: &mut Vec<f64>) {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    out.clear();
    out.extend(log_weights.iter().map(|w| (w - max).exp()));
    let total: f64 = out.iter().sum();
    for p in out.iter_mut() {
        *p /= total;
    }
}
