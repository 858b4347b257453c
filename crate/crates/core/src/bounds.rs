//! Tail-bound calculators for the two concentration inequalities the
//! analysis rests on. All bounds are clamped to 1.

use crate::error::{domain, Result};

/// A clamped tail bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBound {
    /// `min(1, raw)`.
    pub value: f64,
    /// The formula before clamping.
    pub raw: f64,
    /// `value < 0.5`.
    pub informative: bool,
    /// Whether the inputs lie in the regime the inequality is stated for.
    pub applicable: bool,
}

impl TailBound {
    fn new(raw: f64, applicable: bool) -> Self {
        let value = raw.min(1.0);
        Self { value, raw, informative: value < 0.5, applicable }
    }
}

/// Sum of identically distributed, negatively correlated indicators with
/// mean `mean`, deviating by more than `deviation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernoffQuery {
    pub mean: f64,
    pub deviation: f64,
}

/// `2 exp(-t^2 / (2 (mu + t/3)))`.
pub fn chernoff_tail(q: ChernoffQuery) -> Result<TailBound> {
    let ChernoffQuery { mean, deviation: t } = q;
    if !(mean >= 0.0 && t >= 0.0) || !mean.is_finite() || !t.is_finite() {
        return Err(domain("Chernoff bound needs finite mean >= 0 and deviation >= 0"));
    }
    if t == 0.0 {
        return Ok(TailBound::new(f64::INFINITY, true));
    }
    Ok(TailBound::new(2.0 * libm::exp(-t * t / (2.0 * (mean + t / 3.0))), true))
}

/// Function of a random permutation with Lipschitz constant `lipschitz`
/// under swaps and certificates of size `certificate_rate * value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TalagrandQuery {
    pub median: f64,
    pub deviation: f64,
    pub certificate_rate: f64,
    pub lipschitz: f64,
}

/// `4 exp(-t^2 / (16 r c^2 (m + t)))`.
pub fn talagrand_tail(q: TalagrandQuery) -> Result<TailBound> {
    let TalagrandQuery { median: m, deviation: t, certificate_rate: r, lipschitz: c } = q;
    if !(m > 0.0 && r > 0.0 && c > 0.0) {
        return Err(domain("median, certificate rate and Lipschitz constant must be positive"));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(domain("deviation must be finite and nonnegative"));
    }
    Ok(TailBound::new(4.0 * libm::exp(-t * t / (16.0 * r * c * c * (m + t))), true))
}

/// `P(|X - mu| >= eps mu) <= 4 exp(-eps^2 mu / (64 d (1 + eps)))` for the
/// matching statistics. Applicable when `mu > ln^2 n` and `eps > mu^(-1/2)`.
pub fn matching_tail(mu: f64, eps: f64, d: usize, n: usize) -> Result<TailBound> {
    if !(mu > 0.0) || !(eps > 0.0) || !mu.is_finite() || !eps.is_finite() {
        return Err(domain("matching tail needs mu > 0 and eps > 0"));
    }
    if d < 3 {
        return Err(domain("matching tail needs d >= 3"));
    }
    let ln = libm::log(n as f64);
    let applicable = mu > ln * ln && eps > 1.0 / libm::sqrt(mu);
    let raw = 4.0 * libm::exp(-eps * eps * mu / (64.0 * d as f64 * (1.0 + eps)));
    Ok(TailBound::new(raw, applicable))
}
