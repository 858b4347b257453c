//! Broadcast-time constants and the deterministic middle-phase recursion
//!
//! ```text
//! f_t     = 1 - p_t / (d (p_t + d u_t))
//! p_{t+1} = (1 - 1/d) f_t p_t + d u_t (f_t - f_t^d)
//! u_{t+1} = f_t^d u_t
//! ```
//!
//! `p_t` tracks unexposed clones of informed vertices and `u_t` uninformed
//! vertices. The integrator runs in `f64`; every 64 steps one step is redone
//! in exact rational arithmetic and the run fails if the two disagree by
//! more than `1e-8` relative.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::error::{domain, invalid, Error, Result};
use crate::push::PhaseThreshold;

/// `1/ln 2 + 1`, the limit of `C_d` as `d` grows.
pub const LIMIT_CONSTANT: f64 = core::f64::consts::LOG2_E + 1.0;

const DRIFT_CHECK_EVERY: usize = 64;
const DRIFT_TOLERANCE: f64 = 1e-8;

/// `C_d = 1/ln(2(1 - 1/d)) - 1/(d ln(1 - 1/d))`. Accepts real `d > 2`.
pub fn c_d(d: f64) -> Result<f64> {
    if !(d > 2.0) || !d.is_finite() {
        return Err(domain("C_d is defined for d > 2"));
    }
    let keep = 1.0 - 1.0 / d;
    Ok(1.0 / libm::log(2.0 * keep) - 1.0 / (d * libm::log1p(-1.0 / d)))
}

/// Growth factor `q = 2(1 - 1/d)` of the unexposed clone count early on.
pub fn growth_factor(d: f64) -> f64 {
    2.0 * (1.0 - 1.0 / d)
}

/// `F = 1 - p / (d (p + d u))`.
pub fn f_of(p: f64, u: f64, d: f64) -> Result<f64> {
    if p < 0.0 || u < 0.0 {
        return Err(domain("p and u must be nonnegative"));
    }
    if p + d * u <= 0.0 {
        return Err(domain("F is undefined at p = u = 0"));
    }
    Ok(1.0 - p / (d * (p + d * u)))
}

/// `g(x) = (1 - 1/d + d/x) (1 - 1/(d(1 + d/x)))^(1-d) - d/x`, the one-step
/// growth of `r = p/u`. `g(0)` is the limit `2(1 - 1/d)`.
pub fn g_ratio(x: f64, d: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(domain("g is defined for x >= 0"));
    }
    if x == 0.0 {
        return Ok(growth_factor(d));
    }
    let dx = d / x;
    // with E = (1 - s)^(1-d), g = (1 - 1/d) E + (d/x)(E - 1); E - 1 via expm1
    // keeps small x free of cancellation
    let s = x / (d * (x + d));
    let log_e = (1.0 - d) * libm::log1p(-s);
    Ok((1.0 - 1.0 / d) * libm::exp(log_e) + dx * libm::expm1(log_e))
}

/// One step of the recursion in `f64`.
pub fn step(p: f64, u: f64, d: u32) -> (f64, f64) {
    let df = d as f64;
    let miss = p / (df * (p + df * u));
    let f = 1.0 - miss;
    // f - f^d = f (1 - f^(d-1)), evaluated without cancellation near f = 1
    let log_f = libm::log1p(-miss);
    let tail = -libm::expm1((df - 1.0) * log_f);
    ((1.0 - 1.0 / df) * f * p + df * u * f * tail, libm::exp(df * log_f) * u)
}

/// One step of the recursion in exact rational arithmetic.
pub fn step_exact(p: f64, u: f64, d: u32) -> Option<(f64, f64)> {
    let p = BigRational::from_float(p)?;
    let u = BigRational::from_float(u)?;
    let dr = BigRational::from_integer(BigInt::from(d));
    let one = BigRational::one();
    let total = &p + &dr * &u;
    if total == BigRational::from_integer(BigInt::from(0)) {
        return None;
    }
    let f = &one - &p / (&dr * &total);
    let fd = num_traits::pow(f.clone(), d as usize);
    let next_p = (&one - &one / &dr) * &f * &p + &dr * &u * (&f - &fd);
    let next_u = &fd * &u;
    Some((next_p.to_f64()?, next_u.to_f64()?))
}

/// Initial state and stopping rule for [`integrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryParams {
    pub n: f64,
    pub d: u32,
    pub p_start: f64,
    pub u_start: f64,
    /// Integration stops once `u <= end_u`.
    pub end_u: f64,
    /// `epsilon` in the definition of `t_1`.
    pub epsilon: f64,
}

impl TheoryParams {
    /// Starts from a tree front of `I_0` informed vertices, `p = d I_0`,
    /// `u = n - I_0`, and stops at `u <= I_0`, with `I_0 = ln^7 n`. When
    /// that threshold is not below `n` the run starts from a single informed
    /// vertex and stops at `u <= 1`.
    pub fn new(n: f64, d: u32) -> Result<Self> {
        Self::with_threshold(n, d, PhaseThreshold::ASYMPTOTIC)
    }

    pub fn with_threshold(n: f64, d: u32, threshold: PhaseThreshold) -> Result<Self> {
        if !(n >= 2.0) {
            return Err(invalid("n must be at least 2"));
        }
        let front = if threshold.applies(n as usize) { threshold.value(n as usize) } else { 1.0 };
        Self::from_state(n, d, d as f64 * front, n - front)?.ending_at(front)
    }

    /// Seeds the recursion from an observed state, e.g. a simulated trace at
    /// its `T0`. Stops at `u <= 1` unless changed with [`Self::ending_at`].
    pub fn from_state(n: f64, d: u32, p: f64, u: f64) -> Result<Self> {
        if d < 3 {
            return Err(invalid("the recursion needs d >= 3"));
        }
        if !(p > 0.0) {
            return Err(invalid("p_start must be positive"));
        }
        if !(u > 0.0 && u < n) {
            return Err(invalid("u_start must lie in (0, n)"));
        }
        Ok(Self { n, d, p_start: p, u_start: u, end_u: 1.0, epsilon: 0.01 })
    }

    pub fn ending_at(mut self, end_u: f64) -> Result<Self> {
        if !(end_u > 0.0) {
            return Err(invalid("end threshold must be positive"));
        }
        self.end_u = end_u;
        Ok(self)
    }

    /// Informed vertices at the start, `n - u_start`.
    pub fn informed_start(&self) -> f64 {
        self.n - self.u_start
    }

    /// Largest horizon [`integrate`] accepts: `10 C_d ln n`.
    pub fn horizon_cap(&self) -> usize {
        let c = c_d(self.d as f64).unwrap_or(f64::INFINITY);
        libm::floor(10.0 * c * libm::log(self.n)) as usize
    }
}

/// Deterministic trajectory of the recursion; index `k` is `k` rounds after
/// the seeding round.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryTrajectory {
    pub params: TheoryParams,
    pub p: Vec<f64>,
    pub u: Vec<f64>,
    pub f: Vec<f64>,
    pub r: Vec<f64>,
    /// Last step with `q^k <= epsilon n / I_0`.
    pub t1: usize,
    /// First step with `p >= u ln^2 n`.
    pub t2: Option<usize>,
    /// Steps until `u <= end_u`.
    pub steps_to_end: usize,
}

impl TheoryTrajectory {
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Whether `p_k >= p_0 q^k - 3 p_0^2 q^(2k) / n` for every `k <= t1`.
    pub fn lower_envelope_holds(&self) -> bool {
        let q = growth_factor(self.params.d as f64);
        let p0 = self.p[0];
        (0..=self.t1.min(self.len() - 1)).all(|k| {
            let qk = libm::pow(q, k as f64);
            self.p[k] >= p0 * qk - 3.0 * p0 * p0 * qk * qk / self.params.n - 1e-9 * p0 * qk
        })
    }
}

/// Integrates the recursion from `params` for at most `horizon` steps.
pub fn integrate(params: &TheoryParams, horizon: usize) -> Result<TheoryTrajectory> {
    let cap = params.horizon_cap();
    if horizon > cap {
        return Err(invalid("horizon exceeds 10 C_d ln n"));
    }
    let d = params.d;
    let df = d as f64;
    let q = growth_factor(df);
    let ln_n = libm::log(params.n);
    let room = params.epsilon * params.n / params.informed_start();
    let t1 = if room >= 1.0 { libm::floor(libm::log(room) / libm::log(q)) as usize } else { 0 };

    let (mut p, mut u) = (params.p_start, params.u_start);
    let mut traj = TheoryTrajectory {
        params: params.clone(),
        p: Vec::new(),
        u: Vec::new(),
        f: Vec::new(),
        r: Vec::new(),
        t1,
        t2: None,
        steps_to_end: 0,
    };
    let mut k = 0usize;
    loop {
        let f = f_of(p, u, df)?;
        traj.p.push(p);
        traj.u.push(u);
        traj.f.push(f);
        traj.r.push(p / u);
        if traj.t2.is_none() && p >= u * ln_n * ln_n {
            traj.t2 = Some(k);
        }
        if k <= t1 && p > params.p_start * libm::pow(q, k as f64) * (1.0 + 1e-12) {
            return Err(Error::EnvelopeViolation { step: k });
        }
        if u <= params.end_u {
            traj.steps_to_end = k;
            return Ok(traj);
        }
        if k == horizon {
            return Err(Error::Divergence { horizon, target: params.end_u });
        }
        let (np, nu) = step(p, u, d);
        if k.is_multiple_of(DRIFT_CHECK_EVERY) {
            if let Some((ep, eu)) = step_exact(p, u, d) {
                let dev = rel(np, ep).max(rel(nu, eu));
                if dev > DRIFT_TOLERANCE {
                    return Err(Error::PrecisionDrift { step: k, deviation: dev });
                }
            }
        }
        p = np;
        u = nu;
        k += 1;
    }
}

fn rel(x: f64, exact: f64) -> f64 {
    if exact == 0.0 {
        libm::fabs(x)
    } else {
        libm::fabs(x - exact) / libm::fabs(exact)
    }
}

/// Leading-order broadcast-time prediction with a phase breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// `C_d ln n`.
    pub leading: f64,
    pub c_d: f64,
    /// Steps of the integrated recursion from its default start to its
    /// default end (see [`TheoryParams::new`]).
    pub middle: usize,
    /// Whether `ln^7 n < n`, i.e. whether the middle phase is delimited by
    /// the asymptotic thresholds rather than running from one vertex.
    pub thresholds_apply: bool,
    /// Heuristic multiplier `H` used for the bands below.
    pub multiplier: f64,
    /// `[0, H ln ln n]`, the preliminary-phase band.
    pub preliminary_band: (f64, f64),
    /// `[0, H (ln ln n)^2]`, the final-phase band.
    pub final_band: (f64, f64),
}

/// Predicts the broadcast time on a random d-regular graph. The preliminary
/// and final phases are only known up to their order, so they are reported
/// as bands scaled by `multiplier` (default 10).
pub fn predict_broadcast_time(n: usize, d: u32, multiplier: f64) -> Result<Prediction> {
    if n < 10 {
        return Err(invalid("prediction needs n >= 10"));
    }
    let c = c_d(d as f64)?;
    let params = TheoryParams::new(n as f64, d)?;
    let traj = integrate(&params, params.horizon_cap())?;
    let lnln = libm::log(libm::log(n as f64));
    Ok(Prediction {
        leading: c * libm::log(n as f64),
        c_d: c,
        middle: traj.steps_to_end,
        thresholds_apply: PhaseThreshold::ASYMPTOTIC.applies(n),
        multiplier,
        preliminary_band: (0.0, multiplier * lnln),
        final_band: (0.0, multiplier * lnln * lnln),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_d_reference_values() {
        // reference values from an independent 30-digit evaluation
        assert!((c_d(3.0).unwrap() - 4.298_160_651).abs() < 1e-8);
        assert!((c_d(4.0).unwrap() - 3.335_318_337).abs() < 1e-8);
        assert!((c_d(5.0).unwrap() - 3.023_927_169).abs() < 1e-8);
        assert!((c_d(8.0).unwrap() - 2.723_049_754).abs() < 1e-8);
        assert!((LIMIT_CONSTANT - 2.442_695_04).abs() < 1e-8);
        assert!(c_d(2.0).is_err());
        assert!(c_d(1.5).is_err());
    }

    #[test]
    fn f_examples() {
        assert!((f_of(5.0, 0.0, 3.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((f_of(3.0 * 7.0, 7.0, 3.0).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        assert!((f_of(1e-12, 1.0, 3.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(f_of(0.0, 0.0, 3.0).is_err());
    }

    #[test]
    fn g_limits() {
        assert!((g_ratio(0.0, 3.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((g_ratio(1e-9, 3.0).unwrap() - 4.0 / 3.0).abs() < 1e-6);
        let (a, b) = (g_ratio(0.1, 3.0).unwrap(), g_ratio(1.0, 3.0).unwrap());
        assert!(b > a && a > 4.0 / 3.0);
        assert!(g_ratio(-1.0, 3.0).is_err());
    }

    #[test]
    fn g_monotone_on_log_grid() {
        for d in [3.0, 4.0, 8.0, 100.0] {
            let mut last = g_ratio(0.0, d).unwrap();
            for k in -120..=120 {
                let g = g_ratio(libm::pow(10.0, k as f64 / 20.0), d).unwrap();
                assert!(g >= last, "d = {d}, k = {k}");
                last = g;
            }
        }
    }

    #[test]
    fn single_step_by_hand() {
        let f: f64 = 1.0 - 100.0 / (3.0 * (100.0 + 3e6));
        assert!((f - 0.999_988_9).abs() < 1e-7);
        let (p, u) = step(100.0, 1e6, 3);
        let want_p = (2.0 / 3.0) * f * 100.0 + 3e6 * (f - f * f * f);
        assert!((p - want_p).abs() < 1e-9 * want_p);
        assert!((u - f * f * f * 1e6).abs() < 1e-6);
        let (ep, eu) = step_exact(100.0, 1e6, 3).unwrap();
        assert!((p - ep).abs() / ep < 1e-12 && (u - eu).abs() / eu < 1e-12);
    }

    #[test]
    fn growth_and_endgame_rates() {
        let (p, _) = step(10.0, 1e12, 3);
        assert!((p / 10.0 - 4.0 / 3.0).abs() < 1e-9);
        let (_, u) = step(1e12, 10.0, 3);
        assert!((u / 10.0 - 8.0 / 27.0).abs() < 1e-9);
    }

    #[test]
    fn integrate_guards() {
        let params = TheoryParams::from_state(1e5, 3, 30.0, 1e5 - 10.0).unwrap();
        assert!(integrate(&params, params.horizon_cap() + 1).is_err());
        assert!(matches!(integrate(&params, 3), Err(Error::Divergence { .. })));
        assert!(TheoryParams::from_state(1e5, 2, 30.0, 10.0).is_err());
        assert!(TheoryParams::from_state(1e5, 3, 0.0, 10.0).is_err());
        assert!(TheoryParams::from_state(1e5, 3, 1.0, 1e5).is_err());
    }

    #[test]
    fn prediction_linear_in_ln_n() {
        let a = predict_broadcast_time(100_000, 3, 10.0).unwrap();
        assert!((a.leading - 49.484_403).abs() < 1e-5);
        let b = predict_broadcast_time(200_000, 3, 10.0).unwrap();
        assert!((b.leading - a.leading - a.c_d * core::f64::consts::LN_2).abs() < 1e-9);
        assert!(!a.thresholds_apply);
        assert!(predict_broadcast_time(5, 3, 10.0).is_err());
    }
}
