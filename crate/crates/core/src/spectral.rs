//! Adjacency spectra and the pseudorandomness checks built on them.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::graph::{Graph, Vertex, VertexSet};

/// Largest graph the dense eigensolver accepts.
pub const DENSE_CAP: usize = 4096;

/// Slack added to every comparison against an analytic bound.
pub const BOUND_SLACK: f64 = 1e-9;

/// Largest graph on which [`typicality_check`] enumerates every subset.
pub const EXHAUSTIVE_TYPICALITY_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    /// Adjacency eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// `max_{i >= 2} |lambda_i|`.
    pub lambda: f64,
    pub d: usize,
    /// `lambda - 2 sqrt(d - 1)`; nonpositive for Ramanujan graphs.
    pub alon_boppana_slack: f64,
}

impl SpectralProfile {
    pub fn is_ramanujan(&self) -> bool {
        self.alon_boppana_slack <= BOUND_SLACK
    }
}

fn adjacency(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for v in 0..n {
        for &u in g.neighbors(v as Vertex) {
            // a loop contributes its two edge-ends, i.e. 2 on the diagonal
            a[(v, u as usize)] += 1.0;
        }
    }
    a
}

/// Full spectrum by dense symmetric eigendecomposition.
pub fn spectrum(g: &Graph) -> Result<SpectralProfile> {
    spectrum_with_cap(g, DENSE_CAP)
}

pub fn spectrum_with_cap(g: &Graph, cap: usize) -> Result<SpectralProfile> {
    if g.n() > cap {
        return Err(Error::CapacityExceeded { n: g.n(), cap });
    }
    let eig = SymmetricEigen::new(adjacency(g));
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    let lambda = eigenvalues.iter().skip(1).map(|x| libm::fabs(*x)).fold(0.0, f64::max);
    Ok(SpectralProfile {
        lambda,
        d: g.d(),
        alon_boppana_slack: lambda - 2.0 * libm::sqrt(g.d() as f64 - 1.0),
        eigenvalues,
    })
}

/// Power-method estimate for graphs above the dense cap.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate {
    pub lambda_1: f64,
    /// Estimate of `lambda`, the largest modulus orthogonal to the all-ones
    /// vector. Approaches the true value from below.
    pub lambda: f64,
    /// Change of the `lambda` estimate over the last iteration.
    pub tolerance: f64,
    pub iterations: usize,
}

/// Estimates `lambda_1` and `lambda` by power iteration, deflating the
/// all-ones direction. Deterministic: the start vector is fixed.
pub fn estimate_spectrum(g: &Graph, iterations: usize) -> SpectralEstimate {
    let n = g.n();
    let apply = |x: &[f64], out: &mut [f64]| {
        for (v, o) in out.iter_mut().enumerate() {
            *o = g.neighbors(v as Vertex).iter().map(|&u| x[u as usize]).sum();
        }
    };
    let center = |x: &mut [f64]| {
        let mean = x.iter().sum::<f64>() / n as f64;
        x.iter_mut().for_each(|e| *e -= mean);
    };
    let normalize = |x: &mut [f64]| -> f64 {
        let norm = libm::sqrt(x.iter().map(|e| e * e).sum::<f64>());
        if norm > 0.0 {
            x.iter_mut().for_each(|e| *e /= norm);
        }
        norm
    };

    let ones = vec![1.0 / libm::sqrt(n as f64); n];
    let mut tmp = vec![0.0; n];
    apply(&ones, &mut tmp);
    let lambda_1 = tmp.iter().zip(&ones).map(|(a, b)| a * b).sum();

    // fixed pseudo-random start, orthogonal to the all-ones vector
    let mut x: Vec<f64> = (0..n as u64)
        .map(|i| {
            let h = i.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(31) ^ 0xD6E8_FEB8_6659_FD93;
            (h >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    center(&mut x);
    normalize(&mut x);
    let (mut lambda, mut tolerance) = (0.0, f64::INFINITY);
    for _ in 0..iterations {
        apply(&x, &mut tmp);
        center(&mut tmp);
        let est = normalize(&mut tmp);
        tolerance = libm::fabs(est - lambda);
        lambda = est;
        core::mem::swap(&mut x, &mut tmp);
    }
    SpectralEstimate { lambda_1, lambda, tolerance, iterations }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingCheck {
    /// `|e(U, W) - d|U||W|/n|`.
    pub lhs: f64,
    /// `lambda sqrt(|U||W|(1 - |U|/n)(1 - |W|/n))`.
    pub rhs: f64,
    pub pass: bool,
}

/// Expander mixing lemma on disjoint `u` and `w`.
pub fn mixing_check(g: &Graph, u: &VertexSet, w: &VertexSet, lambda: f64) -> Result<MixingCheck> {
    let cut = g.edges_between(u, w)? as f64;
    let n = g.n() as f64;
    let (a, b) = (u.len() as f64, w.len() as f64);
    let lhs = libm::fabs(cut - g.d() as f64 * a * b / n);
    let rhs = lambda * libm::sqrt((a * b * (1.0 - a / n) * (1.0 - b / n)).max(0.0));
    Ok(MixingCheck { lhs, rhs, pass: lhs <= rhs + BOUND_SLACK })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceCheck {
    /// Mean of `d_S(v)` over all `v`.
    pub mean: f64,
    /// Whether `sum_v d_S(v) = d|S|` exactly.
    pub mean_exact: bool,
    /// Population variance of `d_S(v)` over all `v`.
    pub variance: f64,
    /// `lambda^2 (|S|/n)(1 - |S|/n)`.
    pub bound: f64,
    pub pass: bool,
}

/// Exact mean and variance of `d_S(v)` over a uniform vertex, against the
/// spectral bound.
pub fn variance_bound_check(g: &Graph, s: &VertexSet, lambda: f64) -> Result<VarianceCheck> {
    if s.universe() != g.n() {
        return Err(invalid("vertex set was built for a different vertex count"));
    }
    let n = g.n() as u128;
    let (mut sum, mut sumsq) = (0u128, 0u128);
    for v in 0..g.n() as Vertex {
        let k = g.degree_into(v, s) as u128;
        sum += k;
        sumsq += k * k;
    }
    let frac = s.len() as f64 / g.n() as f64;
    let variance = (n * sumsq - sum * sum) as f64 / (n * n) as f64;
    let bound = lambda * lambda * frac * (1.0 - frac);
    Ok(VarianceCheck {
        mean: sum as f64 / n as f64,
        mean_exact: sum == (g.d() * s.len()) as u128,
        variance,
        bound,
        pass: variance <= bound + BOUND_SLACK,
    })
}

/// Paley graph on `Z_q`: `u ~ v` iff `u - v` is a nonzero square mod `q`.
pub fn paley_graph(q: u32) -> Result<Graph> {
    if !is_prime(q) {
        return Err(invalid("Paley graphs need a prime order"));
    }
    if q % 4 != 1 {
        return Err(invalid("Paley graphs need q = 1 mod 4"));
    }
    let qq = q as u64;
    let mut residue = vec![false; q as usize];
    for x in 1..qq {
        residue[(x * x % qq) as usize] = true;
    }
    let squares: Vec<u32> = (1..q).filter(|&r| residue[r as usize]).collect();
    let d = squares.len();
    let mut ends = Vec::with_capacity(q as usize * d);
    for v in 0..q {
        ends.extend(squares.iter().map(|&r| ((v as u64 + r as u64) % qq) as u32));
    }
    Graph::from_edge_ends(q as usize, d, ends)
}

fn is_prime(q: u32) -> bool {
    if q < 2 {
        return false;
    }
    let q = q as u64;
    (2..).take_while(|k| k * k <= q).all(|k| !q.is_multiple_of(k))
}

/// Hypotheses `lambda <= C sqrt(d)` and `d >= 2 C sqrt(n ln^(1/9) n)` for a
/// user-chosen constant `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpanderHypothesis {
    pub lambda_bound: f64,
    pub lambda_ok: bool,
    pub degree_bound: f64,
    pub degree_ok: bool,
}

pub fn expander_hypothesis(lambda: f64, d: usize, n: usize, c: f64) -> ExpanderHypothesis {
    let lambda_bound = c * libm::sqrt(d as f64);
    let nf = n as f64;
    let degree_bound = 2.0 * c * libm::sqrt(nf * libm::pow(libm::log(nf), 1.0 / 9.0));
    ExpanderHypothesis {
        lambda_bound,
        lambda_ok: lambda <= lambda_bound + BOUND_SLACK,
        degree_bound,
        degree_ok: d as f64 >= degree_bound,
    }
}

/// One checked set in a typicality condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalitySample {
    pub size: usize,
    /// `|X_S|` for conditions 1 and 2, `e(S, V \ S)` for condition 3.
    pub observed: f64,
    /// Upper bound on `|X_S|`, or the allowed deviation of the cut.
    pub bound: f64,
    /// Expected cut `|S|(n - |S|)p` for condition 3, zero otherwise.
    pub expected: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConditionReport {
    pub samples: Vec<TypicalitySample>,
    pub pass: bool,
}

impl ConditionReport {
    fn push(&mut self, s: TypicalitySample) {
        self.pass &= s.pass;
        self.samples.push(s);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypicalityReport {
    pub p: f64,
    pub epsilon: f64,
    pub exhaustive: bool,
    /// Large sets: few vertices have `d_S(v)` outside `(1 +- eps) p |S|`.
    pub condition1: ConditionReport,
    /// Small sets: few vertices have `d_S(v) > eps p n`.
    pub condition2: ConditionReport,
    /// Every set: `e(S, V \ S) = |S|(n - |S|) p (1 +- 8 sqrt(eps))`.
    pub condition3: ConditionReport,
}

impl TypicalityReport {
    pub fn pass(&self) -> bool {
        self.condition1.pass && self.condition2.pass && self.condition3.pass
    }
}

struct Typicality<'a> {
    g: &'a Graph,
    p: f64,
    eps: f64,
    counts: Vec<u32>,
}

impl Typicality<'_> {
    fn degrees_into(&mut self, s: &VertexSet) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        for v in s.iter() {
            for &u in self.g.neighbors(v) {
                self.counts[u as usize] += 1;
            }
        }
    }

    fn large(&mut self, s: &VertexSet) -> TypicalitySample {
        self.degrees_into(s);
        let n = self.g.n() as f64;
        let target = self.p * s.len() as f64;
        let outliers = (0..self.g.n())
            .filter(|&v| !s.contains(v as Vertex))
            .filter(|&v| libm::fabs(self.counts[v] as f64 - target) > self.eps * target + BOUND_SLACK)
            .count() as f64;
        let bound = 8.0 * n / libm::log(n);
        TypicalitySample { size: s.len(), observed: outliers, bound, expected: 0.0, pass: outliers <= bound }
    }

    fn small(&mut self, s: &VertexSet) -> TypicalitySample {
        self.degrees_into(s);
        let cap = self.eps * self.p * self.g.n() as f64;
        let outliers = (0..self.g.n())
            .filter(|&v| !s.contains(v as Vertex))
            .filter(|&v| self.counts[v] as f64 > cap + BOUND_SLACK)
            .count() as f64;
        let bound = self.eps * s.len() as f64;
        TypicalitySample {
            size: s.len(),
            observed: outliers,
            bound,
            expected: 0.0,
            pass: outliers <= bound + BOUND_SLACK,
        }
    }

    fn cut(&mut self, s: &VertexSet) -> TypicalitySample {
        let n = self.g.n();
        let cut: usize = s
            .iter()
            .map(|v| self.g.neighbors(v).iter().filter(|&&u| !s.contains(u)).count())
            .sum();
        let expected = (s.len() * (n - s.len())) as f64 * self.p;
        let bound = 8.0 * libm::sqrt(self.eps) * expected;
        TypicalitySample {
            size: s.len(),
            observed: cut as f64,
            bound,
            expected,
            pass: libm::fabs(cut as f64 - expected) <= bound + BOUND_SLACK,
        }
    }
}

/// Checks the three `(p, eps)`-typicality conditions with `p = d/n`.
///
/// The conditions quantify over all subsets; graphs with at most 16 vertices
/// are checked exhaustively. Larger graphs get `budget` uniform random
/// subsets spread round-robin over the size strata `{eps^2 n, 2 eps^2 n,
/// n/4, n/2}` (conditions 1 and 3) and `{sqrt n, eps^2 n / 2}` capped at
/// `eps^2 n` (condition 2).
pub fn typicality_check<R: Rng + ?Sized>(
    g: &Graph,
    eps: f64,
    budget: usize,
    rng: &mut R,
) -> Result<TypicalityReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("epsilon must lie in (0, 1)"));
    }
    let n = g.n();
    let nf = n as f64;
    let mut ctx = Typicality { g, p: g.d() as f64 / nf, eps, counts: vec![0; n] };
    let empty = || ConditionReport { samples: Vec::new(), pass: true };
    let (mut c1, mut c2, mut c3) = (empty(), empty(), empty());
    let small_limit = eps * eps * nf;
    let exhaustive = n <= EXHAUSTIVE_TYPICALITY_LIMIT;

    if exhaustive {
        for bits in 0u32..(1u32 << n) {
            let s = VertexSet::from_mask((0..n).map(|v| bits >> v & 1 == 1).collect());
            let size = s.len() as f64;
            if size >= small_limit {
                c1.push(ctx.large(&s));
            }
            if size <= small_limit {
                c2.push(ctx.small(&s));
            }
            c3.push(ctx.cut(&s));
        }
    } else {
        let clamp = |x: f64| (libm::ceil(x) as usize).clamp(1, n);
        let large_sizes = [
            clamp(small_limit),
            clamp(2.0 * small_limit),
            clamp(nf / 4.0),
            clamp(nf / 2.0),
        ];
        let small_cap = libm::floor(small_limit) as usize;
        let small_sizes: Vec<usize> = [libm::sqrt(nf), small_limit / 2.0]
            .iter()
            .map(|&x| (libm::ceil(x) as usize).min(small_cap))
            .filter(|&k| k >= 1)
            .collect();
        let mut tasks: Vec<(u8, usize)> = Vec::new();
        tasks.extend(large_sizes.iter().map(|&k| (1, k)));
        tasks.extend(small_sizes.iter().map(|&k| (2, k)));
        tasks.extend(large_sizes.iter().map(|&k| (3, k)));
        for i in 0..budget {
            let (cond, k) = tasks[i % tasks.len()];
            let s = VertexSet::new(n, index::sample(rng, n, k).into_iter().map(|v| v as Vertex))?;
            match cond {
                1 => c1.push(ctx.large(&s)),
                2 => c2.push(ctx.small(&s)),
                _ => c3.push(ctx.cut(&s)),
            }
        }
    }
    Ok(TypicalityReport {
        p: ctx.p,
        epsilon: eps,
        exhaustive,
        condition1: c1,
        condition2: c2,
        condition3: c3,
    })
}
