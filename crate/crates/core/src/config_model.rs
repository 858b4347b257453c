//! The configuration model: uniform perfect matchings on the clone set
//! `V_n x [d]`, their projection to d-regular multigraphs, and rejection
//! sampling of simple d-regular graphs.
//!
//! Clone `(v, slot)` has index `v * d + slot` (both 0-based).

use alloc::vec;
use alloc::vec::Vec;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::graph::{Graph, Vertex};

/// Sentinel partner for an unmatched clone.
pub const UNMATCHED: u32 = u32::MAX;

/// Default cap on rejection-sampling attempts.
pub const DEFAULT_MAX_ATTEMPTS: u32 = 1000;

/// Largest universe the exhaustive enumerator accepts (945 matchings).
pub const ENUMERATION_LIMIT: usize = 10;

/// Largest universe for which [`count_matchings`] is exact.
pub const COUNT_LIMIT: usize = 20;

/// One edge-end slot of a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexClone {
    pub vertex: Vertex,
    pub slot: u32,
}

impl VertexClone {
    pub fn index(self, d: usize) -> u32 {
        self.vertex * d as u32 + self.slot
    }

    pub fn from_index(index: u32, d: usize) -> Self {
        Self { vertex: index / d as u32, slot: index % d as u32 }
    }
}

/// A partial or perfect matching on clones `0..universe`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CloneMatching {
    partner: Vec<u32>,
    matched: usize,
}

impl CloneMatching {
    /// Empty matching on `universe` clones.
    pub fn new(universe: usize) -> Self {
        Self { partner: vec![UNMATCHED; universe], matched: 0 }
    }

    pub fn universe(&self) -> usize {
        self.partner.len()
    }

    pub fn partner(&self, c: u32) -> Option<u32> {
        match self.partner[c as usize] {
            UNMATCHED => None,
            p => Some(p),
        }
    }

    #[inline]
    pub fn is_matched(&self, c: u32) -> bool {
        self.partner[c as usize] != UNMATCHED
    }

    /// Number of matched (exposed) clones.
    pub fn matched(&self) -> usize {
        self.matched
    }

    pub fn is_complete(&self) -> bool {
        self.matched == self.partner.len()
    }

    /// Pairs two unmatched, distinct clones.
    pub fn pair(&mut self, a: u32, b: u32) -> Result<()> {
        if a == b {
            return Err(invalid("cannot match a clone to itself"));
        }
        for c in [a, b] {
            match self.partner.get(c as usize) {
                None => return Err(invalid("clone outside the universe")),
                Some(&p) if p != UNMATCHED => return Err(invalid("clone already matched")),
                _ => {}
            }
        }
        self.link(a, b);
        Ok(())
    }

    #[inline]
    pub(crate) fn link(&mut self, a: u32, b: u32) {
        self.partner[a as usize] = b;
        self.partner[b as usize] = a;
        self.matched += 2;
    }

    #[inline]
    fn unlink(&mut self, a: u32) {
        let b = self.partner[a as usize];
        self.partner[a as usize] = UNMATCHED;
        self.partner[b as usize] = UNMATCHED;
        self.matched -= 2;
    }

    /// Matched pairs `(a, b)` with `a < b`.
    pub fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.partner
            .iter()
            .enumerate()
            .filter(|&(a, &b)| b != UNMATCHED && (a as u32) < b)
            .map(|(a, &b)| (a as u32, b))
    }

    /// Canonical encoding: the partner array itself.
    pub fn partners(&self) -> &[u32] {
        &self.partner
    }
}

/// Uniform perfect matching on `universe` clones: shuffle, then pair
/// consecutive entries.
pub fn sample_matching<R: Rng + ?Sized>(universe: usize, rng: &mut R) -> Result<CloneMatching> {
    if !universe.is_multiple_of(2) {
        return Err(invalid("clone universe must have even size"));
    }
    let mut perm: Vec<u32> = (0..universe as u32).collect();
    perm.shuffle(rng);
    let mut m = CloneMatching::new(universe);
    for pair in perm.chunks_exact(2) {
        m.link(pair[0], pair[1]);
    }
    Ok(m)
}

/// Number of perfect matchings on `k` points, `(k-1)(k-3)...1`.
pub fn count_matchings(k: usize) -> Result<u64> {
    if !k.is_multiple_of(2) {
        return Err(invalid("matching count needs an even number of points"));
    }
    if k > COUNT_LIMIT {
        return Err(invalid("matching count only supported up to 20 points"));
    }
    Ok((1..k as u64).step_by(2).product())
}

/// Calls `f` once for every perfect matching on `universe <= 10` clones.
pub fn for_each_perfect_matching(
    universe: usize,
    mut f: impl FnMut(&CloneMatching),
) -> Result<()> {
    if !universe.is_multiple_of(2) {
        return Err(invalid("clone universe must have even size"));
    }
    if universe > ENUMERATION_LIMIT {
        return Err(invalid("exhaustive enumeration is limited to 10 clones"));
    }
    fn rec(m: &mut CloneMatching, f: &mut dyn FnMut(&CloneMatching)) {
        let Some(first) = (0..m.universe() as u32).find(|&c| !m.is_matched(c)) else {
            f(m);
            return;
        };
        for other in first + 1..m.universe() as u32 {
            if !m.is_matched(other) {
                m.link(first, other);
                rec(m, f);
                m.unlink(first);
            }
        }
    }
    let mut m = CloneMatching::new(universe);
    rec(&mut m, &mut f);
    Ok(())
}

/// Projects a perfect matching on `V_n x [d]` to a d-regular multigraph.
pub fn project(matching: &CloneMatching, n: usize, d: usize) -> Result<Graph> {
    if matching.universe() != n * d {
        return Err(invalid("matching universe is not n * d"));
    }
    if !matching.is_complete() {
        return Err(Error::IncompleteMatching {
            unmatched: matching.universe() - matching.matched(),
        });
    }
    let ends = matching.partner.iter().map(|&p| p / d as u32).collect();
    Graph::from_edge_ends(n, d, ends)
}

/// Multigraph drawn from the (unconditioned) configuration model.
pub fn sample_configuration<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Graph> {
    check_regular_params(n, d)?;
    let m = sample_matching(n * d, rng)?;
    project(&m, n, d)
}

fn check_regular_params(n: usize, d: usize) -> Result<()> {
    if d < 3 {
        return Err(invalid("random regular graphs need d >= 3"));
    }
    if !(n * d).is_multiple_of(2) {
        return Err(invalid("n * d must be even"));
    }
    if n * d >= u32::MAX as usize {
        return Err(invalid("clone universe too large"));
    }
    Ok(())
}

/// A simple graph produced by rejection, with the attempt that succeeded.
#[derive(Debug, Clone)]
pub struct SimpleSample {
    pub graph: Graph,
    pub attempts: u32,
}

/// Uniform simple d-regular graph: draw configurations until one projects
/// to a simple graph.
///
/// Each attempt is a Fisher-Yates shuffle produced two positions at a time
/// and paired as it goes, so the attempt is abandoned at the first loop or
/// repeated edge without finishing the permutation. An accepted attempt is
/// exactly a uniform configuration conditioned on simplicity.
pub fn sample_simple_regular<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    rng: &mut R,
    max_attempts: u32,
) -> Result<SimpleSample> {
    check_regular_params(n, d)?;
    let total = n * d;
    let mut perm: Vec<u32> = (0..total as u32).collect();
    let mut ends = vec![0 as Vertex; total];
    let mut fill = vec![0u32; n];
    let dd = d as u32;

    'attempt: for attempt in 1..=max_attempts {
        fill.iter_mut().for_each(|f| *f = 0);
        let mut i = 0;
        while i < total {
            let j = rng.random_range(i..total);
            perm.swap(i, j);
            let k = rng.random_range(i + 1..total);
            perm.swap(i + 1, k);
            let u = perm[i] / dd;
            let v = perm[i + 1] / dd;
            if u == v {
                continue 'attempt;
            }
            let (us, vs) = (u as usize * d, v as usize * d);
            if ends[us..us + fill[u as usize] as usize].contains(&v) {
                continue 'attempt;
            }
            ends[us + fill[u as usize] as usize] = v;
            fill[u as usize] += 1;
            ends[vs + fill[v as usize] as usize] = u;
            fill[v as usize] += 1;
            i += 2;
        }
        let graph = Graph::from_edge_ends(n, d, ends)?;
        debug_assert!(graph.is_simple());
        return Ok(SimpleSample { graph, attempts: attempt });
    }
    Err(Error::SamplingExhausted { attempts: max_attempts })
}

/// Exact statistics of a matching restricted to the clone classes
/// `A`, `B` and `C x [d]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingStats {
    /// Edges with both ends in `A`.
    pub e_aa: u64,
    /// Edges between `A` and `B`.
    pub e_ab: u64,
    /// Edges between `A` and clones of `C`.
    pub e_ac: u64,
    /// `h[l]`: vertices of `C` matched to exactly `l` clones of `A`, `l = 0..=d`.
    pub h: Vec<u64>,
    /// Vertices of `C` matched to at least two clones of `A`.
    pub q: u64,
    /// `|A| + |B| + d|C| - 1`.
    pub normalizer: i64,
}

/// Counts [`MatchingStats`] for `matching`, which must be perfect on the
/// union of `a`, `b` and the clones of the vertices in `c`.
pub fn matching_stats(
    matching: &CloneMatching,
    a: &[u32],
    b: &[u32],
    c: &[Vertex],
    d: usize,
) -> Result<MatchingStats> {
    const NONE: u8 = 0;
    const IN_A: u8 = 1;
    const IN_B: u8 = 2;
    const IN_C: u8 = 3;
    let k = matching.universe();
    let mut class = vec![NONE; k];
    let mark = |cl: u32, tag: u8, class: &mut Vec<u8>| -> Result<()> {
        match class.get(cl as usize) {
            None => Err(invalid("clone outside the matching universe")),
            Some(&NONE) => {
                class[cl as usize] = tag;
                Ok(())
            }
            Some(_) => Err(Error::OverlappingClones(cl as usize)),
        }
    };
    for &x in a {
        mark(x, IN_A, &mut class)?;
    }
    for &x in b {
        mark(x, IN_B, &mut class)?;
    }
    for &v in c {
        for s in 0..d as u32 {
            mark(v * d as u32 + s, IN_C, &mut class)?;
        }
    }
    for (x, &tag) in class.iter().enumerate() {
        if tag == NONE {
            continue;
        }
        match matching.partner(x as u32) {
            Some(p) if class[p as usize] != NONE => {}
            _ => {
                return Err(invalid("matching is not perfect on the union of the clone classes"))
            }
        }
    }

    let mut stats = MatchingStats {
        e_aa: 0,
        e_ab: 0,
        e_ac: 0,
        h: vec![0; d + 1],
        q: 0,
        normalizer: (a.len() + b.len() + d * c.len()) as i64 - 1,
    };
    for &x in a {
        let p = matching.partner[x as usize];
        match class[p as usize] {
            IN_A if x < p => stats.e_aa += 1,
            IN_B => stats.e_ab += 1,
            IN_C => stats.e_ac += 1,
            _ => {}
        }
    }
    for &v in c {
        let l = (0..d as u32)
            .filter(|&s| class[matching.partner[(v * d as u32 + s) as usize] as usize] == IN_A)
            .count();
        stats.h[l] += 1;
        if l >= 2 {
            stats.q += 1;
        }
    }
    Ok(stats)
}

/// Expected matching statistics for class sizes `|A|, |B|, |C|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedStats {
    pub normalizer: u64,
    /// `C(|A|, 2) / N`, exact.
    pub e_aa: Ratio<u64>,
    /// `|A||B| / N`, exact.
    pub e_ab: Ratio<u64>,
    /// `d|A||C| / N`, exact.
    pub e_ac: Ratio<u64>,
    /// Leading-order binomial form for `E H_l`, `l = 0..=d`.
    pub h: Vec<f64>,
    /// False when `|B| < |A|`, outside the regime where the binomial form is
    /// derived. The values are still returned.
    pub h_applicable: bool,
    /// `d^2 |A|^2 |C| / N^2`, an upper bound on `E Q` when `N >= 4`.
    pub q_upper: Option<f64>,
}

impl ExpectedStats {
    pub fn e_aa_f64(&self) -> f64 {
        ratio_f64(self.e_aa)
    }
    pub fn e_ab_f64(&self) -> f64 {
        ratio_f64(self.e_ab)
    }
    pub fn e_ac_f64(&self) -> f64 {
        ratio_f64(self.e_ac)
    }
}

fn ratio_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Closed-form expectations of the statistics in [`MatchingStats`] under a
/// uniform perfect matching.
pub fn expected_stats(a: usize, b: usize, c: usize, d: usize) -> Result<ExpectedStats> {
    let total = a + b + d * c;
    if total < 2 {
        return Err(invalid("normalizer |A| + |B| + d|C| - 1 must be positive"));
    }
    let n = (total - 1) as u64;
    let (a64, b64, c64, d64) = (a as u64, b as u64, c as u64, d as u64);
    let share = a as f64 / n as f64;
    let h = (0..=d)
        .map(|l| {
            c as f64
                * binomial(d, l)
                * libm::pow(share, l as f64)
                * libm::pow(1.0 - share, (d - l) as f64)
        })
        .collect();
    Ok(ExpectedStats {
        normalizer: n,
        e_aa: Ratio::new(a64 * a64.saturating_sub(1) / 2, n),
        e_ab: Ratio::new(a64 * b64, n),
        e_ac: Ratio::new(d64 * a64 * c64, n),
        h,
        h_applicable: b >= a,
        q_upper: (n >= 4).then(|| {
            (d * d) as f64 * (a as f64) * (a as f64) * c as f64 / (n as f64 * n as f64)
        }),
    })
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
