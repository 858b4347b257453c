//! Round-synchronous push protocol.
//!
//! Two engines share one trace type:
//!
//! * [`run_static`] pushes on a fixed graph. Each informed vertex picks one of
//!   its `d` edge-ends uniformly, so a loop end sends the message back to the
//!   sender.
//! * [`run_incremental`] samples the configuration-model matching jointly with
//!   the protocol. Every informed vertex selects one of its `d` clones; a
//!   selected clone that is still unmatched is paired with a uniform unmatched
//!   clone. Selections for a round are all drawn before any pairing, and
//!   pairing runs in clone order (vertex, then slot). Once the broadcast ends
//!   the rest of the matching is completed uniformly, so the returned graph is
//!   a full configuration-model sample.
//!
//! Round `t >= 1` moves the state from the beginning of round `t` to the
//! beginning of round `t + 1`; [`RoundRecord`] stores the counts after the
//! round. Vertex 0 starts informed.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::config_model::{project, CloneMatching};
use crate::error::{invalid, Error, Result};
use crate::graph::{Graph, Vertex, VertexSet};

/// `informed_at` value of a vertex that never got the message.
pub const NEVER: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Static,
    Incremental,
}

/// How Step 1 of the exposure engine picks the transmitting clone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionRule {
    /// Uniform over all `d` clones; an already matched pick transmits along
    /// an exposed edge and informs nobody new. This is the push protocol.
    #[default]
    AllClones,
    /// Uniform over the still unmatched clones of the vertex. Not the push
    /// protocol; kept to measure how much the reading of Step 1 matters.
    UnmatchedOnly,
}

/// Threshold `ln^k n` that delimits the preliminary and final phases.
///
/// At the sizes a desk simulation reaches, `ln^7 n` exceeds `n` (already at
/// `n = 10^5`), so the phase markers do not exist. A smaller power keeps the
/// same shape at desk scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseThreshold {
    pub log_power: f64,
}

impl Default for PhaseThreshold {
    fn default() -> Self {
        Self::ASYMPTOTIC
    }
}

impl PhaseThreshold {
    pub const ASYMPTOTIC: Self = Self { log_power: 7.0 };
    pub const DESK_SCALE: Self = Self { log_power: 3.0 };

    /// `ln^k n`, clamped to at least 1.
    pub fn value(&self, n: usize) -> f64 {
        libm::pow(libm::log(n as f64), self.log_power).max(1.0)
    }

    /// The phases are defined only when the threshold is below `n`.
    pub fn applies(&self, n: usize) -> bool {
        n > 1 && self.value(n) < n as f64
    }
}

/// Exposure bookkeeping of one incremental round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exposure {
    /// `P` after the round: unmatched clones of informed vertices.
    pub unexposed: u64,
    /// `A`: selected clones that were unmatched when the round began.
    pub selected: u64,
    /// `hits[i - 1]`: previously uninformed vertices informed exactly `i`
    /// times, `i = 1..=d`.
    pub hits: Vec<u64>,
    /// Edges from selected clones to unselected clones of informed vertices.
    pub self_hits: u64,
    /// Edges between two selected clones.
    pub within_selected: u64,
    /// Edges from selected clones to clones of uninformed vertices.
    pub to_uninformed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRecord {
    pub t: u32,
    pub informed: u64,
    pub uninformed: u64,
    pub newly_informed: u64,
    pub exposure: Option<Exposure>,
}

/// Which exact bookkeeping identity a round broke.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Identity {
    NewlyInformedIsHitSum,
    NewlyInformedAtMostEdges,
    InformedCount,
    UninformedCount,
    UnexposedRecursion,
    Doubling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdentityViolation {
    pub t: u32,
    pub identity: Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PhaseTimes {
    /// First round after which at least `threshold` vertices are informed.
    pub t0: Option<u32>,
    /// First round after which at most `threshold` vertices are uninformed.
    pub t1: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolTrace {
    pub n: usize,
    pub d: usize,
    pub mode: Mode,
    pub start: Vertex,
    /// `P_0` in incremental mode (the `d` clones of the start vertex).
    pub initial_unexposed: Option<u64>,
    pub records: Vec<RoundRecord>,
    /// Round after which every vertex is informed; `None` when the run
    /// stalled with part of the graph unreachable.
    pub broadcast_time: Option<u32>,
    /// Round in which each vertex was informed, 0 for the start vertex and
    /// [`NEVER`] for vertices that were not reached.
    pub informed_at: Vec<u32>,
}

impl ProtocolTrace {
    /// Number of informed vertices when the run ended.
    pub fn coverage(&self) -> u64 {
        self.records.last().map(|r| r.informed).unwrap_or(1)
    }

    pub fn rounds(&self) -> u32 {
        self.records.len() as u32
    }

    pub fn phase_times(&self, threshold: PhaseThreshold) -> PhaseTimes {
        if !threshold.applies(self.n) {
            return PhaseTimes::default();
        }
        let thr = threshold.value(self.n);
        PhaseTimes {
            t0: self.records.iter().find(|r| r.informed as f64 >= thr).map(|r| r.t),
            t1: self.records.iter().find(|r| r.uninformed as f64 <= thr).map(|r| r.t),
        }
    }

    /// Unexposed clone count at the beginning of round `t` (`P_{t-1}` in
    /// record terms), incremental mode only.
    pub fn unexposed_before(&self, t: u32) -> Option<u64> {
        if t <= 1 {
            self.initial_unexposed
        } else {
            self.records
                .get(t as usize - 2)
                .and_then(|r| r.exposure.as_ref())
                .map(|e| e.unexposed)
        }
    }

    /// Uninformed vertices after round `t` (`t = 0` is the initial state).
    pub fn uninformed_after(&self, t: u32) -> VertexSet {
        VertexSet::from_mask(self.informed_at.iter().map(|&r| r > t).collect())
    }

    /// Checks the exact bookkeeping of every round and returns each broken
    /// identity.
    pub fn identity_violations(&self) -> Vec<IdentityViolation> {
        let mut out = Vec::new();
        let (mut informed, mut uninformed) = (1u64, self.n as u64 - 1);
        let mut unexposed = self.initial_unexposed;
        let d = self.d as u64;
        for r in &self.records {
            let mut fail = |identity| out.push(IdentityViolation { t: r.t, identity });
            if r.informed != informed + r.newly_informed {
                fail(Identity::InformedCount);
            }
            if r.uninformed + r.newly_informed != uninformed {
                fail(Identity::UninformedCount);
            }
            if r.newly_informed > informed {
                fail(Identity::Doubling);
            }
            if let Some(e) = &r.exposure {
                if e.hits.iter().sum::<u64>() != r.newly_informed {
                    fail(Identity::NewlyInformedIsHitSum);
                }
                if r.newly_informed > e.to_uninformed {
                    fail(Identity::NewlyInformedAtMostEdges);
                }
                let gained: u64 = e
                    .hits
                    .iter()
                    .enumerate()
                    .map(|(i, &h)| (d - (i as u64 + 1)) * h)
                    .sum();
                let expected = unexposed
                    .and_then(|p| p.checked_sub(e.selected))
                    .and_then(|p| p.checked_sub(e.self_hits))
                    .map(|p| p + gained);
                if expected != Some(e.unexposed) {
                    fail(Identity::UnexposedRecursion);
                }
                unexposed = Some(e.unexposed);
            }
            informed = r.informed;
            uninformed = r.uninformed;
        }
        out
    }
}

/// Push protocol on a fixed graph from `start`.
///
/// Stops when everyone is informed, or when no informed vertex has an
/// uninformed neighbor (disconnected graphs); the latter leaves
/// `broadcast_time` unset.
pub fn run_static<R: Rng + ?Sized>(g: &Graph, start: Vertex, rng: &mut R) -> Result<ProtocolTrace> {
    let n = g.n();
    if start as usize >= n {
        return Err(Error::VertexOutOfRange { vertex: start as usize, n });
    }
    let d = g.d();
    let mut informed_at = vec![NEVER; n];
    let mut in_set = vec![false; n];
    informed_at[start as usize] = 0;
    in_set[start as usize] = true;
    let mut informed = vec![start];
    let mut newly = Vec::new();
    // edges between the informed and uninformed sets
    let mut boundary = g.neighbors(start).iter().filter(|&&u| u != start).count() as u64;
    let mut records = Vec::new();
    let mut broadcast_time = (n == 1).then_some(0);
    let mut t = 0u32;

    while informed.len() < n && boundary > 0 {
        t += 1;
        for &v in &informed {
            let u = g.neighbors(v)[rng.random_range(0..d)];
            if informed_at[u as usize] == NEVER {
                informed_at[u as usize] = t;
                newly.push(u);
            }
        }
        for &u in &newly {
            for &w in g.neighbors(u) {
                if w == u {
                    continue;
                }
                if in_set[w as usize] {
                    boundary -= 1;
                } else {
                    boundary += 1;
                }
            }
            in_set[u as usize] = true;
        }
        let count = newly.len() as u64;
        informed.append(&mut newly);
        records.push(RoundRecord {
            t,
            informed: informed.len() as u64,
            uninformed: (n - informed.len()) as u64,
            newly_informed: count,
            exposure: None,
        });
        if informed.len() == n {
            broadcast_time = Some(t);
        }
    }

    Ok(ProtocolTrace {
        n,
        d,
        mode: Mode::Static,
        start,
        initial_unexposed: None,
        records,
        broadcast_time,
        informed_at,
    })
}

/// Push protocol on a configuration-model multigraph exposed round by round.
pub fn run_incremental<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    rng: &mut R,
) -> Result<(ProtocolTrace, Graph)> {
    run_incremental_with(n, d, SelectionRule::AllClones, rng)
}

/// Unmatched clones with O(1) uniform draw and removal.
struct Pool {
    items: Vec<u32>,
    pos: Vec<u32>,
}

impl Pool {
    fn full(k: usize) -> Self {
        Self { items: (0..k as u32).collect(), pos: (0..k as u32).collect() }
    }

    fn remove(&mut self, c: u32) {
        let i = self.pos[c as usize] as usize;
        let last = *self.items.last().expect("pool is not empty");
        self.items.swap_remove(i);
        if last != c {
            self.pos[last as usize] = i as u32;
        }
        self.pos[c as usize] = u32::MAX;
    }
}

pub fn run_incremental_with<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    rule: SelectionRule,
    rng: &mut R,
) -> Result<(ProtocolTrace, Graph)> {
    if d < 3 {
        return Err(invalid("random regular graphs need d >= 3"));
    }
    if !(n * d).is_multiple_of(2) {
        return Err(invalid("n * d must be even"));
    }
    if n * d >= u32::MAX as usize {
        return Err(invalid("clone universe too large"));
    }
    let dd = d as u32;
    let mut matching = CloneMatching::new(n * d);
    let mut pool = Pool::full(n * d);
    let mut informed_at = vec![NEVER; n];
    let mut free = vec![dd; n];
    let mut hits = vec![0u32; n];
    let mut is_selected = vec![false; n * d];
    informed_at[0] = 0;
    let mut informed: Vec<Vertex> = vec![0];
    let mut unexposed = d as u64;
    let mut selected = Vec::new();
    let mut newly = Vec::new();
    let mut records = Vec::new();
    let mut broadcast_time = (n == 1).then_some(0);
    let mut t = 0u32;

    while informed.len() < n && unexposed > 0 {
        t += 1;
        // Step 1: one clone per informed vertex, in vertex order.
        selected.clear();
        for &v in &informed {
            let c = match rule {
                SelectionRule::AllClones => v * dd + rng.random_range(0..dd),
                SelectionRule::UnmatchedOnly => {
                    if free[v as usize] == 0 {
                        continue;
                    }
                    let k = rng.random_range(0..free[v as usize]);
                    (v * dd..(v + 1) * dd)
                        .filter(|&c| !matching.is_matched(c))
                        .nth(k as usize)
                        .expect("free count matches unmatched clones")
                }
            };
            if !matching.is_matched(c) {
                is_selected[c as usize] = true;
                selected.push(c);
            }
        }

        // Step 2: pair each still unmatched selected clone.
        let mut self_hits = 0u64;
        let mut within_selected = 0u64;
        let mut to_uninformed = 0u64;
        for &c in &selected {
            if matching.is_matched(c) {
                continue;
            }
            pool.remove(c);
            let other = pool.items[rng.random_range(0..pool.items.len())];
            pool.remove(other);
            matching.link(c, other);
            let (v, w) = (c / dd, other / dd);
            free[v as usize] -= 1;
            free[w as usize] -= 1;
            unexposed -= 1;
            if informed_at[w as usize] < t {
                unexposed -= 1;
                if is_selected[other as usize] {
                    within_selected += 1;
                } else {
                    self_hits += 1;
                }
            } else {
                to_uninformed += 1;
                if hits[w as usize] == 0 {
                    newly.push(w);
                }
                hits[w as usize] += 1;
            }
        }
        for &c in &selected {
            is_selected[c as usize] = false;
        }

        let mut by_hits = vec![0u64; d];
        for &w in &newly {
            informed_at[w as usize] = t;
            by_hits[hits[w as usize] as usize - 1] += 1;
            hits[w as usize] = 0;
            unexposed += free[w as usize] as u64;
        }
        let count = newly.len() as u64;
        newly.sort_unstable();
        merge_sorted(&mut informed, &newly);
        newly.clear();

        records.push(RoundRecord {
            t,
            informed: informed.len() as u64,
            uninformed: (n - informed.len()) as u64,
            newly_informed: count,
            exposure: Some(Exposure {
                unexposed,
                selected: selected.len() as u64,
                hits: by_hits,
                self_hits,
                within_selected,
                to_uninformed,
            }),
        });
        if informed.len() == n {
            broadcast_time = Some(t);
        }
    }

    let mut rest = pool.items;
    rest.shuffle(rng);
    for pair in rest.chunks_exact(2) {
        matching.link(pair[0], pair[1]);
    }
    let graph = project(&matching, n, d)?;

    let trace = ProtocolTrace {
        n,
        d,
        mode: Mode::Incremental,
        start: 0,
        initial_unexposed: Some(d as u64),
        records,
        broadcast_time,
        informed_at,
    };
    Ok((trace, graph))
}

fn merge_sorted(into: &mut Vec<Vertex>, add: &[Vertex]) {
    if add.is_empty() {
        return;
    }
    let old = core::mem::take(into);
    into.reserve(old.len() + add.len());
    let (mut i, mut j) = (0, 0);
    while i < old.len() && j < add.len() {
        if old[i] < add[j] {
            into.push(old[i]);
            i += 1;
        } else {
            into.push(add[j]);
            j += 1;
        }
    }
    into.extend_from_slice(&old[i..]);
    into.extend_from_slice(&add[j..]);
}

/// Concentration of the number of selected clones around `P_t / d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRound {
    pub t: u32,
    /// Unexposed clones at the beginning of the round.
    pub unexposed: u64,
    pub selected: u64,
    /// `P_t / (d ln^2 n)`.
    pub tolerance: f64,
    pub violated: bool,
    /// `2 exp(-P_t / (3 d ln^4 n))`, unclamped.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    pub rounds: Vec<SelectionRound>,
    /// Rounds with `P_t >= min_unexposed` that were checked.
    pub checked: usize,
    pub violations: usize,
    /// Mean of the bound over the checked rounds (`None` if none).
    pub mean_bound: Option<f64>,
}

impl SelectionReport {
    pub fn violation_frequency(&self) -> Option<f64> {
        (self.checked > 0).then(|| self.violations as f64 / self.checked as f64)
    }
}

/// Flags rounds where `|A_{t+1} - P_t / d| >= P_t / (d ln^2 n)` and pairs each
/// with its tail bound. Rounds with `P_t < min_unexposed` are listed but not
/// aggregated. Static traces give an empty report.
pub fn check_selection_concentration(trace: &ProtocolTrace, min_unexposed: f64) -> SelectionReport {
    let ln = libm::log(trace.n as f64);
    let d = trace.d as f64;
    let mut rounds = Vec::new();
    let (mut checked, mut violations, mut bound_sum) = (0usize, 0usize, 0.0);
    for r in &trace.records {
        let (Some(e), Some(p)) = (&r.exposure, trace.unexposed_before(r.t)) else {
            continue;
        };
        let pf = p as f64;
        let tolerance = pf / (d * ln * ln);
        let deviation = libm::fabs(e.selected as f64 - pf / d);
        let violated = p > 0 && deviation >= tolerance;
        let bound = 2.0 * libm::exp(-pf / (3.0 * d * libm::pow(ln, 4.0)));
        if pf >= min_unexposed && p > 0 {
            checked += 1;
            violations += violated as usize;
            bound_sum += bound;
        }
        rounds.push(SelectionRound { t: r.t, unexposed: p, selected: e.selected, tolerance, violated, bound });
    }
    SelectionReport {
        rounds,
        checked,
        violations,
        mean_bound: (checked > 0).then(|| bound_sum / checked as f64),
    }
}

/// Expansion of the uninformed set after one final-phase round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinalRound {
    pub t: u32,
    pub size: usize,
    pub internal_edges: usize,
    pub cut_edges: usize,
    /// `e(S) >= 1.1 |S|`.
    pub dense: bool,
    /// `e(S, V \ S) < d |S| / 4`.
    pub poorly_expanding: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinalPhaseReport {
    /// False when the threshold does not apply at this `n` or the run never
    /// reached `T1`.
    pub applicable: bool,
    pub t1: Option<u32>,
    pub rounds: Vec<FinalRound>,
    /// `T - T1`.
    pub final_length: Option<u32>,
}

impl FinalPhaseReport {
    pub fn flagged(&self) -> usize {
        self.rounds.iter().filter(|r| r.dense || r.poorly_expanding).count()
    }
}

/// Examines the uninformed set after every round from `T1` to the end of
/// the run on the graph the run used.
pub fn final_phase_diagnostics(
    trace: &ProtocolTrace,
    g: &Graph,
    threshold: PhaseThreshold,
) -> Result<FinalPhaseReport> {
    if g.n() != trace.n {
        return Err(invalid("graph and trace have different vertex counts"));
    }
    let t1 = trace.phase_times(threshold).t1;
    let Some(t1) = t1 else {
        return Ok(FinalPhaseReport { applicable: false, t1: None, rounds: Vec::new(), final_length: None });
    };
    let mut rounds = Vec::new();
    for t in t1..=trace.rounds() {
        let s = trace.uninformed_after(t);
        let internal = g.edges_within(&s)?;
        let cut: usize = s
            .iter()
            .map(|v| g.neighbors(v).iter().filter(|&&u| !s.contains(u)).count())
            .sum();
        let size = s.len();
        rounds.push(FinalRound {
            t,
            size,
            internal_edges: internal,
            cut_edges: cut,
            dense: size > 0 && internal as f64 >= 1.1 * size as f64,
            poorly_expanding: size > 0 && (cut as f64) < (g.d() * size) as f64 / 4.0,
        });
    }
    Ok(FinalPhaseReport {
        applicable: true,
        t1: Some(t1),
        rounds,
        final_length: trace.broadcast_time.map(|t| t - t1),
    })
}
