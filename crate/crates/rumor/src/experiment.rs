//! Seeded ensemble sweeps over graph cells.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rumor_core::config_model::{sample_configuration, sample_simple_regular, DEFAULT_MAX_ATTEMPTS};
use rumor_core::push::{
    check_selection_concentration, final_phase_diagnostics, run_incremental, run_static, Mode, PhaseThreshold,
    ProtocolTrace,
};
use rumor_core::spectral::paley_graph;
use rumor_core::theory::{c_d, f_of, integrate, TheoryParams, LIMIT_CONSTANT};
use rumor_core::{fixtures, Graph};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};
use crate::stats::summarize;
use crate::trace::TraceFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    #[default]
    Static,
    Incremental,
}

impl From<ModeName> for Mode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Static => Mode::Static,
            ModeName::Incremental => Mode::Incremental,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Retain {
    /// Summaries only.
    None,
    /// Summaries and one JSON line per run.
    #[default]
    Summary,
    /// Also full traces for the first `full_traces` runs of every cell.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CellSpec {
    /// Random `d`-regular graph, freshly sampled for every run. Simple by
    /// default; `multigraph` keeps configuration-model loops and multi-edges.
    /// `mode` overrides the experiment-wide mode for this cell.
    RandomRegular {
        n: usize,
        d: usize,
        #[serde(default)]
        multigraph: bool,
        #[serde(default)]
        mode: Option<ModeName>,
    },
    Complete {
        n: usize,
    },
    Paley {
        q: u32,
    },
    File {
        path: PathBuf,
    },
}

fn default_full_traces() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub cells: Vec<CellSpec>,
    pub runs: usize,
    pub seed: u64,
    #[serde(default)]
    pub mode: ModeName,
    #[serde(default)]
    pub retain: Retain,
    /// Power `k` of the phase threshold `ln^k n`; 7 when absent.
    #[serde(default)]
    pub phase_log_power: Option<f64>,
    #[serde(default = "default_full_traces")]
    pub full_traces: usize,
    /// Output directory; the CLI flag takes precedence.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn threshold(&self) -> PhaseThreshold {
        self.phase_log_power.map(|log_power| PhaseThreshold { log_power }).unwrap_or_default()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// SplitMix64 finalizer.
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `run` in cell `cell`.
pub fn run_seed(master: u64, cell: usize, run: usize) -> u64 {
    mix64(mix64(mix64(master) ^ cell as u64) ^ run as u64)
}

/// What a run executes on.
#[derive(Debug, Clone)]
pub enum Workload {
    Fixed(Graph),
    Random { n: usize, d: usize, multigraph: bool, mode: Mode },
}

impl Workload {
    pub fn n(&self) -> usize {
        match self {
            Self::Fixed(g) => g.n(),
            Self::Random { n, .. } => *n,
        }
    }

    pub fn d(&self) -> usize {
        match self {
            Self::Fixed(g) => g.d(),
            Self::Random { d, .. } => *d,
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            Self::Fixed(_) => Mode::Static,
            Self::Random { mode, .. } => *mode,
        }
    }

    /// Constant `C` with predicted `T ~ C ln n`: `C_d` for random regular
    /// graphs and the limit constant for dense pseudorandom ones.
    fn reference_constant(&self, kind: &CellSpec) -> Option<f64> {
        match kind {
            CellSpec::Complete { .. } | CellSpec::Paley { .. } => Some(LIMIT_CONSTANT),
            _ => c_d(self.d() as f64).ok(),
        }
    }
}

/// Resolves a cell into a workload, validating it.
pub fn build_workload(cell: usize, spec: &CellSpec, default_mode: ModeName, base: &Path) -> Result<Workload> {
    let bad = |msg: String| Error::InvalidCell { cell, msg };
    match spec {
        CellSpec::RandomRegular { n, d, multigraph, mode } => {
            if *d < 3 {
                return Err(bad(format!("d = {d} is below 3")));
            }
            if (n * d) % 2 != 0 {
                return Err(bad(format!("n * d = {} is odd", n * d)));
            }
            if !multigraph && *n <= *d {
                return Err(bad(format!("no simple {d}-regular graph on {n} vertices")));
            }
            let mode = mode.unwrap_or(default_mode).into();
            Ok(Workload::Random { n: *n, d: *d, multigraph: *multigraph, mode })
        }
        CellSpec::Complete { n } => {
            if *n < 2 {
                return Err(bad("complete graph needs n >= 2".into()));
            }
            Ok(Workload::Fixed(fixtures::complete(*n)))
        }
        CellSpec::Paley { q } => paley_graph(*q).map(Workload::Fixed).map_err(|e| bad(e.to_string())),
        CellSpec::File { path } => {
            let path = if path.is_absolute() { path.clone() } else { base.join(path) };
            crate::io::read_graph(&path).map(Workload::Fixed).map_err(|e| bad(e.to_string()))
        }
    }
}

/// One run and the graph it used.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub trace: ProtocolTrace,
    pub graph: Graph,
    /// Configuration-model draws needed to reach a simple graph (1 for
    /// fixed graphs and multigraph cells).
    pub attempts: u32,
}

pub fn simulate(work: &Workload, seed: u64) -> Result<Simulation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match work {
        Workload::Fixed(g) => {
            Ok(Simulation { trace: run_static(g, 0, &mut rng)?, graph: g.clone(), attempts: 1 })
        }
        Workload::Random { n, d, multigraph, mode: Mode::Static } => {
            let (graph, attempts) = if *multigraph {
                (sample_configuration(*n, *d, &mut rng)?, 1)
            } else {
                let s = sample_simple_regular(*n, *d, &mut rng, DEFAULT_MAX_ATTEMPTS)?;
                (s.graph, s.attempts)
            };
            Ok(Simulation { trace: run_static(&graph, 0, &mut rng)?, graph, attempts })
        }
        Workload::Random { n, d, multigraph, mode: Mode::Incremental } => {
            for attempts in 1..=DEFAULT_MAX_ATTEMPTS {
                let (trace, graph) = run_incremental(*n, *d, &mut rng)?;
                if *multigraph || graph.is_simple() {
                    return Ok(Simulation { trace, graph, attempts });
                }
            }
            Err(rumor_core::Error::SamplingExhausted { attempts: DEFAULT_MAX_ATTEMPTS }.into())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub cell: usize,
    pub run: usize,
    pub seed: u64,
    #[serde(rename = "T")]
    pub broadcast_time: Option<u32>,
    #[serde(rename = "T0")]
    pub t0: Option<u32>,
    #[serde(rename = "T1")]
    pub t1: Option<u32>,
    pub coverage: u64,
    pub attempts: u32,
    pub identity_violations: usize,
    /// Uninformed sets after `T1` that are dense or poorly expanding.
    pub final_phase_flags: Option<usize>,
    /// Rounds with `|A - P/d| >= P/(d ln^2 n)`, as a fraction.
    pub selection_violation_rate: Option<f64>,
    /// Mean Chernoff-type bound on that event.
    pub selection_bound: Option<f64>,
}

pub fn record_run(cell: usize, run: usize, seed: u64, sim: &Simulation, threshold: PhaseThreshold) -> Result<RunRecord> {
    let tr = &sim.trace;
    let phases = tr.phase_times(threshold);
    let fin = final_phase_diagnostics(tr, &sim.graph, threshold)?;
    let sel = (tr.mode == Mode::Incremental).then(|| check_selection_concentration(tr, 1.0));
    Ok(RunRecord {
        cell,
        run,
        seed,
        broadcast_time: tr.broadcast_time,
        t0: phases.t0,
        t1: phases.t1,
        coverage: tr.coverage(),
        attempts: sim.attempts,
        identity_violations: tr.identity_violations().len(),
        final_phase_flags: fin.applicable.then(|| fin.flagged()),
        selection_violation_rate: sel.as_ref().and_then(|s| s.violation_frequency()),
        selection_bound: sel.and_then(|s| s.mean_bound),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    pub n: usize,
    pub d: usize,
    pub runs: usize,
    /// Runs that informed every vertex.
    pub completed: usize,
    #[serde(rename = "meanT")]
    pub mean_t: f64,
    #[serde(rename = "medianT")]
    pub median_t: f64,
    #[serde(rename = "stdT")]
    pub std_t: f64,
    /// `meanT / ln n`.
    #[serde(rename = "C_hat")]
    pub c_hat: f64,
    /// Reference constant: `C_d` or the dense limit.
    #[serde(rename = "C_d")]
    pub c_d: Option<f64>,
    /// `(C_hat - C_d) / C_d`.
    pub rel_gap: Option<f64>,
    pub violation_fraction: f64,
    pub mean_t0: Option<f64>,
    pub mean_t1: Option<f64>,
    pub final_phase_flags: usize,
    pub selection_violation_rate: Option<f64>,
    pub selection_bound: Option<f64>,
}

fn mean_of(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (count > 0).then(|| sum / count as f64)
}

pub fn summarize_cell(cell: usize, spec: &CellSpec, work: &Workload, records: &[RunRecord]) -> CellSummary {
    let times: Vec<f64> = records.iter().filter_map(|r| r.broadcast_time).map(f64::from).collect();
    let s = summarize(&times);
    let ln_n = (work.n() as f64).ln();
    let c_ref = work.reference_constant(spec);
    let c_hat = s.mean / ln_n;
    CellSummary {
        cell,
        n: work.n(),
        d: work.d(),
        runs: records.len(),
        completed: s.count,
        mean_t: s.mean,
        median_t: s.median,
        std_t: s.std,
        c_hat,
        c_d: c_ref,
        rel_gap: c_ref.map(|c| (c_hat - c) / c),
        violation_fraction: records.iter().filter(|r| r.identity_violations > 0).count() as f64
            / records.len() as f64,
        mean_t0: mean_of(records.iter().filter_map(|r| r.t0).map(f64::from)),
        mean_t1: mean_of(records.iter().filter_map(|r| r.t1).map(f64::from)),
        final_phase_flags: records.iter().filter_map(|r| r.final_phase_flags).sum(),
        selection_violation_rate: mean_of(records.iter().filter_map(|r| r.selection_violation_rate)),
        selection_bound: mean_of(records.iter().filter_map(|r| r.selection_bound)),
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub summaries: Vec<CellSummary>,
    pub runs: Vec<RunRecord>,
    /// `(cell, run, trace)` for retained full traces.
    pub traces: Vec<(usize, usize, TraceFile)>,
    /// Wall-clock seconds per run, in run order. Not deterministic.
    pub wall_seconds: Vec<f64>,
}

impl SweepOutput {
    pub fn total_violations(&self) -> usize {
        self.runs.iter().map(|r| r.identity_violations).sum()
    }
}

/// Runs every cell of `spec` on `workers` threads. Relative file paths in
/// cells resolve against `base`.
pub fn sweep(spec: &ExperimentSpec, workers: usize, base: &Path) -> Result<SweepOutput> {
    if spec.runs == 0 {
        return Err(Error::InvalidSpec("runs must be at least 1".into()));
    }
    if spec.cells.is_empty() {
        return Err(Error::InvalidSpec("no cells".into()));
    }
    let works = spec
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| build_workload(i, c, spec.mode, base))
        .collect::<Result<Vec<_>>>()?;
    let threshold = spec.threshold();
    let jobs: Vec<(usize, usize)> =
        (0..works.len()).flat_map(|c| (0..spec.runs).map(move |r| (c, r))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let keep_trace = |run: usize| spec.retain == Retain::Full && run < spec.full_traces;

    // rayon's indexed collect keeps job order regardless of completion order
    let outcomes: Vec<Result<(RunRecord, Option<TraceFile>, f64)>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(cell, run)| {
                let clock = Instant::now();
                let seed = run_seed(spec.seed, cell, run);
                let sim = simulate(&works[cell], seed)?;
                let record = record_run(cell, run, seed, &sim, threshold)?;
                let trace = keep_trace(run).then(|| TraceFile::from_trace(&sim.trace, seed, threshold));
                Ok((record, trace, clock.elapsed().as_secs_f64()))
            })
            .collect()
    });

    let mut out = SweepOutput { summaries: Vec::new(), runs: Vec::new(), traces: Vec::new(), wall_seconds: Vec::new() };
    for outcome in outcomes {
        let (record, trace, wall) = outcome?;
        if let Some(t) = trace {
            out.traces.push((record.cell, record.run, t));
        }
        out.wall_seconds.push(wall);
        out.runs.push(record);
    }
    for (cell, work) in works.iter().enumerate() {
        let records = &out.runs[cell * spec.runs..(cell + 1) * spec.runs];
        out.summaries.push(summarize_cell(cell, &spec.cells[cell], work, records));
    }
    Ok(out)
}

fn csv_field(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn summary_csv(summaries: &[CellSummary]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "d", "runs", "meanT", "medianT", "stdT", "C_hat", "C_d", "rel_gap"])?;
    for s in summaries {
        w.write_record([
            s.n.to_string(),
            s.d.to_string(),
            s.runs.to_string(),
            s.mean_t.to_string(),
            s.median_t.to_string(),
            s.std_t.to_string(),
            s.c_hat.to_string(),
            csv_field(s.c_d),
            csv_field(s.rel_gap),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ascii"))
}

/// Writes `summary.csv`, `summary.json`, `runs.jsonl` (unless retention is
/// `none`), `traces/` (full retention) and `timing.json`. Everything except
/// `timing.json` depends only on `spec`.
pub fn write_outputs(out: &SweepOutput, spec: &ExperimentSpec, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(io_err(path))
    };
    write("summary.csv", summary_csv(&out.summaries)?)?;
    write("summary.json", serde_json::to_string_pretty(&out.summaries)? + "\n")?;
    if spec.retain != Retain::None {
        let mut lines = String::new();
        for r in &out.runs {
            lines.push_str(&serde_json::to_string(r)?);
            lines.push('\n');
        }
        write("runs.jsonl", lines)?;
    }
    if !out.traces.is_empty() {
        let tdir = dir.join("traces");
        std::fs::create_dir_all(&tdir).map_err(io_err(&tdir))?;
        for (cell, run, t) in &out.traces {
            let path = tdir.join(format!("cell{cell}_run{run}.json"));
            std::fs::write(&path, serde_json::to_string(t)?).map_err(io_err(path))?;
        }
    }
    write("timing.json", serde_json::to_string(&out.wall_seconds)? + "\n")
}

/// Largest relative deviation of `U_{t+1}/U_t` from `F_t^d` counted as a
/// match in [`TrajectoryComparison::ratio_within`].
pub const ROUND_RATIO_TOLERANCE: f64 = 0.05;

/// Smallest `U_t` included in the comparison window besides the threshold.
pub const WINDOW_FLOOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: u32,
    pub u_sim: f64,
    pub p_sim: f64,
    pub u_theory: f64,
    pub p_theory: f64,
    pub rel_u: f64,
    pub rel_p: f64,
    pub in_window: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryComparison {
    pub t0: u32,
    /// Rows are kept while `U_t >= window_floor`.
    pub window_floor: f64,
    pub rows: Vec<TrajectoryRow>,
    pub max_rel_u: Option<f64>,
    pub max_rel_p: Option<f64>,
    /// Window rounds with a successor round.
    pub ratio_rounds: usize,
    /// Of those, rounds with `|U_{t+1}/U_t / F_t^d - 1| <= 5%`.
    pub ratio_within: usize,
}

/// Integrates the recursion from the simulated state at `T0` and aligns it
/// with the simulated `U_t` and `P_t`.
pub fn compare_trajectory(trace: &ProtocolTrace, threshold: PhaseThreshold) -> Result<TrajectoryComparison> {
    let na = |msg: &str| Error::NotApplicable(msg.to_string());
    if trace.mode != Mode::Incremental {
        return Err(na("trajectory comparison needs an incremental trace"));
    }
    let t0 = trace.phase_times(threshold).t0.ok_or_else(|| na("trace has no T0 at this threshold"))?;
    let n = trace.n as f64;
    let d = trace.d as u32;
    let state = |t: u32| {
        let r = &trace.records[t as usize - 1];
        (r.exposure.as_ref().map(|e| e.unexposed).unwrap_or(0) as f64, r.uninformed as f64)
    };
    let (p0, u0) = state(t0);
    let params = TheoryParams::from_state(n, d, p0, u0)?;
    let theory = integrate(&params, params.horizon_cap())?;
    let window_floor = threshold.value(trace.n).max(WINDOW_FLOOR);

    let rel = |x: f64, y: f64| if y == 0.0 { x.abs() } else { (x - y).abs() / y };
    let mut rows = Vec::new();
    let (mut ratio_rounds, mut ratio_within) = (0, 0);
    for (k, t) in (t0..=trace.rounds()).enumerate() {
        if k >= theory.len() {
            break;
        }
        let (p, u) = state(t);
        if u < window_floor {
            break;
        }
        rows.push(TrajectoryRow {
            t,
            u_sim: u,
            p_sim: p,
            u_theory: theory.u[k],
            p_theory: theory.p[k],
            rel_u: rel(u, theory.u[k]),
            rel_p: rel(p, theory.p[k]),
            in_window: true,
        });
        if t < trace.rounds() && p > 0.0 {
            let f = f_of(p, u, d as f64)?;
            let next = state(t + 1).1;
            ratio_rounds += 1;
            if rel(next / u, f.powi(d as i32)) <= ROUND_RATIO_TOLERANCE {
                ratio_within += 1;
            }
        }
    }
    let max = |f: fn(&TrajectoryRow) -> f64| rows.iter().map(f).reduce(f64::max);
    Ok(TrajectoryComparison {
        t0,
        window_floor,
        max_rel_u: max(|r| r.rel_u),
        max_rel_p: max(|r| r.rel_p),
        rows,
        ratio_rounds,
        ratio_within,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_and_stable() {
        assert_eq!(mix64(0), 0xE220_A839_7B1D_CDAF);
        let mut seen = std::collections::HashSet::new();
        for c in 0..10 {
            for r in 0..100 {
                assert!(seen.insert(run_seed(42, c, r)));
            }
        }
        assert_ne!(run_seed(1, 0, 0), run_seed(2, 0, 0));
    }

    #[test]
    fn spec_parsing() {
        let spec = ExperimentSpec::from_json(
            r#"{"cells":[{"kind":"random-regular","n":4,"d":3},{"kind":"complete","n":10},
                {"kind":"paley","q":13},{"kind":"file","path":"g.adj"}],"runs":10,"seed":1}"#,
        )
        .unwrap();
        assert_eq!(spec.mode, ModeName::Static);
        assert_eq!(spec.retain, Retain::Summary);
        assert_eq!(spec.threshold(), PhaseThreshold::ASYMPTOTIC);
        assert_eq!(spec.cells[2], CellSpec::Paley { q: 13 });
        assert!(ExperimentSpec::from_json(r#"{"cells":[{"kind":"torus"}],"runs":1,"seed":1}"#).is_err());
    }

    #[test]
    fn invalid_cells_name_their_index() {
        let base = Path::new(".");
        let odd = CellSpec::RandomRegular { n: 5, d: 3, multigraph: false, mode: None };
        assert!(matches!(build_workload(3, &odd, ModeName::Static, base), Err(Error::InvalidCell { cell: 3, .. })));
        let small = CellSpec::RandomRegular { n: 4, d: 4, multigraph: false, mode: None };
        assert!(build_workload(0, &small, ModeName::Static, base).is_err());
        assert!(build_workload(0, &CellSpec::Paley { q: 15 }, ModeName::Static, base).is_err());
    }

    #[test]
    fn small_sweep() {
        let spec = ExperimentSpec {
            cells: vec![CellSpec::RandomRegular { n: 4, d: 3, multigraph: false, mode: None }],
            runs: 10,
            seed: 7,
            mode: ModeName::Static,
            retain: Retain::Summary,
            phase_log_power: None,
            full_traces: 50,
            out_dir: None,
        };
        let out = sweep(&spec, 2, Path::new(".")).unwrap();
        assert_eq!(out.runs.len(), 10);
        assert!(out.runs.iter().all(|r| r.broadcast_time.unwrap() >= 2));
        assert_eq!(out.summaries[0].violation_fraction, 0.0);
        let again = sweep(&spec, 1, Path::new(".")).unwrap();
        assert_eq!(out.runs, again.runs);
        assert_eq!(out.summaries, again.summaries);
    }

    #[test]
    fn trajectory_starts_aligned() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (tr, _) = run_incremental(20_000, 3, &mut rng).unwrap();
        let cmp = compare_trajectory(&tr, PhaseThreshold::DESK_SCALE).unwrap();
        let first = &cmp.rows[0];
        assert_eq!((first.rel_u, first.rel_p), (0.0, 0.0));
        assert_eq!(first.t, cmp.t0);
        let g = fixtures::complete(4);
        let st = run_static(&g, 0, &mut rng).unwrap();
        assert!(matches!(compare_trajectory(&st, PhaseThreshold::DESK_SCALE), Err(Error::NotApplicable(_))));
        assert!(compare_trajectory(&tr, PhaseThreshold::ASYMPTOTIC).is_err());
    }
}
