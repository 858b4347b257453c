use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rumor::error::{Error, Result};
use rumor::experiment::{self, ExperimentSpec, Simulation, Workload};
use rumor::io::{read_graph, write_graph};
use rumor::trace::TraceFile;
use rumor_core::bounds::{chernoff_tail, matching_tail, talagrand_tail, ChernoffQuery, TailBound, TalagrandQuery};
use rumor_core::config_model::{sample_configuration, sample_simple_regular, DEFAULT_MAX_ATTEMPTS};
use rumor_core::push::{run_static, PhaseThreshold};
use rumor_core::spectral::{estimate_spectrum, spectrum, typicality_check, ConditionReport, DENSE_CAP};
use rumor_core::theory::{c_d, integrate, TheoryParams};
use serde_json::json;

#[derive(Parser)]
#[command(name = "rumor", version, about = "Push rumor spreading on regular graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Static,
    Incremental,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random d-regular graph (simple unless --multigraph).
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        multigraph: bool,
        /// `.csv` writes an edge list, anything else adjacency text.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the push protocol once.
    Run {
        #[arg(long, required_unless_present = "graph")]
        n: Option<usize>,
        #[arg(long, required_unless_present = "graph")]
        d: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "static")]
        mode: ModeArg,
        /// Fixed graph to run on (static mode only).
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Start vertex, numbered from 1.
        #[arg(long, default_value_t = 1)]
        start: u32,
        /// Keep configuration-model loops and multi-edges.
        #[arg(long)]
        multigraph: bool,
        /// Power k of the phase threshold ln^k n.
        #[arg(long, default_value_t = 7.0)]
        phase_power: f64,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Integrate the deterministic recursion and print it as CSV.
    Theory {
        #[arg(long)]
        n: f64,
        #[arg(long)]
        d: u32,
        #[arg(long, requires = "u0")]
        p0: Option<f64>,
        #[arg(long, requires = "p0")]
        u0: Option<f64>,
        #[arg(long, default_value_t = 7.0)]
        phase_power: f64,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Adjacency spectrum, lambda and Alon-Boppana slack as JSON.
    Spectral {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 500)]
        iterations: usize,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Sampled check of the three (d/n, eps)-typicality conditions.
    Typicality {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Tail-bound calculators.
    Bounds {
        #[command(subcommand)]
        which: BoundCommand,
    },
    /// Run a seeded experiment described by a JSON file.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BoundCommand {
    Chernoff {
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        t: f64,
    },
    Talagrand {
        #[arg(long)]
        m: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        c: f64,
    },
    /// Tail of the matching edge counts between clone classes.
    Matching {
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
    },
}

fn emit(out: &Path, text: &str) -> Result<()> {
    if out == Path::new("-") {
        print!("{text}");
        Ok(())
    } else {
        std::fs::write(out, text).map_err(|source| Error::Io { path: out.to_path_buf(), source })
    }
}

fn print_bound(b: TailBound) {
    println!("bound={} informative={} applicable={}", b.value, b.informative, b.applicable);
}

fn condition_json(c: &ConditionReport) -> serde_json::Value {
    let failures: Vec<_> = c
        .samples
        .iter()
        .filter(|s| !s.pass)
        .take(20)
        .map(|s| json!({"size": s.size, "observed": s.observed, "bound": s.bound, "expected": s.expected}))
        .collect();
    json!({
        "pass": c.pass,
        "sampled": c.samples.len(),
        "failed": c.samples.iter().filter(|s| !s.pass).count(),
        "first_failures": failures,
    })
}

/// Exit status 1 flags identity violations; errors exit with 2.
fn execute(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Gen { n, d, seed, multigraph, out } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (g, attempts) = if multigraph {
                (sample_configuration(n, d, &mut rng)?, 1)
            } else {
                let s = sample_simple_regular(n, d, &mut rng, DEFAULT_MAX_ATTEMPTS)?;
                (s.graph, s.attempts)
            };
            write_graph(&out, &g)?;
            eprintln!("attempts={attempts} simple={}", g.is_simple());
            Ok(true)
        }
        Command::Run { n, d, seed, mode, graph, start, multigraph, phase_power, trace } => {
            let threshold = PhaseThreshold { log_power: phase_power };
            if start == 0 {
                return Err(Error::InvalidSpec("vertices are numbered from 1".into()));
            }
            let sim = match (graph, mode) {
                (Some(path), ModeArg::Static) => {
                    let g = read_graph(&path)?;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let tr = run_static(&g, start - 1, &mut rng)?;
                    Simulation { trace: tr, graph: g, attempts: 1 }
                }
                (Some(_), ModeArg::Incremental) => {
                    return Err(Error::InvalidSpec("incremental mode samples its own graph".into()))
                }
                (None, mode) => {
                    if start != 1 {
                        return Err(Error::InvalidSpec("random graphs start at vertex 1".into()));
                    }
                    let (n, d) = (n.unwrap_or(0), d.unwrap_or(0));
                    let spec = experiment::CellSpec::RandomRegular {
                        n,
                        d,
                        multigraph,
                        mode: Some(match mode {
                            ModeArg::Static => experiment::ModeName::Static,
                            ModeArg::Incremental => experiment::ModeName::Incremental,
                        }),
                    };
                    let work: Workload = experiment::build_workload(0, &spec, Default::default(), Path::new("."))?;
                    experiment::simulate(&work, seed)?
                }
            };
            let violations = sim.trace.identity_violations();
            let file = TraceFile::from_trace(&sim.trace, seed, threshold);
            let show = |x: Option<u32>| x.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
            println!(
                "T={} T0={} T1={} informed={}/{} violations={}",
                show(file.broadcast_time),
                show(file.t0),
                show(file.t1),
                sim.trace.coverage(),
                sim.trace.n,
                violations.len()
            );
            if let Some(path) = trace {
                emit(&path, &(serde_json::to_string_pretty(&file)? + "\n"))?;
            }
            Ok(violations.is_empty())
        }
        Command::Theory { n, d, p0, u0, phase_power, out } => {
            let params = match (p0, u0) {
                (Some(p), Some(u)) => TheoryParams::from_state(n, d, p, u)?,
                _ => TheoryParams::with_threshold(n, d, PhaseThreshold { log_power: phase_power })?,
            };
            let traj = integrate(&params, params.horizon_cap())?;
            let c = c_d(d as f64)?;
            let mut text = format!(
                "# C_d={c}\n# t1={}\n# t2={}\n# predicted_T={}\n# steps_to_end={}\nt,p,u,f,r\n",
                traj.t1,
                traj.t2.map(|t| t.to_string()).unwrap_or_default(),
                c * n.ln(),
                traj.steps_to_end,
            );
            for k in 0..traj.len() {
                text.push_str(&format!("{k},{},{},{},{}\n", traj.p[k], traj.u[k], traj.f[k], traj.r[k]));
            }
            emit(&out, &text)?;
            Ok(true)
        }
        Command::Spectral { graph, iterations, out } => {
            let g = read_graph(&graph)?;
            let value = if g.n() <= DENSE_CAP {
                let s = spectrum(&g)?;
                json!({
                    "method": "dense",
                    "n": g.n(),
                    "d": g.d(),
                    "eigenvalues": s.eigenvalues,
                    "lambda": s.lambda,
                    "alon_boppana_slack": s.alon_boppana_slack,
                    "ramanujan": s.is_ramanujan(),
                })
            } else {
                let e = estimate_spectrum(&g, iterations);
                json!({
                    "method": "power",
                    "n": g.n(),
                    "d": g.d(),
                    "lambda_1": e.lambda_1,
                    "lambda": e.lambda,
                    "tolerance": e.tolerance,
                    "alon_boppana_slack": e.lambda - 2.0 * ((g.d() as f64) - 1.0).sqrt(),
                })
            };
            emit(&out, &(serde_json::to_string_pretty(&value)? + "\n"))?;
            Ok(true)
        }
        Command::Typicality { graph, eps, budget, seed, out } => {
            let g = read_graph(&graph)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = typicality_check(&g, eps, budget, &mut rng)?;
            let value = json!({
                "n": g.n(),
                "d": g.d(),
                "p": r.p,
                "epsilon": r.epsilon,
                "exhaustive": r.exhaustive,
                "pass": r.pass(),
                "condition1": condition_json(&r.condition1),
                "condition2": condition_json(&r.condition2),
                "condition3": condition_json(&r.condition3),
            });
            emit(&out, &(serde_json::to_string_pretty(&value)? + "\n"))?;
            Ok(true)
        }
        Command::Bounds { which } => {
            let b = match which {
                BoundCommand::Chernoff { mu, t } => chernoff_tail(ChernoffQuery { mean: mu, deviation: t })?,
                BoundCommand::Talagrand { m, t, r, c } => talagrand_tail(TalagrandQuery {
                    median: m,
                    deviation: t,
                    certificate_rate: r,
                    lipschitz: c,
                })?,
                BoundCommand::Matching { mu, eps, d, n } => matching_tail(mu, eps, d, n)?,
            };
            print_bound(b);
            Ok(true)
        }
        Command::Sweep { spec, workers, out_dir } => {
            let text = std::fs::read_to_string(&spec).map_err(|source| Error::Io { path: spec.clone(), source })?;
            let parsed = ExperimentSpec::from_json(&text)?;
            let base = spec.parent().unwrap_or(Path::new("."));
            let dir = out_dir
                .or_else(|| parsed.out_dir.clone())
                .ok_or_else(|| Error::InvalidSpec("no output directory".into()))?;
            let out = experiment::sweep(&parsed, workers.max(1), base)?;
            experiment::write_outputs(&out, &parsed, &dir)?;
            for s in &out.summaries {
                eprintln!(
                    "cell {}: n={} d={} meanT={:.3} C_hat={:.4} C_d={} violations={}",
                    s.cell,
                    s.n,
                    s.d,
                    s.mean_t,
                    s.c_hat,
                    s.c_d.map(|c| format!("{c:.4}")).unwrap_or_else(|| "-".into()),
                    s.violation_fraction
                );
            }
            let total = out.total_violations();
            if total > 0 {
                eprintln!("{total} identity violations");
            }
            Ok(total == 0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
