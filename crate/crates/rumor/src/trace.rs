//! JSON form of a protocol run.

use rumor_core::push::{Mode, PhaseThreshold, ProtocolTrace};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRound {
    pub t: u32,
    #[serde(rename = "I")]
    pub informed: u64,
    #[serde(rename = "U")]
    pub uninformed: u64,
    #[serde(rename = "N")]
    pub newly_informed: u64,
    #[serde(rename = "P")]
    pub unexposed: Option<u64>,
    #[serde(rename = "A")]
    pub selected: Option<u64>,
    /// `H[l - 1]` for `l = 1..=d`.
    #[serde(rename = "H")]
    pub hits: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub n: usize,
    pub d: usize,
    pub mode: String,
    pub seed: u64,
    #[serde(rename = "T")]
    pub broadcast_time: Option<u32>,
    #[serde(rename = "T0")]
    pub t0: Option<u32>,
    #[serde(rename = "T1")]
    pub t1: Option<u32>,
    pub rounds: Vec<TraceRound>,
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Static => "static",
        Mode::Incremental => "incremental",
    }
}

impl TraceFile {
    pub fn from_trace(trace: &ProtocolTrace, seed: u64, threshold: PhaseThreshold) -> Self {
        let phases = trace.phase_times(threshold);
        Self {
            n: trace.n,
            d: trace.d,
            mode: mode_name(trace.mode).to_string(),
            seed,
            broadcast_time: trace.broadcast_time,
            t0: phases.t0,
            t1: phases.t1,
            rounds: trace
                .records
                .iter()
                .map(|r| TraceRound {
                    t: r.t,
                    informed: r.informed,
                    uninformed: r.uninformed,
                    newly_informed: r.newly_informed,
                    unexposed: r.exposure.as_ref().map(|e| e.unexposed),
                    selected: r.exposure.as_ref().map(|e| e.selected),
                    hits: r.exposure.as_ref().map(|e| e.hits.clone()),
                })
                .collect(),
        }
    }
}
