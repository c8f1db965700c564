//! Drives an engine with an adversary and checks properness after every update.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use dyncolor::engine::{Engine, EngineConfig, EngineError, Metrics};
use dyncolor::trace::{TraceFile, TraceHeader, TraceRecord};
use dyncolor::{Color, EdgeUpdate, GraphError, VertexId, BLANK};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::Adversary;
use crate::config::{ConfigError, RunConfig};
use crate::verify::{verify, Report};

/// Summary of one driven run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub steps: u64,
    pub exhausted: bool,
    /// Updates after which some edge was monochromatic or a vertex uncolored.
    pub improper_steps: u64,
    /// First few properness failures, one line each.
    pub transcript: Vec<String>,
    pub monochrome_insertions: u64,
    pub insertions: u64,
    #[serde(skip)]
    pub wall: Duration,
}

impl RunOutcome {
    pub fn monochrome_rate(&self) -> f64 {
        self.monochrome_insertions as f64 / self.insertions.max(1) as f64
    }
}

/// Checks the new edge and every edge at a recolored vertex. Exact when the
/// coloring was proper before the update.
pub fn local_properness(engine: &Engine, e: &EdgeUpdate, changes: &[(VertexId, Color)]) -> Option<String> {
    let g = engine.graph();
    let palette = engine.delta() as Color + 1;
    let bad = |v: VertexId| {
        let c = engine.color_of(v);
        (c == BLANK || c > palette).then(|| format!("vertex {v} has color {c}"))
    };
    let clash = |u: VertexId, v: VertexId| {
        (engine.color_of(u) == engine.color_of(v))
            .then(|| format!("edge ({u}, {v}) is monochromatic with color {}", engine.color_of(u)))
    };
    if e.is_insert() {
        if let Some(m) = bad(e.u).or_else(|| bad(e.v)).or_else(|| clash(e.u, e.v)) {
            return Some(m);
        }
    }
    for &(v, _) in changes {
        if let Some(m) = bad(v) {
            return Some(m);
        }
        for &w in g.neighbors(v) {
            if let Some(m) = clash(v, w) {
                return Some(m);
            }
        }
    }
    None
}

/// Runs up to `steps` adversary updates. `on_step` sees the engine after
/// each update and may stop the run by returning false.
pub fn drive(
    engine: &mut Engine,
    adversary: &mut Adversary,
    steps: u64,
    mut on_step: impl FnMut(&Engine, u64, &EdgeUpdate) -> bool,
) -> RunOutcome {
    let start = Instant::now();
    let mut out = RunOutcome::default();
    for step in 0..steps {
        let e = match adversary.next(engine.graph(), engine.colors()) {
            Ok(e) => e,
            Err(_) => {
                out.exhausted = true;
                break;
            }
        };
        let changes = engine.process(e).expect("adversary emits legal updates");
        adversary.observe(&changes);
        out.steps += 1;
        if let Some(m) = local_properness(engine, &e, &changes) {
            out.improper_steps += 1;
            if out.transcript.len() < 8 {
                out.transcript.push(format!("step {step}: {m}"));
            }
        }
        if !on_step(engine, step, &e) {
            break;
        }
    }
    out.monochrome_insertions = adversary.monochrome_insertions();
    out.insertions = adversary.insertions();
    out.wall = start.elapsed();
    out
}

/// Runs like [`drive`] and records every update with its published changes.
pub fn record(engine: &mut Engine, adversary: &mut Adversary, steps: u64) -> (TraceFile, RunOutcome) {
    let start = Instant::now();
    let header = TraceHeader {
        n: engine.n(),
        delta: engine.delta(),
        mode: engine.mode(),
        params: engine.params().clone(),
    };
    let mut trace = TraceFile::new(header);
    let mut out = RunOutcome::default();
    for step in 0..steps {
        let Ok(e) = adversary.next(engine.graph(), engine.colors()) else {
            out.exhausted = true;
            break;
        };
        let changes = engine.process(e).expect("adversary emits legal updates");
        adversary.observe(&changes);
        out.steps += 1;
        if let Some(m) = local_properness(engine, &e, &changes) {
            out.improper_steps += 1;
            if out.transcript.len() < 8 {
                out.transcript.push(format!("step {step}: {m}"));
            }
        }
        trace.records.push(TraceRecord { update: e, outputs: Some(sorted(changes)) });
    }
    out.monochrome_insertions = adversary.monochrome_insertions();
    out.insertions = adversary.insertions();
    out.wall = start.elapsed();
    (trace, out)
}

fn sorted(mut changes: Vec<(VertexId, Color)>) -> Vec<(VertexId, Color)> {
    changes.sort_unstable();
    changes
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("update {index}: {source}")]
    Illegal { index: usize, source: GraphError },
}

/// Result of re-running a trace.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplayOutcome {
    pub steps: u64,
    pub improper_steps: u64,
    /// Records whose stored outputs disagree with the re-run.
    pub mismatches: u64,
    /// Index of the first disagreeing record.
    pub first_mismatch: Option<usize>,
}

/// Re-runs `trace` on a fresh engine built from its header and compares
/// against any recorded outputs. Returns the engine for further checks.
pub fn replay(trace: &TraceFile) -> Result<(Engine, ReplayOutcome), ReplayError> {
    let h = &trace.header;
    let mut engine = Engine::new(h.n, h.delta, EngineConfig { params: h.params.clone(), mode: h.mode })?;
    let mut out = ReplayOutcome::default();
    for (index, r) in trace.records.iter().enumerate() {
        let changes = engine.process(r.update).map_err(|source| ReplayError::Illegal { index, source })?;
        out.steps += 1;
        if local_properness(&engine, &r.update, &changes).is_some() {
            out.improper_steps += 1;
        }
        if let Some(expected) = &r.outputs {
            if *expected != sorted(changes) {
                out.mismatches += 1;
                out.first_mismatch.get_or_insert(index);
            }
        }
    }
    Ok((engine, out))
}

/// Where and with what a report was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub os: String,
    pub arch: String,
    pub seed: u64,
}

impl Environment {
    pub fn current(seed: u64) -> Self {
        Environment {
            version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            seed,
        }
    }
}

/// Everything the `run` command reports. Deterministic for a given config:
/// wall time is not serialized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub environment: Environment,
    pub config: RunConfig,
    pub outcome: RunOutcome,
    pub metrics: Metrics,
    /// Periodic verifier results: (update count, failed check names).
    pub periodic: Vec<(u64, Vec<String>)>,
    /// Checks failed at least once across all verifications.
    pub failure_tallies: BTreeMap<String, u64>,
    pub verifications: u64,
    pub final_report: Report,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs a configured experiment, verifying every `verify_every` updates and
/// once at the end.
pub fn run(cfg: &RunConfig) -> Result<RunReport, ConfigError> {
    let n = cfg.n;
    let delta = cfg.delta();
    let ec = cfg.engine_config()?;
    let mut engine = Engine::new(n, delta, ec).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let mut adversary = Adversary::new(cfg.strategy, n, delta, cfg.seed ^ 0x5eed, cfg.strategy_params.clone());
    let mut periodic = Vec::new();
    let mut tallies: BTreeMap<String, u64> = BTreeMap::new();
    let mut verifications = 0;
    let mut tally = |r: &Report, periodic: &mut Vec<(u64, Vec<String>)>| {
        let failed: Vec<String> = r.failed().iter().map(|c| c.name().to_string()).collect();
        for f in &failed {
            *tallies.entry(f.clone()).or_default() += 1;
        }
        periodic.push((r.updates, failed));
    };
    let every = cfg.verify_every;
    let outcome = drive(&mut engine, &mut adversary, cfg.steps, |e, step, _| {
        if every > 0 && (step + 1) % every == 0 {
            tally(&verify(e), &mut periodic);
            verifications += 1;
        }
        true
    });
    let final_report = verify(&engine);
    tally(&final_report, &mut periodic);
    verifications += 1;
    Ok(RunReport {
        environment: Environment::current(cfg.seed),
        config: cfg.clone(),
        outcome,
        metrics: engine.metrics(),
        periodic,
        failure_tallies: tallies,
        verifications,
        final_report,
    })
}
