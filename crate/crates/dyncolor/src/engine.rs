//! Phase lifecycle and per-update dispatch.
//!
//! Updates are grouped into phases of `t` updates. During a phase the
//! partition into sparse vertices and almost-cliques is frozen and only the
//! coloring reacts. At the end of a phase all journaled bookkeeping is
//! undone, the phase is replayed through the decomposition, and every vertex
//! is recolored from scratch.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coloring::{trivial_color, ColorState};
use crate::decomposition::{Decomposition, DecompositionSnapshot, DecompositionStats, NonEdgeDelta};
use crate::dense::{Ctx, DenseColoring, DenseStats};
use crate::graph::{Color, DynamicGraph, EdgeUndo, EdgeUpdate, GraphError, VertexId, BLANK};
use crate::meter::Meter;
use crate::params::{EngineMode, ParamError, ParamSet, Profile};
use crate::sparse::{color_sparse, recolor_sparse, SparseReport};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("graph needs at least one vertex")]
    EmptyGraph,
}

/// ε = Δ^{1/5}/n^{2/5}.
pub fn auto_epsilon(n: usize, delta: usize) -> f64 {
    let e = (delta.max(1) as f64).powf(0.2) / (n.max(1) as f64).powf(0.4);
    e.clamp(1e-6, 0.999)
}

/// Below Δ = n^{8/9} the trivial rule is already fast enough.
pub fn prefers_baseline(n: usize, delta: usize) -> bool {
    delta as f64 <= (n as f64).powf(8.0 / 9.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub params: ParamSet,
    pub mode: EngineMode,
}

impl EngineConfig {
    /// Mode and ε picked from (n, Δ).
    pub fn auto(n: usize, delta: usize, profile: Profile, seed: u64) -> Self {
        let params = ParamSet::for_profile(profile, n, delta, auto_epsilon(n, delta), seed);
        let mode = if prefers_baseline(n, delta) { EngineMode::Baseline } else { EngineMode::Engine };
        EngineConfig { params, mode }
    }

    /// Full algorithm with the auto-tuned ε, whatever the (n, Δ) regime.
    pub fn forced_engine(n: usize, delta: usize, profile: Profile, seed: u64) -> Self {
        EngineConfig { mode: EngineMode::Engine, ..EngineConfig::auto(n, delta, profile, seed) }
    }

    pub fn baseline(n: usize, delta: usize, seed: u64) -> Self {
        EngineConfig { mode: EngineMode::Baseline, ..EngineConfig::auto(n, delta, Profile::Desk, seed) }
    }
}

/// One finished or running phase.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub index: u64,
    pub updates: usize,
    /// Work spent in the initialization that opened this phase.
    pub init_work: u64,
    pub sparse: usize,
    pub cliques: usize,
    /// max_c |L(c)| right after color_sparse.
    pub max_load_start: usize,
    /// max_c (|L(c)| − phase-start |L(c)|) when the phase ended.
    pub load_growth: i64,
    pub sparse_report: SparseReport,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mode: Option<EngineMode>,
    pub updates: u64,
    pub phases: u64,
    pub work: Meter,
    /// Vertices whose published color changed.
    pub recolorings: u64,
    pub sparse_fallbacks: u64,
    pub dense: DenseStats,
    pub decomposition: DecompositionStats,
    pub phase_log: Vec<PhaseRecord>,
}

impl Metrics {
    pub fn fallbacks(&self) -> u64 {
        self.sparse_fallbacks + self.dense.fallbacks
    }

    pub fn work_per_update(&self) -> f64 {
        self.work.total() as f64 / self.updates.max(1) as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

/// Serializable view of the engine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineSnapshot {
    pub n: usize,
    pub delta: usize,
    pub mode: EngineMode,
    pub phase: u64,
    pub updates_in_phase: usize,
    pub colors: Vec<Color>,
    pub decomposition: DecompositionSnapshot,
    pub matched_pairs: Vec<(VertexId, VertexId)>,
}

#[derive(Clone, Debug)]
pub struct Engine {
    config: EngineConfig,
    graph: DynamicGraph,
    decomp: Decomposition,
    colors: ColorState,
    dense: DenseColoring,
    rng: ChaCha8Rng,
    meter: Meter,
    phase_updates: Vec<(EdgeUpdate, EdgeUndo)>,
    phase_len: usize,
    load_start: Vec<u32>,
    metrics: Metrics,
}

impl Engine {
    pub fn new(n: usize, delta: usize, config: EngineConfig) -> Result<Self, EngineError> {
        if n == 0 {
            return Err(EngineError::EmptyGraph);
        }
        config.params.validate()?;
        let p = &config.params;
        let mut e = Engine {
            graph: DynamicGraph::new(n, delta),
            decomp: Decomposition::new(n, delta, p),
            colors: ColorState::new(n, delta),
            dense: DenseColoring::new(n, delta, p),
            rng: ChaCha8Rng::seed_from_u64(p.seed),
            meter: Meter::default(),
            phase_updates: Vec::new(),
            phase_len: p.phase_len_t.max(1),
            load_start: Vec::new(),
            metrics: Metrics { mode: Some(config.mode), ..Default::default() },
            config,
        };
        match e.config.mode {
            EngineMode::Engine => e.initialize(),
            EngineMode::Baseline => {
                for v in 0..n as VertexId {
                    e.colors.set(v, 1, false);
                }
            }
        }
        e.colors.take_changes();
        Ok(e)
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn delta(&self) -> usize {
        self.graph.delta()
    }

    pub fn mode(&self) -> EngineMode {
        self.config.mode
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.config.params
    }

    pub fn graph(&self) -> &DynamicGraph {
        &self.graph
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomp
    }

    pub fn dense(&self) -> &DenseColoring {
        &self.dense
    }

    pub fn color_state(&self) -> &ColorState {
        &self.colors
    }

    pub fn color_of(&self, v: VertexId) -> Color {
        self.colors.color(v)
    }

    pub fn colors(&self) -> &[Color] {
        self.colors.colors()
    }

    pub fn phase_len(&self) -> usize {
        self.phase_len
    }

    pub fn updates_in_phase(&self) -> usize {
        self.phase_updates.len()
    }

    /// Updates processed so far.
    pub fn updates(&self) -> u64 {
        self.metrics.updates
    }

    pub fn phase_index(&self) -> u64 {
        self.metrics.phases
    }

    pub fn meter(&self) -> Meter {
        self.meter
    }

    pub fn metrics(&self) -> Metrics {
        let mut m = self.metrics.clone();
        m.work = self.meter;
        m.dense = self.dense.stats();
        m.decomposition = self.decomp.stats();
        m
    }

    pub fn snapshot(&self) -> EngineSnapshot {
        let mut pairs: Vec<_> = self
            .decomp
            .cliques()
            .flat_map(|c| self.dense.matching.pairs(&self.decomp, c.id))
            .collect();
        pairs.sort_unstable();
        EngineSnapshot {
            n: self.n(),
            delta: self.delta(),
            mode: self.mode(),
            phase: self.metrics.phases,
            updates_in_phase: self.phase_updates.len(),
            colors: self.colors.colors().to_vec(),
            decomposition: self.decomp.snapshot(),
            matched_pairs: pairs,
        }
    }

    /// Applies one update and returns the vertices whose color changed.
    pub fn process(&mut self, e: EdgeUpdate) -> Result<Vec<(VertexId, Color)>, GraphError> {
        let undo = self.graph.apply(&e)?;
        self.metrics.updates += 1;
        self.meter.touched += 1;
        match self.config.mode {
            EngineMode::Baseline => self.handle_baseline(&e),
            EngineMode::Engine => {
                self.phase_updates.push((e, undo));
                let d = self.decomp.apply_edge_bookkeeping(&e);
                self.handle_update(&e, d);
                if self.phase_updates.len() >= self.phase_len {
                    self.initialize();
                }
            }
        }
        let changes = self.colors.take_changes();
        self.metrics.recolorings += changes.len() as u64;
        Ok(changes)
    }

    /// Smallest color unused by any neighbor of v; assigns and returns it.
    pub fn trivial_recolor(&mut self, v: VertexId) -> Color {
        self.colors.clear(v);
        let c = trivial_color(&self.graph, self.colors.colors(), v, |_| true, &mut self.meter);
        self.colors.set(v, c, false);
        c
    }

    fn handle_baseline(&mut self, e: &EdgeUpdate) {
        if e.is_insert() && self.colors.color(e.u) == self.colors.color(e.v) {
            self.trivial_recolor(e.v);
        }
    }

    fn handle_update(&mut self, e: &EdgeUpdate, d: Option<NonEdgeDelta>) {
        let Engine { graph, decomp, colors, dense, rng, meter, config, metrics, .. } = self;
        dense.reset_budget();
        let (u, v) = (e.u, e.v);
        let monochrome = e.is_insert() && colors.color(u) != BLANK && colors.color(u) == colors.color(v);
        match (decomp.clique_of(u), decomp.clique_of(v)) {
            (None, None) => {
                if !monochrome {
                    return;
                }
                let is_sparse = |x: VertexId| !decomp.is_dense(x);
                let (old, new, fb) = recolor_sparse(graph, colors, v, &is_sparse, config.params.cap_samples, rng, meter);
                metrics.sparse_fallbacks += fb as u64;
                dense.update_edge_counts(decomp, v, old, new, meter);
                let list = colors.dense_list(new);
                meter.probes += list.len() as u64;
                let victims: Vec<VertexId> = list.iter().filter(|&w| graph.has_edge(v, w)).collect();
                let mut cx = Ctx { g: graph, decomp, colors, rng, meter };
                for w in victims {
                    if cx.colors.color(w) == new {
                        dense.recolor_dense(&mut cx, w);
                    }
                }
            }
            (None, Some(c)) | (Some(c), None) => {
                let (s, w) = if decomp.is_dense(v) { (u, v) } else { (v, u) };
                let cs = colors.color(s);
                if cs != BLANK {
                    dense.adjust_edge_count(c, cs, if e.is_insert() { 1 } else { -1 });
                }
                if monochrome {
                    let mut cx = Ctx { g: graph, decomp, colors, rng, meter };
                    dense.recolor_dense(&mut cx, w);
                }
            }
            (Some(cu), Some(cv)) => {
                let mut cx = Ctx { g: graph, decomp, colors, rng, meter };
                if cu == cv {
                    if let Some(d) = d {
                        dense.on_non_edge_delta(&mut cx, &d);
                    }
                }
                let (a, b) = (cx.colors.color(u), cx.colors.color(v));
                if e.is_insert() && a != BLANK && a == b {
                    dense.recolor_dense(&mut cx, v);
                }
            }
        }
    }

    /// Ends the current phase: revert, replay, recolor from scratch.
    fn initialize(&mut self) {
        let before = self.meter;
        if let Some(last) = self.metrics.phase_log.last_mut() {
            last.updates = self.phase_updates.len();
            last.load_growth = self
                .colors
                .sparse_loads()
                .iter()
                .zip(&self.load_start)
                .map(|(&a, &b)| a as i64 - b as i64)
                .max()
                .unwrap_or(0);
        }
        self.decomp.revert_journal();
        self.dense.matching.revert_journal();
        for (e, undo) in self.phase_updates.iter().rev() {
            self.graph.revert(e, *undo);
        }
        let updates: Vec<EdgeUpdate> = self.phase_updates.drain(..).map(|(e, _)| e).collect();
        for e in &updates {
            self.graph.apply(e).expect("replaying an update that was legal");
            let cs = self.decomp.update_decomposition(&self.graph, e, &mut self.rng, &mut self.meter);
            for d in &cs.non_edge_deltas {
                self.dense.matching.maintain_matching(&self.decomp, d, &mut self.meter);
            }
        }
        self.dense.matching.begin_recording();
        self.dense.post_process(&self.decomp, &mut self.meter);

        self.colors.blank_all();
        let decomp = &self.decomp;
        let sparse: Vec<VertexId> = (0..self.graph.n() as VertexId).filter(|&x| !decomp.is_dense(x)).collect();
        let is_sparse = |x: VertexId| !decomp.is_dense(x);
        let report = color_sparse(
            &self.graph,
            &mut self.colors,
            &sparse,
            &is_sparse,
            self.config.params.cap_samples,
            &mut self.rng,
            &mut self.meter,
        );
        self.metrics.sparse_fallbacks += report.fallbacks as u64;
        let max_load_start = self.colors.max_sparse_load();
        self.load_start = self.colors.sparse_loads();
        {
            let mut cx = Ctx {
                g: &self.graph,
                decomp: &self.decomp,
                colors: &mut self.colors,
                rng: &mut self.rng,
                meter: &mut self.meter,
            };
            self.dense.init_phase(&mut cx);
        }
        self.decomp.begin_recording();
        self.metrics.phase_log.push(PhaseRecord {
            index: self.metrics.phases,
            updates: 0,
            init_work: self.meter.since(&before).total(),
            sparse: sparse.len(),
            cliques: self.decomp.clique_count(),
            max_load_start,
            load_growth: 0,
            sparse_report: report,
        });
        self.metrics.phases += 1;
    }

    #[cfg(test)]
    pub(crate) fn parts_mut(&mut self) -> (Ctx<'_, ChaCha8Rng>, &mut DenseColoring) {
        let Engine { graph, decomp, colors, dense, rng, meter, .. } = self;
        (Ctx { g: graph, decomp, colors, rng, meter }, dense)
    }

    /// Recolors `v` through the color lists, bypassing every other structure.
    #[cfg(feature = "fault-injection")]
    pub fn inject_color(&mut self, v: VertexId, c: Color) {
        let dense = self.colors.in_dense_list(v);
        self.colors.clear(v);
        if c != BLANK {
            self.colors.set(v, c, dense);
        }
        self.colors.take_changes();
    }

    #[cfg(feature = "fault-injection")]
    pub fn color_state_mut(&mut self) -> &mut ColorState {
        &mut self.colors
    }

    #[cfg(feature = "fault-injection")]
    pub fn decomposition_mut(&mut self) -> &mut Decomposition {
        &mut self.decomp
    }

    #[cfg(feature = "fault-injection")]
    pub fn dense_mut(&mut self) -> &mut DenseColoring {
        &mut self.dense
    }
}
