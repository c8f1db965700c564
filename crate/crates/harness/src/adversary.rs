//! Update generators. Adaptive strategies see the graph they built and the
//! published coloring, never the engine's internals or its random state.

use std::fmt;
use std::str::FromStr;

use dyncolor::set::IndexedSet;
use dyncolor::{Color, DynamicGraph, EdgeUpdate, VertexId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("adversary exhausted: no legal update exists")]
pub struct Exhausted;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    AdaptiveMonochrome,
    ObliviousRandom,
    DeletionHeavy,
    CliqueChurn,
    Scripted,
}

impl StrategyKind {
    pub const GENERATED: [StrategyKind; 4] = [
        StrategyKind::AdaptiveMonochrome,
        StrategyKind::ObliviousRandom,
        StrategyKind::DeletionHeavy,
        StrategyKind::CliqueChurn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::AdaptiveMonochrome => "adaptive-monochrome",
            StrategyKind::ObliviousRandom => "oblivious-random",
            StrategyKind::DeletionHeavy => "deletion-heavy",
            StrategyKind::CliqueChurn => "clique-churn",
            StrategyKind::Scripted => "scripted",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [StrategyKind::Scripted]
            .into_iter()
            .chain(StrategyKind::GENERATED)
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

/// Tunables shared by the generated strategies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyParams {
    /// Probability that oblivious-random deletes instead of inserting.
    pub delete_prob: f64,
    /// Edges deletion-heavy inserts before it starts tearing down.
    pub build_edges: usize,
    /// Deletion probability once deletion-heavy is tearing down.
    pub teardown_prob: f64,
    /// Group size for clique-churn, as a fraction of Δ.
    pub group_frac: f64,
    /// Intra-group edge density clique-churn builds up to.
    pub build_density: f64,
    /// Density clique-churn erodes down to before rebuilding.
    pub erode_density: f64,
    /// Fraction of clique-churn steps spent on random background updates.
    pub noise: f64,
    /// Attempts before a search gives up.
    pub attempts: usize,
}

impl Default for StrategyParams {
    fn default() -> Self {
        StrategyParams {
            delete_prob: 0.3,
            build_edges: 4000,
            teardown_prob: 0.7,
            group_frac: 0.95,
            build_density: 0.97,
            erode_density: 0.8,
            noise: 0.1,
            attempts: 64,
        }
    }
}

#[derive(Clone, Debug)]
enum State {
    Monochrome { buckets: Vec<IndexedSet>, known: Vec<Color>, seeded: bool },
    Random,
    DeletionHeavy { inserted: usize },
    Churn { groups: Vec<Group>, current: usize },
    Scripted { updates: Vec<EdgeUpdate>, next: usize },
}

/// A planted near-clique: vertices `base..base + size`.
#[derive(Clone, Debug)]
struct Group {
    base: VertexId,
    size: u32,
    building: bool,
}

impl Group {
    fn pairs(&self) -> u64 {
        self.size as u64 * (self.size as u64 - 1) / 2
    }

    fn pick(&self, rng: &mut impl Rng) -> (VertexId, VertexId) {
        loop {
            let a = self.base + rng.gen_range(0..self.size);
            let b = self.base + rng.gen_range(0..self.size);
            if a != b {
                return (a, b);
            }
        }
    }

    fn edges_inside(&self, g: &DynamicGraph) -> u64 {
        (self.base..self.base + self.size)
            .map(|u| g.neighbors(u).iter().filter(|&&w| w > u && w >= self.base && w < self.base + self.size).count() as u64)
            .sum()
    }
}

/// Colors normally stay in 1..=Δ+1, but callers may pass anything.
fn bucket_for(buckets: &mut Vec<IndexedSet>, c: Color) -> &mut IndexedSet {
    if c as usize >= buckets.len() {
        buckets.resize(c as usize + 1, IndexedSet::new());
    }
    &mut buckets[c as usize]
}

/// Stateful update source.
#[derive(Clone, Debug)]
pub struct Adversary {
    kind: StrategyKind,
    params: StrategyParams,
    n: usize,
    delta: usize,
    rng: ChaCha8Rng,
    state: State,
    emitted: u64,
    monochrome_hits: u64,
    insertions: u64,
}

impl Adversary {
    pub fn new(kind: StrategyKind, n: usize, delta: usize, seed: u64, params: StrategyParams) -> Self {
        let state = match kind {
            StrategyKind::AdaptiveMonochrome => {
                State::Monochrome { buckets: vec![IndexedSet::new(); delta + 2], known: vec![0; n], seeded: false }
            }
            StrategyKind::ObliviousRandom => State::Random,
            StrategyKind::DeletionHeavy => State::DeletionHeavy { inserted: 0 },
            StrategyKind::CliqueChurn => {
                let size = ((params.group_frac * delta as f64).round() as u32).clamp(2, n as u32);
                let count = (n as u32 / size).max(1);
                let groups = (0..count).map(|i| Group { base: i * size, size, building: true }).collect();
                State::Churn { groups, current: 0 }
            }
            StrategyKind::Scripted => State::Scripted { updates: Vec::new(), next: 0 },
        };
        Adversary {
            kind,
            params,
            n,
            delta,
            rng: ChaCha8Rng::seed_from_u64(seed),
            state,
            emitted: 0,
            monochrome_hits: 0,
            insertions: 0,
        }
    }

    /// Replays a fixed list of updates.
    pub fn scripted(n: usize, delta: usize, updates: Vec<EdgeUpdate>) -> Self {
        let mut a = Adversary::new(StrategyKind::Scripted, n, delta, 0, StrategyParams::default());
        a.state = State::Scripted { updates, next: 0 };
        a
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    pub fn insertions(&self) -> u64 {
        self.insertions
    }

    /// Insertions whose endpoints shared a color when emitted.
    pub fn monochrome_insertions(&self) -> u64 {
        self.monochrome_hits
    }

    /// Feeds back the color changes published after the last update.
    pub fn observe(&mut self, changes: &[(VertexId, Color)]) {
        if let State::Monochrome { buckets, known, seeded: true } = &mut self.state {
            for &(v, c) in changes {
                buckets[known[v as usize] as usize].remove(v);
                bucket_for(buckets, c).insert(v);
                known[v as usize] = c;
            }
        }
    }

    /// Next legal update for graph `g` colored by `colors`.
    pub fn next(&mut self, g: &DynamicGraph, colors: &[Color]) -> Result<EdgeUpdate, Exhausted> {
        let e = match &mut self.state {
            State::Monochrome { .. } => self.next_monochrome(g, colors),
            State::Random => {
                let p = self.params.delete_prob;
                self.next_random(g, p)
            }
            State::DeletionHeavy { inserted } => {
                let p = if *inserted < self.params.build_edges { 0.05 } else { self.params.teardown_prob };
                self.next_random(g, p)
            }
            State::Churn { .. } => self.next_churn(g),
            State::Scripted { updates, next } => {
                let e = updates.get(*next).copied().ok_or(Exhausted);
                *next += 1;
                e
            }
        }?;
        debug_assert!(g.validate(&e).is_ok(), "adversary emitted an illegal update {e:?}");
        self.emitted += 1;
        if e.is_insert() {
            self.insertions += 1;
            if colors[e.u as usize] == colors[e.v as usize] {
                self.monochrome_hits += 1;
            }
            if let State::DeletionHeavy { inserted } = &mut self.state {
                *inserted += 1;
            }
        }
        Ok(e)
    }

    fn slack(&self, g: &DynamicGraph, v: VertexId) -> bool {
        g.degree(v) < self.delta
    }

    fn random_insert(&mut self, g: &DynamicGraph) -> Option<EdgeUpdate> {
        let n = self.n as u32;
        for _ in 0..self.params.attempts {
            let u = self.rng.gen_range(0..n);
            let v = self.rng.gen_range(0..n);
            if u != v && !g.has_edge(u, v) && self.slack(g, u) && self.slack(g, v) {
                return Some(EdgeUpdate::insert(u, v));
            }
        }
        None
    }

    fn random_delete(&mut self, g: &DynamicGraph) -> Option<EdgeUpdate> {
        if g.edge_count() == 0 {
            return None;
        }
        let n = self.n as u32;
        for _ in 0..self.params.attempts.max(4 * self.n) {
            let u = self.rng.gen_range(0..n);
            if let Some(v) = g.sample_neighbor(u, &mut self.rng) {
                return Some(EdgeUpdate::delete(u, v));
            }
        }
        g.edges().next().map(|(u, v)| EdgeUpdate::delete(u, v))
    }

    fn next_random(&mut self, g: &DynamicGraph, delete_prob: f64) -> Result<EdgeUpdate, Exhausted> {
        let first_delete = self.rng.gen_bool(delete_prob.clamp(0.0, 1.0));
        let e = if first_delete {
            self.random_delete(g).or_else(|| self.random_insert(g))
        } else {
            self.random_insert(g).or_else(|| self.random_delete(g))
        };
        e.ok_or(Exhausted)
    }

    fn next_monochrome(&mut self, g: &DynamicGraph, colors: &[Color]) -> Result<EdgeUpdate, Exhausted> {
        let State::Monochrome { buckets, known, seeded } = &mut self.state else { unreachable!() };
        if !*seeded {
            for (v, &c) in colors.iter().enumerate() {
                bucket_for(buckets, c).insert(v as VertexId);
                known[v] = c;
            }
            *seeded = true;
        }
        let n = self.n as u32;
        for _ in 0..self.params.attempts {
            let u = self.rng.gen_range(0..n);
            if g.degree(u) >= self.delta {
                continue;
            }
            let bucket = bucket_for(buckets, colors[u as usize]);
            if bucket.len() < 2 {
                continue;
            }
            for _ in 0..16 {
                let v = bucket.sample(&mut self.rng).expect("non-empty bucket");
                if v != u && colors[v as usize] == colors[u as usize] && !g.has_edge(u, v) && g.degree(v) < self.delta {
                    return Ok(EdgeUpdate::insert(u, v));
                }
            }
        }
        // Stuck: free up degree instead of wasting an insertion.
        self.random_delete(g).ok_or(Exhausted)
    }

    fn next_churn(&mut self, g: &DynamicGraph) -> Result<EdgeUpdate, Exhausted> {
        if self.rng.gen_bool(self.params.noise.clamp(0.0, 1.0)) {
            let p = self.params.delete_prob;
            if let Ok(e) = self.next_random(g, p) {
                return Ok(e);
            }
        }
        let (build, erode, attempts, delta) =
            (self.params.build_density, self.params.erode_density, self.params.attempts, self.delta);
        let State::Churn { groups, current } = &mut self.state else { unreachable!() };
        let group = &mut groups[*current];
        let inside = group.edges_inside(g) as f64 / group.pairs() as f64;
        if group.building && inside >= build {
            group.building = false;
        } else if !group.building && inside <= erode {
            group.building = true;
            *current = (*current + 1) % groups.len();
        }
        let group = groups[*current].clone();
        for _ in 0..attempts * 4 {
            let (a, b) = group.pick(&mut self.rng);
            if group.building {
                if !g.has_edge(a, b) && g.degree(a) < delta && g.degree(b) < delta {
                    return Ok(EdgeUpdate::insert(a, b));
                }
            } else if g.has_edge(a, b) {
                return Ok(EdgeUpdate::delete(a, b));
            }
        }
        // Degree caps can block a build; make room by dropping an edge leaving the group.
        let mut members: Vec<VertexId> = (group.base..group.base + group.size).collect();
        members.shuffle(&mut self.rng);
        for u in members {
            if let Some(&w) = g.neighbors(u).iter().find(|&&w| w < group.base || w >= group.base + group.size) {
                return Ok(EdgeUpdate::delete(u, w));
            }
        }
        let p = self.params.delete_prob;
        self.next_random(g, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drive(kind: StrategyKind, n: usize, delta: usize, steps: usize) -> (DynamicGraph, Adversary) {
        let mut g = DynamicGraph::new(n, delta);
        let colors: Vec<Color> = (0..n as u32).map(|v| v % (delta as u32 + 1) + 1).collect();
        let mut a = Adversary::new(kind, n, delta, 3, StrategyParams { build_edges: 50, ..Default::default() });
        for _ in 0..steps {
            let Ok(e) = a.next(&g, &colors) else { break };
            g.validate(&e).unwrap();
            g.apply(&e).unwrap();
        }
        (g, a)
    }

    #[test]
    fn generated_streams_are_legal() {
        for kind in StrategyKind::GENERATED {
            let (g, a) = drive(kind, 40, 10, 300);
            assert_eq!(a.emitted(), 300, "{kind}");
            g.check_symmetry().unwrap();
        }
    }

    #[test]
    fn two_vertices_with_distinct_colors() {
        let g = DynamicGraph::new(2, 1);
        let mut a = Adversary::new(StrategyKind::AdaptiveMonochrome, 2, 1, 0, StrategyParams::default());
        // No monochromatic pair and nothing to delete.
        assert_eq!(a.next(&g, &[1, 2]), Err(Exhausted));
        let mut g2 = g.clone();
        g2.apply(&EdgeUpdate::insert(0, 1)).unwrap();
        let e = a.next(&g2, &[1, 2]).unwrap();
        assert!(!e.is_insert() && g2.has_edge(e.u, e.v));
        assert_eq!(a.insertions(), 0);
    }

    #[test]
    fn monochrome_targets_shared_colors() {
        let g = DynamicGraph::new(6, 3);
        let mut a = Adversary::new(StrategyKind::AdaptiveMonochrome, 6, 3, 1, StrategyParams::default());
        let colors = [1, 2, 3, 4, 1, 2];
        let e = a.next(&g, &colors).unwrap();
        assert!(e.is_insert());
        assert_eq!(colors[e.u as usize], colors[e.v as usize]);
    }

    #[test]
    fn scripted_ends_with_exhausted() {
        let g = DynamicGraph::new(3, 2);
        let mut a = Adversary::scripted(3, 2, vec![EdgeUpdate::insert(0, 1)]);
        assert_eq!(a.next(&g, &[1, 1, 1]), Ok(EdgeUpdate::insert(0, 1)));
        assert_eq!(a.next(&g, &[1, 1, 1]), Err(Exhausted));
    }

    #[test]
    fn churn_builds_a_dense_group() {
        let (g, a) = drive(StrategyKind::CliqueChurn, 24, 10, 400);
        let State::Churn { groups, .. } = &a.state else { unreachable!() };
        assert_eq!(groups[0].size, 10);
        assert!(groups.iter().any(|gr| gr.edges_inside(&g) > 0));
    }

    #[test]
    fn strategy_names_round_trip() {
        for k in StrategyKind::GENERATED.into_iter().chain([StrategyKind::Scripted]) {
            assert_eq!(k.name().parse::<StrategyKind>().unwrap(), k);
        }
    }
}
