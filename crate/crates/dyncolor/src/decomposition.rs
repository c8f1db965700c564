//! Fully dynamic sparse-dense decomposition.
//!
//! Vertices are either sparse (`V_S`) or members of exactly one almost-clique
//! (`V_D`). The structure keeps, per dense vertex, its non-neighbors inside
//! its clique, and per vertex, the number of neighbors it has in every clique.
//! Edge bookkeeping applied during a phase can be journaled and reverted
//! exactly; clique moves only happen while replaying a finished phase.

use std::collections::BTreeMap;

use rand::Rng;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::friends::FriendState;
use crate::graph::{DynamicGraph, EdgeUpdate, VertexId};
use crate::meter::Meter;
use crate::params::ParamSet;
use crate::set::IndexedSet;

pub type CliqueId = u32;
const NONE: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct AlmostClique {
    pub id: CliqueId,
    members: IndexedSet,
    sigma: u32,
    non_edge_count: usize,
    ever: FxHashSet<VertexId>,
}

impl AlmostClique {
    pub fn members(&self) -> &IndexedSet {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn sigma(&self) -> u32 {
        self.sigma
    }

    /// |E̅(C)|.
    pub fn non_edge_count(&self) -> usize {
        self.non_edge_count
    }

    /// Whether `v` belonged to this clique at some point since its creation.
    pub fn ever_member(&self, v: VertexId) -> bool {
        self.ever.contains(&v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveType {
    /// Joined an existing clique through a dense friend.
    JoinExisting,
    /// Founded a new clique.
    NewClique,
    /// Pulled in as a friend of a moving vertex.
    Pulled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonEdgeDelta {
    pub clique: CliqueId,
    pub u: VertexId,
    pub v: VertexId,
    pub added: bool,
}

/// Everything one replayed update changed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeSet {
    /// Vertices on which Update ran (the set U).
    pub fired: Vec<VertexId>,
    pub dense_moves: Vec<(VertexId, CliqueId, MoveType)>,
    pub sparse_moves: Vec<(VertexId, CliqueId)>,
    pub created: Vec<CliqueId>,
    pub collapsed: Vec<CliqueId>,
    /// Cliques removed because their last member left.
    pub emptied: Vec<CliqueId>,
    pub non_edge_deltas: Vec<NonEdgeDelta>,
}

impl ChangeSet {
    /// True when the partition and non-edge sets are untouched.
    pub fn is_empty(&self) -> bool {
        self.dense_moves.is_empty()
            && self.sparse_moves.is_empty()
            && self.collapsed.is_empty()
            && self.emptied.is_empty()
            && self.non_edge_deltas.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Undo {
    NonEdgeAdded { c: CliqueId, u: VertexId, v: VertexId },
    NonEdgeRemoved { c: CliqueId, u: VertexId, v: VertexId, pu: usize, pv: usize },
    NbrInc { z: VertexId, c: CliqueId, created: bool },
    NbrDec { z: VertexId, c: CliqueId, removed_at: Option<usize> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Invariant {
    Density,
    Friendship,
    Size,
    Connectedness,
    Pointer,
    NonEdges,
    NeighborCounts,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub invariant: Invariant,
    pub clique: Option<CliqueId>,
    pub vertex: Option<VertexId>,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueSummary {
    pub id: CliqueId,
    pub size: usize,
    pub sigma: u32,
    pub non_edges: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionSnapshot {
    pub sparse: usize,
    pub dense: usize,
    pub cliques: Vec<CliqueSummary>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionStats {
    pub dense_moves: u64,
    pub sparse_moves: u64,
    pub collapses: u64,
    pub cliques_created: u64,
    /// Non-edge list changes made while replaying updates.
    pub non_edge_adjustments: u64,
    /// Dense-Move candidates whose dense friends spanned several cliques.
    pub multi_clique_friends: u64,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    delta: usize,
    epsilon: f64,
    tau: f64,
    collapse_at: u32,
    pub friends: FriendState,
    clique_of: Vec<u32>,
    cliques: BTreeMap<CliqueId, AlmostClique>,
    next_id: CliqueId,
    non_edges: Vec<IndexedSet>,
    clique_nbrs: Vec<Vec<(CliqueId, u32)>>,
    journal: Vec<Undo>,
    recording: bool,
    stats: DecompositionStats,
}

impl Decomposition {
    pub fn new(n: usize, delta: usize, params: &ParamSet) -> Self {
        Decomposition {
            delta,
            epsilon: params.epsilon,
            tau: params.tau,
            collapse_at: ((params.nu * delta as f64).ceil() as u32).max(1),
            friends: FriendState::new(n, delta, params),
            clique_of: vec![NONE; n],
            cliques: BTreeMap::new(),
            next_id: 0,
            non_edges: vec![IndexedSet::new(); n],
            clique_nbrs: vec![Vec::new(); n],
            journal: Vec::new(),
            recording: false,
            stats: DecompositionStats::default(),
        }
    }

    #[inline]
    pub fn is_dense(&self, v: VertexId) -> bool {
        self.clique_of[v as usize] != NONE
    }

    #[inline]
    pub fn clique_of(&self, v: VertexId) -> Option<CliqueId> {
        let c = self.clique_of[v as usize];
        (c != NONE).then_some(c)
    }

    pub fn clique(&self, c: CliqueId) -> Option<&AlmostClique> {
        self.cliques.get(&c)
    }

    /// Cliques in ascending id order.
    pub fn cliques(&self) -> impl Iterator<Item = &AlmostClique> {
        self.cliques.values()
    }

    pub fn clique_count(&self) -> usize {
        self.cliques.len()
    }

    /// E̅_C(v): non-neighbors of v inside its clique.
    pub fn non_edges(&self, v: VertexId) -> &IndexedSet {
        &self.non_edges[v as usize]
    }

    /// |N_C(v)| for clique `c`.
    pub fn nbr_count(&self, v: VertexId, c: CliqueId) -> u32 {
        self.clique_nbrs[v as usize].iter().find(|e| e.0 == c).map_or(0, |e| e.1)
    }

    /// Every clique with at least one neighbor of v, with the neighbor count.
    pub fn clique_counts(&self, v: VertexId) -> &[(CliqueId, u32)] {
        &self.clique_nbrs[v as usize]
    }

    /// |N_D(v)|; |N_S(v)| is the degree minus this.
    pub fn dense_degree(&self, v: VertexId) -> usize {
        self.clique_nbrs[v as usize].iter().map(|e| e.1 as usize).sum()
    }

    /// |N'(v)| = |N₃(v) ∩ C(v)|.
    pub fn n_prime(&self, v: VertexId) -> usize {
        let c = self.clique_of[v as usize];
        if c == NONE {
            return 0;
        }
        self.friends.friends(3, v).iter().filter(|&u| self.clique_of[u as usize] == c).count()
    }

    pub fn collapse_threshold(&self) -> u32 {
        self.collapse_at
    }

    pub fn stats(&self) -> DecompositionStats {
        self.stats
    }

    pub fn snapshot(&self) -> DecompositionSnapshot {
        let dense = self.clique_of.iter().filter(|&&c| c != NONE).count();
        DecompositionSnapshot {
            sparse: self.clique_of.len() - dense,
            dense,
            cliques: self
                .cliques
                .values()
                .map(|c| CliqueSummary { id: c.id, size: c.len(), sigma: c.sigma, non_edges: c.non_edge_count })
                .collect(),
        }
    }

    // ---- journal -------------------------------------------------------

    /// Starts journaling edge bookkeeping (phase start).
    pub fn begin_recording(&mut self) {
        self.journal.clear();
        self.recording = true;
    }

    pub fn journal_len(&self) -> usize {
        self.journal.len()
    }

    /// Undoes all journaled bookkeeping and stops recording.
    pub fn revert_journal(&mut self) {
        self.recording = false;
        while let Some(op) = self.journal.pop() {
            match op {
                Undo::NonEdgeAdded { c, u, v } => {
                    self.non_edges[v as usize].pop_last();
                    self.non_edges[u as usize].pop_last();
                    self.cliques.get_mut(&c).expect("journaled clique").non_edge_count -= 1;
                }
                Undo::NonEdgeRemoved { c, u, v, pu, pv } => {
                    self.non_edges[v as usize].restore(u, pv);
                    self.non_edges[u as usize].restore(v, pu);
                    self.cliques.get_mut(&c).expect("journaled clique").non_edge_count += 1;
                }
                Undo::NbrInc { z, c, created } => {
                    let list = &mut self.clique_nbrs[z as usize];
                    if created {
                        list.pop();
                    } else {
                        list.iter_mut().find(|e| e.0 == c).expect("journaled entry").1 -= 1;
                    }
                }
                Undo::NbrDec { z, c, removed_at } => {
                    let list = &mut self.clique_nbrs[z as usize];
                    match removed_at {
                        Some(i) => list.insert(i, (c, 1)),
                        None => list.iter_mut().find(|e| e.0 == c).expect("journaled entry").1 += 1,
                    }
                }
            }
        }
    }

    // ---- low-level mutation ------------------------------------------

    fn nbr_inc(&mut self, z: VertexId, c: CliqueId) {
        let list = &mut self.clique_nbrs[z as usize];
        if let Some(e) = list.iter_mut().find(|e| e.0 == c) {
            e.1 += 1;
            if self.recording {
                self.journal.push(Undo::NbrInc { z, c, created: false });
            }
        } else {
            list.push((c, 1));
            if self.recording {
                self.journal.push(Undo::NbrInc { z, c, created: true });
            }
        }
    }

    fn nbr_dec(&mut self, z: VertexId, c: CliqueId) {
        let list = &mut self.clique_nbrs[z as usize];
        let i = list.iter().position(|e| e.0 == c).expect("neighbor count present");
        list[i].1 -= 1;
        let removed_at = if list[i].1 == 0 {
            list.remove(i);
            Some(i)
        } else {
            None
        };
        if self.recording {
            self.journal.push(Undo::NbrDec { z, c, removed_at });
        }
    }

    fn add_non_edge(&mut self, c: CliqueId, u: VertexId, v: VertexId) {
        self.non_edges[u as usize].insert(v);
        self.non_edges[v as usize].insert(u);
        self.cliques.get_mut(&c).expect("clique").non_edge_count += 1;
        if self.recording {
            self.journal.push(Undo::NonEdgeAdded { c, u, v });
        }
    }

    fn remove_non_edge(&mut self, c: CliqueId, u: VertexId, v: VertexId) -> bool {
        let Some(pu) = self.non_edges[u as usize].remove(v) else {
            return false;
        };
        let pv = self.non_edges[v as usize].remove(u).expect("symmetric non-edge lists");
        self.cliques.get_mut(&c).expect("clique").non_edge_count -= 1;
        if self.recording {
            self.journal.push(Undo::NonEdgeRemoved { c, u, v, pu, pv });
        }
        true
    }
}

impl Decomposition {
    /// Keeps N_C counts and E̅_C lists in step with an edge update (already
    /// applied to `g`) under the current partition. Journaled while recording.
    pub fn apply_edge_bookkeeping(&mut self, e: &EdgeUpdate) -> Option<NonEdgeDelta> {
        let (u, v) = (e.u, e.v);
        let (cu, cv) = (self.clique_of[u as usize], self.clique_of[v as usize]);
        if e.is_insert() {
            if cv != NONE {
                self.nbr_inc(u, cv);
            }
            if cu != NONE {
                self.nbr_inc(v, cu);
            }
        } else {
            if cv != NONE {
                self.nbr_dec(u, cv);
            }
            if cu != NONE {
                self.nbr_dec(v, cu);
            }
        }
        if cu == NONE || cu != cv {
            return None;
        }
        if e.is_insert() {
            self.remove_non_edge(cu, u, v).then_some(NonEdgeDelta { clique: cu, u, v, added: false })
        } else {
            self.add_non_edge(cu, u, v);
            Some(NonEdgeDelta { clique: cu, u, v, added: true })
        }
    }

    /// Update-Decomposition for an update already applied to `g`.
    pub fn update_decomposition<R: Rng + ?Sized>(
        &mut self,
        g: &DynamicGraph,
        e: &EdgeUpdate,
        rng: &mut R,
        meter: &mut Meter,
    ) -> ChangeSet {
        let mut cs = ChangeSet { fired: self.friends.maintain_friends(g, e, rng, meter), ..Default::default() };
        if let Some(d) = self.apply_edge_bookkeeping(e) {
            cs.non_edge_deltas.push(d);
        }
        let fired = cs.fired.clone();
        // Sampled flags are not monotone in the graph, so a vertex can fire with
        // its density flag down on an insertion too. The friendship count is
        // only trusted after deletions: while a clique is still forming, the
        // lists behind it lag the graph.
        let friendship_floor = (1.0 - self.c3()) * self.delta as f64;
        let mut doomed: Vec<CliqueId> = Vec::new();
        for &w in &fired {
            let Some(c) = self.clique_of(w) else { continue };
            let befriended = e.is_insert() || {
                meter.probes += self.friends.friends(3, w).len() as u64;
                self.n_prime(w) as f64 > friendship_floor
            };
            if self.friends.is_dense(3, w) && befriended {
                continue;
            }
            let clique = self.cliques.get_mut(&c).expect("clique of dense vertex");
            clique.sigma += 1;
            if clique.sigma >= self.collapse_at {
                if !doomed.contains(&c) {
                    doomed.push(c);
                }
            } else {
                self.sparse_move(g, w, &mut cs, meter);
            }
        }
        let mut released = Vec::new();
        for c in doomed {
            released.extend(self.collapse(g, c, &mut cs, meter));
        }
        released.sort_unstable();
        for w in fired.into_iter().chain(released) {
            if self.friends.is_dense(1, w) && !self.is_dense(w) {
                self.dense_move(g, w, &mut cs, meter);
            }
        }
        self.stats.non_edge_adjustments += cs.non_edge_deltas.len() as u64;
        cs
    }

    #[inline]
    fn c3(&self) -> f64 {
        3.0 * self.epsilon + self.tau
    }

    /// Dense-Move(v) for v ∈ V₁ ∩ V_S.
    pub fn dense_move(&mut self, g: &DynamicGraph, v: VertexId, cs: &mut ChangeSet, meter: &mut Meter) {
        debug_assert!(!self.is_dense(v));
        let n1: Vec<VertexId> = self.friends.friends(1, v).iter().collect();
        meter.probes += n1.len() as u64;
        let mut tally: Vec<(CliqueId, usize)> = Vec::new();
        for &u in &n1 {
            if let Some(c) = self.clique_of(u) {
                match tally.iter_mut().find(|t| t.0 == c) {
                    Some(t) => t.1 += 1,
                    None => tally.push((c, 1)),
                }
            }
        }
        if tally.len() > 1 {
            self.stats.multi_clique_friends += 1;
        }
        // Deterministic choice when dense friends straddle cliques: most
        // friends, then lowest id.
        let target = tally.iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).map(|t| t.0);
        match target {
            Some(c) => {
                self.join(g, v, c, MoveType::JoinExisting, cs, meter);
                for u in n1 {
                    if !self.is_dense(u) {
                        self.join(g, u, c, MoveType::Pulled, cs, meter);
                    }
                }
            }
            None => {
                let c = self.next_id;
                self.next_id += 1;
                self.cliques.insert(
                    c,
                    AlmostClique { id: c, members: IndexedSet::new(), sigma: 0, non_edge_count: 0, ever: FxHashSet::default() },
                );
                cs.created.push(c);
                self.stats.cliques_created += 1;
                self.join(g, v, c, MoveType::NewClique, cs, meter);
                for u in n1 {
                    self.join(g, u, c, MoveType::Pulled, cs, meter);
                }
            }
        }
    }

    fn join(&mut self, g: &DynamicGraph, w: VertexId, c: CliqueId, kind: MoveType, cs: &mut ChangeSet, meter: &mut Meter) {
        let clique = self.cliques.get_mut(&c).expect("target clique");
        let missing: Vec<VertexId> = clique.members.iter().filter(|&x| !g.has_edge(w, x)).collect();
        meter.probes += clique.members.len() as u64;
        clique.members.insert(w);
        clique.ever.insert(w);
        self.clique_of[w as usize] = c;
        for x in missing {
            self.add_non_edge(c, w, x);
            cs.non_edge_deltas.push(NonEdgeDelta { clique: c, u: w, v: x, added: true });
        }
        for &z in g.neighbors(w) {
            self.nbr_inc(z, c);
        }
        meter.touched += 1 + g.degree(w) as u64;
        cs.dense_moves.push((w, c, kind));
        self.stats.dense_moves += 1;
    }

    /// Sparse-Move(v): v leaves its clique for V_S.
    pub fn sparse_move(&mut self, g: &DynamicGraph, v: VertexId, cs: &mut ChangeSet, meter: &mut Meter) {
        let c = self.clique_of(v).expect("sparse_move on a sparse vertex");
        self.detach(g, v, c, cs, meter);
        cs.sparse_moves.push((v, c));
        self.stats.sparse_moves += 1;
        if self.cliques[&c].is_empty() {
            self.cliques.remove(&c);
            cs.emptied.push(c);
        }
    }

    fn detach(&mut self, g: &DynamicGraph, v: VertexId, c: CliqueId, cs: &mut ChangeSet, meter: &mut Meter) {
        self.cliques.get_mut(&c).expect("clique").members.remove(v);
        self.clique_of[v as usize] = NONE;
        let partners: Vec<VertexId> = self.non_edges[v as usize].iter().collect();
        for x in partners {
            self.remove_non_edge(c, v, x);
            cs.non_edge_deltas.push(NonEdgeDelta { clique: c, u: v, v: x, added: false });
        }
        for &z in g.neighbors(v) {
            self.nbr_dec(z, c);
        }
        meter.touched += 1 + g.degree(v) as u64;
    }

    /// Dissolves `c`, returning its former members in membership order.
    fn collapse(&mut self, g: &DynamicGraph, c: CliqueId, cs: &mut ChangeSet, meter: &mut Meter) -> Vec<VertexId> {
        let members: Vec<VertexId> = self.cliques[&c].members.iter().collect();
        for &w in &members {
            self.detach(g, w, c, cs, meter);
        }
        self.cliques.remove(&c);
        cs.collapsed.push(c);
        self.stats.collapses += 1;
        members
    }

    /// Exact check of the four decomposition invariants plus structural
    /// consistency. Density and Friendship use exact common-neighbor counts:
    /// dense vertices must be c₃-dense, sparse vertices (ε − 3τ/4)-sparse,
    /// and each member needs (1 − c₃)Δ c₃-friends among current or former
    /// members of its clique.
    pub fn check_invariants(&self, g: &DynamicGraph) -> Vec<Violation> {
        let mut out = self.check_structure(g);
        let commons = crate::oracle::Commons::compute(g);
        out.extend(self.check_semantics(g, &commons));
        out
    }

    /// Pointer, non-edge and neighbor-count consistency.
    pub fn check_structure(&self, g: &DynamicGraph) -> Vec<Violation> {
        let mut out = Vec::new();
        let viol = |inv, clique, vertex, detail: String| Violation { invariant: inv, clique, vertex, detail };
        let mut seen = 0usize;
        for c in self.cliques.values() {
            if c.is_empty() {
                out.push(viol(Invariant::Pointer, Some(c.id), None, "empty clique registered".into()));
            }
            let mut non_edges = 0usize;
            for v in c.members.iter() {
                seen += 1;
                if self.clique_of[v as usize] != c.id {
                    out.push(viol(Invariant::Pointer, Some(c.id), Some(v), format!("member {v} points elsewhere")));
                }
                let expected: Vec<VertexId> = {
                    let mut e: Vec<VertexId> = c.members.iter().filter(|&x| x != v && !g.has_edge(v, x)).collect();
                    e.sort_unstable();
                    e
                };
                non_edges += expected.len();
                if self.non_edges[v as usize].sorted() != expected {
                    out.push(viol(
                        Invariant::NonEdges,
                        Some(c.id),
                        Some(v),
                        format!("non-edge list of {v} differs from the complement of N({v}) in the clique"),
                    ));
                }
            }
            if non_edges != 2 * c.non_edge_count {
                out.push(viol(
                    Invariant::NonEdges,
                    Some(c.id),
                    None,
                    format!("non-edge count {} but {} pairs present", c.non_edge_count, non_edges / 2),
                ));
            }
        }
        let dense = self.clique_of.iter().filter(|&&c| c != NONE).count();
        if dense != seen {
            out.push(viol(Invariant::Pointer, None, None, format!("{dense} vertices carry a clique pointer, {seen} are members")));
        }
        for v in 0..g.n() as VertexId {
            if self.clique_of[v as usize] == NONE && !self.non_edges[v as usize].is_empty() {
                out.push(viol(Invariant::NonEdges, None, Some(v), format!("sparse vertex {v} holds non-edges")));
            }
            let mut expect: Vec<(CliqueId, u32)> = Vec::new();
            for &u in g.neighbors(v) {
                let c = self.clique_of[u as usize];
                if c != NONE {
                    match expect.iter_mut().find(|e| e.0 == c) {
                        Some(e) => e.1 += 1,
                        None => expect.push((c, 1)),
                    }
                }
            }
            let mut have = self.clique_nbrs[v as usize].clone();
            expect.sort_unstable();
            have.sort_unstable();
            if have != expect {
                out.push(viol(Invariant::NeighborCounts, None, Some(v), format!("clique-neighbor counts of {v} are stale")));
            }
        }
        out
    }

    /// Density, Friendship, Size and Connectedness against exact counts.
    pub fn check_semantics(&self, g: &DynamicGraph, commons: &crate::oracle::Commons) -> Vec<Violation> {
        use crate::oracle::{is_dense, is_friend};
        let mut out = Vec::new();
        let d = self.delta as f64;
        let c3 = self.c3();
        let sparse_scale = self.epsilon - 0.75 * self.tau;
        for v in 0..g.n() as VertexId {
            let c = self.clique_of[v as usize];
            if c != NONE && !is_dense(g, commons, v, c3) {
                out.push(Violation {
                    invariant: Invariant::Density,
                    clique: Some(c),
                    vertex: Some(v),
                    detail: format!("dense vertex {v} is not {c3:.4}-dense"),
                });
            }
            if c == NONE && is_dense(g, commons, v, sparse_scale) {
                out.push(Violation {
                    invariant: Invariant::Density,
                    clique: None,
                    vertex: Some(v),
                    detail: format!("sparse vertex {v} is {sparse_scale:.4}-dense"),
                });
            }
        }
        for cl in self.cliques.values() {
            let size = cl.len() as f64;
            if size < (1.0 - c3) * d || size > (1.0 + 3.0 * c3) * d {
                out.push(Violation {
                    invariant: Invariant::Size,
                    clique: Some(cl.id),
                    vertex: None,
                    detail: format!("size {} outside [{:.1}, {:.1}]", cl.len(), (1.0 - c3) * d, (1.0 + 3.0 * c3) * d),
                });
            }
            for v in cl.members.iter() {
                let friends = g
                    .neighbors(v)
                    .iter()
                    .filter(|&&u| {
                        (self.clique_of[u as usize] == cl.id || cl.ever.contains(&u))
                            && is_friend(commons.get(u, v), self.delta, c3)
                    })
                    .count();
                if (friends as f64) < (1.0 - c3) * d {
                    out.push(Violation {
                        invariant: Invariant::Friendship,
                        clique: Some(cl.id),
                        vertex: Some(v),
                        detail: format!("member {v} has {friends} c3-friends in its clique"),
                    });
                }
            }
            if !self.friend_connected(g, commons, cl, c3) {
                out.push(Violation {
                    invariant: Invariant::Connectedness,
                    clique: Some(cl.id),
                    vertex: None,
                    detail: "c3-friend edges do not span the clique".into(),
                });
            }
        }
        out
    }

    fn friend_connected(&self, g: &DynamicGraph, commons: &crate::oracle::Commons, cl: &AlmostClique, c3: f64) -> bool {
        let Some(start) = cl.members.iter().next() else { return true };
        let mut seen: FxHashSet<VertexId> = FxHashSet::default();
        let mut stack = vec![start];
        seen.insert(start);
        while let Some(x) = stack.pop() {
            for &y in g.neighbors(x) {
                if self.clique_of[y as usize] == cl.id
                    && !seen.contains(&y)
                    && crate::oracle::is_friend(commons.get(x, y), self.delta, c3)
                {
                    seen.insert(y);
                    stack.push(y);
                }
            }
        }
        seen.len() == cl.len()
    }

    #[cfg(feature = "fault-injection")]
    pub fn corrupt_pointer(&mut self, v: VertexId, c: CliqueId) {
        self.clique_of[v as usize] = c;
    }

    #[cfg(feature = "fault-injection")]
    pub fn corrupt_non_edge(&mut self, u: VertexId, v: VertexId) {
        self.non_edges[u as usize].insert(v);
        self.non_edges[v as usize].insert(u);
    }
}
