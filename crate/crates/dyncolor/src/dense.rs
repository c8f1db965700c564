//! Coloring of almost-cliques.
//!
//! Every clique keeps a color book: each palette slot is free, held by one
//! unmatched member, or shared by the two endpoints of a matched non-edge.
//! Unmatched members (𝓛) are colored through Random-Match, Match-Large or
//! Match-Small; when a rejection loop runs out of samples a deterministic
//! chain takes over so the coloring stays proper.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coloring::{trivial_color, ColorState};
use crate::decomposition::{CliqueId, Decomposition, NonEdgeDelta};
use crate::graph::{Color, DynamicGraph, VertexId, BLANK};
use crate::meter::Meter;
use crate::params::ParamSet;
use crate::set::IndexedSet;

pub const NO_MATE: VertexId = u32::MAX;

/// Borrowed engine state handed to every dense routine.
pub struct Ctx<'a, R: ?Sized> {
    pub g: &'a DynamicGraph,
    pub decomp: &'a Decomposition,
    pub colors: &'a mut ColorState,
    pub rng: &'a mut R,
    pub meter: &'a mut Meter,
}

impl<R: Rng + ?Sized> Ctx<'_, R> {
    #[inline]
    fn feasible(&mut self, v: VertexId, c: Color, exclude: &[VertexId]) -> bool {
        self.colors.free_for(self.g, v, c, exclude, self.meter)
    }

    #[inline]
    fn draw(&mut self, palette: u32) -> Color {
        self.meter.samples += 1;
        self.rng.gen_range(1..=palette)
    }

    #[inline]
    fn pick(&mut self, set: &IndexedSet) -> Option<u32> {
        self.meter.samples += 1;
        set.sample(self.rng)
    }
}

// ---------------------------------------------------------------------------
// Non-edge matching

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum MatchUndo {
    Linked(VertexId),
    Unlinked(VertexId, VertexId, CliqueId),
}

/// Pairs added to and removed from M_N by one call.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NonEdgeOutcome {
    pub unlinked: Vec<(VertexId, VertexId)>,
    pub linked: Vec<(VertexId, VertexId)>,
}

impl NonEdgeOutcome {
    /// L_O: vertices that were matched before and are unmatched now.
    pub fn left(&self, m: &NonEdgeMatching) -> Vec<VertexId> {
        self.unlinked.iter().flat_map(|&(a, b)| [a, b]).filter(|&x| m.mate(x).is_none()).collect()
    }

    /// L_I: endpoints of the newly matched pairs.
    pub fn entered(&self) -> Vec<VertexId> {
        self.linked.iter().flat_map(|&(a, b)| [a, b]).collect()
    }
}

/// Vertex-disjoint non-edges per clique (M_N), journaled like the decomposition.
#[derive(Clone, Debug)]
pub struct NonEdgeMatching {
    mate: Vec<VertexId>,
    owner: Vec<CliqueId>,
    sizes: BTreeMap<CliqueId, usize>,
    journal: Vec<MatchUndo>,
    recording: bool,
}

impl NonEdgeMatching {
    pub fn new(n: usize) -> Self {
        NonEdgeMatching {
            mate: vec![NO_MATE; n],
            owner: vec![u32::MAX; n],
            sizes: BTreeMap::new(),
            journal: Vec::new(),
            recording: false,
        }
    }

    #[inline]
    pub fn mate(&self, v: VertexId) -> Option<VertexId> {
        let m = self.mate[v as usize];
        (m != NO_MATE).then_some(m)
    }

    /// |M_N| of clique `c`.
    pub fn size(&self, c: CliqueId) -> usize {
        self.sizes.get(&c).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.sizes.values().sum()
    }

    /// Matched pairs of `c` as (smaller, larger), sorted.
    pub fn pairs(&self, decomp: &Decomposition, c: CliqueId) -> Vec<(VertexId, VertexId)> {
        let Some(cl) = decomp.clique(c) else { return Vec::new() };
        let mut out: Vec<_> = cl
            .members()
            .iter()
            .filter_map(|u| self.mate(u).filter(|&m| u < m && self.owner[u as usize] == c).map(|m| (u, m)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn begin_recording(&mut self) {
        self.journal.clear();
        self.recording = true;
    }

    pub fn revert_journal(&mut self) {
        self.recording = false;
        while let Some(op) = self.journal.pop() {
            match op {
                MatchUndo::Linked(u) => {
                    self.unlink_raw(u);
                }
                MatchUndo::Unlinked(u, v, c) => self.link_raw(c, u, v),
            }
        }
    }

    fn link_raw(&mut self, c: CliqueId, u: VertexId, v: VertexId) {
        debug_assert!(self.mate(u).is_none() && self.mate(v).is_none(), "linking matched vertex");
        self.mate[u as usize] = v;
        self.mate[v as usize] = u;
        self.owner[u as usize] = c;
        self.owner[v as usize] = c;
        *self.sizes.entry(c).or_insert(0) += 1;
    }

    fn unlink_raw(&mut self, u: VertexId) -> Option<(VertexId, VertexId, CliqueId)> {
        let v = self.mate(u)?;
        let c = self.owner[u as usize];
        self.mate[u as usize] = NO_MATE;
        self.mate[v as usize] = NO_MATE;
        let s = self.sizes.get_mut(&c).expect("size entry of matched clique");
        *s -= 1;
        if *s == 0 {
            self.sizes.remove(&c);
        }
        Some((u, v, c))
    }

    pub fn link(&mut self, c: CliqueId, u: VertexId, v: VertexId) {
        self.link_raw(c, u, v);
        if self.recording {
            self.journal.push(MatchUndo::Linked(u));
        }
    }

    /// Removes the pair covering `u`, returning it.
    pub fn unlink(&mut self, u: VertexId) -> Option<(VertexId, VertexId)> {
        let (a, b, c) = self.unlink_raw(u)?;
        if self.recording {
            self.journal.push(MatchUndo::Unlinked(a, b, c));
        }
        Some((a, b))
    }

    fn free_partner(&self, decomp: &Decomposition, w: VertexId, meter: &mut Meter) -> Option<VertexId> {
        for x in decomp.non_edges(w).iter() {
            meter.probes += 1;
            if self.mate(x).is_none() {
                return Some(x);
            }
        }
        None
    }

    /// Maintain-Matching: keeps M_N maximal over E̅(C) under one non-edge change.
    pub fn maintain_matching(&mut self, decomp: &Decomposition, d: &NonEdgeDelta, meter: &mut Meter) -> NonEdgeOutcome {
        let mut out = NonEdgeOutcome::default();
        let c = d.clique;
        if d.added {
            let present = decomp.clique_of(d.u) == Some(c)
                && decomp.clique_of(d.v) == Some(c)
                && decomp.non_edges(d.u).contains(d.v);
            if present && self.mate(d.u).is_none() && self.mate(d.v).is_none() {
                self.link(c, d.u, d.v);
                out.linked.push((d.u, d.v));
            }
        } else {
            if self.mate(d.u) == Some(d.v) {
                self.unlink(d.u);
                out.unlinked.push((d.u, d.v));
            }
            for w in [d.u, d.v] {
                if decomp.clique_of(w) != Some(c) || self.mate(w).is_some() {
                    continue;
                }
                if let Some(x) = self.free_partner(decomp, w, meter) {
                    self.link(c, w, x);
                    out.linked.push((w, x));
                }
            }
        }
        out
    }

    /// Update-Non-Edges: in the large regime M_N only shrinks.
    pub fn update_non_edges(
        &mut self,
        decomp: &Decomposition,
        d: &NonEdgeDelta,
        large_regime: bool,
        meter: &mut Meter,
    ) -> NonEdgeOutcome {
        if !large_regime {
            return self.maintain_matching(decomp, d, meter);
        }
        let mut out = NonEdgeOutcome::default();
        if !d.added && self.mate(d.u) == Some(d.v) {
            self.unlink(d.u);
            out.unlinked.push((d.u, d.v));
        }
        out
    }

    /// Drops every pair of `c` and recomputes a maximal matching greedily.
    pub fn greedy_rebuild(&mut self, decomp: &Decomposition, c: CliqueId, meter: &mut Meter) {
        let Some(cl) = decomp.clique(c) else { return };
        let mut members = cl.members().sorted();
        for &u in &members {
            if self.mate(u).is_some() && self.owner[u as usize] == c {
                self.unlink(u);
            }
        }
        members.retain(|&u| self.mate(u).is_none());
        for u in members {
            if self.mate(u).is_some() {
                continue;
            }
            if let Some(x) = self.free_partner(decomp, u, meter) {
                self.link(c, u, x);
            }
        }
    }

    /// No non-edge of `c` has both endpoints free.
    pub fn is_maximal(&self, decomp: &Decomposition, c: CliqueId) -> bool {
        let Some(cl) = decomp.clique(c) else { return true };
        cl.members().iter().all(|u| self.mate(u).is_some() || decomp.non_edges(u).iter().all(|x| self.mate(x).is_some()))
    }

    /// Pairs are symmetric non-edges inside one clique; sizes match a recount.
    pub fn check(&self, decomp: &Decomposition) -> Result<(), String> {
        let mut recount: BTreeMap<CliqueId, usize> = BTreeMap::new();
        for (u, &m) in self.mate.iter().enumerate() {
            let u = u as VertexId;
            if m == NO_MATE {
                continue;
            }
            if self.mate[m as usize] != u {
                return Err(format!("mate of {u} is {m} but mate of {m} is {}", self.mate[m as usize]));
            }
            let c = self.owner[u as usize];
            if decomp.clique_of(u) != Some(c) || decomp.clique_of(m) != Some(c) {
                return Err(format!("pair ({u}, {m}) does not lie inside clique {c}"));
            }
            if !decomp.non_edges(u).contains(m) {
                return Err(format!("pair ({u}, {m}) is not a non-edge of clique {c}"));
            }
            if u < m {
                *recount.entry(c).or_insert(0) += 1;
            }
        }
        if recount != self.sizes {
            return Err(format!("stored sizes {:?} differ from recount {:?}", self.sizes, recount));
        }
        Ok(())
    }

    #[cfg(feature = "fault-injection")]
    pub fn force_link(&mut self, c: CliqueId, u: VertexId, v: VertexId) {
        self.link_raw(c, u, v);
    }
}

// ---------------------------------------------------------------------------
// Per-clique color book

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    Free,
    Single(VertexId),
    Pair(VertexId, VertexId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchBranch {
    Random,
    Large,
    Small,
}

#[derive(Clone, Debug)]
pub struct CliqueBook {
    id: CliqueId,
    slots: Vec<Slot>,
    free_colors: IndexedSet,
    free_members: IndexedSet,
    overflow: IndexedSet,
    t_c: Vec<i64>,
    heavy: usize,
    heavy_limit: f64,
    large_regime: bool,
    branches: [u64; 3],
}

impl CliqueBook {
    fn new(id: CliqueId, palette: u32, heavy_limit: f64) -> Self {
        CliqueBook {
            id,
            slots: vec![Slot::Free; palette as usize + 1],
            free_colors: (1..=palette).collect(),
            free_members: IndexedSet::new(),
            overflow: IndexedSet::new(),
            t_c: vec![0; palette as usize + 1],
            heavy: 0,
            heavy_limit,
            large_regime: false,
            branches: [0; 3],
        }
    }

    pub fn id(&self) -> CliqueId {
        self.id
    }

    pub fn slot(&self, c: Color) -> Slot {
        self.slots[c as usize]
    }

    /// A: colors held by no member.
    pub fn free_colors(&self) -> &IndexedSet {
        &self.free_colors
    }

    /// 𝓛: members not covered by M_N.
    pub fn free_members(&self) -> &IndexedSet {
        &self.free_members
    }

    /// Members colored outside the slot discipline by the last-resort path.
    pub fn overflow(&self) -> &IndexedSet {
        &self.overflow
    }

    /// T_C(c).
    pub fn t(&self, c: Color) -> i64 {
        self.t_c[c as usize]
    }

    pub fn is_heavy(&self, c: Color) -> bool {
        self.t_c[c as usize] as f64 > self.heavy_limit
    }

    /// |H|.
    pub fn heavy_count(&self) -> usize {
        self.heavy
    }

    pub fn large_regime(&self) -> bool {
        self.large_regime
    }

    /// Match calls per branch: random, large, small.
    pub fn branches(&self) -> [u64; 3] {
        self.branches
    }

    /// |R|: colors not shared by a matched pair.
    pub fn r_size(&self) -> usize {
        self.slots[1..].iter().filter(|s| !matches!(s, Slot::Pair(..))).count()
    }

    fn adjust_t(&mut self, c: Color, d: i64) {
        if c == BLANK || d == 0 {
            return;
        }
        let was = self.is_heavy(c);
        self.t_c[c as usize] += d;
        let now = self.is_heavy(c);
        if was != now {
            if now {
                self.heavy += 1;
            } else {
                self.heavy -= 1;
            }
        }
    }

    fn give(&mut self, colors: &mut ColorState, v: VertexId, c: Color) {
        debug_assert_eq!(self.slots[c as usize], Slot::Free, "color {c} not free in clique {}", self.id);
        self.slots[c as usize] = Slot::Single(v);
        self.free_colors.remove(c);
        colors.set(v, c, true);
    }

    fn take(&mut self, colors: &mut ColorState, v: VertexId) -> Color {
        let c = colors.clear(v);
        if c == BLANK || self.overflow.remove(v).is_some() {
            return c;
        }
        if self.slots[c as usize] == Slot::Single(v) {
            self.slots[c as usize] = Slot::Free;
            self.free_colors.insert(c);
        }
        c
    }

    /// Colors a matched pair, evicting a single holder of `c` if any.
    fn give_pair(&mut self, colors: &mut ColorState, u: VertexId, v: VertexId, c: Color) -> Option<VertexId> {
        let evicted = match self.slots[c as usize] {
            Slot::Free => {
                self.free_colors.remove(c);
                None
            }
            Slot::Single(y) => {
                colors.clear(y);
                Some(y)
            }
            Slot::Pair(..) => unreachable!("color {c} already shared by a pair"),
        };
        self.slots[c as usize] = Slot::Pair(u, v);
        colors.set(u, c, true);
        colors.set(v, c, true);
        evicted
    }

    fn take_pair(&mut self, colors: &mut ColorState, u: VertexId, v: VertexId) {
        let c = colors.clear(u);
        colors.clear(v);
        if c != BLANK && matches!(self.slots[c as usize], Slot::Pair(a, b) if (a, b) == (u, v) || (a, b) == (v, u)) {
            self.slots[c as usize] = Slot::Free;
            self.free_colors.insert(c);
        }
    }

    #[cfg(feature = "fault-injection")]
    pub fn corrupt_t(&mut self, c: Color, d: i64) {
        self.t_c[c as usize] += d;
    }

    #[cfg(feature = "fault-injection")]
    pub fn corrupt_free_colors(&mut self, c: Color) {
        if !self.free_colors.remove(c).is_some() {
            self.free_colors.insert(c);
        }
    }
}

// ---------------------------------------------------------------------------
// Dense coloring

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseStats {
    pub random_match: u64,
    pub match_large: u64,
    pub match_small: u64,
    pub recolor_non_edge: u64,
    /// Rejection loops that hit their cap.
    pub fallbacks: u64,
    /// Fallbacks resolved by pairing with a free non-neighbor.
    pub fallback_pairings: u64,
    /// Matched pairs broken to free a color.
    pub dissolutions: u64,
    /// Members colored outside the slot discipline (never expected).
    pub breaches: u64,
    /// Match-Large found R∖H without an unassigned color.
    pub empty_palette: u64,
    pub evictions: u64,
}

impl DenseStats {
    pub fn match_calls(&self) -> u64 {
        self.random_match + self.match_large + self.match_small
    }
}

#[derive(Clone, Debug)]
pub struct DenseColoring {
    pub matching: NonEdgeMatching,
    books: BTreeMap<CliqueId, CliqueBook>,
    queue: VecDeque<(CliqueId, VertexId)>,
    stats: DenseStats,
    palette: u32,
    delta: usize,
    cap: usize,
    dispatch_at: f64,
    heavy_limit: f64,
    large_at: f64,
    dissolve_budget: usize,
}

impl DenseColoring {
    pub fn new(n: usize, delta: usize, params: &ParamSet) -> Self {
        DenseColoring {
            matching: NonEdgeMatching::new(n),
            books: BTreeMap::new(),
            queue: VecDeque::new(),
            stats: DenseStats::default(),
            palette: delta as u32 + 1,
            delta,
            cap: params.cap_samples,
            dispatch_at: params.dispatch_frac * delta as f64,
            heavy_limit: params.heavy_frac * delta as f64,
            large_at: params.small_matching_frac * params.epsilon * params.epsilon * delta as f64,
            dissolve_budget: 0,
        }
    }

    pub fn book(&self, c: CliqueId) -> Option<&CliqueBook> {
        self.books.get(&c)
    }

    pub fn books(&self) -> impl Iterator<Item = &CliqueBook> {
        self.books.values()
    }

    pub fn stats(&self) -> DenseStats {
        self.stats
    }

    /// |M_N| at or above which a clique skips post-processing and freezes M_N.
    pub fn large_matching_threshold(&self) -> f64 {
        self.large_at
    }

    pub fn dispatch_threshold(&self) -> f64 {
        self.dispatch_at
    }

    pub fn heavy_threshold(&self) -> f64 {
        self.heavy_limit
    }

    /// Allows a bounded number of pair dissolutions for the coming update.
    pub fn reset_budget(&mut self) {
        self.dissolve_budget = 4 * self.palette as usize;
    }

    /// Small-matching post-processing: rebuild M_N greedily where it is small.
    pub fn post_process(&mut self, decomp: &Decomposition, meter: &mut Meter) {
        let ids: Vec<CliqueId> = decomp.cliques().map(|c| c.id).collect();
        for c in ids {
            if (self.matching.size(c) as f64) < self.large_at {
                self.matching.greedy_rebuild(decomp, c, meter);
            }
        }
    }

    /// Rebuilds books for the current decomposition and colors every dense
    /// vertex from scratch. Sparse vertices must already be colored.
    pub fn init_phase<R: Rng + ?Sized>(&mut self, cx: &mut Ctx<'_, R>) {
        self.books.clear();
        self.queue.clear();
        for cl in cx.decomp.cliques() {
            let mut book = CliqueBook::new(cl.id, self.palette, self.heavy_limit);
            book.large_regime = self.matching.size(cl.id) as f64 >= self.large_at;
            for u in cl.members().iter() {
                if self.matching.mate(u).is_none() {
                    book.free_members.insert(u);
                }
            }
            self.books.insert(cl.id, book);
        }
        for v in 0..cx.g.n() as VertexId {
            if cx.decomp.is_dense(v) {
                continue;
            }
            let c = cx.colors.color(v);
            for &(cl, cnt) in cx.decomp.clique_counts(v) {
                cx.meter.probes += 1;
                if let Some(b) = self.books.get_mut(&cl) {
                    b.adjust_t(c, cnt as i64);
                }
            }
        }
        self.reset_budget();
        let ids: Vec<CliqueId> = self.books.keys().copied().collect();
        for &c in &ids {
            for (u, v) in self.matching.pairs(cx.decomp, c) {
                self.recolor_non_edge(cx, u, v);
            }
        }
        self.drain(cx);
        for &c in &ids {
            let todo = self.books[&c].free_members.sorted();
            for v in todo {
                if cx.colors.color(v) == BLANK && self.books[&c].free_members.contains(v) {
                    self.match_vertex(cx, c, v);
                }
            }
            self.drain(cx);
        }
    }

    /// Sparse vertex `v` changed color: shift T_C by |N_C(v)| in every clique.
    pub fn update_edge_counts(&mut self, decomp: &Decomposition, v: VertexId, old: Color, new: Color, meter: &mut Meter) {
        for &(c, cnt) in decomp.clique_counts(v) {
            meter.probes += 1;
            if let Some(b) = self.books.get_mut(&c) {
                b.adjust_t(old, -(cnt as i64));
                b.adjust_t(new, cnt as i64);
            }
        }
    }

    /// One edge between clique `c` and a sparse vertex of color `col` appeared (+1) or vanished (−1).
    pub fn adjust_edge_count(&mut self, c: CliqueId, col: Color, d: i64) {
        if let Some(b) = self.books.get_mut(&c) {
            b.adjust_t(col, d);
        }
    }

    /// Gives up the color of dense vertex `w` after a conflict and recolors it.
    pub fn recolor_dense<R: Rng + ?Sized>(&mut self, cx: &mut Ctx<'_, R>, w: VertexId) {
        let Some(c) = cx.decomp.clique_of(w) else { return };
        cx.meter.touched += 1;
        if let Some(x) = self.matching.mate(w) {
            self.recolor_non_edge(cx, w, x);
        } else if let Some(b) = self.books.get_mut(&c) {
            b.take(cx.colors, w);
            self.queue.push_back((c, w));
        }
        self.drain(cx);
    }

    /// A non-edge of a clique appeared or vanished during a phase.
    pub fn on_non_edge_delta<R: Rng + ?Sized>(&mut self, cx: &mut Ctx<'_, R>, d: &NonEdgeDelta) {
        let Some(large) = self.books.get(&d.clique).map(|b| b.large_regime) else { return };
        let out = self.matching.update_non_edges(cx.decomp, d, large, cx.meter);
        let book = self.books.get_mut(&d.clique).expect("book of live clique");
        for &(a, b) in &out.unlinked {
            book.take_pair(cx.colors, a, b);
            for x in [a, b] {
                if self.matching.mate(x).is_none() {
                    book.free_members.insert(x);
                    self.queue.push_back((d.clique, x));
                }
            }
        }
        for &(x, y) in &out.linked {
            for z in [x, y] {
                if book.free_members.remove(z).is_some() {
                    book.take(cx.colors, z);
                }
            }
        }
        for &(x, y) in &out.linked {
            self.recolor_non_edge(cx, x, y);
        }
        self.drain(cx);
    }

    /// Matches every queued blank member of 𝓛.
    pub fn drain<R: Rng + ?Sized>(&mut self, cx: &mut Ctx<'_, R>) {
        while let Some((c, y)) = self.queue.pop_front() {
            let Some(b) = self.books.get(&c) else { continue };
            if cx.decomp.clique_of(y) != Some(c) || !b.free_members.contains(y) || cx.colors.color(y) != BLANK {
                continue;
            }
            self.match_vertex(cx, c, y);
        }
    }

    /// No vertex of L(col) ∪ (L_D(col) ∖ C) is adjacent to x.
    fn outside_free<R: Rng + ?Sized>(&self, cx: &mut Ctx<'_, R>, c: CliqueId, x: VertexId, col: Color) -> bool {
        let book = &self.books[&c];
        let s = cx.colors.sparse_list(col);
        let d = cx.colors.dense_list(col);
        cx.meter.probes += (s.len() + d.len()) as u64;
        s.iter().all(|w| !cx.g.has_edge(x, w))
            && d.iter().all(|w| {
                w == x || (cx.decomp.clique_of(w) == Some(c) && !book.overflow.contains(w)) || !cx.g.has_edge(x, w)
            })
    }

    fn pair_color_ok<R: Rng + ?Sized>(&self, cx: &mut Ctx<'_, R>, c: CliqueId, u: VertexId, v: VertexId, col: Color) -> bool {
        !matches!(self.books[&c].slots[col as usize], Slot::Pair(..))
            && self.outside_free(cx, c, u, col)
            && self.outside_free(cx, c, v, col)
    }

    /// Recolor-Non-Edge: one shared color for a matched pair. Returns the
    /// color, or BLANK when no color fits and the pair was dissolved.
    pub fn recolor_non_edge<R: Rng + ?Sized>(&mut self, cx: &mut Ctx<'_, R>, u: VertexId, v: VertexId) -> Color {
        let c = cx.decomp.clique_of(u).expect("matched vertex is dense");
        self.stats.recolor_non_edge += 1;
        cx.meter.touched += 2;
        self.books.get_mut(&c).expect("book").take_pair(cx.colors, u, v);
        let mut chosen = None;
        for _ in 0..self.cap {
            let col = cx.draw(self.palette);
            if self.pair_color_ok(cx, c, u, v, col) {
                chosen = Some(col);
                break;
            }
        }
        if chosen.is_none() {
            self.stats.fallbacks += 1;
            chosen = (1..=self.palette).find(|&col| self.pair_color_ok(cx, c, u, v, col));
        }
        let book = self.books.get_mut(&c).expect("book");
        match chosen {
            Some(col) => {
                if let Some(y) = book.give_pair(cx.colors, u, v, col) {
                    self.stats.evictions += 1;
                    self.queue.push_back((c, y));
                }
                col
            }
            None => {
                self.stats.dissolutions += 1;
                self.matching.unlink(u);
                for x in [u, v] {
                    book.free_members.insert(x);
                    self.queue.push_back((c, x));
                }
                BLANK
            }
        }
    }

    /// Match(v) for a blank member of 𝓛.
    pub fn match_vertex<R: Rng + ?Sized>(&mut self, cx: &mut Ctx<'_, R>, c: CliqueId, v: VertexId) {
        let size = cx.decomp.clique(c).map_or(0, |cl| cl.len());
        let branch = dispatch(self.matching.size(c), size, self.delta, self.dispatch_at);
        self.match_with(cx, c, v, branch);
    }

    /// Runs one Match branch, then the deterministic chain if it gave up.
    pub fn match_with<R: Rng + ?Sized>(&mut self, cx: &mut Ctx<'_, R>, c: CliqueId, v: VertexId, branch: MatchBranch) {
        cx.meter.touched += 1;
        let book = self.books.get_mut(&c).expect("book of live clique");
        let cap = self.cap;
        let ok = match branch {
            MatchBranch::Random => {
                book.branches[0] += 1;
                self.stats.random_match += 1;
                random_match(cx, book, v, cap, self.palette)
            }
            MatchBranch::Large => {
                book.branches[1] += 1;
                self.stats.match_large += 1;
                let r = match_large(cx, book, v, cap);
                if r.is_none() {
                    self.stats.empty_palette += 1;
                }
                r.unwrap_or(false)
            }
            MatchBranch::Small => {
                book.branches[2] += 1;
                self.stats.match_small += 1;
                match_small(cx, book, v, cap)
            }
        };
        if !ok {
            self.stats.fallbacks += 1;
            self.fallback(cx, c, v);
        }
    }

    /// Deterministic chain: free color, then pairing with a free non-neighbor,
    /// then taking over a pair color, then a plain scan outside the book.
    fn fallback<R: Rng + ?Sized>(&mut self, cx: &mut Ctx<'_, R>, c: CliqueId, v: VertexId) {
        let book = self.books.get_mut(&c).expect("book");
        for col in book.free_colors.sorted() {
            if cx.feasible(v, col, &[]) {
                book.give(cx.colors, v, col);
                return;
            }
        }
        for col in 1..=self.palette {
            if let Slot::Single(x) = book.slots[col as usize] {
                if x != v
                    && !book.overflow.contains(x)
                    && cx.decomp.non_edges(v).contains(x)
                    && self.matching.mate(x).is_none()
                    && cx.feasible(v, col, &[x])
                {
                    self.matching.link(c, x, v);
                    book.free_members.remove(v);
                    book.free_members.remove(x);
                    book.slots[col as usize] = Slot::Pair(x, v);
                    cx.colors.set(v, col, true);
                    self.stats.fallback_pairings += 1;
                    return;
                }
            }
        }
        if self.dissolve_budget > 0 {
            for col in 1..=self.palette {
                if let Slot::Pair(a, b) = book.slots[col as usize] {
                    if cx.decomp.non_edges(v).contains(a) && cx.feasible(v, col, &[]) {
                        self.dissolve_budget -= 1;
                        self.stats.dissolutions += 1;
                        self.matching.unlink(a);
                        self.matching.link(c, a, v);
                        book.free_members.remove(v);
                        cx.colors.clear(b);
                        book.free_members.insert(b);
                        book.slots[col as usize] = Slot::Pair(a, v);
                        cx.colors.set(v, col, true);
                        self.queue.push_back((c, b));
                        return;
                    }
                }
            }
        }
        self.stats.breaches += 1;
        let col = trivial_color(cx.g, cx.colors.colors(), v, |_| true, cx.meter);
        cx.colors.set(v, col, true);
        book.overflow.insert(v);
    }

    /// `clique,size,k,matched,free_members,free_colors,heavy,random,large,small` rows.
    pub fn snapshot_csv(&self, decomp: &Decomposition) -> String {
        let mut out = String::from("clique,size,k,matched,free_members,free_colors,heavy,random,large,small\n");
        for b in self.books.values() {
            let size = decomp.clique(b.id).map_or(0, |c| c.len());
            let [r, l, s] = b.branches;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                b.id,
                size,
                self.palette as i64 - size as i64,
                self.matching.size(b.id),
                b.free_members.len(),
                b.free_colors.len(),
                b.heavy,
                r,
                l,
                s
            ));
        }
        out
    }

    #[cfg(feature = "fault-injection")]
    pub fn book_mut(&mut self, c: CliqueId) -> Option<&mut CliqueBook> {
        self.books.get_mut(&c)
    }
}

/// Match's branch choice from |M_N|, |C| and Δ.
pub fn dispatch(matched: usize, size: usize, delta: usize, dispatch_at: f64) -> MatchBranch {
    if matched as f64 >= dispatch_at {
        MatchBranch::Random
    } else if size > delta {
        MatchBranch::Large
    } else {
        MatchBranch::Small
    }
}

/// Random-Match: colors accepted only when no member holds them.
fn random_match<R: Rng + ?Sized>(cx: &mut Ctx<'_, R>, book: &mut CliqueBook, v: VertexId, cap: usize, palette: u32) -> bool {
    for _ in 0..cap {
        let col = cx.draw(palette);
        if book.slots[col as usize] == Slot::Free && cx.feasible(v, col, &[]) {
            book.give(cx.colors, v, col);
            return true;
        }
    }
    false
}

/// Match-Large. `None` when R∖H holds no unassigned color.
fn match_large<R: Rng + ?Sized>(cx: &mut Ctx<'_, R>, book: &mut CliqueBook, v: VertexId, cap: usize) -> Option<bool> {
    cx.meter.probes += book.free_colors.len() as u64;
    let col = book.free_colors.iter().filter(|&c| !book.is_heavy(c)).min()?;
    if cx.feasible(v, col, &[]) {
        book.give(cx.colors, v, col);
        return Some(true);
    }
    for _ in 0..cap {
        let Some(w) = cx.pick(&book.free_members) else { break };
        if w == v || cx.colors.color(w) == BLANK || book.overflow.contains(w) {
            continue;
        }
        let cw = cx.colors.color(w);
        if cx.feasible(w, col, &[w]) && cx.feasible(v, cw, &[w]) {
            book.take(cx.colors, w);
            book.give(cx.colors, w, col);
            book.give(cx.colors, v, cw);
            return Some(true);
        }
    }
    Some(false)
}

/// Match-Small: length-5 rotation v ← c(w), w ← c(u), u ← c'.
fn match_small<R: Rng + ?Sized>(cx: &mut Ctx<'_, R>, book: &mut CliqueBook, v: VertexId, cap: usize) -> bool {
    for _ in 0..cap {
        let mut pick = None;
        for _ in 0..cap {
            if book.free_colors.is_empty() {
                return false;
            }
            let u = cx.pick(&book.free_members).expect("v is a member of 𝓛");
            let cp = cx.pick(&book.free_colors).expect("non-empty");
            if book.overflow.contains(u) {
                continue;
            }
            if cx.feasible(u, cp, &[u]) {
                pick = Some((u, cp));
                break;
            }
        }
        let Some((u, cp)) = pick else { return false };
        if u == v {
            book.give(cx.colors, v, cp);
            return true;
        }
        if cx.colors.color(u) == BLANK {
            // Another uncolored member: coloring it is progress too.
            book.give(cx.colors, u, cp);
            continue;
        }
        let Some(w) = cx.pick(&book.free_members) else { return false };
        if w == v || cx.colors.color(w) == BLANK || book.overflow.contains(w) {
            continue;
        }
        let cu = cx.colors.color(u);
        if w == u {
            if cx.feasible(v, cu, &[u]) {
                book.take(cx.colors, u);
                book.give(cx.colors, u, cp);
                book.give(cx.colors, v, cu);
                return true;
            }
            continue;
        }
        let cw = cx.colors.color(w);
        if cx.feasible(w, cu, &[u, w]) && cx.feasible(v, cw, &[w]) {
            book.take(cx.colors, u);
            book.take(cx.colors, w);
            book.give(cx.colors, u, cp);
            book.give(cx.colors, w, cu);
            book.give(cx.colors, v, cw);
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Engine, EngineConfig};
    use crate::graph::EdgeUpdate;
    use crate::params::Profile;

    /// K_m on vertices 0..m minus `missing`, with one initialization after the last insertion.
    fn clique_engine(delta: usize, m: u32, missing: &[(u32, u32)], tweak: impl Fn(&mut ParamSet)) -> Engine {
        let n = m as usize + 4;
        let mut cfg = EngineConfig::forced_engine(n, delta, Profile::Desk, 5);
        cfg.params.epsilon = 0.2;
        cfg.params.tau = 0.2 / 3.0;
        cfg.params.friend_window = 1;
        cfg.params.sample_count_k = 96;
        let edges: Vec<EdgeUpdate> = (0..m)
            .flat_map(|u| (u + 1..m).map(move |v| (u, v)))
            .filter(|&(u, v)| !missing.contains(&(u, v)))
            .map(|(u, v)| EdgeUpdate::insert(u, v))
            .collect();
        cfg.params.phase_len_t = edges.len();
        tweak(&mut cfg.params);
        let mut e = Engine::new(n, delta, cfg).unwrap();
        for up in edges {
            e.process(up).unwrap();
        }
        assert_eq!(e.decomposition().clique_count(), 1);
        assert_eq!(e.decomposition().cliques().next().unwrap().len(), m as usize);
        e
    }

    fn only_clique(e: &Engine) -> CliqueId {
        e.decomposition().cliques().next().unwrap().id
    }

    fn assert_proper(e: &Engine) {
        for (u, v) in e.graph().edges() {
            assert_ne!(e.color_of(u), e.color_of(v), "edge ({u}, {v})");
        }
        assert!(e.colors().iter().all(|&c| c != BLANK));
    }

    #[test]
    fn dispatch_examples() {
        assert_eq!(dispatch(4, 38, 40, 4.0), MatchBranch::Random);
        assert_eq!(dispatch(0, 41, 40, 4.0), MatchBranch::Large);
        assert_eq!(dispatch(3, 41, 40, 4.0), MatchBranch::Large);
        assert_eq!(dispatch(0, 40, 40, 4.0), MatchBranch::Small);
    }

    #[test]
    fn matched_pair_shares_one_color() {
        let e = clique_engine(40, 41, &[(0, 1)], |_| {});
        let c = only_clique(&e);
        assert_eq!(e.dense().matching.pairs(e.decomposition(), c), vec![(0, 1)]);
        let col = e.color_of(0);
        assert_eq!(e.color_of(1), col);
        assert_eq!(e.dense().book(c).unwrap().slot(col), Slot::Pair(0, 1));
        assert_proper(&e);
    }

    #[test]
    fn maintain_matching_rematches_after_non_edge_vanishes() {
        let mut e = clique_engine(40, 41, &[(0, 1), (1, 2)], |p| p.small_matching_frac = 100.0);
        let c = only_clique(&e);
        assert!(!e.dense().book(c).unwrap().large_regime());
        assert_eq!(e.dense().matching.pairs(e.decomposition(), c), vec![(0, 1)]);
        e.process(EdgeUpdate::insert(0, 1)).unwrap();
        assert_eq!(e.dense().matching.pairs(e.decomposition(), c), vec![(1, 2)]);
        assert!(e.dense().matching.is_maximal(e.decomposition(), c));
        assert_eq!(e.color_of(1), e.color_of(2));
        assert_proper(&e);
    }

    #[test]
    fn large_regime_only_shrinks_the_matching() {
        let mut e = clique_engine(40, 41, &[(0, 1), (1, 2)], |p| p.small_matching_frac = 0.5);
        let c = only_clique(&e);
        assert!(e.dense().book(c).unwrap().large_regime());
        let pairs = e.dense().matching.pairs(e.decomposition(), c);
        assert_eq!(pairs.len(), 1);
        let (a, b) = pairs[0];
        e.process(EdgeUpdate::insert(a, b)).unwrap();
        assert!(e.dense().matching.pairs(e.decomposition(), c).is_empty());
        assert_proper(&e);
    }

    #[test]
    fn free_colors_follow_k_plus_matched_plus_uncolored() {
        let mut e = clique_engine(40, 40, &[], |_| {});
        let c = only_clique(&e);
        assert_eq!(e.dense().book(c).unwrap().free_colors().len(), 1);
        let (mut cx, dense) = e.parts_mut();
        let book = dense.books.get_mut(&c).unwrap();
        book.take(cx.colors, 7);
        assert_eq!(book.free_colors().len(), 2);
        let before = dense.stats();
        dense.match_with(&mut cx, c, 7, MatchBranch::Small);
        assert_eq!(dense.books[&c].free_colors().len(), 1);
        assert_eq!(dense.stats().fallbacks, before.fallbacks);
        assert_proper(&e);
    }

    #[test]
    fn match_large_takes_lowest_unassigned_light_color() {
        let mut e = clique_engine(40, 41, &[], |_| {});
        let c = only_clique(&e);
        let (mut cx, dense) = e.parts_mut();
        let old = dense.books.get_mut(&c).unwrap().take(cx.colors, 3);
        let before = dense.stats();
        dense.match_with(&mut cx, c, 3, MatchBranch::Large);
        assert_eq!(cx.colors.color(3), old);
        assert_eq!(dense.stats().match_large, before.match_large + 1);
        assert_eq!(dense.stats().fallbacks, before.fallbacks);
    }

    #[test]
    fn match_large_with_only_heavy_colors_falls_back() {
        let mut e = clique_engine(40, 41, &[], |_| {});
        let c = only_clique(&e);
        let (mut cx, dense) = e.parts_mut();
        let old = dense.books.get_mut(&c).unwrap().take(cx.colors, 3);
        dense.adjust_edge_count(c, old, 5);
        assert!(dense.books[&c].is_heavy(old));
        assert_eq!(dense.books[&c].heavy_count(), 1);
        let before = dense.stats();
        dense.match_with(&mut cx, c, 3, MatchBranch::Large);
        assert_eq!(dense.stats().empty_palette, before.empty_palette + 1);
        assert_eq!(cx.colors.color(3), old);
        dense.adjust_edge_count(c, old, -5);
        assert_eq!(dense.books[&c].heavy_count(), 0);
        assert_eq!(dense.books[&c].t(old), 0);
    }

    #[test]
    fn random_match_finds_the_single_free_color() {
        let mut e = clique_engine(40, 41, &[], |_| {});
        let c = only_clique(&e);
        let (mut cx, dense) = e.parts_mut();
        let old = dense.books.get_mut(&c).unwrap().take(cx.colors, 9);
        let before = dense.stats();
        dense.match_with(&mut cx, c, 9, MatchBranch::Random);
        assert_eq!(cx.colors.color(9), old);
        assert_eq!(dense.stats().fallbacks, before.fallbacks);
    }

    #[test]
    fn recolor_non_edge_moves_pair_off_a_conflict() {
        let mut e = clique_engine(40, 41, &[(0, 1)], |_| {});
        let c = only_clique(&e);
        let (mut cx, dense) = e.parts_mut();
        let col = dense.recolor_non_edge(&mut cx, 0, 1);
        assert_ne!(col, BLANK);
        dense.drain(&mut cx);
        assert_eq!(cx.colors.color(0), col);
        assert_eq!(cx.colors.color(1), col);
        assert_eq!(dense.books[&c].slot(col), Slot::Pair(0, 1));
        assert_proper(&e);
    }

    #[test]
    fn maintain_matching_is_maximal_after_greedy_rebuild() {
        let missing = [(0, 1), (2, 3), (4, 5), (1, 2)];
        let e = clique_engine(40, 41, &missing, |p| p.small_matching_frac = 100.0);
        let c = only_clique(&e);
        assert!(e.dense().matching.is_maximal(e.decomposition(), c));
        assert_eq!(e.dense().matching.size(c), 3);
        e.dense().matching.check(e.decomposition()).unwrap();
    }

    #[test]
    fn matching_journal_revert_restores_every_pair() {
        use rand::{Rng, SeedableRng};
        let missing: Vec<(u32, u32)> = (0..12).map(|i| (2 * i, 2 * i + 1)).chain([(0, 3), (5, 8), (9, 14)]).collect();
        let e = clique_engine(40, 40, &missing, |_| {});
        let c = only_clique(&e);
        let decomp = e.decomposition();
        for seed in 0..20 {
            let mut m = e.dense().matching.clone();
            let (mate, sizes) = (m.mate.clone(), m.sizes.clone());
            m.begin_recording();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..40 {
                let (u, v) = missing[rng.gen_range(0..missing.len())];
                if rng.gen_bool(0.5) {
                    m.unlink(u);
                } else if m.mate(u).is_none() && m.mate(v).is_none() {
                    m.link(c, u, v);
                }
            }
            m.revert_journal();
            assert_eq!(m.mate, mate, "seed {seed}");
            assert_eq!(m.sizes, sizes, "seed {seed}");
            m.check(decomp).unwrap();
        }
    }

}
