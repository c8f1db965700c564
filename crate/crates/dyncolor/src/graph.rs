//! Dynamic simple graph with a fixed degree cap.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::set::IndexedSet;

pub type VertexId = u32;

/// Colors are `1..=Δ+1`; `BLANK` marks an uncolored vertex.
pub type Color = u32;
pub const BLANK: Color = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateKind {
    Insert,
    Delete,
}

/// One edge insertion or deletion. Endpoint order is kept as issued:
/// several handlers treat `v` as the endpoint to recolor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeUpdate {
    pub kind: UpdateKind,
    pub u: VertexId,
    pub v: VertexId,
}

impl EdgeUpdate {
    pub fn insert(u: VertexId, v: VertexId) -> Self {
        EdgeUpdate { kind: UpdateKind::Insert, u, v }
    }

    pub fn delete(u: VertexId, v: VertexId) -> Self {
        EdgeUpdate { kind: UpdateKind::Delete, u, v }
    }

    #[inline]
    pub fn is_insert(&self) -> bool {
        self.kind == UpdateKind::Insert
    }

    /// Endpoints with the smaller id first.
    pub fn ordered(&self) -> (VertexId, VertexId) {
        (self.u.min(self.v), self.u.max(self.v))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("self-loop on vertex {v}")]
    SelfLoop { v: VertexId },
    #[error("vertex {v} out of range (n = {n})")]
    VertexOutOfRange { v: VertexId, n: usize },
    #[error("edge ({u}, {v}) already present")]
    DuplicateEdge { u: VertexId, v: VertexId },
    #[error("edge ({u}, {v}) not present")]
    MissingEdge { u: VertexId, v: VertexId },
    #[error("inserting ({u}, {v}) would push vertex {vertex} above degree cap {delta}")]
    DegreeCapExceeded { u: VertexId, v: VertexId, vertex: VertexId, delta: usize },
}

/// Slots vacated by a deletion, needed to undo it with identical ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeUndo {
    pos_u: usize,
    pos_v: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynamicGraph {
    n: usize,
    delta: usize,
    adj: Vec<IndexedSet>,
    edges: usize,
    /// Adjacency bit matrix, kept for n ≤ BIT_MATRIX_MAX_N to make `has_edge` a bit test.
    /// Row v starts at word `v * row_words`.
    bits: Vec<u64>,
    row_words: usize,
}

/// Largest n that gets an adjacency bit matrix (32 MiB at the limit).
pub const BIT_MATRIX_MAX_N: usize = 16_384;

impl DynamicGraph {
    pub fn new(n: usize, delta: usize) -> Self {
        let row_words = n.div_ceil(64);
        let bits = if n <= BIT_MATRIX_MAX_N { vec![0; n * row_words] } else { Vec::new() };
        DynamicGraph { n, delta, adj: vec![IndexedSet::new(); n], edges: 0, bits, row_words }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn delta(&self) -> usize {
        self.delta
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v as usize].len()
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        self.adj[v as usize].as_slice()
    }

    #[inline]
    fn set_bit(&mut self, u: usize, v: usize, on: bool) {
        if self.bits.is_empty() {
            return;
        }
        for (a, b) in [(u, v), (v, u)] {
            let w = &mut self.bits[a * self.row_words + b / 64];
            if on {
                *w |= 1 << (b % 64);
            } else {
                *w &= !(1 << (b % 64));
            }
        }
    }

    #[inline]
    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        if !self.bits.is_empty() {
            let (u, v) = (u as usize, v as usize);
            return self.bits[u * self.row_words + v / 64] >> (v % 64) & 1 == 1;
        }
        self.has_edge_by_lists(u, v)
    }

    #[inline(never)]
    fn has_edge_by_lists(&self, u: VertexId, v: VertexId) -> bool {
        let (a, b) = if self.degree(u) <= self.degree(v) { (u, v) } else { (v, u) };
        self.adj[a as usize].contains(b)
    }

    #[inline]
    pub fn sample_neighbor<R: Rng + ?Sized>(&self, v: VertexId, rng: &mut R) -> Option<VertexId> {
        self.adj[v as usize].sample(rng)
    }

    /// Exact |N(u) ∩ N(v)| by probing the smaller side.
    pub fn common_neighbors_exact(&self, u: VertexId, v: VertexId) -> usize {
        let (a, b) = if self.degree(u) <= self.degree(v) { (u, v) } else { (v, u) };
        if !self.bits.is_empty() && self.degree(a) > self.row_words {
            let ra = &self.bits[a as usize * self.row_words..][..self.row_words];
            let rb = &self.bits[b as usize * self.row_words..][..self.row_words];
            return ra.iter().zip(rb).map(|(x, y)| (x & y).count_ones() as usize).sum();
        }
        self.neighbors(a).iter().filter(|&&w| self.has_edge(b, w)).count()
    }

    /// All edges with `u < v`, in adjacency order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        (0..self.n as VertexId)
            .flat_map(move |u| self.neighbors(u).iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    pub fn validate(&self, e: &EdgeUpdate) -> Result<(), GraphError> {
        let (u, v) = (e.u, e.v);
        for w in [u, v] {
            if w as usize >= self.n {
                return Err(GraphError::VertexOutOfRange { v: w, n: self.n });
            }
        }
        if u == v {
            return Err(GraphError::SelfLoop { v: u });
        }
        let present = self.has_edge(u, v);
        match e.kind {
            UpdateKind::Insert => {
                if present {
                    return Err(GraphError::DuplicateEdge { u, v });
                }
                for w in [u, v] {
                    if self.degree(w) >= self.delta {
                        return Err(GraphError::DegreeCapExceeded { u, v, vertex: w, delta: self.delta });
                    }
                }
            }
            UpdateKind::Delete => {
                if !present {
                    return Err(GraphError::MissingEdge { u, v });
                }
            }
        }
        Ok(())
    }

    /// Applies a legal update; the returned token reverts it via [`DynamicGraph::revert`].
    pub fn apply(&mut self, e: &EdgeUpdate) -> Result<EdgeUndo, GraphError> {
        self.validate(e)?;
        let (u, v) = (e.u as usize, e.v as usize);
        let undo = match e.kind {
            UpdateKind::Insert => {
                self.adj[u].insert(e.v);
                self.adj[v].insert(e.u);
                self.set_bit(u, v, true);
                self.edges += 1;
                EdgeUndo { pos_u: 0, pos_v: 0 }
            }
            UpdateKind::Delete => {
                let pos_u = self.adj[u].remove(e.v).expect("validated");
                let pos_v = self.adj[v].remove(e.u).expect("validated");
                self.set_bit(u, v, false);
                self.edges -= 1;
                EdgeUndo { pos_u, pos_v }
            }
        };
        Ok(undo)
    }

    /// Undoes the most recent un-reverted `apply(e)`.
    pub fn revert(&mut self, e: &EdgeUpdate, undo: EdgeUndo) {
        let (u, v) = (e.u as usize, e.v as usize);
        match e.kind {
            UpdateKind::Insert => {
                self.adj[v].pop_last();
                self.adj[u].pop_last();
                self.set_bit(u, v, false);
                self.edges -= 1;
            }
            UpdateKind::Delete => {
                self.adj[v].restore(e.u, undo.pos_v);
                self.adj[u].restore(e.v, undo.pos_u);
                self.set_bit(u, v, true);
                self.edges += 1;
            }
        }
    }

    pub fn check_symmetry(&self) -> Result<(), String> {
        let mut total = 0;
        for u in 0..self.n as VertexId {
            if self.degree(u) > self.delta {
                return Err(format!("vertex {u} has degree {} > {}", self.degree(u), self.delta));
            }
            for &v in self.neighbors(u) {
                if v == u {
                    return Err(format!("self-loop at {u}"));
                }
                if !self.adj[v as usize].contains(u) {
                    return Err(format!("edge ({u}, {v}) is one-sided"));
                }
            }
            total += self.degree(u);
        }
        if total != 2 * self.edges {
            return Err(format!("edge count {} disagrees with degree sum {total}", self.edges));
        }
        if !self.bits.is_empty() {
            let set: usize = self.bits.iter().map(|w| w.count_ones() as usize).sum();
            if set != 2 * self.edges || self.edges().any(|(u, v)| !self.has_edge(u, v) || !self.has_edge(v, u)) {
                return Err("adjacency bit matrix out of sync".into());
            }
        }
        Ok(())
    }
}
