//! Exact (non-sampled) friend and density predicates.

use rustc_hash::FxHashMap;

use crate::graph::{DynamicGraph, VertexId};

/// |N(u) ∩ N(v)| for every edge of a graph snapshot.
#[derive(Clone, Debug, Default)]
pub struct Commons {
    map: FxHashMap<u64, u32>,
}

#[inline]
fn key(u: VertexId, v: VertexId) -> u64 {
    let (a, b) = if u < v { (u, v) } else { (v, u) };
    ((a as u64) << 32) | b as u64
}

impl Commons {
    pub fn compute(g: &DynamicGraph) -> Self {
        let mut map = FxHashMap::default();
        map.reserve(g.edge_count());
        for (u, v) in g.edges() {
            map.insert(key(u, v), g.common_neighbors_exact(u, v) as u32);
        }
        Commons { map }
    }

    /// Common-neighbor count of an edge; 0 for non-edges.
    #[inline]
    pub fn get(&self, u: VertexId, v: VertexId) -> u32 {
        self.map.get(&key(u, v)).copied().unwrap_or(0)
    }
}

/// Edge (u, v) is an x-friend edge when it has ≥ (1−x)Δ common neighbors.
#[inline]
pub fn is_friend(common: u32, delta: usize, x: f64) -> bool {
    common as f64 >= (1.0 - x) * delta as f64
}

/// Number of x-friends of v.
pub fn friend_count(g: &DynamicGraph, commons: &Commons, v: VertexId, x: f64) -> usize {
    g.neighbors(v).iter().filter(|&&u| is_friend(commons.get(u, v), g.delta(), x)).count()
}

/// v is x-dense when it has ≥ (1−x)Δ x-friends.
pub fn is_dense(g: &DynamicGraph, commons: &Commons, v: VertexId, x: f64) -> bool {
    friend_count(g, commons, v, x) as f64 >= (1.0 - x) * g.delta() as f64
}
