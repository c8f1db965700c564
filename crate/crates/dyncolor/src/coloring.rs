//! Color assignment with per-color occupancy lists.
//!
//! Sparse vertices sit in `L(c)`, dense vertices in `L_D(c)`. Checking
//! whether color c is free for v walks these lists and probes adjacency,
//! which is cheap because every list stays short.

use crate::graph::{Color, DynamicGraph, VertexId, BLANK};
use crate::meter::Meter;
use crate::set::IndexedSet;

#[derive(Clone, Debug)]
pub struct ColorState {
    palette: u32,
    color: Vec<Color>,
    dense: Vec<bool>,
    sparse_lists: Vec<IndexedSet>,
    dense_lists: Vec<IndexedSet>,
    before: Vec<Color>,
    marked: Vec<bool>,
    touched: Vec<VertexId>,
    assignments: u64,
}

impl ColorState {
    /// All vertices blank, palette `1..=Δ+1`.
    pub fn new(n: usize, delta: usize) -> Self {
        let palette = delta as u32 + 1;
        ColorState {
            palette,
            color: vec![BLANK; n],
            dense: vec![false; n],
            sparse_lists: vec![IndexedSet::new(); palette as usize + 1],
            dense_lists: vec![IndexedSet::new(); palette as usize + 1],
            before: vec![BLANK; n],
            marked: vec![false; n],
            touched: Vec::new(),
            assignments: 0,
        }
    }

    /// Δ + 1.
    #[inline]
    pub fn palette(&self) -> u32 {
        self.palette
    }

    #[inline]
    pub fn color(&self, v: VertexId) -> Color {
        self.color[v as usize]
    }

    pub fn colors(&self) -> &[Color] {
        &self.color
    }

    /// L(c).
    #[inline]
    pub fn sparse_list(&self, c: Color) -> &IndexedSet {
        &self.sparse_lists[c as usize]
    }

    /// L_D(c).
    #[inline]
    pub fn dense_list(&self, c: Color) -> &IndexedSet {
        &self.dense_lists[c as usize]
    }

    /// Whether `v` is registered in a dense list (only meaningful when colored).
    pub fn in_dense_list(&self, v: VertexId) -> bool {
        self.dense[v as usize]
    }

    /// Total color assignments so far.
    pub fn assignments(&self) -> u64 {
        self.assignments
    }

    fn note(&mut self, v: VertexId) {
        if !self.marked[v as usize] {
            self.marked[v as usize] = true;
            self.before[v as usize] = self.color[v as usize];
            self.touched.push(v);
        }
    }

    /// Colors a blank vertex.
    pub fn set(&mut self, v: VertexId, c: Color, dense: bool) {
        debug_assert!(c >= 1 && c <= self.palette, "color {c} outside palette");
        debug_assert_eq!(self.color[v as usize], BLANK, "vertex {v} already colored");
        self.note(v);
        self.color[v as usize] = c;
        self.dense[v as usize] = dense;
        if dense {
            self.dense_lists[c as usize].insert(v);
        } else {
            self.sparse_lists[c as usize].insert(v);
        }
        self.assignments += 1;
    }

    /// Blanks `v`, returning its previous color.
    pub fn clear(&mut self, v: VertexId) -> Color {
        let c = self.color[v as usize];
        if c == BLANK {
            return BLANK;
        }
        self.note(v);
        if self.dense[v as usize] {
            self.dense_lists[c as usize].remove(v);
        } else {
            self.sparse_lists[c as usize].remove(v);
        }
        self.color[v as usize] = BLANK;
        c
    }

    pub fn blank_all(&mut self) {
        for v in 0..self.color.len() as VertexId {
            if self.color[v as usize] != BLANK {
                self.note(v);
                self.color[v as usize] = BLANK;
            }
        }
        self.sparse_lists.iter_mut().for_each(IndexedSet::clear);
        self.dense_lists.iter_mut().for_each(IndexedSet::clear);
    }

    /// Vertices whose color differs from when they were first touched since
    /// the last call, sorted by vertex.
    pub fn take_changes(&mut self) -> Vec<(VertexId, Color)> {
        let mut out = Vec::new();
        for &v in &self.touched {
            self.marked[v as usize] = false;
            if self.color[v as usize] != self.before[v as usize] {
                out.push((v, self.color[v as usize]));
            }
        }
        self.touched.clear();
        out.sort_unstable();
        out
    }

    /// No vertex of L(c) is adjacent to v.
    pub fn sparse_free(&self, g: &DynamicGraph, v: VertexId, c: Color, meter: &mut Meter) -> bool {
        let list = &self.sparse_lists[c as usize];
        meter.probes += list.len() as u64;
        list.iter().all(|w| w == v || !g.has_edge(v, w))
    }

    /// No vertex of L(c) ∪ L_D(c) outside `exclude` is adjacent to v.
    pub fn free_for(&self, g: &DynamicGraph, v: VertexId, c: Color, exclude: &[VertexId], meter: &mut Meter) -> bool {
        let s = &self.sparse_lists[c as usize];
        let d = &self.dense_lists[c as usize];
        meter.probes += (s.len() + d.len()) as u64;
        s.iter().chain(d.iter()).all(|w| w == v || exclude.contains(&w) || !g.has_edge(v, w))
    }

    /// Largest |L(c)|.
    pub fn max_sparse_load(&self) -> usize {
        self.sparse_lists.iter().map(IndexedSet::len).max().unwrap_or(0)
    }

    /// |L(c)| for c = 1..=Δ+1.
    pub fn sparse_loads(&self) -> Vec<u32> {
        self.sparse_lists[1..].iter().map(|l| l.len() as u32).collect()
    }

    /// Cross-checks lists against the color array.
    pub fn check_lists(&self) -> Result<(), String> {
        for (v, &c) in self.color.iter().enumerate() {
            let v = v as VertexId;
            if c == BLANK {
                continue;
            }
            if c > self.palette {
                return Err(format!("vertex {v} has color {c} outside the palette"));
            }
            let list = if self.dense[v as usize] { &self.dense_lists[c as usize] } else { &self.sparse_lists[c as usize] };
            if !list.contains(v) {
                return Err(format!("vertex {v} missing from its color list {c}"));
            }
        }
        for c in 1..=self.palette {
            for (kind, list) in [("L", &self.sparse_lists[c as usize]), ("L_D", &self.dense_lists[c as usize])] {
                for w in list.iter() {
                    if self.color[w as usize] != c || self.dense[w as usize] != (kind == "L_D") {
                        return Err(format!("{kind}({c}) holds stale vertex {w}"));
                    }
                }
            }
        }
        Ok(())
    }

    #[cfg(feature = "fault-injection")]
    pub fn force_color(&mut self, v: VertexId, c: Color) {
        self.color[v as usize] = c;
    }
}

/// Smallest color in `1..=Δ+1` not used by any neighbor passing `filter`.
pub fn trivial_color(
    g: &DynamicGraph,
    colors: &[Color],
    v: VertexId,
    filter: impl Fn(VertexId) -> bool,
    meter: &mut Meter,
) -> Color {
    let palette = g.delta() + 1;
    let mut used = vec![false; palette + 1];
    for &u in g.neighbors(v) {
        if filter(u) {
            used[colors[u as usize] as usize] = true;
        }
    }
    meter.probes += (g.degree(v) + palette) as u64;
    (1..=palette).find(|&c| !used[c]).expect("Δ+1 colors exceed any degree") as Color
}
