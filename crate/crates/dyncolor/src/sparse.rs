//! Coloring of sparse vertices.
//!
//! Sparse vertices only ever look at sparse neighbors: dense vertices yield
//! to them, never the other way round.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coloring::{trivial_color, ColorState};
use crate::graph::{Color, DynamicGraph, VertexId};
use crate::meter::Meter;

/// Outcome counters for one `color_sparse` pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseReport {
    pub one_shot_attempts: usize,
    pub one_shot_colored: usize,
    pub greedy_colored: usize,
    pub fallbacks: usize,
}

fn draw<R: Rng + ?Sized>(colors: &ColorState, rng: &mut R, meter: &mut Meter) -> Color {
    meter.samples += 1;
    rng.gen_range(1..=colors.palette())
}

/// Each vertex of `u_set` samples a color once; processed in ascending id,
/// a vertex keeps its sample iff no sparse neighbor already holds it.
pub fn one_shot_coloring<R: Rng + ?Sized>(
    g: &DynamicGraph,
    colors: &mut ColorState,
    u_set: &[VertexId],
    rng: &mut R,
    meter: &mut Meter,
) -> Vec<VertexId> {
    let mut order = u_set.to_vec();
    order.sort_unstable();
    let samples: Vec<Color> = order.iter().map(|_| draw(colors, rng, meter)).collect();
    let mut colored = Vec::new();
    for (&v, &c) in order.iter().zip(&samples) {
        meter.touched += 1;
        if colors.sparse_free(g, v, c, meter) {
            colors.set(v, c, false);
            colored.push(v);
        }
    }
    colored
}

/// Rejection-samples a color free among sparse neighbors; after `cap`
/// draws falls back to a full scan. Returns the color and whether the
/// fallback fired.
fn sample_sparse<R: Rng + ?Sized>(
    g: &DynamicGraph,
    colors: &mut ColorState,
    v: VertexId,
    is_sparse: &dyn Fn(VertexId) -> bool,
    cap: usize,
    rng: &mut R,
    meter: &mut Meter,
) -> (Color, bool) {
    for _ in 0..cap {
        let c = draw(colors, rng, meter);
        if colors.sparse_free(g, v, c, meter) {
            colors.set(v, c, false);
            return (c, false);
        }
    }
    let c = trivial_color(g, colors.colors(), v, is_sparse, meter);
    colors.set(v, c, false);
    (c, true)
}

/// Colors `s` in uniformly random order. Returns the number of fallbacks.
pub fn greedy_coloring<R: Rng + ?Sized>(
    g: &DynamicGraph,
    colors: &mut ColorState,
    s: &[VertexId],
    is_sparse: &dyn Fn(VertexId) -> bool,
    cap: usize,
    rng: &mut R,
    meter: &mut Meter,
) -> usize {
    let mut order = s.to_vec();
    order.shuffle(rng);
    meter.samples += order.len() as u64;
    let mut fallbacks = 0;
    for v in order {
        meter.touched += 1;
        fallbacks += sample_sparse(g, colors, v, is_sparse, cap, rng, meter).1 as usize;
    }
    fallbacks
}

/// Phase-start coloring of all sparse vertices: half go through One-Shot,
/// the rest (plus One-Shot failures) through Greedy.
pub fn color_sparse<R: Rng + ?Sized>(
    g: &DynamicGraph,
    colors: &mut ColorState,
    sparse: &[VertexId],
    is_sparse: &dyn Fn(VertexId) -> bool,
    cap: usize,
    rng: &mut R,
    meter: &mut Meter,
) -> SparseReport {
    let mut u_set = Vec::new();
    let mut rest = Vec::new();
    for &v in sparse {
        meter.samples += 1;
        if rng.gen_bool(0.5) {
            u_set.push(v);
        } else {
            rest.push(v);
        }
    }
    let colored = one_shot_coloring(g, colors, &u_set, rng, meter);
    let mut report = SparseReport {
        one_shot_attempts: u_set.len(),
        one_shot_colored: colored.len(),
        ..Default::default()
    };
    rest.extend(u_set.iter().copied().filter(|&v| colors.color(v) == crate::graph::BLANK));
    report.greedy_colored = rest.len();
    report.fallbacks = greedy_coloring(g, colors, &rest, is_sparse, cap, rng, meter);
    report
}

/// In-phase recoloring of a sparse vertex. Returns (old, new, fallback).
pub fn recolor_sparse<R: Rng + ?Sized>(
    g: &DynamicGraph,
    colors: &mut ColorState,
    v: VertexId,
    is_sparse: &dyn Fn(VertexId) -> bool,
    cap: usize,
    rng: &mut R,
    meter: &mut Meter,
) -> (Color, Color, bool) {
    let old = colors.clear(v);
    meter.touched += 1;
    let (c, fb) = sample_sparse(g, colors, v, is_sparse, cap, rng, meter);
    (old, c, fb)
}

/// Number of colors in `1..=Δ+1` not used by any sparse neighbor of v.
pub fn available_count(g: &DynamicGraph, colors: &ColorState, v: VertexId, is_sparse: &dyn Fn(VertexId) -> bool) -> usize {
    let palette = colors.palette() as usize;
    let mut used = vec![false; palette + 1];
    for &u in g.neighbors(v) {
        if is_sparse(u) {
            used[colors.color(u) as usize] = true;
        }
    }
    (1..=palette).filter(|&c| !used[c]).count()
}

/// `color,load` CSV of |L(c)|.
pub fn load_histogram_csv(colors: &ColorState) -> String {
    let mut out = String::from("color,load\n");
    for (i, l) in colors.sparse_loads().iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, l));
    }
    out
}
