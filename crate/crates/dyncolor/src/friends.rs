//! Sampling-based maintenance of friend edges and dense vertices at three
//! scales c_i = iε + τ, i ∈ {1, 2, 3}.
//!
//! A pair (u, v) is kept in the scale-i lists when the sampled estimate of
//! |N(u) ∩ N(v)| clears (1 − iε + τ/4)Δ. One estimate is evaluated against
//! all three thresholds, so the lists nest as N₁(v) ⊆ N₂(v) ⊆ N₃(v).

use rand::Rng;
use thiserror::Error;

use crate::graph::{DynamicGraph, EdgeUpdate, VertexId};
use crate::meter::Meter;
use crate::params::ParamSet;
use crate::set::IndexedSet;

pub const SCALES: [usize; 3] = [1, 2, 3];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FriendError {
    #[error("vertex {0} has no neighbors to sample")]
    IsolatedEndpoint(VertexId),
}

#[derive(Clone, Debug)]
pub struct FriendState {
    delta: usize,
    epsilon: f64,
    tau: f64,
    k: usize,
    window: u32,
    lists: [Vec<IndexedSet>; 3],
    dense: [Vec<bool>; 3],
    direct: Vec<u32>,
    indirect: Vec<u32>,
    stamp: Vec<u32>,
    epoch: u32,
    updates_run: u64,
}

impl FriendState {
    pub fn new(n: usize, delta: usize, params: &ParamSet) -> Self {
        let lists = || vec![IndexedSet::new(); n];
        FriendState {
            delta,
            epsilon: params.epsilon,
            tau: params.tau,
            k: params.sample_count_k,
            window: params.friend_window as u32,
            lists: [lists(), lists(), lists()],
            dense: [vec![false; n], vec![false; n], vec![false; n]],
            direct: vec![0; n],
            indirect: vec![0; n],
            stamp: vec![0; n],
            epoch: 0,
            updates_run: 0,
        }
    }

    #[inline]
    pub fn friends(&self, i: usize, v: VertexId) -> &IndexedSet {
        &self.lists[i - 1][v as usize]
    }

    #[inline]
    pub fn is_dense(&self, i: usize, v: VertexId) -> bool {
        self.dense[i - 1][v as usize]
    }

    pub fn direct(&self, v: VertexId) -> u32 {
        self.direct[v as usize]
    }

    pub fn indirect(&self, v: VertexId) -> u32 {
        self.indirect[v as usize]
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    /// Number of Update(v) calls so far.
    pub fn updates_run(&self) -> u64 {
        self.updates_run
    }

    /// List-membership threshold on the common-neighbor fraction at scale i.
    #[inline]
    pub fn list_threshold(&self, i: usize) -> f64 {
        1.0 - (i as f64 * self.epsilon - self.tau / 4.0)
    }

    /// Samples k neighbors of u with replacement; returns the fraction that
    /// also neighbor v.
    fn estimate<R: Rng + ?Sized>(
        &self,
        g: &DynamicGraph,
        u: VertexId,
        v: VertexId,
        k: usize,
        rng: &mut R,
        meter: &mut Meter,
    ) -> Option<f64> {
        if g.degree(u) == 0 {
            return None;
        }
        let mut hits = 0usize;
        for _ in 0..k {
            let w = g.sample_neighbor(u, rng).expect("nonempty");
            if w != v && g.has_edge(w, v) {
                hits += 1;
            }
        }
        meter.samples += k as u64;
        meter.probes += k as u64;
        Some(hits as f64 / k as f64)
    }

    /// Single-scale estimator test: true iff T = (Δ/k)·Σ Z_j ≥ (1 − (eps − tau/2))Δ.
    /// Does not touch the lists.
    #[allow(clippy::too_many_arguments)]
    pub fn determine_friend<R: Rng + ?Sized>(
        &self,
        g: &DynamicGraph,
        (u, v): (VertexId, VertexId),
        eps: f64,
        tau: f64,
        k: usize,
        rng: &mut R,
        meter: &mut Meter,
    ) -> Result<bool, FriendError> {
        let frac = self.estimate(g, u, v, k, rng, meter).ok_or(FriendError::IsolatedEndpoint(u))?;
        let d = self.delta as f64;
        Ok(frac * d >= (1.0 - (eps - tau / 2.0)) * d)
    }

    /// Re-tests (u, v) at all scales with one estimate sampled from N(u) and
    /// rewrites both endpoints' lists.
    fn classify_pair<R: Rng + ?Sized>(
        &mut self,
        g: &DynamicGraph,
        u: VertexId,
        v: VertexId,
        rng: &mut R,
        meter: &mut Meter,
    ) {
        let frac = self.estimate(g, u, v, self.k, rng, meter).unwrap_or(0.0);
        for i in SCALES {
            let keep = frac >= self.list_threshold(i);
            let lists = &mut self.lists[i - 1];
            if keep {
                lists[u as usize].insert(v);
                lists[v as usize].insert(u);
            } else {
                lists[u as usize].remove(v);
                lists[v as usize].remove(u);
            }
        }
        meter.touched += 2;
    }

    fn drop_pair(&mut self, u: VertexId, v: VertexId) {
        for lists in &mut self.lists {
            lists[u as usize].remove(v);
            lists[v as usize].remove(u);
        }
    }

    /// Update(v): re-tests every incident edge and recomputes the three
    /// density flags. Returns whether any flag changed.
    pub fn update_vertex<R: Rng + ?Sized>(
        &mut self,
        g: &DynamicGraph,
        v: VertexId,
        rng: &mut R,
        meter: &mut Meter,
    ) -> bool {
        self.updates_run += 1;
        for idx in 0..g.degree(v) {
            let u = g.neighbors(v)[idx];
            self.classify_pair(g, u, v, rng, meter);
        }
        let mut changed = false;
        for i in SCALES {
            let need = (1.0 - i as f64 * self.epsilon) * self.delta as f64;
            let dense = self.lists[i - 1][v as usize].len() as f64 >= need;
            changed |= self.dense[i - 1][v as usize] != dense;
            self.dense[i - 1][v as usize] = dense;
        }
        changed
    }

    /// Maintain-Friends for an update already applied to `g`. Returns U, the
    /// vertices on which Update ran, in firing order.
    pub fn maintain_friends<R: Rng + ?Sized>(
        &mut self,
        g: &DynamicGraph,
        e: &EdgeUpdate,
        rng: &mut R,
        meter: &mut Meter,
    ) -> Vec<VertexId> {
        let (u, v) = (e.u, e.v);
        self.direct[u as usize] += 1;
        self.direct[v as usize] += 1;
        if e.is_insert() {
            self.classify_pair(g, u, v, rng, meter);
        } else {
            self.drop_pair(u, v);
        }

        let mut fired = Vec::new();
        for w in [u, v] {
            if self.direct[w as usize] >= self.window {
                self.update_vertex(g, w, rng, meter);
                self.direct[w as usize] = 0;
                fired.push(w);
            }
        }
        if fired.is_empty() {
            return fired;
        }

        // Indirect credit flows only from the direct firings above.
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let direct_fired = fired.clone();
        for y in direct_fired {
            for idx in 0..g.degree(y) {
                let z = g.neighbors(y)[idx];
                meter.probes += 1;
                if self.stamp[z as usize] == self.epoch {
                    continue;
                }
                self.stamp[z as usize] = self.epoch;
                self.indirect[z as usize] += 1;
                if self.indirect[z as usize] >= self.window {
                    self.update_vertex(g, z, rng, meter);
                    self.indirect[z as usize] = 0;
                    if !fired.contains(&z) {
                        fired.push(z);
                    }
                }
            }
        }
        fired
    }

    /// Structural self-check: nesting, adjacency, symmetry, flag/list agreement
    /// is not asserted (flags are refreshed only on Update).
    pub fn check_structure(&self, g: &DynamicGraph) -> Result<(), String> {
        for v in 0..g.n() as VertexId {
            for i in SCALES {
                for u in self.friends(i, v).iter() {
                    if !g.has_edge(u, v) {
                        return Err(format!("N_{i}({v}) holds non-neighbor {u}"));
                    }
                    if !self.friends(i, u).contains(v) {
                        return Err(format!("N_{i} asymmetric on ({u}, {v})"));
                    }
                    if i < 3 && !self.friends(i + 1, v).contains(u) {
                        return Err(format!("N_{i}({v}) not contained in N_{}({v}) at {u}", i + 1));
                    }
                }
            }
            if self.direct[v as usize] >= self.window || self.indirect[v as usize] >= self.window {
                return Err(format!("counter of {v} at or above window {}", self.window));
            }
        }
        Ok(())
    }

    #[cfg(feature = "fault-injection")]
    pub fn corrupt_list(&mut self, i: usize, v: VertexId, u: VertexId) {
        self.lists[i - 1][v as usize].insert(u);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn complete(n: usize) -> DynamicGraph {
        let mut g = DynamicGraph::new(n, n - 1);
        for u in 0..n as u32 {
            for v in u + 1..n as u32 {
                g.apply(&EdgeUpdate::insert(u, v)).unwrap();
            }
        }
        g
    }

    fn desk(n: usize, delta: usize, eps: f64) -> ParamSet {
        ParamSet::desk(n, delta, eps, 0)
    }

    #[test]
    fn complete_graph_pair_is_friend_in_almost_all_trials() {
        // K_{Δ+1}, Δ = 64: exact commons Δ−1 = 63 ≥ (1−ε+τ)Δ ≈ 53.3.
        let delta = 64;
        let g = complete(delta + 1);
        let (eps, tau) = (0.25, 1.0 / 12.0);
        assert_eq!(g.common_neighbors_exact(0, 1), 63);
        assert!(63.0 >= (1.0 - eps + tau) * delta as f64);
        let n = delta + 1;
        let k = crate::params::confident_sample_count(n, tau, 3.0);
        let fs = FriendState::new(n, delta, &desk(n, delta, eps));
        let mut meter = Meter::default();
        let mut ok = 0;
        for seed in 0..1000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            if fs.determine_friend(&g, (0, 1), eps, tau, k, &mut rng, &mut meter).unwrap() {
                ok += 1;
            }
        }
        let floor = 1.0 - (n as f64).powf(-3.0);
        assert!(ok as f64 / 1000.0 >= floor, "pass-rate {ok}/1000");
    }

    #[test]
    fn zero_commons_not_friend_and_isolated_errors() {
        let mut g = DynamicGraph::new(4, 3);
        g.apply(&EdgeUpdate::insert(0, 1)).unwrap();
        let p = desk(4, 3, 0.2);
        let fs = FriendState::new(4, 3, &p);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = Meter::default();
        assert_eq!(fs.determine_friend(&g, (0, 1), 0.2, 0.05, 32, &mut rng, &mut m), Ok(false));
        assert_eq!(fs.determine_friend(&g, (2, 1), 0.2, 0.05, 32, &mut rng, &mut m), Err(FriendError::IsolatedEndpoint(2)));
    }

    #[test]
    fn gap_region_pair_keeps_lists_consistent() {
        // Δ = 20, ε = 0.25: plant a pair with exactly (1−ε)Δ = 15 commons.
        let delta = 20;
        let n = 40;
        let mut g = DynamicGraph::new(n, delta);
        g.apply(&EdgeUpdate::insert(0, 1)).unwrap();
        for w in 2..17u32 {
            g.apply(&EdgeUpdate::insert(0, w)).unwrap();
            g.apply(&EdgeUpdate::insert(1, w)).unwrap();
        }
        assert_eq!(g.common_neighbors_exact(0, 1), 15);
        let mut fs = FriendState::new(n, delta, &desk(n, delta, 0.25));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut m = Meter::default();
        fs.update_vertex(&g, 0, &mut rng, &mut m);
        fs.update_vertex(&g, 1, &mut rng, &mut m);
        fs.check_structure(&g).unwrap();
    }

    #[test]
    fn clique_vertex_is_dense_star_center_is_not() {
        let delta = 30;
        let g = complete(delta + 1);
        let p = desk(delta + 1, delta, 0.2);
        let mut fs = FriendState::new(delta + 1, delta, &p);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut m = Meter::default();
        fs.update_vertex(&g, 0, &mut rng, &mut m);
        for i in SCALES {
            assert!(fs.is_dense(i, 0));
        }

        let mut star = DynamicGraph::new(delta + 1, delta);
        for leaf in 1..=delta as u32 {
            star.apply(&EdgeUpdate::insert(0, leaf)).unwrap();
        }
        let mut fs = FriendState::new(delta + 1, delta, &p);
        fs.update_vertex(&star, 0, &mut rng, &mut m);
        assert!(SCALES.iter().all(|&i| !fs.is_dense(i, 0)));
        assert!(fs.friends(3, 0).is_empty());
    }

    #[test]
    fn first_insertion_below_window() {
        let p = ParamSet::desk(400, 200, 0.3, 0);
        assert!(p.friend_window > 1);
        let mut g = DynamicGraph::new(400, 200);
        let mut fs = FriendState::new(400, 200, &p);
        let e = EdgeUpdate::insert(3, 9);
        g.apply(&e).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let u = fs.maintain_friends(&g, &e, &mut rng, &mut Meter::default());
        assert!(u.is_empty());
        assert_eq!((fs.direct(3), fs.direct(9)), (1, 1));
    }

    #[test]
    fn unit_window_fires_both_endpoints() {
        let mut p = ParamSet::desk(10, 4, 0.1, 0);
        p.friend_window = 1;
        let mut g = DynamicGraph::new(10, 4);
        let mut fs = FriendState::new(10, 4, &p);
        let e = EdgeUpdate::insert(2, 5);
        g.apply(&e).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let u = fs.maintain_friends(&g, &e, &mut rng, &mut Meter::default());
        assert!(u.contains(&2) && u.contains(&5));
    }

    #[test]
    fn deletion_drops_pair_at_all_scales() {
        let delta = 12;
        let mut g = complete(delta + 1);
        let mut p = desk(delta + 1, delta, 0.2);
        p.friend_window = 1000;
        let mut fs = FriendState::new(delta + 1, delta, &p);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut m = Meter::default();
        fs.update_vertex(&g, 0, &mut rng, &mut m);
        assert!(SCALES.iter().all(|&i| fs.friends(i, 0).contains(1)));
        let e = EdgeUpdate::delete(0, 1);
        g.apply(&e).unwrap();
        fs.maintain_friends(&g, &e, &mut rng, &mut m);
        for i in SCALES {
            assert!(!fs.friends(i, 0).contains(1) && !fs.friends(i, 1).contains(0));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn lists_nest_and_counters_stay_below_window(seed in any::<u64>(), window in 1usize..5) {
            let (n, delta) = (40usize, 12usize);
            let mut p = desk(n, delta, 0.25);
            p.friend_window = window;
            p.sample_count_k = 16;
            let mut g = DynamicGraph::new(n, delta);
            let mut fs = FriendState::new(n, delta, &p);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut m = Meter::default();
            for _ in 0..400 {
                let u = rng.gen_range(0..n as u32);
                let v = rng.gen_range(0..n as u32);
                let e = if g.has_edge(u, v) { EdgeUpdate::delete(u, v) } else { EdgeUpdate::insert(u, v) };
                if g.apply(&e).is_ok() {
                    fs.maintain_friends(&g, &e, &mut rng, &mut m);
                    for w in 0..n as u32 {
                        prop_assert!(fs.direct(w) + fs.indirect(w) <= 2 * fs.window());
                    }
                }
            }
            prop_assert!(fs.check_structure(&g).is_ok(), "{:?}", fs.check_structure(&g));
        }
    }
}
