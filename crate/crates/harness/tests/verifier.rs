//! Fault injection: every verifier check has a corruption that trips it.

use dyncolor::decomposition::ChangeSet;
use dyncolor::engine::{Engine, EngineConfig};
use dyncolor::meter::Meter;
use dyncolor::{EdgeUpdate, Profile, VertexId, BLANK};
use harness::verify::{verify, verify_selected, Check, Report};

/// K_m on 0..m minus `missing`, plus `extra` edges, with `pad` isolated
/// vertices after the clique. The phase ends right after the last insert, so
/// the decomposition holds exactly one clique and stays frozen for as many
/// updates again.
fn clique_engine(delta: usize, m: u32, missing: &[(u32, u32)], extra: &[(u32, u32)], pad: usize) -> Engine {
    let n = m as usize + pad;
    let mut cfg = EngineConfig::forced_engine(n, delta, Profile::Desk, 5);
    cfg.params.epsilon = 0.2;
    cfg.params.tau = 0.2 / 3.0;
    cfg.params.friend_window = 1;
    cfg.params.sample_count_k = 96;
    let mut edges: Vec<EdgeUpdate> = (0..m)
        .flat_map(|u| (u + 1..m).map(move |v| (u, v)))
        .filter(|e| !missing.contains(e))
        .map(|(u, v)| EdgeUpdate::insert(u, v))
        .collect();
    edges.extend(extra.iter().map(|&(u, v)| EdgeUpdate::insert(u, v)));
    cfg.params.phase_len_t = edges.len();
    let mut e = Engine::new(n, delta, cfg).unwrap();
    for up in edges {
        e.process(up).unwrap();
    }
    assert_eq!(e.decomposition().clique_count(), 1, "setup should yield one clique");
    assert_eq!(e.updates_in_phase(), 0);
    e
}

fn only_clique(e: &Engine) -> u32 {
    e.decomposition().cliques().next().unwrap().id
}

/// A sparse random graph that holds no clique.
fn sparse_engine() -> Engine {
    let (n, delta) = (64, 8);
    let mut e = Engine::new(n, delta, EngineConfig::forced_engine(n, delta, Profile::Desk, 3)).unwrap();
    for i in 0..n as u32 {
        for j in [1, 5, 17] {
            let (u, v) = (i, (i + j) % n as u32);
            if e.graph().degree(u) < 6 && e.graph().degree(v) < 6 && !e.graph().has_edge(u, v) {
                e.process(EdgeUpdate::insert(u, v)).unwrap();
            }
        }
    }
    assert_eq!(e.decomposition().clique_count(), 0);
    e
}

fn fails(r: &Report, c: Check) -> bool {
    !r.passed(c)
}

#[test]
fn fresh_empty_engine_passes_everything() {
    let e = Engine::new(32, 16, EngineConfig::forced_engine(32, 16, Profile::Desk, 1)).unwrap();
    let r = verify(&e);
    assert!(r.all_passed(), "{}", r.summary());
    assert_eq!(r.checks.len(), Check::ALL.len());
}

#[test]
fn setups_start_clean() {
    let r = verify(&sparse_engine());
    assert!(r.all_passed(), "{}", r.summary());
    let r = verify(&clique_engine(40, 40, &[(0, 1)], &[], 8));
    assert!(r.all_passed(), "{}", r.summary());
}

#[test]
fn verifier_is_pure() {
    let e = clique_engine(40, 40, &[(0, 1), (2, 3)], &[], 8);
    let before = e.snapshot();
    let a = verify(&e);
    let b = verify(&e);
    assert_eq!(a, b);
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(e.snapshot(), before);
}

#[test]
fn wrong_color_trips_exactly_properness() {
    let mut e = sparse_engine();
    let (u, v) = e.graph().edges().next().unwrap();
    let c = e.color_of(u);
    e.inject_color(v, c);
    let r = verify(&e);
    assert_eq!(r.failed(), vec![Check::Properness], "{}", r.summary());
    let (a, b) = (u.min(v), u.max(v));
    assert!(r.get(Check::Properness).transcript.iter().any(|l| l.contains(&format!("({a}, {b})"))));
}

#[test]
fn out_of_range_color_trips_palette() {
    let mut e = sparse_engine();
    let bad = e.delta() as u32 + 2;
    e.color_state_mut().force_color(0, bad);
    assert!(fails(&verify(&e), Check::Palette));
}

#[test]
fn stale_color_lists_trip_color_lists() {
    let mut e = sparse_engine();
    let v = (0..64).find(|&v| e.graph().degree(v) == 0).unwrap_or(0);
    let c = (1..=e.delta() as u32 + 1)
        .find(|&c| c != e.color_of(v) && e.graph().neighbors(v).iter().all(|&w| e.color_of(w) != c))
        .unwrap();
    e.color_state_mut().force_color(v, c);
    let r = verify(&e);
    assert!(fails(&r, Check::ColorLists));
    assert!(!fails(&r, Check::Properness));
}

#[test]
fn spurious_non_edge_trips_structure() {
    let mut e = clique_engine(40, 40, &[], &[], 8);
    e.decomposition_mut().corrupt_non_edge(3, 4);
    assert!(fails(&verify(&e), Check::Structure));
}

#[test]
fn stray_friend_list_entry_trips_structure_at_phase_start() {
    let mut e = clique_engine(40, 40, &[], &[], 8);
    e.decomposition_mut().friends.corrupt_list(1, 40, 41);
    assert!(fails(&verify(&e), Check::Structure));
}

#[test]
fn isolating_a_member_inside_a_phase_trips_density_friendship_connectedness() {
    let mut e = clique_engine(40, 40, &[], &[], 8);
    for w in 1..40 {
        e.process(EdgeUpdate::delete(0, w)).unwrap();
    }
    assert!(e.updates_in_phase() > 0, "decomposition must still be frozen");
    let r = verify(&e);
    assert!(fails(&r, Check::Density));
    assert!(fails(&r, Check::Friendship));
    assert!(fails(&r, Check::Connectedness));
    assert!(!fails(&r, Check::Properness));
}

#[test]
fn shrinking_the_clique_trips_size_and_clique_size() {
    let mut e = clique_engine(40, 40, &[], &[], 8);
    let g = e.graph().clone();
    let members: Vec<VertexId> = e.decomposition().cliques().next().unwrap().members().sorted();
    for &v in &members[5..] {
        e.decomposition_mut().sparse_move(&g, v, &mut ChangeSet::default(), &mut Meter::default());
    }
    let r = verify(&e);
    assert!(fails(&r, Check::Size));
    assert!(fails(&r, Check::CliqueSize));
}

#[test]
fn too_many_non_edges_trip_non_edge_bound() {
    let mut e = clique_engine(40, 40, &[], &[], 100);
    for x in 40..140 {
        e.decomposition_mut().corrupt_non_edge(0, x);
    }
    assert!(fails(&verify(&e), Check::NonEdgeBound));
}

#[test]
fn three_holders_trip_color_use() {
    let mut e = clique_engine(40, 40, &[], &[], 8);
    let c = e.color_of(0);
    e.inject_color(1, c);
    e.inject_color(2, c);
    assert!(fails(&verify(&e), Check::ColorUse));
}

#[test]
fn flipped_free_color_trips_palette_identity_and_books() {
    let mut e = clique_engine(40, 40, &[], &[], 8);
    let id = only_clique(&e);
    e.dense_mut().book_mut(id).unwrap().corrupt_free_colors(1);
    let r = verify(&e);
    assert!(fails(&r, Check::PaletteIdentity));
    assert!(fails(&r, Check::Books));
}

#[test]
fn linking_an_edge_trips_matching() {
    let mut e = clique_engine(40, 40, &[], &[], 8);
    let id = only_clique(&e);
    e.dense_mut().matching.force_link(id, 5, 6);
    assert!(fails(&verify(&e), Check::Matching));
}

#[test]
fn emptied_matching_trips_matching_floor() {
    let mut e = clique_engine(40, 40, &[(0, 1)], &[], 8);
    let id = only_clique(&e);
    assert_eq!(e.dense().matching.size(id), 1);
    e.dense_mut().matching.unlink(0);
    assert!(fails(&verify(&e), Check::MatchingFloor));
}

#[test]
fn skewed_counter_trips_edge_counts() {
    let mut e = clique_engine(40, 40, &[], &[], 8);
    let id = only_clique(&e);
    e.dense_mut().book_mut(id).unwrap().corrupt_t(2, 1);
    assert!(fails(&verify(&e), Check::EdgeCounts));
}

#[test]
fn unmatched_excess_trips_edges_outside() {
    // Δ = 44 leaves k = 5 spare colors for a 40-clique; member 2 then trades
    // ten clique edges for ten outside ones inside the frozen phase.
    let mut e = clique_engine(44, 40, &[], &[], 16);
    for w in 3..13 {
        e.process(EdgeUpdate::delete(2, w)).unwrap();
    }
    for x in 40..50 {
        e.process(EdgeUpdate::insert(2, x)).unwrap();
    }
    assert!(e.updates_in_phase() > 0);
    assert!(!fails(&verify(&e), Check::EdgesOutside));
    let id = only_clique(&e);
    for (u, _) in e.dense().matching.pairs(e.decomposition(), id) {
        e.dense_mut().matching.unlink(u);
    }
    assert!(fails(&verify(&e), Check::EdgesOutside));
}

#[test]
fn blanked_members_trip_good_colors() {
    let mut e = clique_engine(40, 40, &[], &[], 8);
    for v in 0..3 {
        e.color_state_mut().force_color(v, BLANK);
    }
    assert!(fails(&verify(&e), Check::GoodColors));
}

#[test]
fn every_check_has_a_fault() {
    // Keeps this file in step with the check list.
    assert_eq!(Check::ALL.len(), 18);
}

#[test]
fn selected_checks_match_the_full_run() {
    let mut e = clique_engine(40, 40, &[(0, 1)], &[], 8);
    e.inject_color(3, e.color_of(4));
    let full = verify(&e);
    let some = verify_selected(&e, &[Check::Properness, Check::PaletteIdentity, Check::MatchingFloor]);
    assert_eq!(some.checks.len(), 3);
    for (c, r) in &some.checks {
        assert_eq!(r, full.get(*c), "{c}");
    }
}
