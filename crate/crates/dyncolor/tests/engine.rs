use dyncolor::dense::Slot;
use dyncolor::engine::{Engine, EngineConfig};
use dyncolor::{EdgeUpdate, EngineMode, Profile, VertexId, BLANK};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check(e: &Engine) -> Result<(), String> {
    let g = e.graph();
    let palette = e.delta() as u32 + 1;
    for v in 0..e.n() as VertexId {
        let c = e.color_of(v);
        if c == BLANK || c > palette {
            return Err(format!("vertex {v} has color {c}"));
        }
    }
    for (u, v) in g.edges() {
        if e.color_of(u) == e.color_of(v) {
            return Err(format!("edge ({u}, {v}) is monochromatic with color {}", e.color_of(u)));
        }
    }
    if e.mode() == EngineMode::Baseline {
        return Ok(());
    }
    e.color_state().check_lists()?;
    let d = e.decomposition();
    e.dense().matching.check(d)?;
    for cl in d.cliques() {
        let book = e.dense().book(cl.id).ok_or(format!("clique {} has no book", cl.id))?;
        let k = palette as i64 - cl.len() as i64;
        let m = e.dense().matching.size(cl.id) as i64;
        let u = book.free_members().iter().filter(|&x| e.color_of(x) == BLANK).count() as i64;
        if book.free_colors().len() as i64 != k + m + u {
            return Err(format!("clique {}: |A| = {} but k + |M_N| + |U| = {}", cl.id, book.free_colors().len(), k + m + u));
        }
        for c in 1..=palette {
            let holders: Vec<VertexId> = cl.members().iter().filter(|&x| e.color_of(x) == c).collect();
            let ok = match book.slot(c) {
                Slot::Free => holders.is_empty(),
                Slot::Single(x) => holders == [x],
                Slot::Pair(a, b) => holders.len() == 2 && holders.contains(&a) && holders.contains(&b),
            };
            if !ok {
                return Err(format!("clique {}: color {c} slot {:?} but holders {holders:?}", cl.id, book.slot(c)));
            }
        }
    }
    Ok(())
}

fn random_update(e: &Engine, rng: &mut ChaCha8Rng) -> Option<EdgeUpdate> {
    let g = e.graph();
    let n = e.n() as u32;
    for _ in 0..200 {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u == v {
            continue;
        }
        if g.has_edge(u, v) {
            if rng.gen_bool(0.4) {
                return Some(EdgeUpdate::delete(u, v));
            }
        } else if g.degree(u) < e.delta() && g.degree(v) < e.delta() {
            return Some(EdgeUpdate::insert(u, v));
        }
    }
    None
}

#[test]
fn random_trace_stays_proper() {
    for seed in 0..3 {
        let (n, delta) = (120, 40);
        let mut e = Engine::new(n, delta, EngineConfig::forced_engine(n, delta, Profile::Desk, seed)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        for step in 0..1500 {
            let Some(u) = random_update(&e, &mut rng) else { break };
            e.process(u).unwrap();
            check(&e).unwrap_or_else(|m| panic!("seed {seed} step {step}: {m}"));
        }
    }
}

/// Inserts the edges of disjoint planted cliques in random order, then churns.
#[test]
fn planted_cliques_form_and_stay_consistent() {
    let (n, delta, size) = (200, 40, 38);
    for seed in 0..3 {
        let mut cfg = EngineConfig::forced_engine(n, delta, Profile::Desk, seed);
        cfg.params.epsilon = 0.1;
        cfg.params.tau = 0.1 / 3.0;
        cfg.params.friend_window = 1;
        cfg.params.sample_count_k = 64;
        cfg.params.phase_len_t = 4;
        let mut e = Engine::new(n, delta, cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for b in 0..3u32 {
            let base = b * 50;
            for u in base..base + size {
                for v in u + 1..base + size {
                    if rng.gen_bool(0.97) {
                        edges.push(EdgeUpdate::insert(u, v));
                    }
                }
            }
        }
        edges.shuffle(&mut rng);
        for (i, up) in edges.into_iter().enumerate() {
            e.process(up).unwrap();
            check(&e).unwrap_or_else(|m| panic!("seed {seed} build step {i}: {m}"));
        }
        assert!(e.decomposition().clique_count() >= 2, "cliques: {}", e.decomposition().clique_count());
        for step in 0..800 {
            let Some(u) = random_update(&e, &mut rng) else { break };
            e.process(u).unwrap();
            check(&e).unwrap_or_else(|m| panic!("seed {seed} churn step {step}: {m}"));
        }
        let m = e.metrics();
        assert_eq!(m.dense.breaches, 0);
    }
}

#[test]
fn phase_counter_triggers_one_initialization_per_t_updates() {
    let (n, delta) = (50, 10);
    let mut cfg = EngineConfig::forced_engine(n, delta, Profile::Desk, 1);
    cfg.params.phase_len_t = 5;
    let mut e = Engine::new(n, delta, cfg).unwrap();
    assert_eq!(e.phase_index(), 1);
    for i in 0..10u32 {
        e.process(EdgeUpdate::insert(i, i + 20)).unwrap();
    }
    assert_eq!(e.phase_index(), 3);
    assert_eq!(e.updates_in_phase(), 0);
}

#[test]
fn first_insert_on_empty_graph_needs_no_recoloring_when_colors_differ() {
    let (n, delta) = (30, 8);
    let mut cfg = EngineConfig::forced_engine(n, delta, Profile::Desk, 4);
    cfg.params.phase_len_t = 100;
    let mut e = Engine::new(n, delta, cfg).unwrap();
    let (u, v) = (0..n as u32)
        .flat_map(|u| (u + 1..n as u32).map(move |v| (u, v)))
        .find(|&(u, v)| e.color_of(u) != e.color_of(v))
        .unwrap();
    assert!(e.process(EdgeUpdate::insert(u, v)).unwrap().is_empty());
}

#[test]
fn baseline_recolors_monochromatic_insertions() {
    let mut e = Engine::new(4, 3, EngineConfig::baseline(4, 3, 0)).unwrap();
    assert!(e.colors().iter().all(|&c| c == 1));
    assert_eq!(e.process(EdgeUpdate::insert(0, 1)).unwrap(), vec![(1, 2)]);
    assert_eq!(e.process(EdgeUpdate::insert(1, 2)).unwrap(), vec![]);
    assert_eq!(e.process(EdgeUpdate::insert(0, 2)).unwrap(), vec![(2, 3)]);
    check(&e).unwrap();
}

#[test]
fn same_seed_same_colors() {
    let run = || {
        let (n, delta) = (80, 30);
        let mut e = Engine::new(n, delta, EngineConfig::forced_engine(n, delta, Profile::Desk, 7)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut out = Vec::new();
        for _ in 0..500 {
            let Some(u) = random_update(&e, &mut rng) else { break };
            out.push(e.process(u).unwrap());
        }
        out
    };
    assert_eq!(run(), run());
}

#[test]
fn ten_thousand_random_updates_at_n_500_stay_proper() {
    let (n, delta) = (500, 250);
    let mut e = Engine::new(n, delta, EngineConfig::forced_engine(n, delta, Profile::Desk, 11)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut done = 0;
    for step in 0..10_000 {
        let Some(u) = random_update(&e, &mut rng) else { break };
        e.process(u).unwrap();
        check(&e).unwrap_or_else(|m| panic!("step {step}: {m}"));
        done += 1;
    }
    assert_eq!(done, 10_000);
}

#[test]
fn trivial_recolor_examples() {
    let mut e = Engine::new(6, 4, EngineConfig::baseline(6, 4, 0)).unwrap();
    assert_eq!(e.trivial_recolor(5), 1, "isolated vertex");
    // K_5 with Δ = 4: every vertex sees the other Δ colors, so its own is forced.
    for u in 0..5u32 {
        for v in u + 1..5 {
            e.process(EdgeUpdate::insert(u, v)).unwrap();
        }
    }
    check(&e).unwrap();
    let mut seen: Vec<u32> = (0..5).map(|v| e.color_of(v)).collect();
    seen.sort_unstable();
    assert_eq!(seen, vec![1, 2, 3, 4, 5]);
    for v in 0..5 {
        let c = e.color_of(v);
        assert_eq!(e.trivial_recolor(v), c);
    }
    let top = (0..5).find(|&v| e.color_of(v) == 5).unwrap();
    assert_eq!(e.trivial_recolor(top), 5, "neighbors hold 1..=Δ");
}

#[test]
fn zero_update_phase_still_recolors_from_scratch() {
    let (n, delta) = (40, 10);
    let mut cfg = EngineConfig::forced_engine(n, delta, Profile::Desk, 2);
    cfg.params.phase_len_t = 3;
    let mut e = Engine::new(n, delta, cfg).unwrap();
    let phases = e.metrics().phases;
    for i in 0..3u32 {
        e.process(EdgeUpdate::insert(i, i + 10)).unwrap();
    }
    let m = e.metrics();
    assert_eq!(m.phases, phases + 1);
    assert!(m.phase_log.last().unwrap().init_work > 0);
    check(&e).unwrap();
}
