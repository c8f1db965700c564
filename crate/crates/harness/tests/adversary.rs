use dyncolor::engine::{Engine, EngineConfig};
use dyncolor::{DynamicGraph, Profile, BLANK};
use harness::adversary::{Adversary, StrategyKind, StrategyParams};
use harness::runner::drive;
use proptest::prelude::*;

fn strategy() -> impl Strategy<Value = StrategyKind> {
    prop::sample::select(StrategyKind::GENERATED.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Every emitted update passes the graph validator, whatever the coloring.
    #[test]
    fn emitted_updates_are_legal(kind in strategy(), n in 2usize..40, dfrac in 0.1f64..1.0, seed in any::<u64>(), colors in 1u32..6) {
        let delta = ((n as f64 * dfrac) as usize).max(1);
        let mut g = DynamicGraph::new(n, delta);
        let mut adv = Adversary::new(kind, n, delta, seed, StrategyParams::default());
        let coloring: Vec<u32> = (0..n as u32).map(|v| v % colors + 1).collect();
        for _ in 0..200 {
            let Ok(e) = adv.next(&g, &coloring) else { break };
            prop_assert!(g.validate(&e).is_ok(), "{kind}: {e:?}");
            g.apply(&e).unwrap();
        }
    }

    /// Driving a real engine: legality plus properness after every update.
    #[test]
    fn engine_stays_proper_under_every_strategy(kind in strategy(), seed in 0u64..1000) {
        let (n, delta) = (48, 12);
        let mut engine = Engine::new(n, delta, EngineConfig::forced_engine(n, delta, Profile::Desk, seed)).unwrap();
        let mut adv = Adversary::new(kind, n, delta, seed, StrategyParams::default());
        let out = drive(&mut engine, &mut adv, 300, |_, _, _| true);
        prop_assert_eq!(out.improper_steps, 0, "{:?}", out.transcript);
    }
}

#[test]
fn oblivious_random_hundred_steps_are_legal() {
    let (n, delta) = (30, 6);
    let mut g = DynamicGraph::new(n, delta);
    let mut adv = Adversary::new(StrategyKind::ObliviousRandom, n, delta, 9, StrategyParams::default());
    let colors = vec![1; n];
    for _ in 0..100 {
        let e = adv.next(&g, &colors).unwrap();
        assert!(g.validate(&e).is_ok());
        g.apply(&e).unwrap();
    }
}

#[test]
fn two_vertices_insert_only_when_colors_match() {
    let g = DynamicGraph::new(2, 1);
    let mut adv = Adversary::new(StrategyKind::AdaptiveMonochrome, 2, 1, 0, StrategyParams::default());
    assert!(adv.next(&g, &[1, 2]).is_err());
    let mut adv = Adversary::new(StrategyKind::AdaptiveMonochrome, 2, 1, 0, StrategyParams::default());
    let e = adv.next(&g, &[2, 2]).unwrap();
    assert!(e.is_insert());
    assert_eq!((e.u.min(e.v), e.u.max(e.v)), (0, 1));
}

#[test]
fn monochrome_hit_rate_against_the_baseline() {
    let (n, delta) = (4096, 2048);
    let mut engine = Engine::new(n, delta, EngineConfig::baseline(n, delta, 1)).unwrap();
    assert!(engine.colors().iter().all(|&c| c != BLANK));
    let mut adv = Adversary::new(StrategyKind::AdaptiveMonochrome, n, delta, 2, StrategyParams::default());
    let out = drive(&mut engine, &mut adv, 5000, |_, _, _| true);
    assert_eq!(out.improper_steps, 0);
    assert!(out.insertions > 0);
    assert!(out.monochrome_rate() >= 0.9, "hit rate {}", out.monochrome_rate());
}
