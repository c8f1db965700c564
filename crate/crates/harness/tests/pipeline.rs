use dyncolor::engine::{Engine, EngineConfig};
use dyncolor::trace::TraceFile;
use dyncolor::Profile;
use harness::adversary::{Adversary, StrategyKind, StrategyParams};
use harness::bench::{run_grid, write_csv};
use harness::config::{BenchConfig, ModeChoice, RunConfig};
use harness::runner::{record, replay, run};

fn small_grid() -> BenchConfig {
    BenchConfig { ns: vec![64], seeds: vec![1], steps: 300, modes: vec![ModeChoice::Engine], ..BenchConfig::default() }
}

#[test]
fn one_cell_grid_gives_header_and_one_row() {
    let result = run_grid(&small_grid()).unwrap();
    assert_eq!(result.cells.len(), 1);
    let mut buf = Vec::new();
    write_csv(&result.cells, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("n,delta,strategy,mode,seed,steps,work_per_update"));
    assert!(lines[1].starts_with("64,32,adaptive-monochrome,engine,1,300,"));
}

#[test]
fn engine_and_baseline_both_proper_on_oblivious_random() {
    let cfg = BenchConfig {
        ns: vec![128, 256],
        strategies: vec![StrategyKind::ObliviousRandom],
        modes: vec![ModeChoice::Engine, ModeChoice::Baseline],
        steps: 1000,
        ..BenchConfig::default()
    };
    let result = run_grid(&cfg).unwrap();
    assert_eq!(result.cells.len(), 4);
    assert!(result.cells.iter().all(|c| c.improper_steps == 0 && c.steps == 1000));
    assert_eq!(result.ratios.len(), 2);
    assert!(result.ratios.iter().all(|r| r.ratio > 0.0 && r.ratio.is_finite()));
    assert_eq!(result.slopes.len(), 2);
}

#[test]
fn grid_is_deterministic_apart_from_wall_time() {
    let strip = |mut r: harness::bench::BenchResult| {
        r.cells.iter_mut().for_each(|c| c.wall_ms = 0.0);
        r
    };
    let a = strip(run_grid(&small_grid()).unwrap());
    let b = strip(run_grid(&small_grid()).unwrap());
    assert_eq!(a, b);
}

#[test]
fn record_then_replay_reproduces_every_color() {
    let (n, delta) = (96, 48);
    let mut engine = Engine::new(n, delta, EngineConfig::forced_engine(n, delta, Profile::Desk, 4)).unwrap();
    let mut adv = Adversary::new(StrategyKind::CliqueChurn, n, delta, 4, StrategyParams::default());
    let (trace, out) = record(&mut engine, &mut adv, 600);
    assert_eq!(out.improper_steps, 0);
    let parsed = TraceFile::parse(&trace.to_text()).unwrap();
    assert_eq!(parsed, trace);
    let (replayed, r) = replay(&parsed).unwrap();
    assert_eq!(r.mismatches, 0);
    assert_eq!(r.improper_steps, 0);
    assert_eq!(replayed.colors(), engine.colors());
}

#[test]
fn tampered_trace_is_caught() {
    let (n, delta) = (64, 32);
    let mut engine = Engine::new(n, delta, EngineConfig::forced_engine(n, delta, Profile::Desk, 8)).unwrap();
    let mut adv = Adversary::new(StrategyKind::AdaptiveMonochrome, n, delta, 8, StrategyParams::default());
    let (mut trace, _) = record(&mut engine, &mut adv, 200);
    let rec = trace.records.iter_mut().find(|r| r.outputs.as_ref().is_some_and(|o| !o.is_empty())).unwrap();
    rec.outputs.as_mut().unwrap()[0].1 += 1;
    let (_, r) = replay(&trace).unwrap();
    assert_eq!(r.mismatches, 1);
}

#[test]
fn run_reports_are_deterministic() {
    let cfg = RunConfig { n: 128, steps: 400, verify_every: 100, mode: ModeChoice::Engine, ..RunConfig::default() };
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.verifications, 5);
    assert_eq!(a.outcome.improper_steps, 0);
    assert_eq!(a.environment.seed, cfg.seed);
}
