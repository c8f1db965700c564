//! Benchmark grid: engine and baseline over n × strategy × mode × seed.
//!
//! `cells.csv` has one row per cell (see [`CellRow`] for the columns) and
//! `slopes.csv` one least-squares fit of ln(work per update) against ln n per
//! (strategy, mode).

use std::collections::BTreeMap;
use std::io::Write;

use dyncolor::engine::Engine;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{Adversary, StrategyKind};
use crate::config::{engine_config, BenchConfig, ConfigError, ModeChoice};
use crate::runner::drive;

/// One grid cell. Field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub n: usize,
    pub delta: usize,
    pub strategy: String,
    /// Resolved mode (`engine` or `baseline`).
    pub mode: String,
    pub seed: u64,
    pub steps: u64,
    pub work_per_update: f64,
    pub probes: u64,
    pub samples: u64,
    pub touched: u64,
    pub wall_ms: f64,
    pub fallbacks: u64,
    pub phases: u64,
    pub mean_init_work: f64,
    pub improper_steps: u64,
    pub monochrome_rate: f64,
    pub recolorings: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub strategy: String,
    pub mode: String,
    /// Distinct n values in the fit.
    pub points: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Engine-over-baseline work ratio for one (strategy, n).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub strategy: String,
    pub n: usize,
    pub engine_work: f64,
    pub baseline_work: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub cells: Vec<CellRow>,
    pub slopes: Vec<SlopeRow>,
    pub ratios: Vec<RatioRow>,
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    n: usize,
    strategy: StrategyKind,
    mode: ModeChoice,
    seed: u64,
}

/// Runs a single cell to completion.
pub fn run_cell(
    cfg: &BenchConfig,
    n: usize,
    strategy: StrategyKind,
    mode: ModeChoice,
    seed: u64,
) -> Result<CellRow, ConfigError> {
    let delta = cfg.delta_for(n);
    let ec = engine_config(n, delta, cfg.profile, mode, seed, None, None, &cfg.overrides)?;
    let resolved = ec.mode;
    let mut engine = Engine::new(n, delta, ec).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let mut adversary = Adversary::new(strategy, n, delta, seed ^ 0x5eed, cfg.strategy_params.clone());
    let outcome = drive(&mut engine, &mut adversary, cfg.steps, |_, _, _| true);
    let m = engine.metrics();
    let mean_init_work = if m.phase_log.is_empty() {
        0.0
    } else {
        m.phase_log.iter().map(|p| p.init_work as f64).sum::<f64>() / m.phase_log.len() as f64
    };
    Ok(CellRow {
        n,
        delta,
        strategy: strategy.name().to_string(),
        mode: resolved.to_string(),
        seed,
        steps: outcome.steps,
        work_per_update: m.work_per_update(),
        probes: m.work.probes,
        samples: m.work.samples,
        touched: m.work.touched,
        wall_ms: outcome.wall.as_secs_f64() * 1e3,
        fallbacks: m.fallbacks(),
        phases: m.phases,
        mean_init_work,
        improper_steps: outcome.improper_steps,
        monochrome_rate: outcome.monochrome_rate(),
        recolorings: m.recolorings,
    })
}

/// Runs the whole grid, cells in parallel.
pub fn run_grid(cfg: &BenchConfig) -> Result<BenchResult, ConfigError> {
    let mut cells = Vec::new();
    for &n in &cfg.ns {
        for &strategy in &cfg.strategies {
            for &mode in &cfg.modes {
                for &seed in &cfg.seeds {
                    cells.push(Cell { n, strategy, mode, seed });
                }
            }
        }
    }
    let rows = cells
        .par_iter()
        .map(|c| run_cell(cfg, c.n, c.strategy, c.mode, c.seed))
        .collect::<Result<Vec<_>, _>>()?;
    let slopes = fit_slopes(&rows);
    let ratios = work_ratios(&rows);
    Ok(BenchResult { cells: rows, slopes, ratios })
}

/// Mean work per update for each n, keyed by (strategy, mode).
fn mean_work(rows: &[CellRow]) -> BTreeMap<(String, String), BTreeMap<usize, f64>> {
    let mut acc: BTreeMap<(String, String), BTreeMap<usize, (f64, usize)>> = BTreeMap::new();
    for r in rows {
        let e = acc.entry((r.strategy.clone(), r.mode.clone())).or_default().entry(r.n).or_default();
        e.0 += r.work_per_update;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(k, by_n)| (k, by_n.into_iter().map(|(n, (s, c))| (n, s / c as f64)).collect()))
        .collect()
}

/// Ordinary least squares of y on x; `None` with fewer than two distinct x.
pub fn least_squares(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let m = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((slope, my - slope * mx, r2))
}

pub fn fit_slopes(rows: &[CellRow]) -> Vec<SlopeRow> {
    mean_work(rows)
        .into_iter()
        .filter_map(|((strategy, mode), by_n)| {
            let pts: Vec<(f64, f64)> =
                by_n.iter().map(|(&n, &w)| ((n as f64).ln(), w.max(f64::MIN_POSITIVE).ln())).collect();
            let (slope, intercept, r2) = least_squares(&pts)?;
            Some(SlopeRow { strategy, mode, points: pts.len(), slope, intercept, r2 })
        })
        .collect()
}

pub fn work_ratios(rows: &[CellRow]) -> Vec<RatioRow> {
    let means = mean_work(rows);
    let mut out = Vec::new();
    for ((strategy, mode), by_n) in &means {
        if mode != "engine" {
            continue;
        }
        let Some(base) = means.get(&(strategy.clone(), "baseline".to_string())) else { continue };
        for (&n, &engine_work) in by_n {
            if let Some(&baseline_work) = base.get(&n) {
                out.push(RatioRow {
                    strategy: strategy.clone(),
                    n,
                    engine_work,
                    baseline_work,
                    ratio: engine_work / baseline_work.max(f64::MIN_POSITIVE),
                });
            }
        }
    }
    out
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn least_squares_recovers_a_power_law() {
        let pts: Vec<(f64, f64)> = [256.0f64, 512.0, 1024.0].iter().map(|&n| (n.ln(), (3.0 * n.powf(0.5)).ln())).collect();
        let (slope, intercept, r2) = least_squares(&pts).unwrap();
        assert!((slope - 0.5).abs() < 1e-12);
        assert!((intercept - 3.0f64.ln()).abs() < 1e-9);
        assert!((r2 - 1.0).abs() < 1e-12);
        assert!(least_squares(&pts[..1]).is_none());
    }

    #[test]
    fn slopes_average_over_seeds() {
        let row = |n: usize, seed: u64, w: f64| CellRow {
            n,
            delta: n / 2,
            strategy: "oblivious-random".into(),
            mode: "baseline".into(),
            seed,
            steps: 1,
            work_per_update: w,
            probes: 0,
            samples: 0,
            touched: 0,
            wall_ms: 0.0,
            fallbacks: 0,
            phases: 0,
            mean_init_work: 0.0,
            improper_steps: 0,
            monochrome_rate: 0.0,
            recolorings: 0,
        };
        let rows = vec![row(100, 1, 50.0), row(100, 2, 150.0), row(400, 1, 400.0)];
        let s = fit_slopes(&rows);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].points, 2);
        assert!((s[0].slope - 1.0).abs() < 1e-12);
    }
}
