use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dyncolor::engine::Engine;
use dyncolor::trace::TraceFile;
use dyncolor::Profile;
use harness::adversary::{Adversary, StrategyKind};
use harness::bench::{run_grid, write_csv};
use harness::config::{BenchConfig, ModeChoice, RunConfig};
use harness::runner::{record, replay, run};
use harness::verify::verify;

#[derive(Parser)]
#[command(name = "dyncolor", version, about = "Fully dynamic (Δ+1)-coloring: runs, benchmarks, verification and traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Drive the engine with an adversary and verify along the way.
    Run {
        #[command(flatten)]
        run: RunArgs,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark grid and write cells.csv, slopes.csv and ratios.csv.
    Bench(BenchArgs),
    /// Verify the engine state after a trace (or a fresh run).
    Verify {
        /// Replay this trace instead of generating updates.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Record an adversary run, with published colors, to a trace file.
    Record {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run a trace and compare against its recorded colors.
    Replay {
        trace: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Flags override the values from `--config`.
#[derive(Args, Clone, Debug)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    n: Option<usize>,
    /// Maximum degree Δ (default n/2).
    #[arg(short, long)]
    delta: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// desk or paper.
    #[arg(long)]
    profile: Option<Profile>,
    /// auto, engine or baseline.
    #[arg(long)]
    mode: Option<ModeChoice>,
    #[arg(long)]
    seed: Option<u64>,
    /// adaptive-monochrome, oblivious-random, deletion-heavy or clique-churn.
    #[arg(long)]
    strategy: Option<StrategyKind>,
    #[arg(long)]
    steps: Option<u64>,
    /// Run the full verifier every this many updates.
    #[arg(long)]
    verify_every: Option<u64>,
    /// Parameter override, e.g. `--set sample_count_k=64`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(n) = self.n {
            cfg.n = n;
        }
        cfg.delta = self.delta.or(cfg.delta);
        cfg.epsilon = self.epsilon.or(cfg.epsilon);
        cfg.tau = self.tau.or(cfg.tau);
        cfg.profile = self.profile.unwrap_or(cfg.profile);
        cfg.mode = self.mode.unwrap_or(cfg.mode);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.strategy = self.strategy.unwrap_or(cfg.strategy);
        cfg.steps = self.steps.unwrap_or(cfg.steps);
        cfg.verify_every = self.verify_every.unwrap_or(cfg.verify_every);
        for kv in &self.overrides {
            let Some((k, v)) = kv.split_once('=') else { bail!("--set expects KEY=VALUE, got `{kv}`") };
            cfg.overrides.insert(k.trim().to_string(), v.trim().to_string());
        }
        if cfg.strategy == StrategyKind::Scripted {
            bail!("the scripted strategy needs a trace; use `replay`");
        }
        Ok(cfg)
    }
}

#[derive(Args, Clone, Debug)]
struct BenchArgs {
    /// TOML benchmark grid.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    #[arg(long)]
    delta_frac: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<StrategyKind>>,
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<ModeChoice>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    profile: Option<Profile>,
    /// Output directory.
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
}

impl BenchArgs {
    fn resolve(&self) -> Result<BenchConfig> {
        let mut cfg = match &self.config {
            Some(p) => BenchConfig::load(p)?,
            None => BenchConfig::default(),
        };
        cfg.ns = self.ns.clone().unwrap_or(cfg.ns);
        cfg.delta_frac = self.delta_frac.unwrap_or(cfg.delta_frac);
        cfg.strategies = self.strategies.clone().unwrap_or(cfg.strategies);
        cfg.modes = self.modes.clone().unwrap_or(cfg.modes);
        cfg.seeds = self.seeds.clone().unwrap_or(cfg.seeds);
        cfg.steps = self.steps.unwrap_or(cfg.steps);
        cfg.profile = self.profile.unwrap_or(cfg.profile);
        Ok(cfg)
    }
}

fn write_out(path: &Option<PathBuf>, json: &str) -> Result<()> {
    if let Some(p) = path {
        std::fs::write(p, json).with_context(|| format!("writing {}", p.display()))?;
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Ok(false) means the command ran but found a problem.
fn real_main() -> Result<bool> {
    match Cli::parse().command {
        Command::Run { run: args, out } => {
            let cfg = args.resolve()?;
            let report = run(&cfg)?;
            let o = &report.outcome;
            println!(
                "{} steps (n={}, Δ={}, {}, {}), improper steps {}, work/update {:.1}, fallbacks {}, phases {}, wall {:.2}s",
                o.steps,
                cfg.n,
                cfg.delta(),
                cfg.strategy,
                report.metrics.mode.map(|m| m.to_string()).unwrap_or_default(),
                o.improper_steps,
                report.metrics.work_per_update(),
                report.metrics.fallbacks(),
                report.metrics.phases,
                o.wall.as_secs_f64(),
            );
            for line in &o.transcript {
                println!("  {line}");
            }
            println!("{} verifications; failures: {:?}", report.verifications, report.failure_tallies);
            write_out(&out, &report.to_json())?;
            Ok(o.improper_steps == 0 && report.final_report.all_passed())
        }
        Command::Bench(args) => {
            let cfg = args.resolve()?;
            let result = run_grid(&cfg)?;
            std::fs::create_dir_all(&args.out)?;
            write_csv(&result.cells, File::create(args.out.join("cells.csv"))?)?;
            write_csv(&result.slopes, File::create(args.out.join("slopes.csv"))?)?;
            write_csv(&result.ratios, File::create(args.out.join("ratios.csv"))?)?;
            for s in &result.slopes {
                println!("{:<20} {:<8} slope {:.3} (r² {:.3}, {} points)", s.strategy, s.mode, s.slope, s.r2, s.points);
            }
            for r in &result.ratios {
                println!("{:<20} n={:<6} engine/baseline work {:.3}", r.strategy, r.n, r.ratio);
            }
            eprintln!("wrote {} cells to {}", result.cells.len(), args.out.display());
            Ok(result.cells.iter().all(|c| c.improper_steps == 0))
        }
        Command::Verify { trace, run: args, out } => {
            let engine = match trace {
                Some(p) => {
                    let t = TraceFile::load(&p).with_context(|| format!("loading {}", p.display()))?;
                    replay(&t)?.0
                }
                None => {
                    let cfg = args.resolve()?;
                    let mut engine = Engine::new(cfg.n, cfg.delta(), cfg.engine_config()?)?;
                    let mut adv = Adversary::new(cfg.strategy, cfg.n, cfg.delta(), cfg.seed ^ 0x5eed, cfg.strategy_params.clone());
                    harness::runner::drive(&mut engine, &mut adv, cfg.steps, |_, _, _| true);
                    engine
                }
            };
            let report = verify(&engine);
            println!("{}", report.summary());
            write_out(&out, &report.to_json())?;
            Ok(report.all_passed())
        }
        Command::Record { run: args, out } => {
            let cfg = args.resolve()?;
            let mut engine = Engine::new(cfg.n, cfg.delta(), cfg.engine_config()?)?;
            let mut adv = Adversary::new(cfg.strategy, cfg.n, cfg.delta(), cfg.seed ^ 0x5eed, cfg.strategy_params.clone());
            let (trace, outcome) = record(&mut engine, &mut adv, cfg.steps);
            trace.save(&out).with_context(|| format!("writing {}", out.display()))?;
            println!("recorded {} updates to {} (improper steps {})", outcome.steps, out.display(), outcome.improper_steps);
            Ok(outcome.improper_steps == 0)
        }
        Command::Replay { trace, out } => {
            let t = TraceFile::load(&trace).with_context(|| format!("loading {}", trace.display()))?;
            let (_, outcome) = replay(&t)?;
            println!(
                "replayed {} updates: {} mismatches (first at {:?}), {} improper steps",
                outcome.steps, outcome.mismatches, outcome.first_mismatch, outcome.improper_steps
            );
            write_out(&out, &serde_json::to_string_pretty(&outcome)?)?;
            Ok(outcome.mismatches == 0 && outcome.improper_steps == 0)
        }
    }
}
