use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use nsctl_core::ltl;
use nsctl_core::pipeline::{
    load_strategy, run_reach, run_simulate, run_train, run_translate, run_verify, write_json, write_simulation, write_translation,
};
use nsctl_core::scenario::{load_scenario, Scenario};

#[derive(Parser)]
#[command(name = "nsctl", version, about = "Verify and synthesize compositions of neural-network controllers for co-safe LTL tasks")]
struct Cli {
    /// Log level filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Translate the task formula into a DFA and prune infeasible edges.
    Translate {
        scenario: PathBuf,
        /// Formula to use instead of the scenario's.
        #[arg(long)]
        formula: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Imitation-train the MLP controllers of one region.
    Train {
        scenario: PathBuf,
        #[arg(long)]
        region: String,
    },
    /// Search for a verified controller composition.
    Verify {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Padding radius override.
        #[arg(long)]
        eps: Option<f64>,
        /// Samples per step override.
        #[arg(long)]
        m: Option<usize>,
        /// Propagation mode override (resample, particle).
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Successor order override (sorted, random).
        #[arg(long)]
        policy: Option<String>,
        /// Try every candidate controller of an edge before backtracking.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Monte Carlo rollouts of a verified strategy.
    Simulate {
        scenario: PathBuf,
        /// report.json from `verify`, or a bare strategy object.
        #[arg(long)]
        strategy: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Multiplier on the noise bound.
        #[arg(long, default_value_t = 1.0)]
        noise_scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Reachable tube of one controller from the initial set.
    Reach {
        scenario: PathBuf,
        #[arg(long)]
        controller: String,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load(path: &Path) -> Result<Scenario> {
    load_scenario(path).with_context(|| format!("loading {}", path.display()))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Translate { scenario, formula, out } => {
            let sc = load(&scenario)?;
            let f = match formula {
                Some(text) => ltl::parse(&text, &sc.workspace.region_names())?,
                None => sc.formula.clone(),
            };
            let t = run_translate(&f, &sc.workspace)?;
            let r = write_translation(&f, &t, &out)?;
            println!(
                "{}: {} states, {} transitions ({} after pruning), written to {}",
                r.formula,
                t.dfa.states().len(),
                t.dfa.transition_count(),
                t.pruned.transition_count(),
                out.display()
            );
            for w in &r.warnings {
                eprintln!("warning: {w:?}");
            }
            Ok(true)
        }
        Command::Train { scenario, region } => {
            let sc = load(&scenario)?;
            for r in run_train(&sc, &region)? {
                println!(
                    "{} -> {}: {} samples, validation loss {:.5}, reach rate {:.3} (expert {:.3})",
                    r.controller,
                    r.weights.display(),
                    r.samples,
                    r.validation_loss,
                    r.accuracy,
                    r.expert_accuracy
                );
            }
            Ok(true)
        }
        Command::Verify { scenario, out, eps, m, mode, seed, policy, exhaustive } => {
            let sc = load(&scenario)?;
            let mut cfg = sc.config.clone();
            if let Some(v) = eps {
                cfg.reach.eps = v;
            }
            if let Some(v) = m {
                cfg.reach.m = v;
            }
            if let Some(v) = mode {
                cfg.reach.mode = v;
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if let Some(v) = policy {
                cfg.search.policy = v;
            }
            cfg.search.exhaustive_controllers |= exhaustive;
            let sc = Scenario::new(cfg, &sc.base_dir)?;
            let run = run_verify(&sc, Some(&out))?;
            let r = &run.report;
            match &r.strategy {
                Some(s) => {
                    let order: Vec<String> = s.segments.iter().map(|g| format!("{} (H={})", g.controller, g.horizon)).collect();
                    println!("True: [{}], F = {}, probability >= {:.4}", order.join(", "), s.total_horizon, s.probability);
                }
                None => {
                    println!("False");
                    if let Some(f) = &r.failure {
                        println!("  {f}");
                    }
                    for a in &r.attempts {
                        println!(
                            "  {} -> {} with {}: {}",
                            a.record.source,
                            a.record.target,
                            a.record.controller.as_deref().unwrap_or("-"),
                            serde_json::to_string(&a.record.outcome)?
                        );
                    }
                }
            }
            println!("report written to {}", out.join("report.json").display());
            Ok(r.verdict)
        }
        Command::Simulate { scenario, strategy, n, noise_scale, seed, out } => {
            let sc = load(&scenario)?;
            let s = load_strategy(&strategy)?;
            let (r, traces) = run_simulate(&sc, &s, n, noise_scale, seed)?;
            write_simulation(&r, &traces, &out)?;
            println!(
                "{}/{} rollouts satisfied the task ({:.4}); bound {:.4}, 3-sigma band {:.4}",
                r.successes, r.rollouts, r.fraction, r.probability_bound, r.lower_band
            );
            Ok(true)
        }
        Command::Reach { scenario, controller, steps, out } => {
            let sc = load(&scenario)?;
            let tube = run_reach(&sc, &controller, steps, Some(&out))?;
            let (lo, hi) = tube.last().hull.bounding_box();
            println!("{} steps, final box {:.3?} .. {:.3?}", tube.horizon(), lo, hi);
            write_json(&serde_json::json!({ "controller": controller, "steps": steps }), &out.join("reach.json"))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
