//! `fjsim`: simulate heterogeneous erasure-coded storage clusters and
//! compute the matching analytic latency bounds.
//!
//! ```text
//! fjsim bounds --config scenario.toml            stability + bound table
//! fjsim run --config scenario.toml --out out.csv simulate (sweep-aware)
//! fjsim sweep-report out/ --out figures/         CSVs -> plot .dat files
//! ```

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fjsim_cli::config::{self, Overrides};
use fjsim_cli::report;
use fjsim_cli::runner;
use fjsim_core::bounds::bound_report;
use fjsim_core::model::{validate, Policy};
use fjsim_core::simengine::SimMode;

#[derive(Parser)]
#[command(
    name = "fjsim",
    version,
    about = "Fork-join storage cluster simulator and latency-bound calculator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the stability verdict and per-class latency bounds
    Bounds(BoundsArgs),
    /// Simulate the scenario (sweeping if configured) and emit CSV
    Run(RunArgs),
    /// Render result CSVs from a directory into per-figure .dat files
    SweepReport(ReportArgs),
}

#[derive(Args)]
struct BoundsArgs {
    /// Scenario file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Also write the bounds as CSV to this path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the scheduling policy (fcfs | npq | pq)
    #[arg(long)]
    policy: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Results CSV path (a *_storage.csv sidecar is written next to it);
    /// stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the base seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the completion horizon per replication (warm-up rescales
    /// to jobs/10)
    #[arg(long)]
    jobs: Option<u64>,
    /// Override the replication count
    #[arg(long)]
    replications: Option<u32>,
    /// Cap concurrent worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Run even when the stability condition fails (the divergence guard
    /// still bounds the simulation)
    #[arg(long)]
    allow_unstable: bool,
    /// Simulate the split-merge variant instead of fork-join
    #[arg(long)]
    split_merge: bool,
    /// Override the scheduling policy (fcfs | npq | pq)
    #[arg(long)]
    policy: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding result CSVs from `fjsim run`
    csv_dir: PathBuf,
    /// Output directory for .dat files (default: the input directory)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_policy(s: &str) -> Result<Policy> {
    Policy::parse(s)
        .with_context(|| format!("unknown policy {s:?} (expected fcfs, npq, or pq)"))
}

fn cmd_bounds(args: &BoundsArgs) -> Result<()> {
    let scenario = config::load(&args.config)?;
    let mut cfg = scenario.base;
    if let Some(p) = &args.policy {
        cfg.policy = parse_policy(p)?;
    }
    // The analysis itself is meaningful for unstable configurations — the
    // verdict line carries the result — so stability is not a load error.
    cfg.sim.allow_unstable = true;
    let v = validate(cfg)
        .map_err(|errs| anyhow::anyhow!(
            errs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
        ))
        .context("invalid configuration")?;
    let report = bound_report(&v);
    print!("{}", runner::render_bounds_table(&report));
    if let Some(out) = &args.out {
        let file = std::fs::File::create(out)
            .with_context(|| format!("cannot create {}", out.display()))?;
        runner::write_bounds_csv(file, &report)?;
        eprintln!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let mut scenario = config::load(&args.config)?;
    let overrides = Overrides {
        seed: args.seed,
        jobs: args.jobs,
        replications: args.replications,
        allow_unstable: args.allow_unstable,
        policy: args.policy.as_deref().map(parse_policy).transpose()?,
    };
    config::apply_overrides(&mut scenario.base, &overrides);
    let mode = if args.split_merge { SimMode::SplitMerge } else { SimMode::ForkJoin };

    let outcomes = match args.workers {
        Some(workers) => rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .context("cannot build worker pool")?
            .install(|| runner::execute(&scenario, mode)),
        None => runner::execute(&scenario, mode),
    };

    let mut first_error = None;
    let mut produced = 0usize;
    for point in &outcomes {
        match (&point.outcome, point.sweep_value) {
            (Ok(data), _) => produced += data.rows.len(),
            (Err(msg), Some(v)) => {
                let param = scenario.sweep.as_ref().map(|(p, _)| p.as_str()).unwrap_or("value");
                eprintln!("skipping sweep point {param} = {v}: {msg}");
                first_error.get_or_insert_with(|| msg.clone());
            }
            (Err(msg), None) => {
                first_error.get_or_insert_with(|| msg.clone());
            }
        }
    }
    if produced == 0 {
        bail!("no rows produced: {}", first_error.unwrap_or_else(|| "empty sweep".into()));
    }

    match &args.out {
        Some(out) => {
            let file = std::fs::File::create(out)
                .with_context(|| format!("cannot create {}", out.display()))?;
            runner::write_results_csv(file, &outcomes)?;
            let sidecar = runner::storage_sidecar_path(out);
            let side = std::fs::File::create(&sidecar)
                .with_context(|| format!("cannot create {}", sidecar.display()))?;
            runner::write_storage_csv(side, &outcomes)?;
            eprintln!("wrote {} ({} rows) and {}", out.display(), produced, sidecar.display());
        }
        None => runner::write_results_csv(std::io::stdout().lock(), &outcomes)?,
    }
    Ok(())
}

fn cmd_sweep_report(args: &ReportArgs) -> Result<()> {
    let out_dir = args.out.clone().unwrap_or_else(|| args.csv_dir.clone());
    let summary = report::sweep_report(&args.csv_dir, &out_dir)?;
    for warning in &summary.warnings {
        eprintln!("warning: {warning}");
    }
    println!("wrote {} files to {}", summary.files.len(), out_dir.display());
    for file in &summary.files {
        println!("  {file}");
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Bounds(args) => cmd_bounds(&args),
        Command::Run(args) => cmd_run(&args),
        Command::SweepReport(args) => cmd_sweep_report(&args),
    }
}
