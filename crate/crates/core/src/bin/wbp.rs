use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wbp::experiment::{run_experiment, Command, ExperimentConfig, VerifyConfig};

#[derive(Parser)]
#[command(
    name = "wbp",
    version,
    about = "Weighted branching process experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Regime classification and tail constants.
    Theory(Common),
    /// Draws of the truncated endogenous solution R.
    Simulate(Common),
    /// Hill, CCDF and log-log slope from samples.
    Estimate(Common),
    /// Theory against simulation for a built-in scenario or the configured model.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Built-in scenario name; overrides [verify] scenario.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        replicas: Option<usize>,
    },
    /// Configuration graph, PageRank and the rank-tail comparison.
    Pagerank(Common),
    /// Exact laws of W_0..W_n and R^(n) for finite-support marks.
    Enumerate(Common),
}

fn load(common: &Common) -> wbp::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> wbp::Result<()> {
    let (common, command) = match &cli.command {
        Cmd::Theory(c) => (c, Command::Theory),
        Cmd::Simulate(c) => (c, Command::Simulate),
        Cmd::Estimate(c) => (c, Command::Estimate),
        Cmd::Verify { common, .. } => (common, Command::Verify),
        Cmd::Pagerank(c) => (c, Command::Pagerank),
        Cmd::Enumerate(c) => (c, Command::Enumerate),
    };
    let mut cfg = load(common)?;
    if let Cmd::Verify {
        scenario, replicas, ..
    } = &cli.command
    {
        let v = cfg.verify.get_or_insert_with(VerifyConfig::default);
        if scenario.is_some() {
            v.scenario = scenario.clone();
        }
        if replicas.is_some() {
            v.replicas = *replicas;
        }
    }
    let out = run_experiment(&cfg, command)?;
    print!("{}", out.report);
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
