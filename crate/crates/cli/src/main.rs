use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pvh::sim::{random_topology, GenParams};
use pvh_cli::{ExperimentKind, Mode, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "pvh",
    version,
    about = "Run PVH network scenarios in a deterministic simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment on a topology and write CSV (or a cluster dump).
    Run(RunArgs),
    /// Print a random connected topology.
    Gen(GenArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML scenario config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    topo: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Hop range of capability broadcasts and head declarations.
    #[arg(long)]
    x: Option<u8>,
    /// Capability weights as alpha,beta,gamma.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    weights: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    exp: Option<ExperimentKind>,
    /// Service publication mode for service-bench.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    services: Option<usize>,
    #[arg(long)]
    queriers: Option<usize>,
    /// Hop buckets for ping-sweep, e.g. 1-6 or 1,3,5.
    #[arg(long)]
    buckets: Option<String>,
    /// Echoes per pair.
    #[arg(long)]
    pings: Option<u32>,
    /// Pairs per bucket; all pairs when omitted.
    #[arg(long)]
    pairs: Option<usize>,
    /// Simulate at least until this virtual time before the experiment.
    #[arg(long)]
    until_ms: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    nodes: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = GenParams::default().extra_links_per_node)]
    extra_links: f64,
    #[arg(long, default_value_t = GenParams::default().shared_fraction)]
    shared_fraction: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_buckets(s: &str) -> Result<Vec<usize>> {
    let mut v = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.parse()?, b.parse()?);
                if a > b {
                    bail!("empty bucket range {part}");
                }
                v.extend(a..=b);
            }
            None => v.push(
                part.parse()
                    .with_context(|| format!("bad bucket {part:?}"))?,
            ),
        }
    }
    Ok(v)
}

fn scenario(args: RunArgs) -> Result<(ScenarioConfig, Option<PathBuf>)> {
    let mut cfg = match &args.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    let e = &mut cfg.experiment;
    if let Some(v) = args.exp {
        e.kind = v;
    }
    if let Some(v) = args.mode {
        e.mode = v;
    }
    if let Some(v) = args.services {
        e.services = v;
    }
    if let Some(v) = args.queriers {
        e.queriers = v;
    }
    if let Some(v) = &args.buckets {
        e.buckets = parse_buckets(v)?;
    }
    if let Some(v) = args.pings {
        e.pings = v;
    }
    if args.pairs.is_some() {
        e.pairs = args.pairs;
    }
    if args.topo.is_some() {
        cfg.topo = args.topo;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.x {
        cfg.x = v;
    }
    if let Some(w) = args.weights {
        cfg.weights = [w[0], w[1], w[2]];
    }
    if args.until_ms.is_some() {
        cfg.until_ms = args.until_ms;
    }
    Ok((cfg, args.out))
}

fn emit(out: Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

fn main_inner() -> Result<()> {
    match Cli::parse().cmd {
        Command::Run(args) => {
            let (cfg, out) = scenario(args)?;
            let run = pvh_cli::run(&cfg)?;
            for w in run.warnings() {
                eprintln!("warning: {w}");
            }
            emit(out, &run.output()?)
        }
        Command::Gen(g) => {
            let params = GenParams {
                extra_links_per_node: g.extra_links,
                shared_fraction: g.shared_fraction,
            };
            emit(g.out, &random_topology(g.nodes, g.seed, params).to_text())
        }
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
