use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};

use geochart::commands;
use geochart::{run_pipeline, PipelineConfig};
use geochart_core::chart::Method;

#[derive(Parser)]
#[command(name = "geochart", version, about = "Channel charting from simulated CIR measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON or TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated subset of siamese_geo, isomap_mds, pca, sammon.
    #[arg(long, global = true, value_delimiter = ',')]
    methods: Option<Vec<String>>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the training and test datasets.
    Simulate(#[command(flatten)] Common),
    /// Pairwise CIR distances of the training set.
    Distances(#[command(flatten)] Common),
    /// Geodesic distances over the k-nearest-neighbour graph.
    Geodesic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Train the Siamese encoder on geodesic targets.
    Train(#[command(flatten)] Common),
    /// Chart both splits with every configured method.
    Embed(#[command(flatten)] Common),
    /// Score stored charts and write results.csv.
    Evaluate(#[command(flatten)] Common),
    /// Every stage end to end.
    Pipeline(#[command(flatten)] Common),
    /// Distance correlation study on the training dataset.
    Study {
        #[command(flatten)]
        common: Common,
        /// Number of random pairs.
        #[arg(long)]
        pairs: Option<usize>,
    },
}

fn load(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(names) = &common.methods {
        cfg.methods = names
            .iter()
            .map(|n| Method::parse(n.trim()).ok_or_else(|| anyhow!("unknown method {n:?}")))
            .collect::<Result<_>>()?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(c) => commands::simulate(&load(&c)?),
        Command::Distances(c) => commands::distances(&load(&c)?),
        Command::Geodesic { common, k } => {
            let mut cfg = load(&common)?;
            if let Some(k) = k {
                cfg.graph.k = k;
            }
            commands::geodesic(&cfg)
        }
        Command::Train(c) => commands::train(&load(&c)?),
        Command::Embed(c) => commands::embed(&load(&c)?),
        Command::Evaluate(c) => {
            for r in commands::evaluate(&load(&c)?)? {
                println!("{} {}: CT {:.4} TW {:.4} MAE {:.3} m CE90 {:.3} m", r.method, r.split, r.ct, r.tw, r.mae, r.ce90);
            }
            Ok(())
        }
        Command::Pipeline(c) => {
            let out = run_pipeline(&load(&c)?)?;
            for r in &out.reports {
                println!("{} {}: CT {:.4} TW {:.4} MAE {:.3} m CE90 {:.3} m", r.method, r.split, r.ct, r.tw, r.mae, r.ce90);
            }
            println!("results written to {}", out.root.join("results.csv").display());
            Ok(())
        }
        Command::Study { common, pairs } => {
            let mut cfg = load(&common)?;
            if let Some(m) = pairs {
                cfg.study.pairs = m;
            }
            let report = commands::study(&cfg)?;
            println!("{} pairs: r(d_cir, d_euc) = {:.4}, r(d_geo, d_euc) = {:.4}", report.pairs, report.r_cir, report.r_geo);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
