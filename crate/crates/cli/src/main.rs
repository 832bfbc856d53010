mod commands;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use settings::Settings;

/// Weighted persistence-image kernels for graph classification.
#[derive(Parser, Debug)]
#[command(name = "wkpi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TU dataset directory or `synthetic:cycles-vs-trees[:PER_CLASS]`.
    #[arg(long, global = true)]
    dataset: Option<String>,
    /// Dataset file prefix inside the directory.
    #[arg(long, global = true)]
    name: Option<String>,
    /// degree, ricci or jaccard.
    #[arg(long, global = true)]
    descriptor: Option<String>,
    /// Comma-separated subset of 0,1.
    #[arg(long, global = true)]
    dimensions: Option<String>,
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    use_extended: Option<String>,
    /// Any configuration key, as KEY=VALUE; may repeat.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Persistence diagram CSV per graph plus an index.
    Diagram,
    /// Persistence images as CSV and binary.
    Image,
    /// Learn the weight function on the whole dataset.
    TrainMetric,
    /// Kernel matrix under a given weight file.
    Gram {
        #[arg(long)]
        weight: PathBuf,
    },
    /// Train on a stratified split and predict the held-out graphs.
    Classify,
    /// Nested cross-validation report.
    Cv,
    /// Sample a weight file on a grid as CSV and PGM.
    Heatmap {
        #[arg(long)]
        weight: PathBuf,
        /// `x_min,x_max,y_min,y_max`; without it the grids are fitted on the dataset.
        #[arg(long)]
        grid: Option<String>,
    },
}

fn settings(c: &Common) -> Result<Settings> {
    let mut s = Settings::default();
    if let Some(path) = &c.config {
        s.apply_file(path)?;
    }
    let flags = [
        ("dataset", c.dataset.clone()),
        ("name", c.name.clone()),
        ("descriptor", c.descriptor.clone()),
        ("dimensions", c.dimensions.clone()),
        ("use_extended", c.use_extended.clone()),
        ("seed", c.seed.map(|v| v.to_string())),
        ("threads", c.threads.map(|v| v.to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            s.set(k, &v).with_context(|| format!("--{}", k.replace('_', "-")))?;
        }
    }
    if let Some(out) = &c.out {
        s.out = out.clone();
    }
    for kv in &c.set {
        s.apply_override(kv)?;
    }
    s.validate()?;
    Ok(s)
}

fn run(cli: Cli) -> Result<()> {
    let s = settings(&cli.common)?;
    if let Some(n) = s.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Diagram => commands::diagram(&s),
        Command::Image => commands::image(&s),
        Command::TrainMetric => commands::train_metric(&s),
        Command::Gram { weight } => commands::gram(&s, weight),
        Command::Classify => commands::classify(&s),
        Command::Cv => commands::cv(&s),
        Command::Heatmap { weight, grid } => commands::heatmap(&s, weight, grid.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
