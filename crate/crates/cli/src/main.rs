//! `geotypica <command> --config <file> [--seed N] [--out DIR] [--jobs N]`
//!
//! Exit codes: 0 success, 2 configuration error, 3 stage failure. Log
//! verbosity comes from `GEOTYPICA_LOG` (`error`, `warn`, `info`, `debug`).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use geotypica::pipeline::{run, Command, PipelineConfig, PipelineError};

const EXIT_CONFIG: u8 = 2;
const EXIT_STAGE: u8 = 3;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    /// Ingest geodata, lay out lots and build the scene.
    Generate,
    /// Render views of the generated scene.
    Render,
    /// Tile views into patches and write the manifest.
    Tile,
    /// Score predicted label masks against references.
    Evaluate,
    /// Run every stage in order.
    All,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Generate => Command::Generate,
            Cmd::Render => Command::Render,
            Cmd::Tile => Command::Tile,
            Cmd::Evaluate => Command::Evaluate,
            Cmd::All => Command::All,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "geotypica", version, about = "Geo-typical synthetic overhead imagery with semantic labels")]
struct Args {
    command: Cmd,
    /// TOML configuration; relative paths inside resolve against its directory.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Predicted mask or directory for `evaluate`.
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Reference mask or directory for `evaluate`.
    #[arg(long)]
    gt: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GEOTYPICA_LOG", "warn")).init();
    let args = Args::parse();

    let mut cfg = match &args.config {
        Some(path) => match PipelineConfig::load(path) {
            Ok(c) => c,
            Err(errs) => {
                eprintln!("{}", PipelineError::Config(errs));
                return ExitCode::from(EXIT_CONFIG);
            }
        },
        None => PipelineConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = args.out {
        cfg.output.dir = o;
    }
    if let Some(p) = args.pred {
        cfg.evaluate.pred = Some(p);
    }
    if let Some(g) = args.gt {
        cfg.evaluate.gt = Some(g);
    }
    if let Some(j) = args.jobs {
        if j == 0 {
            eprintln!("{}", PipelineError::Config(vec!["--jobs must be at least 1".into()]));
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }

    match run(&cfg, args.command.into()) {
        Ok(report) => {
            for s in &report.stages {
                let counts: Vec<String> = s.counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
                println!("{:<9} {:>8.2} s  {}", s.stage.to_string(), s.seconds, counts.join(" "));
            }
            ExitCode::SUCCESS
        }
        Err(e @ PipelineError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e @ PipelineError::Stage { .. }) => {
            eprintln!("{e}");
            ExitCode::from(EXIT_STAGE)
        }
    }
}
