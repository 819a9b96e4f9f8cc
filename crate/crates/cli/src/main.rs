use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;
use sha2::{Digest, Sha256};
use splice_cli::artifacts::{self as art, DirLock};
use splice_cli::config::DataConfig;
use splice_cli::error::EXIT_OK;
use splice_cli::pipeline::{build_dataset, parse_dims};
use splice_cli::{CliError, ExperimentConfig, Result, Run, Stage};
use splice_core::datagen::export_dataset;

#[derive(Parser)]
#[command(
    name = "splice",
    version,
    about = "Shared and private latent discovery for paired views"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Runs the pipeline from `--stage` (default gen) to the end.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "gen")]
        stage: Stage,
        /// Checkpoint loaded by the first model stage instead of the one in
        /// the output directory.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Writes viewA.csv, viewB.csv and truth.csv under `<out>/data`.
    GenData(GenData),
    /// Step 1 training (generates the data first if it is absent).
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Step 2 geometry-preserving retraining.
    Geometry {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Computes metrics.csv for the latest (or given) checkpoint.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Baselines stage: RRR saturation curve and CCA.
    Rrr {
        #[command(flatten)]
        common: Common,
        /// Comma-separated ranks, replacing the configured list.
        #[arg(long)]
        dims: Option<String>,
    },
    /// Writes latents.csv with one row per dataset row.
    ExportLatents {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        resume: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    Lgnv1,
    LinearToy,
}

#[derive(Args)]
struct GenData {
    /// Use the data section of a config instead of `--source`.
    #[arg(long, conflicts_with = "source")]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    source: Option<Source>,
    /// Trials (lgnv1) or samples (linear-toy).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn data_section(g: &GenData) -> Result<DataConfig> {
    let mut obj = serde_json::Map::new();
    let source = match g.source.expect("clap requires source") {
        Source::Lgnv1 => "lgnv1",
        Source::LinearToy => "linear_toy",
    };
    obj.insert("source".into(), source.into());
    if let Some(t) = g.trials {
        obj.insert(if source == "lgnv1" { "trials" } else { "n" }.into(), t.into());
    }
    if let Some(v) = g.grid {
        obj.insert("grid".into(), v.into());
    }
    if let Some(v) = g.noise {
        obj.insert(if source == "lgnv1" { "noise_level" } else { "noise" }.into(), v.into());
    }
    serde_json::from_value(obj.into()).map_err(|e| CliError::Config(format!("at `data`: {e}")))
}

fn gen_data(g: &GenData) -> Result<()> {
    if let Some(path) = &g.config {
        let run = Run::open(ExperimentConfig::load(path)?, g.seed, g.out.clone())?;
        run.gen()?;
        return Ok(());
    }
    let data_cfg = data_section(g)?;
    let seed = g.seed.unwrap_or(0);
    let out = g.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let _lock = DirLock::acquire(&out)?;
    let json = serde_json::to_string(&(&data_cfg, seed)).expect("data section serializes");
    let hash = hex::encode(&Sha256::digest(json.as_bytes())[..8]);
    let t = std::time::Instant::now();
    let data = build_dataset(&data_cfg, seed)?;
    export_dataset(&data, out.join(art::DATA_DIR), Some(&hash))?;
    art::append_manifest(&out, Stage::Gen.name(), t.elapsed(), &hash)?;
    Ok(())
}

fn open(c: &Common) -> Result<Run> {
    Run::open(ExperimentConfig::load(&c.config)?, c.seed, c.out.clone())
}

fn execute(cmd: &Cmd) -> Result<()> {
    match cmd {
        Cmd::Run { common, stage, resume } => open(common)?.run(*stage, resume.as_deref()),
        Cmd::GenData(g) => gen_data(g),
        Cmd::Train { common } => {
            let run = open(common)?;
            if !run.path(art::DATA_DIR).join("viewA.csv").exists() {
                run.gen()?;
            }
            run.step1().map(drop)
        }
        Cmd::Geometry { common, resume } => open(common)?.step2(resume.as_deref()).map(drop),
        Cmd::Eval { common, resume } => open(common)?.metrics(resume.as_deref()).map(drop),
        Cmd::Rrr { common, dims } => {
            let dims = dims.as_deref().map(parse_dims).transpose()?.unwrap_or_default();
            open(common)?.baselines(&dims).map(drop)
        }
        Cmd::ExportLatents { common, resume } => open(common)?.export(resume.as_deref()).map(drop),
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("SPLICE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("SPLICE_THREADS=`{v}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("SPLICE_THREADS: {e}")))
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let code = match init_threads().and_then(|_| execute(&cli.cmd)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
