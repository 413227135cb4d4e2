use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use curvsup::pipeline::{run_pipeline, run_stage, PipelineConfig, Stage};

#[derive(Parser)]
#[command(name = "curvsup", version, about = "Slimmed tree supports on curved layers")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every stage and write the report
    Run(Common),
    /// Fields, overhangs, envelope and compatible layers
    Slice(Common),
    /// Trace the support skeleton through the saved layers
    Skeleton(Common),
    /// Calibrate the implicit solid around the saved skeleton
    Implicit(Common),
    /// Trim the support layers against the implicit solid
    Trim(Common),
    /// Contours and the waypoint program
    Toolpath(Common),
    /// Print the effective configuration as TOML
    DumpConfig(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in fixture: box, dome, bridge_slab or t_shape
    #[arg(long)]
    fixture: Option<String>,
    /// Model mesh base path (.node/.ele)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Envelope mesh base path (.node/.ele)
    #[arg(long)]
    envelope: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Self-support angle in degrees
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    layer_thickness: Option<f64>,
    #[arg(long)]
    inflate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn config(&self) -> curvsup::Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(f) = &self.fixture {
            cfg.fixture = Some(f.clone());
            cfg.model = None;
        }
        if let Some(m) = &self.model {
            cfg.model = Some(m.clone());
        }
        if let Some(e) = &self.envelope {
            cfg.envelope = Some(e.clone());
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(n) = self.layers {
            cfg.n_layers = n;
        }
        if let Some(t) = self.layer_thickness {
            cfg.layer_thickness = t;
        }
        if let Some(i) = self.inflate {
            cfg.inflate = Some(i);
        }
        if let Some(s) = self.seed {
            cfg.rng_seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> curvsup::Result<()> {
    let (common, stage) = match &cli.command {
        Cmd::Run(c) => {
            let out = run_pipeline(&c.config()?)?;
            print!("{}", out.report.format());
            eprint!("{}", out.timings.format());
            return Ok(());
        }
        Cmd::DumpConfig(c) => {
            print!("{}", c.config()?.to_toml());
            return Ok(());
        }
        Cmd::Slice(c) => (c, Stage::Slice),
        Cmd::Skeleton(c) => (c, Stage::Skeleton),
        Cmd::Implicit(c) => (c, Stage::Implicit),
        Cmd::Trim(c) => (c, Stage::Trim),
        Cmd::Toolpath(c) => (c, Stage::Toolpath),
    };
    run_stage(&common.config()?, stage)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
