use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use permcs_cli::{run, Command, RunConfig};

#[derive(Parser)]
#[command(name = "permcs", version, about = "Permuted parallel compressed sensing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Random seed; overrides `seed` in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for Monte Carlo trials and column reconstruction.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Acceptance bound against Monte Carlo estimates over a parameter grid.
    BoundSurface,
    /// Largest column count of thresholded DCT supports before and after zigzag.
    PermTable { images: Vec<PathBuf> },
    /// PSNR against compression ratio with and without the permutation.
    ImagePsnr { images: Vec<PathBuf> },
    /// Reference and non-reference PSNR of a YUV 4:2:0 video.
    VideoPsnr { video: Option<PathBuf> },
    /// Per-layer DCT support occupancy against the layer model.
    LayerFit { image: Option<PathBuf> },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), cli.seed)?;
    if let Some(w) = cli.workers {
        cfg.workers = w;
        cfg.validate()?;
    }
    let (cmd, inputs) = match cli.command {
        Cmd::BoundSurface => (Command::BoundSurface, Vec::new()),
        Cmd::PermTable { images } => (Command::PermTable, images),
        Cmd::ImagePsnr { images } => (Command::ImagePsnr, images),
        Cmd::VideoPsnr { video } => (Command::VideoPsnr, video.into_iter().collect()),
        Cmd::LayerFit { image } => (Command::LayerFit, image.into_iter().collect()),
    };
    let report = run(cmd, &cfg, &inputs)?;
    for path in report.write(&cfg, &cli.out)? {
        println!("{}", path.display());
    }
    Ok(())
}
