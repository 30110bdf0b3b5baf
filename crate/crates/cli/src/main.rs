use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tps_cli::{make_synthetic, replay, run, GridSpec, Model, RunConfig, SynthKind, Transform};

#[derive(Parser)]
#[command(name = "tps-smooth", version, about = "Bayesian thin-plate-spline smoothing by direct sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Independent posterior draws for Gaussian point data.
    FitGaussian(FitArgs),
    /// Direct-block and single-site Gibbs chains for a two-week binomial panel.
    FitBinomial(FitArgs),
    /// Write a seeded synthetic data set.
    Synth {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeat a run from its manifest.json.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// Write into this directory instead of the recorded one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Gaussian,
    Turkey,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    /// Value column for point data.
    #[arg(long, default_value = "value")]
    value_col: String,
    /// Model the log of the value column.
    #[arg(long)]
    log: bool,
    #[arg(long, default_value_t = 10_000)]
    draws: usize,
    #[arg(long, default_value_t = 20_000)]
    iters: usize,
    /// Defaults to 10% of --iters.
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = tps_core::posterior::DEFAULT_A0)]
    a0: f64,
    #[arg(long, default_value_t = tps_core::posterior::DEFAULT_B0)]
    b0: f64,
    /// Prior on eta: pareto, flat, exponential:RATE.
    #[arg(long, default_value = "pareto")]
    eta_prior: String,
    #[arg(long, num_args = 2, value_names = ["NX", "NY"], default_values_t = [50, 50])]
    grid: Vec<usize>,
    /// Grid box; the default is the site bounding box grown by 5%.
    #[arg(long, num_args = 4, value_names = ["XMIN", "XMAX", "YMIN", "YMAX"], allow_negative_numbers = true)]
    bbox: Option<Vec<f64>>,
    /// Uniform jitter half-width added to coordinates.
    #[arg(long, value_name = "EPS")]
    jitter: Option<f64>,
    /// Comma-separated chain schemes for the binomial model.
    #[arg(long, value_delimiter = ',', default_value = "direct,gibbs")]
    schemes: Vec<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl FitArgs {
    fn into_config(self, model: Model) -> RunConfig {
        RunConfig {
            model,
            data: self.data,
            value_col: self.value_col,
            transform: if self.log { Transform::Log } else { Transform::None },
            a0: self.a0,
            b0: self.b0,
            eta_prior: self.eta_prior,
            draws: self.draws,
            iterations: self.iters,
            burn_in: self.burn_in,
            seed: self.seed,
            grid: GridSpec {
                nx: self.grid[0],
                ny: self.grid[1],
                bbox: self.bbox.map(|b| [b[0], b[1], b[2], b[3]]),
            },
            out: self.out,
            jitter: self.jitter,
            schemes: self.schemes,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::FitGaussian(a) => run(&a.into_config(Model::Gaussian)).map(|_| ()),
        Command::FitBinomial(a) => run(&a.into_config(Model::Binomial)).map(|_| ()),
        Command::Replay { manifest, out } => replay(&manifest, out).map(|_| ()),
        Command::Synth { kind, seed, out } => {
            let kind = match kind {
                Kind::Gaussian => SynthKind::Gaussian,
                Kind::Turkey => SynthKind::Turkey,
            };
            make_synthetic(kind, seed, &out)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
