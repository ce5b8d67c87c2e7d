use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tadpole::spectrum::SeedBranch;
use tadpole_cli::{
    cmd_evolve, cmd_figure2, cmd_kernel, cmd_modes, cmd_spectrum, cmd_verify, PartialConfig, EXIT_CONFIG,
};

#[derive(Parser)]
#[command(name = "tadpole", about = "Spectral analysis of the damped tadpole graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Point spectrum, asymptotic deviations and root certificates
    Spectrum(Overrides),
    /// Mode functions with JSON sidecars
    Modes(Overrides),
    /// Resolvent kernel slice and split report
    Kernel(Overrides),
    /// Modal and finite-difference evolution with energy traces
    Evolve(Overrides),
    /// Damped-family branches over an alpha sweep
    Figure2(Overrides),
    /// Acceptance criteria, written to verify.json
    Verify(Overrides),
}

#[derive(Clone, Copy, ValueEnum)]
enum Branch {
    Plus,
    Minus,
    Both,
}

#[derive(Args)]
struct Overrides {
    /// JSON file with RunConfig fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "L", allow_hyphen_values = true)]
    l: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    xmax: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    h1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    h2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    tmax: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<f64>,
    /// Output directory (must exist)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    seed_branch: Option<Branch>,
}

impl Overrides {
    fn to_partial(&self) -> PartialConfig {
        PartialConfig {
            l: self.l,
            alpha: self.alpha,
            x_max: self.xmax,
            h1: self.h1,
            h2: self.h2,
            nmax: self.nmax,
            kmax: self.kmax,
            tmax: self.tmax,
            dt: self.dt,
            out_dir: self.out.clone(),
            seed_branch: self.seed_branch.map(|b| match b {
                Branch::Plus => SeedBranch::Plus,
                Branch::Minus => SeedBranch::Minus,
                Branch::Both => SeedBranch::Both,
            }),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    let (ov, cmd): (&Overrides, fn(&tadpole_cli::RunConfig) -> i32) = match &cli.command {
        Command::Spectrum(o) => (o, cmd_spectrum),
        Command::Modes(o) => (o, cmd_modes),
        Command::Kernel(o) => (o, cmd_kernel),
        Command::Evolve(o) => (o, cmd_evolve),
        Command::Figure2(o) => (o, cmd_figure2),
        Command::Verify(o) => (o, cmd_verify),
    };
    let base = match &ov.config {
        Some(path) => match std::fs::read_to_string(path).map_err(|e| e.to_string()).and_then(|t| PartialConfig::from_json(&t)) {
            Ok(c) => c,
            Err(e) => {
                log::error!("{}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG as u8);
            }
        },
        None => PartialConfig::default(),
    };
    let cfg = base.merge(ov.to_partial()).resolve();
    ExitCode::from(cmd(&cfg) as u8)
}
