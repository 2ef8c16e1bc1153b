use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use horizonlab::commands::{self, Common};
use horizonlab::CliResult;

#[derive(Parser)]
#[command(name = "horizonlab", version, about = "Regularized Jang equation laboratory")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Data configuration: JSON file or inline `name[:key=value,...]`.
    #[arg(long, global = true)]
    data: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of chart points (overrides the configured chart).
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Spherical-harmonic degree.
    #[arg(long, global = true)]
    lmax: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Data-set checks.
    Data {
        #[command(subcommand)]
        action: DataAction,
    },
    /// Surface geometry.
    Surface {
        #[command(subcommand)]
        action: SurfaceAction,
    },
    /// Stability operator.
    Stability {
        #[command(subcommand)]
        action: StabilityAction,
    },
    /// Regularized Jang solves.
    Jang {
        #[command(subcommand)]
        action: JangAction,
    },
    /// Blowdown limit of a continuation run.
    Blowdown {
        #[arg(long)]
        run: PathBuf,
    },
    /// Graphical/cylindrical classification of a continuation run.
    Classify {
        #[arg(long)]
        run: PathBuf,
    },
    /// Constant-expansion foliation from a round seed sphere.
    Foliate {
        #[arg(long)]
        seed_radius: f64,
        /// `+` or `-`.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_direction)]
        direction: f64,
        /// Expansion cap.
        #[arg(long, default_value_t = 10.0)]
        cap: f64,
        /// Use the full (non-axisymmetric) sphere grid.
        #[arg(long)]
        full_grid: bool,
    },
    /// Structure report of a continuation run.
    Structure {
        #[arg(long)]
        run: PathBuf,
    },
    /// Conformal eigenvalue bound on a warped cylinder.
    GluingCheck {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Acceptance suite, or the invariant suite of `--data`.
    VerifyAll,
}

#[derive(Subcommand)]
enum DataAction {
    Validate,
}

#[derive(Subcommand)]
enum SurfaceAction {
    Theta {
        #[arg(long)]
        radius: f64,
    },
}

#[derive(Subcommand)]
enum StabilityAction {
    Eig {
        #[arg(long)]
        radius: f64,
    },
}

#[derive(Subcommand)]
enum JangAction {
    Solve {
        #[arg(long)]
        s: f64,
    },
    Continue {
        /// `geo:s0:ratio:s_min` or `list:s0,s1,...`.
        #[arg(long, default_value = "geo:1:0.6:1e-3")]
        schedule: String,
    },
}

fn parse_direction(s: &str) -> Result<f64, String> {
    match s {
        "+" | "+1" | "1" | "plus" => Ok(1.0),
        "-" | "-1" | "minus" => Ok(-1.0),
        _ => Err(format!("expected + or -, got `{s}`")),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let c = Common {
        data: cli.common.data,
        out: cli.common.out,
        grid: cli.common.grid,
        lmax: cli.common.lmax,
    };
    match cli.command {
        Command::Data { action: DataAction::Validate } => commands::data_validate(&c),
        Command::Surface { action: SurfaceAction::Theta { radius } } => commands::surface_theta(&c, radius),
        Command::Stability { action: StabilityAction::Eig { radius } } => commands::stability_eig(&c, radius),
        Command::Jang { action: JangAction::Solve { s } } => commands::jang_solve(&c, s),
        Command::Jang { action: JangAction::Continue { schedule } } => commands::jang_continue(&c, &schedule),
        Command::Blowdown { run } => commands::blowdown(&c, &run),
        Command::Classify { run } => commands::classify(&c, &run),
        Command::Foliate {
            seed_radius,
            direction,
            cap,
            full_grid,
        } => commands::foliate(&c, seed_radius, direction, cap, full_grid),
        Command::Structure { run } => commands::structure(&c, &run),
        Command::GluingCheck { spec } => commands::gluing_check(&c, &spec),
        Command::VerifyAll => commands::verify_all(&c),
    }
    .map(|_| ())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("horizonlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
