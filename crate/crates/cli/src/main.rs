use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

use commands::CliError;

/// Adaptive finite-difference runs of u_t = u_xx + u^p - |u_x|^q on (-1, 1).
#[derive(Parser, Debug)]
#[command(name = "cw", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// key = value run configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter overrides, e.g. `--set lambda=100 q=1.2`.
    #[arg(long = "set", value_name = "KEY=VALUE", num_args = 1..)]
    overrides: Vec<String>,
    /// Directory for output files. CW_OUTPUT_DIR takes precedence.
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run to blow-up and write history.csv, snapshots/ and outcome.json.
    Run {
        #[command(flatten)]
        common: Common,
        /// Store a full profile every N steps (0 disables).
        #[arg(long, default_value_t = 50)]
        snapshot_every: usize,
    },
    /// Run and classify the nodes next to the peak (blowup_report.json).
    Classify {
        #[command(flatten)]
        common: Common,
    },
    /// Blow-up time against g(lambda) and T** for several amplitudes (time_table.csv).
    TimeTable {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', num_args = 0.., default_values_t = [10.0, 1e2, 1e3, 1e4, 1e5])]
        lambdas: Vec<f64>,
    },
    /// Grid-refinement study (convergence.json).
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [0.1, 0.05, 0.025])]
        levels: Vec<f64>,
        /// Comparison time; defaults to half the coarsest blow-up time.
        #[arg(long)]
        t_check: Option<f64>,
    },
    /// Peak-ratio, blow-up-set and time-bound checks (diagnostics.json); exit 4 if one fails.
    Diagnostics {
        #[command(flatten)]
        common: Common,
    },
    /// Time series behind the four figures (fig1.csv .. fig4.csv).
    Figures {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', num_args = 0.., default_values_t = [10.0, 1e2, 1e3, 1e4, 1e5])]
        lambdas: Vec<f64>,
    },
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run {
            common,
            snapshot_every,
        } => commands::run(&common.into(), snapshot_every),
        Command::Classify { common } => commands::classify(&common.into()),
        Command::TimeTable { common, lambdas } => commands::time_table(&common.into(), &lambdas),
        Command::Converge {
            common,
            levels,
            t_check,
        } => commands::converge(&common.into(), &levels, t_check),
        Command::Diagnostics { common } => commands::diagnostics(&common.into()),
        Command::Figures { common, lambdas } => commands::figures(&common.into(), &lambdas),
    }
}

impl From<Common> for commands::Context {
    fn from(c: Common) -> Self {
        commands::Context {
            config: c.config,
            overrides: c.overrides,
            output_dir: std::env::var_os("CW_OUTPUT_DIR")
                .map(PathBuf::from)
                .unwrap_or(c.output_dir),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cw: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
