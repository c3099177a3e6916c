use std::{
    path::{Path, PathBuf},
    process::ExitCode,
};

use clap::{Parser, Subcommand};

use hvspec::{
    commands::{self, Report, DEFAULT_GRID, DEFAULT_SWEEPS},
    CliError,
};

/// Hidden-variable spectrograph toolkit: quantum oracle, simulator,
/// coincidence matcher and CH analyzer.
#[derive(Parser)]
#[command(name = "hvspec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form CH terms for the Eberhardt state.
    #[command(subcommand)]
    Qm(QmCommand),
    /// Run the four setting-pair runs of an experiment config.
    Simulate {
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Match two event-stream CSV files.
    Match {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        window: f64,
        /// Defaults to one more than the largest channel seen.
        #[arg(long)]
        channels: Option<usize>,
    },
    /// CH estimate, correction term and spectrograph verdicts of a count table.
    Analyze { counts: PathBuf },
    /// Check a count table against the spectrograph features.
    Audit { counts: PathBuf },
    /// Coincidences maximising J for given singles.
    Maximize {
        /// `uniform:K=<k>,s=<s>` or a singles JSON file.
        #[arg(long)]
        singles: String,
        #[arg(long)]
        n: u64,
    },
}

#[derive(Subcommand)]
enum QmCommand {
    Eval {
        #[arg(long)]
        r2: f64,
        /// `alpha,alpha',beta,beta'` in radians.
        #[arg(long, allow_hyphen_values = true)]
        quad: String,
    },
    Scan {
        #[arg(long)]
        r2: f64,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_SWEEPS)]
        sweeps: usize,
    },
}

fn run(cli: Cli) -> Result<Report, CliError> {
    match cli.command {
        Command::Qm(QmCommand::Eval { r2, quad }) => {
            commands::qm_eval(r2, &commands::parse_quad(&quad)?)
        }
        Command::Qm(QmCommand::Scan { r2, grid, sweeps }) => commands::qm_scan(r2, grid, sweeps),
        Command::Simulate { config, seed, out } => {
            let cfg = commands::load_config(&config)?;
            let base = config.parent().unwrap_or(Path::new("."));
            Ok(commands::simulate(&cfg, base, seed, out.as_deref())?.report)
        }
        Command::Match {
            a,
            b,
            window,
            channels,
        } => commands::match_files(&a, &b, window, channels),
        Command::Analyze { counts } => commands::analyze(&counts),
        Command::Audit { counts } => commands::audit(&counts),
        Command::Maximize { singles, n } => {
            commands::maximize(&commands::parse_singles(&singles)?, n)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            print!("{}", report.json);
            ExitCode::from(if report.ok { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
