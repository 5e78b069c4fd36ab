use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use procgpt_cli::commands::{self, Outcome};
use procgpt_cli::CliError;

/// Non-signalling checks, quasi-mixture decompositions and common-cause
/// realization certificates for finite-dimensional channels.
#[derive(Parser)]
#[command(name = "procgpt", version)]
struct Cli {
    /// Print errors as JSON on stderr.
    #[arg(long, global = true)]
    json: bool,

    /// Numerical tolerance for float64 files (rational files are exact).
    #[arg(long, global = true, env = "PROCGPT_TOL")]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every bipartition of a channel; exit 0 iff non-signalling.
    CheckNs { channel: PathBuf },
    /// Print the quasi-mixture of a non-signalling channel.
    Decompose {
        channel: PathBuf,
        #[arg(long, default_value = "min-norm")]
        mode: String,
    },
    /// Decompose, realize and write a certificate.
    Realize {
        channel: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
        #[arg(long, default_value = "min-norm")]
        mode: String,
    },
    /// Recheck a certificate against a channel file; exit 0 iff it holds.
    Verify {
        certificate: PathBuf,
        #[arg(long)]
        against: PathBuf,
    },
    /// Steering assemblages.
    Assemblage {
        #[command(subcommand)]
        command: AssemblageCommand,
    },
    /// The generated common-cause fragment.
    Completion {
        #[command(subcommand)]
        command: CompletionCommand,
    },
    /// Evaluate a process expression over a directory of bindings.
    Eval {
        #[arg(long)]
        expr: PathBuf,
        #[arg(long)]
        bindings: PathBuf,
    },
}

#[derive(Subcommand)]
enum AssemblageCommand {
    /// Realize an assemblage and write a certificate for its channel.
    Realize {
        assemblage: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
        /// Also write the encoded channel, for `verify --against`.
        #[arg(long)]
        channel_out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CompletionCommand {
    /// PR box walkthrough with validity, discard and quotient checks.
    DemoPr {
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 40)]
        pairs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let tol = cli.tol;
    match &cli.command {
        Command::CheckNs { channel } => commands::check_ns(channel, tol),
        Command::Decompose { channel, mode } => commands::decompose(channel, commands::parse_mode(mode)?, tol),
        Command::Realize { channel, output, mode } => {
            commands::realize(channel, output, commands::parse_mode(mode)?, tol)
        }
        Command::Verify { certificate, against } => commands::verify(certificate, against),
        Command::Assemblage { command: AssemblageCommand::Realize { assemblage, output, channel_out } } => {
            commands::assemblage_realize(assemblage, output, channel_out.as_deref(), tol)
        }
        Command::Completion { command: CompletionCommand::DemoPr { samples, pairs, seed } } => {
            commands::demo_pr(*samples, *pairs, *seed)
        }
        Command::Eval { expr, bindings } => commands::eval(expr, bindings),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            if cli.json {
                eprintln!("{}", e.to_json());
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
