mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::{emit, CliError};

#[derive(Parser, Debug)]
#[command(
    name = "cit",
    version,
    about = "Common information and interactive secret-key rates of two finite sources"
)]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "CIT_THREADS")]
    pub threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Initiator {
    X,
    Y,
    Both,
}

#[derive(Args, Debug, Clone)]
pub struct PmfArg {
    /// Joint pmf as JSON: {"x": [...], "y": [...], "p": [[...], ...]}.
    #[arg(long)]
    pub pmf: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 2)]
    pub rounds: usize,
    /// Per-round alphabet caps of the deterministic search.
    #[arg(long, value_delimiter = ',')]
    pub caps: Option<Vec<usize>>,
    /// Per-round alphabet sizes of the continuous search.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Most chains the deterministic search may enumerate.
    #[arg(long, default_value_t = 1e8)]
    pub budget: f64,
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
}

#[derive(Args, Debug, Clone)]
pub struct RateArgs {
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, default_value_t = 32)]
    pub wyner_restarts: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    Lemma1,
    Decomp,
    El5,
    /// Redundant-symbol invariance of the common information quantities.
    Split,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimKind {
    Sw,
    Crsk,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainChoice {
    /// One round, U_1 = X.
    X,
    /// One round, U_1 = Y.
    Y,
    /// Best chain of the deterministic search started by X.
    Det,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Entropies and mutual information.
    Info(PmfArg),
    /// Minimal sufficient statistics of both sources.
    Suffstat(PmfArg),
    /// Gács–Körner common function.
    Gk(PmfArg),
    /// Upper bound on Wyner's common information.
    Wyner {
        #[command(flatten)]
        pmf: PmfArg,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long)]
        w_size: Option<usize>,
    },
    /// Interactive common information by one solver or all of them.
    Ici {
        #[command(flatten)]
        pmf: PmfArg,
        #[command(flatten)]
        search: SearchArgs,
        /// Solver name, or `all`.
        #[arg(long, default_value = "all")]
        mode: String,
        #[arg(long, value_enum, default_value_t = Initiator::Both)]
        initiator: Initiator,
    },
    /// Full rate report.
    Rates {
        #[command(flatten)]
        pmf: PmfArg,
        #[command(flatten)]
        rates: RateArgs,
    },
    /// Seeded suites of exact identity checks.
    Check {
        #[arg(value_enum)]
        kind: CheckKind,
        /// Number of random cases; defaults to 1000, 200, 500 or 200.
        #[arg(long)]
        count: Option<usize>,
        /// Wyner restarts per case of the `split` suite.
        #[arg(long, default_value_t = 4)]
        wyner_restarts: usize,
    },
    /// Monte Carlo simulation over a sweep of blocklengths.
    Simulate {
        #[arg(value_enum)]
        kind: SimKind,
        #[command(flatten)]
        pmf: PmfArg,
        #[arg(long, value_delimiter = ',', default_value = "8,16,24")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        /// Binning rate in bits per symbol (sw).
        #[arg(long)]
        rate: Option<f64>,
        /// Requested key rate in bits per symbol (crsk).
        #[arg(long, default_value_t = 0.0)]
        key_rate: f64,
        /// Extra bits per symbol and stage (crsk).
        #[arg(long, default_value_t = cit_core::lab::crsk::DEFAULT_SLACK)]
        slack: f64,
        #[arg(long, value_enum, default_value_t = ChainChoice::X)]
        chain: ChainChoice,
        /// Rounds of the `det` chain.
        #[arg(long, default_value_t = 2)]
        rounds: usize,
    },
    /// Built-in sources run through the rate report.
    Example {
        #[command(subcommand)]
        which: ExampleKind,
    },
}

#[derive(Subcommand, Debug)]
pub enum ExampleKind {
    /// Doubly symmetric binary source.
    Bss {
        #[arg(long)]
        delta: f64,
        #[command(flatten)]
        rates: RateArgs,
    },
    /// Ternary source on which interaction helps; needs 2a > b > a, c ≠ a, 7a + b + c = 1.
    Gain {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        c: f64,
        #[command(flatten)]
        rates: RateArgs,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::new("Usage", e.to_string().trim().to_string());
            println!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    let result = output::configure_threads(cli.threads)
        .and_then(|()| commands::run(&cli))
        .and_then(|report| emit(&cli, &report));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            println!("{}", err.to_json());
            ExitCode::FAILURE
        }
    }
}
