//! `cphase`: solve, analyse and simulate composite controlled-phase gates.
//!
//! All angles on the command line and in files are in units of π.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "cphase",
    version,
    about = "Composite controlled-phase gates robust to rotation-angle errors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find phases of a composite sequence by Monte-Carlo restarted Newton iteration.
    Solve(SolveArgs),
    /// Report residuals, tolerance bands and fitted orders of catalog rows or a sequence file.
    Verify(VerifyArgs),
    /// Tabulate fidelity against the relative error ε on a uniform grid.
    Scan(ScanArgs),
    /// Compute the tolerance band, the ε interval with infidelity below a threshold.
    Band(BandArgs),
    /// Fit the exponent of the infidelity near ε = 0.
    Order(OrderArgs),
    /// Wrap every gate of a sequence into an absolute-error compensating pair.
    WrapAbs(WrapArgs),
    /// Simulate a sequence on the two-ion trap model.
    Iontrap(IontrapArgs),
    /// Dump the tabulated broadband and passband sequences.
    Catalog(CatalogArgs),
}

/// Where a sequence comes from.
#[derive(Debug, Args)]
pub struct SeqSource {
    /// Sequence CSV file (angles in units of π).
    #[arg(long, conflicts_with = "entry", required_unless_present = "entry")]
    pub seq: Option<PathBuf>,
    /// Catalog entry name instead of a file: bb1..bb6, pb11, pb21, pb12, pb22, pb13, pb33.
    #[arg(long)]
    pub entry: Option<String>,
    /// Target angle Θ/π used with --entry.
    #[arg(long, default_value_t = 0.25)]
    pub theta_over_pi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyKind {
    /// Broadband: cancel derivatives up to --order at ε = 0.
    Bb,
    /// Passband: broadband to --order plus narrowband to --narrow-order at ε = −1.
    Pb,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub family: FamilyKind,
    /// Broadband order n (n₁ for passband).
    #[arg(long)]
    pub order: u32,
    /// Narrowband order n₂ (passband only, defaults to --order).
    #[arg(long)]
    pub narrow_order: Option<u32>,
    /// Target angle Θ/π.
    #[arg(long, default_value_t = 0.25)]
    pub theta_over_pi: f64,
    /// Fixed sequence shape such as `two-pulse` or `half-pi-chain(4)`; without it the
    /// family's shape progression is tried in order.
    #[arg(long)]
    pub shape: Option<String>,
    /// Also solve for the terminal phase gate.
    #[arg(long)]
    pub free_terminal: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub max_restarts: usize,
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
    /// Convergence threshold on the summed residual norm D.
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    /// Output sequence CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// File receiving one `restart=<k> iters=<i> D=<value>` line per restart.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Table {
    /// Broadband rows BB1..BB6.
    Table1,
    /// Passband rows.
    Table2,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Verify a tabulated set of rows.
    #[arg(
        long,
        value_enum,
        conflicts_with = "seq",
        required_unless_present = "seq"
    )]
    pub catalog: Option<Table>,
    /// Verify one sequence file (its family determines the checked orders).
    #[arg(long)]
    pub seq: Option<PathBuf>,
    /// Target angle Θ/π for catalog rows.
    #[arg(long, default_value_t = 0.25)]
    pub theta_over_pi: f64,
    /// Infidelity threshold of the tolerance bands.
    #[arg(long, default_value_t = 1e-4)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Reference {
    /// Compare with the target gate U(Θ).
    Target,
    /// Compare with the identity (narrowband side of passband sequences).
    Identity,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub source: SeqSource,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub max: f64,
    #[arg(long, default_value_t = 2001)]
    pub steps: usize,
    /// Absolute angle offset ξ in units of π.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub xi_over_pi: f64,
    #[arg(long, value_enum, default_value_t = Reference::Target)]
    pub reference: Reference,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BandArgs {
    #[command(flatten)]
    pub source: SeqSource,
    #[arg(long, default_value_t = 1e-4)]
    pub threshold: f64,
    /// Center of the band in ε.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub center: f64,
    #[arg(long, value_enum, default_value_t = Reference::Target)]
    pub reference: Reference,
}

#[derive(Debug, Args)]
pub struct OrderArgs {
    #[command(flatten)]
    pub source: SeqSource,
    /// Lower end of the ε fit window.
    #[arg(long, default_value_t = 1e-3)]
    pub low: f64,
    /// Upper end of the ε fit window.
    #[arg(long, default_value_t = 1e-2)]
    pub high: f64,
    /// Absolute angle offset ξ in units of π held fixed during the fit.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub xi_over_pi: f64,
}

#[derive(Debug, Args)]
pub struct WrapArgs {
    #[command(flatten)]
    pub source: SeqSource,
    /// Output sequence CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AddressingKind {
    /// Equal laser phases with ideal phase gates on ion 2.
    Global,
    /// Per-gate laser phase on ion 2.
    Individual,
}

#[derive(Debug, Args)]
pub struct IontrapArgs {
    /// Trap description (key = value; angles in units of π).
    #[arg(long)]
    pub config: PathBuf,
    /// Sequence to realize. Without it the configured pulse pair is simulated.
    #[arg(long)]
    pub seq: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AddressingKind::Individual)]
    pub addressing: AddressingKind,
    /// Output CSV of the 4x4 qubit gate, re/im interleaved (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    #[arg(long, value_enum, default_value_t = Table::All)]
    pub table: Table,
    /// Target angle Θ/π of the closed-form rows (tabulated decimal rows need 0.25).
    #[arg(long, default_value_t = 0.25)]
    pub theta_over_pi: f64,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    eprintln!("config: {:?}", cli.command);
    match commands::run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
