//! `pdc`: sampling, counting and uniformity checks from the command line.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 dead-state abort.

mod commands;
mod records;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "pdc", version, about = "Bit-by-bit samplers for tables, Latin squares and partitions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample nonnegative integer tables with given margins.
    SampleCt(CtArgs),
    /// Sample 0/1 tables with given margins.
    SampleBinary(BinaryArgs),
    /// Sample Latin squares.
    SampleLatin(LatinArgs),
    /// Sample integer partitions.
    SamplePartition(PartitionArgs),
    /// Print the exact number of tables with given margins.
    Count(CountArgs),
    /// Chi-square test of uniformity.
    TestUniformity(UniformityArgs),
    /// Re-check JSON-lines samples read from standard input.
    Validate,
}

#[derive(Args, Debug)]
struct Margins {
    /// Row sums, comma separated.
    #[arg(long, value_parser = parse_list)]
    rows: List,
    /// Column sums, comma separated.
    #[arg(long, value_parser = parse_list)]
    cols: List,
    /// Forced-zero cells as 1-based "row,col" pairs separated by ';'.
    #[arg(long, value_parser = parse_cells, default_value = "")]
    zeros: Cells,
}

#[derive(Args, Debug)]
struct Batch {
    /// Master seed; sample t uses a seed derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    samples: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write per-sample diagnostics as JSON lines to this file.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// Restart budget for dead states (default from PDC_RESTART_BUDGET, else 1000).
    #[arg(long)]
    budget: Option<u32>,
}

#[derive(Args, Debug)]
struct CtArgs {
    #[command(flatten)]
    margins: Margins,
    #[arg(long, value_enum, default_value_t = CtStrategy::Approx)]
    strategy: CtStrategy,
    /// Keep per-level bit matrices in the diagnostics.
    #[arg(long)]
    levels: bool,
    #[command(flatten)]
    batch: Batch,
}

#[derive(Args, Debug)]
struct BinaryArgs {
    #[command(flatten)]
    margins: Margins,
    #[arg(long, value_enum, default_value_t = BinStrategy::H)]
    strategy: BinStrategy,
    /// Use the original-instance parameters c_l/(m-h_l) in the H weight.
    #[arg(long)]
    static_params: bool,
    /// Reject choices that leave no binary completion (max-flow check).
    #[arg(long)]
    flow_prune: bool,
    #[command(flatten)]
    batch: Batch,
}

#[derive(Args, Debug)]
struct LatinArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value_t = BinStrategy::H)]
    strategy: BinStrategy,
    #[arg(long, value_enum, default_value_t = Policy::RetryLevel)]
    policy: Policy,
    #[arg(long)]
    flow_prune: bool,
    #[command(flatten)]
    batch: Batch,
}

#[derive(Args, Debug)]
struct PartitionArgs {
    #[arg(long)]
    n: u64,
    /// Partitions into distinct parts.
    #[arg(long)]
    distinct: bool,
    /// First-stage tilt in (0, 1); defaults to the standard tilt for n.
    #[arg(long)]
    tilt: Option<f64>,
    #[command(flatten)]
    batch: Batch,
}

#[derive(Args, Debug)]
struct CountArgs {
    #[command(flatten)]
    margins: Margins,
    #[arg(long)]
    binary: bool,
    /// Cells constrained to even values, 1-based "row,col" pairs (integer mode).
    #[arg(long, value_parser = parse_cells, default_value = "")]
    evens: Cells,
}

#[derive(Args, Debug)]
struct UniformityArgs {
    /// Outcome counts, comma separated. Without it, JSON-lines samples are
    /// read from standard input and tallied by content.
    #[arg(long, value_parser = parse_list)]
    counts: Option<List>,
    /// Number of possible outcomes when tallying samples from standard input.
    #[arg(long)]
    outcomes: Option<u64>,
    #[arg(long, default_value_t = 0.01)]
    significance: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum CtStrategy {
    Exact,
    Approx,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BinStrategy {
    Exact,
    H,
    B,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Policy {
    RetryLevel,
    RestartAll,
    Abort,
}

#[derive(Clone, Debug)]
struct List(Vec<u64>);

#[derive(Clone, Debug, Default)]
struct Cells(Vec<(usize, usize)>);

fn parse_list(s: &str) -> Result<List, String> {
    s.split(',')
        .map(|x| x.trim().parse::<u64>().map_err(|_| format!("{x:?} is not a nonnegative integer")))
        .collect::<Result<_, _>>()
        .map(List)
}

fn parse_cells(s: &str) -> Result<Cells, String> {
    let mut out = Vec::new();
    for pair in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (a, b) = pair.split_once(',').ok_or_else(|| format!("{pair:?} is not \"row,col\""))?;
        let parse = |x: &str| -> Result<usize, String> {
            match x.trim().parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(format!("{x:?} is not a 1-based index")),
            }
        };
        out.push((parse(a)?, parse(b)?));
    }
    Ok(Cells(out))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("pdc: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
