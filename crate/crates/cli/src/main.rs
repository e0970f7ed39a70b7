//! `qclab`: command line harness for the query-complexity laboratory.
//!
//! Reports are JSON lines, one record per check. The exit status is 0 when every
//! verdict passes, 1 when some verdict fails and 2 on errors.

mod commands;
mod input;
mod manifest;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qclab_core::{Record, ZeroMassPolicy};

#[derive(Debug, Parser)]
#[command(name = "qclab", version, about = "Exact query-complexity experiments")]
struct Cli {
    /// Where to write the report; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Distributional complexity D^mu_eps with a witness tree.
    Dce(DceArgs),
    /// Randomized complexity R_eps by the minimax game, with a certified hard distribution.
    Rqc(RqcArgs),
    /// Build a composed instance and write its manifest.
    BuildInstance(InstanceArgs),
    /// Simulate the algorithm A' for a tree B on a composed instance.
    Simulate(SimulateArgs),
    /// Run claim sweeps and instance checks.
    Verify(VerifyArgs),
    /// XOR stacks g^t and their randomized complexity for t = 1..=T.
    XorStack(XorStackArgs),
}

/// A Boolean function (`--g`) or a relation (`--f`).
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ProblemArgs {
    /// Function: a truth-table file or and:<m>, or:<m>, xor:<m>, maj:<m>, id, const0:<m>, const1:<m>, code:<m>:<k>.
    #[arg(long)]
    g: Option<String>,
    /// Relation: a relation file, or any function form.
    #[arg(long)]
    f: Option<String>,
}

#[derive(Debug, Args)]
struct DceArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Input distribution: a file, uniform, point:<bits> or weights:<w0>,<w1>,...
    #[arg(long, default_value = "uniform")]
    mu: String,
    #[arg(long, default_value = "1/3")]
    eps: String,
    /// Write the witness tree to this file.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GameArgs {
    /// Bracket width of the game solver.
    #[arg(long, default_value = "1/100")]
    tol: String,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
}

#[derive(Debug, Args)]
struct RqcArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value = "1/3")]
    eps: String,
    #[command(flatten)]
    game: GameArgs,
    /// Write the hard distribution to this file.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Strict,
    FallbackToMu,
}

impl From<PolicyArg> for ZeroMassPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Strict => ZeroMassPolicy::Strict,
            PolicyArg::FallbackToMu => ZeroMassPolicy::FallbackToMu,
        }
    }
}

#[derive(Debug, Args)]
struct InstanceArgs {
    /// Read the instance from a manifest instead of the flags below.
    #[arg(long, conflicts_with_all = ["f", "g", "mu", "lambda", "eps", "theta"])]
    instance: Option<PathBuf>,
    /// Outer relation on n bits.
    #[arg(long, required_unless_present = "instance")]
    f: Option<String>,
    /// Inner function on m bits.
    #[arg(long, required_unless_present = "instance")]
    g: Option<String>,
    /// Expected number of copies; checked against the arity of f.
    #[arg(long)]
    n: Option<usize>,
    /// Expected inner arity; checked against the arity of g.
    #[arg(long)]
    m: Option<usize>,
    /// Inner distribution; the certified hard distribution of g when absent.
    #[arg(long)]
    mu: Option<String>,
    /// Outer distribution.
    #[arg(long, default_value = "uniform")]
    lambda: String,
    /// Defaults to 1/2 - 1/n^4.
    #[arg(long)]
    eps: Option<String>,
    /// Snip threshold; defaults to 2*sqrt(1/2 - eps) when rational.
    #[arg(long)]
    theta: Option<String>,
    #[command(flatten)]
    game: GameArgs,
    /// Behaviour when A' would condition on a null event.
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Tree B on n*m variables.
    #[arg(long)]
    tree: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    /// Only this outer input (bitstring, x_1 first); every z when absent.
    #[arg(long)]
    z: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Claim {
    Unbias,
    Rbias,
    Fullbias,
    Simileaf,
    Lilsnip,
    All,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    claim: Claim,
    /// Largest inner arity swept; arity 4 and above use sampled functions and distributions.
    #[arg(long, default_value_t = 3)]
    m: usize,
    /// Grid distributions have integer weights summing to at most this.
    #[arg(long, default_value_t = 6)]
    max_denom: u64,
    /// Tree depth for the rbias sweep.
    #[arg(long, default_value_t = 3)]
    depth: usize,
    /// Error parameters (repeatable); defaults depend on the claim.
    #[arg(long = "sweep-eps")]
    sweep_eps: Vec<String>,
    /// Unbias parameters (repeatable); defaults to 1/8, 1/4, 1/2.
    #[arg(long)]
    delta: Vec<String>,
    /// Functions sampled per sampled arity.
    #[arg(long, default_value_t = 200)]
    functions: usize,
    /// Grid distributions sampled per sampled arity.
    #[arg(long, default_value_t = 400)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tree B for the instance checks (simileaf, lilsnip).
    #[arg(long)]
    tree: Option<String>,
    #[command(flatten)]
    instance: OptionalInstance,
}

/// Instance flags for `verify`; only needed by the instance checks.
#[derive(Debug, Args)]
struct OptionalInstance {
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    f: Option<String>,
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
}

#[derive(Debug, Args)]
struct XorStackArgs {
    #[arg(long)]
    g: String,
    /// Largest number of blocks.
    #[arg(long)]
    t: usize,
    #[arg(long, default_value = "7/16")]
    eps: String,
    #[command(flatten)]
    game: GameArgs,
    /// Write the truth table of the largest stack to this file.
    #[arg(long)]
    witness: Option<PathBuf>,
}

/// Record sink that tracks whether every verdict passed.
pub struct Report {
    sink: Box<dyn Write>,
    all_passed: bool,
}

impl Report {
    fn new(out: Option<&PathBuf>) -> Result<Self> {
        let sink: Box<dyn Write> = match out {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        Ok(Report {
            sink,
            all_passed: true,
        })
    }

    pub fn emit(&mut self, record: Record) -> Result<()> {
        self.all_passed &= record.passed();
        serde_json::to_writer(&mut self.sink, &record)?;
        writeln!(self.sink)?;
        Ok(())
    }

    pub fn write_raw(&mut self, text: &str) -> Result<()> {
        self.sink.write_all(text.as_bytes())?;
        Ok(())
    }

    fn finish(mut self) -> Result<bool> {
        self.sink.flush()?;
        Ok(self.all_passed)
    }
}

fn run(cli: Cli) -> Result<bool> {
    let mut report = Report::new(cli.out.as_ref())?;
    match cli.command {
        Command::Dce(a) => commands::dce(&a, &mut report)?,
        Command::Rqc(a) => commands::rqc(&a, &mut report)?,
        Command::BuildInstance(a) => commands::build_instance(&a, &mut report)?,
        Command::Simulate(a) => commands::simulate(&a, &mut report)?,
        Command::Verify(a) => commands::verify(&a, &mut report)?,
        Command::XorStack(a) => commands::xor_stack(&a, &mut report)?,
    }
    report.finish()
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
