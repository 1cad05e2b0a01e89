// SPDX-License-Identifier: Apache-2.0

//! `fhec`: transpile restricted C to boolean circuits and run them on the
//! cleartext or simulated FHE backend.

mod commands;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "fhec", version, about = "Restricted-C to boolean-circuit FHE transpiler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compile a source file and write the optimized IR and gate circuit.
    Transpile(TranspileArgs),
    /// Execute a program or `.gates` file on one input assignment.
    Run(RunArgs),
    /// Run both backends on known inputs and compare against expectations.
    Testbench(TestbenchArgs),
    /// Print stage and circuit statistics.
    Stats(StatsArgs),
}

#[derive(Args, Debug, Clone)]
pub struct BuildOpts {
    /// Source file, or a `.gates` circuit.
    pub input: PathBuf,
    /// Function to compile; defaults to the last one in the file.
    #[arg(long)]
    pub entry: Option<String>,
    /// Comma-separated pass list: fold, dce, narrow, gate.
    #[arg(long, default_value = "fold,dce,narrow,dce,gate")]
    pub passes: String,
    /// Cap on optimizer rounds.
    #[arg(long, default_value_t = 10)]
    pub max_iterations: usize,
}

#[derive(Args, Debug)]
pub struct TranspileArgs {
    #[command(flatten)]
    pub build: BuildOpts,
    #[arg(long, value_name = "PATH")]
    pub emit_ir: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub emit_gates: Option<PathBuf>,
    /// Write the pass report as key/value lines.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendName {
    Cleartext,
    Fhe,
}

#[derive(Args, Debug, Clone)]
pub struct ExecOpts {
    /// Preset name (tfhe_like, leveled_small, leveled_large) or a key/value file.
    #[arg(long, default_value = "tfhe_like")]
    pub params: String,
    /// Worker threads per level.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Seeds key generation and level shuffling. Defaults to the params' key_seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Shuffle gate order within each level.
    #[arg(long)]
    pub shuffle: bool,
    /// Input value, e.g. `a=5`, `xs=[1,2,3]`, `p={x:3,y:10}`.
    #[arg(long = "in", value_name = "NAME=VALUE")]
    pub inputs: Vec<String>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub build: BuildOpts,
    #[command(flatten)]
    pub exec: ExecOpts,
    #[arg(long, value_enum, default_value = "cleartext")]
    pub backend: BackendName,
    /// Write execution statistics as key/value lines.
    #[arg(long, value_name = "PATH")]
    pub stats: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub emit_ir: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub emit_gates: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TestbenchArgs {
    #[command(flatten)]
    pub build: BuildOpts,
    #[command(flatten)]
    pub exec: ExecOpts,
    /// Expected result for the `--in` case.
    #[arg(long)]
    pub expect: Option<String>,
    /// File with one case per line: `inputs... => expected...`.
    #[arg(long, value_name = "PATH")]
    pub batch: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Kv,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[command(flatten)]
    pub build: BuildOpts,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Transpile(a) => commands::transpile(&a),
        Command::Run(a) => commands::run(&a),
        Command::Testbench(a) => commands::testbench(&a),
        Command::Stats(a) => commands::stats(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
