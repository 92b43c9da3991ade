//! `rhyme`: check, run and compile Rhyme programs.
//!
//! Exit codes: 0 success, 1 source diagnostics, 2 runtime error,
//! 3 capacity or synthesis-cap error, 64 usage error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rhyme_core::frontend::Diagnostic;
use rhyme_core::qasm::compile;
use rhyme_core::runner::run_shots;
use rhyme_core::sema::{check_source, CheckedProgram};
use rhyme_core::semantics::{RuntimeError, RuntimeErrorKind};
use rhyme_core::types::TypeConfig;

/// Largest state the simulator will allocate, in qubits.
const SIM_CAP: u32 = 24;

const EXIT_DIAGNOSTICS: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_CAPACITY: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "rhyme", version, about = "Rhyme quantum language toolchain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and type-check a program
    Check(Common),
    /// Simulate a program and print the outcome histogram
    Run {
        #[command(flatten)]
        common: Common,
        /// Number of shots
        #[arg(long, default_value_t = 1024, value_parser = clap::value_parser!(u64).range(1..))]
        shots: u64,
        /// Base seed; shot i uses shot_seed(seed, i)
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write the histogram here instead of stdout
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compile a program to OpenQASM 2.0
    Compile {
        #[command(flatten)]
        common: Common,
        /// Output file (stdout if omitted)
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Source file
    input: PathBuf,
    /// Type widths, e.g. `int=16,float=16.8,string=3,ref=4`
    #[arg(long)]
    widths: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Text,
    Json,
}

/// A failure already reported to stderr, carrying its exit code.
struct Exit(u8);

fn usage(msg: impl std::fmt::Display) -> Exit {
    let mut help = <Cli as clap::CommandFactory>::command();
    eprintln!("error: {msg}\n\n{}", help.render_usage());
    Exit(EXIT_USAGE)
}

fn report(diags: &[Diagnostic], file: &str) {
    for d in diags {
        eprintln!("{}", d.render(file));
    }
}

fn load(common: &Common) -> Result<(CheckedProgram, String), Exit> {
    let cfg = match &common.widths {
        Some(list) => TypeConfig::default()
            .with_overrides(list)
            .map_err(|e| usage(format!("--widths: {e}")))?,
        None => TypeConfig::default(),
    };
    let src = fs::read_to_string(&common.input)
        .map_err(|e| usage(format!("cannot read {}: {e}", common.input.display())))?;
    let file = common.input.display().to_string();
    match check_source(&src, &cfg) {
        Ok(program) => {
            report(&program.warnings, &file);
            Ok((program, file))
        }
        Err(diags) => {
            report(&diags, &file);
            Err(Exit(EXIT_DIAGNOSTICS))
        }
    }
}

fn runtime_failure(e: &RuntimeError, file: &str) -> Exit {
    eprintln!("{}", e.to_diagnostic().render(file));
    Exit(match e.kind {
        RuntimeErrorKind::Capacity | RuntimeErrorKind::Synthesis => EXIT_CAPACITY,
        RuntimeErrorKind::NotGateExpressible => EXIT_DIAGNOSTICS,
        _ => EXIT_RUNTIME,
    })
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), Exit> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|e| usage(format!("cannot write output: {e}")))
        }
    }
}

fn execute(cli: Cli) -> Result<(), Exit> {
    match cli.command {
        Command::Check(common) => {
            let (program, file) = load(&common)?;
            println!("{file}: ok ({} warning(s))", program.warnings.len());
            Ok(())
        }
        Command::Run {
            common,
            shots,
            seed,
            format,
            output,
        } => {
            let (program, file) = load(&common)?;
            let (hist, _) = run_shots(&program, shots, seed, SIM_CAP).map_err(|e| runtime_failure(&e, &file))?;
            let text = match format {
                Format::Text => hist.to_text(),
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&hist).expect("histogram serializes");
                    s.push('\n');
                    s
                }
            };
            emit(&text, output.as_deref())
        }
        Command::Compile { common, output } => {
            let (program, file) = load(&common)?;
            let compiled = compile(&program).map_err(|e| runtime_failure(&e, &file))?;
            emit(&compiled.to_qasm(), output.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.render().to_string();
            eprint!("{rendered}");
            if !rendered.contains("Usage:") {
                let mut cmd = <Cli as clap::CommandFactory>::command();
                eprintln!("\n{}", cmd.render_usage());
            }
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Exit(code)) => ExitCode::from(code),
    }
}
