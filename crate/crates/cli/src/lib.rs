//! Command-line front end: argument parsing, file loading and the
//! commands. Each command returns an [`Outcome`] instead of printing, so
//! nothing reaches standard output on an error path.

pub mod commands;
pub mod parse;
pub mod selftest;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::Outcome;

pub mod exit {
    pub const SUCCESS: i32 = 0;
    /// UNSAT, or #P-complete.
    pub const NEGATIVE: i32 = 1;
    pub const TIMEOUT: i32 = 2;
    pub const PARSE_ERROR: i32 = 64;
    pub const REFUSED: i32 = 65;
}

#[derive(Debug, Parser)]
#[command(
    name = "ccsp",
    version,
    about = "Exact counting for constraint languages with a Mal'tsev polymorphism"
)]
pub struct Cli {
    /// Run independent searches on all cores.
    #[arg(long, global = true)]
    pub parallel: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the counting problem of a structure as FP or #P-complete.
    Analyze {
        structure: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
    /// Decide whether an instance has a solution.
    Decide {
        structure: PathBuf,
        instance: PathBuf,
    },
    /// Count the solutions of one or more instances exactly.
    Count {
        structure: PathBuf,
        #[arg(required = true)]
        instances: Vec<PathBuf>,
        /// Count even when the analysis does not report FP.
        #[arg(long)]
        force: bool,
        #[arg(long, default_value = "frame")]
        method: String,
        #[arg(long, default_value = "direct")]
        adder: String,
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
    /// Count by exhaustive enumeration.
    Oracle {
        structure: PathBuf,
        instance: PathBuf,
        /// Largest n·log2(q) enumerated.
        #[arg(long, default_value_t = ccsp_core::oracle::DEFAULT_MAX_BITS)]
        max_bits: f64,
        /// Print every solution after the count.
        #[arg(long)]
        list: bool,
    },
    /// Print the small frame of an instance's solution set.
    Frame {
        structure: PathBuf,
        instance: PathBuf,
        #[arg(long, default_value = "direct")]
        adder: String,
    },
    /// Compare the frame-based algorithms with brute force on random cases.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// One of: mixed, xor3, eq-const, diagonal, coset, closure.
        #[arg(long, default_value = "mixed")]
        fixture: String,
        #[arg(long, default_value_t = 6)]
        max_vars: usize,
        #[arg(long, default_value_t = 6)]
        max_constraints: usize,
        #[arg(long, default_value_t = 16.0)]
        max_bits: f64,
        #[arg(long, default_value = "frame")]
        method: String,
        #[arg(long, default_value = "direct")]
        adder: String,
    },
}

#[derive(Debug, Clone, Args)]
pub struct AnalysisArgs {
    /// Node limit for each automorphism search.
    #[arg(long, default_value_t = 2_000_000)]
    pub max_nodes: u64,
    /// Wall-clock limit in seconds for the automorphism sweep.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Random formulas tried by the balance refuter.
    #[arg(long, default_value_t = 40)]
    pub formulas: usize,
    /// Seed for the balance refuter.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl Default for AnalysisArgs {
    fn default() -> Self {
        Self {
            max_nodes: 2_000_000,
            time_limit: None,
            formulas: 40,
            seed: 0,
        }
    }
}

fn read(path: &Path) -> Result<String, Outcome> {
    std::fs::read_to_string(path)
        .map_err(|e| Outcome::error(exit::PARSE_ERROR, format!("{}: {e}", path.display())))
}

fn load_structure(path: &Path) -> Result<parse::StructureFile, Outcome> {
    parse::parse_structure(&read(path)?).map_err(|e| {
        Outcome::error(
            exit::PARSE_ERROR,
            format!("{}:{}: {}", path.display(), e.line, e.message),
        )
    })
}

fn load_instance(
    path: &Path,
    s: &parse::StructureFile,
) -> Result<ccsp_core::frames::Instance, Outcome> {
    parse::parse_instance(&read(path)?, &s.full).map_err(|e| {
        Outcome::error(
            exit::PARSE_ERROR,
            format!("{}:{}: {}", path.display(), e.line, e.message),
        )
    })
}

/// Parses `args` (program name first) and runs the command. Usage errors
/// exit with the parse-error code; `--help` and `--version` succeed.
pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                Outcome {
                    code: exit::PARSE_ERROR,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome::ok(text)
            }
        }
    }
}

pub fn run(cli: Cli) -> Outcome {
    let parallel = cli.parallel;
    let result = match cli.command {
        Command::Analyze {
            structure,
            analysis,
        } => load_structure(&structure).map(|s| commands::analyze(&s, &analysis, parallel)),
        Command::Decide {
            structure,
            instance,
        } => load_structure(&structure).and_then(|s| {
            let inst = load_instance(&instance, &s)?;
            Ok(commands::decide(&s, &inst))
        }),
        Command::Count {
            structure,
            instances,
            force,
            method,
            adder,
            analysis,
        } => load_structure(&structure).and_then(|s| {
            let insts = instances
                .iter()
                .map(|p| load_instance(p, &s))
                .collect::<Result<Vec<_>, _>>()?;
            let opts = commands::CountOptions {
                force,
                method,
                adder,
                analysis,
                parallel,
            };
            Ok(commands::count(&s, &insts, &opts))
        }),
        Command::Oracle {
            structure,
            instance,
            max_bits,
            list,
        } => load_structure(&structure).and_then(|s| {
            let inst = load_instance(&instance, &s)?;
            Ok(commands::oracle(&s, &inst, max_bits, list))
        }),
        Command::Frame {
            structure,
            instance,
            adder,
        } => load_structure(&structure).and_then(|s| {
            let inst = load_instance(&instance, &s)?;
            Ok(commands::frame(&s, &inst, &adder))
        }),
        Command::Selftest {
            seed,
            trials,
            fixture,
            max_vars,
            max_constraints,
            max_bits,
            method,
            adder,
        } => {
            let opts = selftest::SelftestOptions {
                seed,
                trials,
                fixture,
                max_vars,
                max_constraints,
                max_bits,
            };
            Ok(commands::selftest(&opts, &method, &adder))
        }
    };
    result.unwrap_or_else(|o| o)
}
