use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use cardset::bench::BenchOptions;
use cardset_cli::{bench_dir, bench_plain, check_unsat_code, solve_file, RunOptions, SolveReport, EXIT_INPUT};

#[derive(Parser)]
#[command(name = "cardset", version, about = "Solver for finite set formulas with cardinality")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Compute minimal concrete solutions for size-constrained sets.
    #[arg(long)]
    fix_size: bool,
    /// Per-formula timeout in milliseconds.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    timeout: Option<u64>,
    /// Emit JSON instead of plain text.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a script and print its answers.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Stop after this many answers (0 means the first only).
        #[arg(long)]
        max_solutions: Option<usize>,
    },
    /// Prove a verification condition by showing it unsatisfiable.
    CheckUnsat {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run every `.slog` file below a directory.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Run without any timeout.
        #[arg(long, conflicts_with = "timeout")]
        no_timeout: bool,
    },
}

fn print_report(r: &SolveReport, json: bool) {
    if json {
        println!("{}", serde_json::to_string_pretty(r).expect("report serializes"));
    } else {
        print!("{}", r.to_plain());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Solve { file, common, max_solutions } => {
            let opts = RunOptions { timeout_millis: common.timeout, fix_size: common.fix_size, max_solutions };
            match solve_file(&file, &opts) {
                Ok(r) => {
                    print_report(&r, common.json);
                    r.exit_code()
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_INPUT
                }
            }
        }
        Cmd::CheckUnsat { file, common } => {
            let opts = RunOptions { timeout_millis: common.timeout, fix_size: common.fix_size, max_solutions: Some(1) };
            match solve_file(&file, &opts) {
                Ok(r) => {
                    if common.json {
                        print_report(&r, true);
                    } else if check_unsat_code(&r) == 0 {
                        println!("proved");
                    } else {
                        println!("not proved");
                        if !r.answers.is_empty() {
                            println!("counterexample:");
                            print!("{}", r.to_plain());
                        }
                    }
                    check_unsat_code(&r)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_INPUT
                }
            }
        }
        Cmd::Bench { dir, common, jobs, no_timeout } => {
            let opts = BenchOptions {
                timeout_millis: if no_timeout { None } else { Some(common.timeout.unwrap_or(2000)) },
                fix_size: common.fix_size,
                jobs,
            };
            match bench_dir(&dir, &opts) {
                Ok(r) => {
                    if common.json {
                        println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
                    } else {
                        print!("{}", bench_plain(&r));
                    }
                    (r.mismatches() > 0) as i32
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_INPUT
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
