//! `csrr`: command-line front end. Reports go to stdout as a JSON array,
//! diagnostics to stderr. Exit status 0 = all pass, 1 = some check failed,
//! 2 = bad input.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use csrr::cli_io::{exit_code, parse_problem, run, Command, Identity, ProblemFile, RunOptions};
use csrr::report::emit_reports;
use csrr::Error;

#[derive(Parser)]
#[command(name = "csrr", version, about = "Exact and numeric checks of Chern-Simons Riemann-Roch identities on the projective line")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Seed for random inputs and numeric sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Relative tolerance of numeric comparisons.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Run over random connections with rank ≤ N, points ≤ delta, degree ≤ n.
    #[arg(long, global = true, value_name = "N,delta,n", value_parser = parse_grid)]
    grid: Option<(usize, usize, usize)>,
}

#[derive(Args)]
struct Input {
    /// Problem file (JSON); `-` reads standard input.
    problem: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide whether the curvature is pulled back from the base.
    CheckBasic(Input),
    /// Transgression classes of the total connection and their derivative check.
    Cs {
        #[command(flatten)]
        input: Input,
        /// Degrees to compute, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        p: Vec<usize>,
    },
    /// Gauss-Manin matrices and the compatibility diagram.
    Gm(Input),
    /// Compare both sides of Riemann-Roch.
    VerifyRr {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long)]
        symbolic: bool,
        #[arg(long)]
        numeric: bool,
    },
    /// Auxiliary identities: trace-monomials, root-sums, dlog-wedge, splitting.
    VerifyIdentities {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        lemma: String,
        /// Word length for trace monomials, rank for dlog wedges, point count for root sums.
        #[arg(long, default_value_t = 4)]
        len: usize,
    },
    /// Finite pushforward checks for the `pushforward` block.
    Pushforward(Input),
    /// Seeded run of every invariant family.
    Selftest,
}

fn parse_grid(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let nums: Vec<usize> = parts.iter().map(|p| p.parse::<usize>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    match nums[..] {
        [a, b, c] if a > 0 && b > 0 && c > 0 => Ok((a, b, c)),
        _ => Err("expected three positive integers N,delta,n".into()),
    }
}

fn load(input: &Input) -> Result<Option<ProblemFile>, String> {
    let Some(path) = &input.problem else { return Ok(None) };
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| e.to_string())?;
        s
    } else {
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?
    };
    parse_problem(&text).map(Some).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions { seed: cli.seed, tol: cli.tol, grid: cli.grid };
    let (command, input) = match &cli.command {
        Cmd::CheckBasic(i) => (Command::CheckBasic, Some(i)),
        Cmd::Cs { input, p } => (Command::Cs { degrees: p.clone() }, Some(input)),
        Cmd::Gm(i) => (Command::Gm, Some(i)),
        Cmd::VerifyRr { input, n, symbolic, numeric } => {
            (Command::VerifyRr { n: *n, symbolic: *symbolic, numeric: *numeric }, Some(input))
        }
        Cmd::VerifyIdentities { input, lemma, len } => match Identity::from_name(lemma) {
            Some(identity) => (Command::VerifyIdentities { identity, len: *len }, Some(input)),
            None => {
                eprintln!("error: unknown identity `{lemma}`");
                return ExitCode::from(2);
            }
        },
        Cmd::Pushforward(i) => (Command::Pushforward, Some(i)),
        Cmd::Selftest => (Command::Selftest, None),
    };
    let problem = match input.map(load).transpose() {
        Ok(p) => p.flatten(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&command, problem.as_ref(), &opts) {
        Ok(reports) => {
            // a closed pipe is the reader's choice, not an error
            let _ = writeln!(std::io::stdout(), "{}", emit_reports(&reports));
            ExitCode::from(exit_code(&reports) as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            let input_error = matches!(
                e,
                Error::Schema(_) | Error::Syntax { .. } | Error::UnknownVariable(_) | Error::Shape(_) | Error::InvalidConnection(_) | Error::InvalidAlgebra(_) | Error::ZeroDiscriminant | Error::Numeric(_)
            );
            ExitCode::from(if input_error { 2 } else { 1 })
        }
    }
}
