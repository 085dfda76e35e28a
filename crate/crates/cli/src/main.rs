//! `spectra`: command-line front end for treespec.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

const DEFAULTS: &str = "\
Defaults and constants:
  Aomoto solver      tol 1e-12 (relative to max(1, max|w|)), theta 0.5 (damped
                     iteration), max-iter 100000, Newton capped at 100 steps,
                     step halvings 6
  Smoothing          eta 1e-3; each abscissa descends from Im z = max(1, eta)
                     by halving, in blocks of 32 grid points
  Default grid       [-(R + 0.5), R + 0.5] with step 0.01, where
                     R = max_u (|b_u| + sum of |a| at u)
  Spectral edges     tol 1e-10, feasibility cap 10000 iterations, blow-up 1e6
  Bands              threshold 1e-3, gaps below 3 eta merged, 99% converged
                     points required, mass tolerance 0.03 around k/n
  Ball caps          5000000 vertices, radius 64
  Random lifts       stream i of seed s is SplitMix64(s ^ i * 0x9E3779B97F4A7C15)
                     (multipliers 0xBF58476D1CE4E5B9, 0x94D049BB133111EB);
                     generator xorshift64* with multiplier 0x2545F4914F6CDD1D;
                     trial t of `dos --method lift` uses seed s + t

Exit codes: 0 success, 1 usage or input error, 2 numeric failure
(unconverged or uncertified), 3 resource cap.";

#[derive(Parser, Debug)]
#[command(
    name = "spectra",
    version,
    about = "Spectra of Jacobi operators on universal covering trees"
)]
#[command(after_help = DEFAULTS)]
struct Cli {
    /// Worker threads; outputs do not depend on it. Defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Left and right spectral edges of the universal cover.
    Radius {
        graph: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Density of states as CSV.
    Dos {
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Aomoto)]
        method: Method,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Lift degree (lift method).
        #[arg(long, default_value_t = 500)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Independent lifts pooled into the histogram (lift method).
        #[arg(long, default_value_t = 1)]
        trials: u64,
        /// Histogram bins over the grid range (lift method).
        #[arg(long, default_value_t = 128)]
        bins: usize,
    },
    /// Bands of the density of states, their masses and the closed-form
    /// prediction where one applies.
    Bands {
        graph: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 1e-3)]
        threshold: f64,
    },
    /// Ball of the universal cover around a lift of `root`.
    Cover {
        graph: PathBuf,
        #[arg(long, default_value_t = 0)]
        root: usize,
        #[arg(long, default_value_t = 4)]
        radius: usize,
    },
    /// Random d-lift of a graph, or its eigenvalues.
    Lift {
        graph: PathBuf,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the sorted eigenvalues instead of the graph.
        #[arg(long)]
        eigs: bool,
    },
    /// Density-of-states moments of the universal cover, from walk counts.
    Moments {
        graph: PathBuf,
        /// Highest moment.
        #[arg(long, default_value_t = 8)]
        k: u32,
    },
    /// Core of an amalgamated free product, as a graph with label comments.
    Product {
        spec: PathBuf,
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    /// Amalgam spec of the Cayley graph of an amalgamated product of finite
    /// groups.
    Cayley { groups: PathBuf },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Aomoto,
    Lift,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// `lo:hi:step`.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    grid: Option<(f64, f64, f64)>,
    #[arg(long, default_value_t = 1e-3)]
    eta: f64,
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Damped fixed-point iteration instead of Newton.
    #[arg(long)]
    plain: bool,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
}

fn parse_grid(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected lo:hi:step".into());
    }
    let mut v = [0.0; 3];
    for (x, p) in v.iter_mut().zip(&parts) {
        *x = p
            .trim()
            .parse()
            .map_err(|_| format!("not a number: `{p}`"))?;
    }
    if !(v[2] > 0.0 && v[1] >= v[0]) {
        return Err("need lo <= hi and step > 0".into());
    }
    Ok((v[0], v[1], v[2]))
}

/// Failure of a subcommand, mapped to an exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numeric(String),
    Resource(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numeric(_) => 2,
            Failure::Resource(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numeric(m) | Failure::Resource(m) => m,
        }
    }
}

impl From<treespec::Error> for Failure {
    fn from(e: treespec::Error) -> Self {
        use treespec::Error as E;
        match e {
            E::Parse { .. } | E::Invalid(_) => Failure::Usage(e.to_string()),
            E::Resource(_) => Failure::Resource(e.to_string()),
            E::Numeric(_) | E::Internal(_) => Failure::Numeric(e.to_string()),
        }
    }
}

/// Output text, plus a numeric failure to report after writing it.
pub struct Outcome {
    pub text: String,
    pub uncertified: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = commands::run(&cli.command).and_then(|outcome| {
        write_output(cli.out.as_ref(), &outcome.text)?;
        match outcome.uncertified {
            Some(msg) => Err(Failure::Numeric(msg)),
            None => Ok(()),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Usage(format!("cannot write output: {e}"));
    match path {
        Some(p) => std::fs::write(p, text).map_err(io),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(io),
    }
}
