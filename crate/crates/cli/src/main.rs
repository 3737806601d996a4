//! `expfam`: densities, predictive densities, intervals, coverage simulations
//! and verification suites for natural exponential families.

mod commands;
mod config;
mod data;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "expfam", version, about = "Exponential-family inference: CNML vs Jeffreys prediction, saddle-point exactness, credible and confidence intervals")]
struct Cli {
    #[command(flatten)]
    shared: Shared,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Shared {
    /// gamma, gaussian, inverse-gaussian or poisson-exp
    #[arg(long, global = true)]
    family: Option<String>,
    /// Gamma shape α
    #[arg(long, global = true)]
    shape: Option<f64>,
    /// Inverse Gaussian or Poisson-exponential shape κ
    #[arg(long, global = true)]
    kappa: Option<f64>,
    /// Gaussian covariance B, rows separated by ';' (default 1)
    #[arg(long, global = true)]
    cov: Option<String>,
    /// Quadrature tolerance (default 1e-10)
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// json or csv (default json)
    #[arg(long, global = true)]
    format: Option<String>,
    /// Observations, one per line; '#' starts a comment line
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Credibility or confidence level in (0, 1) (default 0.9)
    #[arg(long, global = true)]
    level: Option<f64>,
    /// Observations per simulated data set
    #[arg(long, global = true)]
    m: Option<usize>,
    /// Monte Carlo trials (default 100000)
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Flat key = value file of defaults; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

/// The parameter of a distribution: exactly one of these.
#[derive(Args, Debug, Default)]
struct ParamFlags {
    /// Rate β of a half-line family (θ = −β)
    #[arg(long)]
    rate: Option<f64>,
    /// Mean μ (comma-separated for a vector family)
    #[arg(long, allow_hyphen_values = true)]
    mean: Option<String>,
    /// Natural parameter θ (comma-separated for a vector family)
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Density (or atom mass) of one distribution at one point
    Density {
        #[command(flatten)]
        param: ParamFlags,
        /// Evaluation point (comma-separated for a vector family)
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
    },
    /// Log predictive density of future observations given --data
    Predict {
        /// Future observations: comma list, or ';'-separated points
        #[arg(long, allow_hyphen_values = true)]
        future: Option<String>,
        /// cnml, jeffreys or plugin (default cnml)
        #[arg(long)]
        method: Option<String>,
        /// Report CNML and Jeffreys side by side
        #[arg(long)]
        compare: bool,
        /// Agreement threshold for --compare (default 1e-6)
        #[arg(long)]
        equivalence_tol: Option<f64>,
    },
    /// One-sided interval for the rate (or divergence ball for the Gaussian)
    Interval {
        /// credible, confidence or both (default credible)
        #[arg(long)]
        method: Option<String>,
    },
    /// Frequentist coverage of an interval construction at a true parameter
    Coverage {
        #[command(flatten)]
        param: ParamFlags,
        /// credible or confidence (default credible)
        #[arg(long)]
        method: Option<String>,
    },
    /// Run verification suites; exits 1 if any check fails
    Verify {
        /// identities, lemma1, equivalence, saddlepoint, normalization, coverage, hygiene or all
        #[arg(long)]
        suite: Option<String>,
        /// Draws for the compound-Poisson histogram check (default 1000000)
        #[arg(long)]
        mc_samples: Option<usize>,
        /// Report zero runtimes so repeated runs print identical output
        #[arg(long)]
        no_timing: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(outcome) => {
            print!("{}", outcome.text);
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
