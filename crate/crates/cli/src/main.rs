use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use survode_cli::config::load_config;
use survode_cli::run::{self, EstimateArgs, PowerArgs, SimulateArgs, TestArgs};
use survode_cli::CliError;

#[derive(Parser)]
#[command(
    name = "survode",
    version,
    about = "Event-history estimation, two-sample tests, and power simulation"
)]
struct Cli {
    /// TOML configuration file; flags override its values
    #[arg(short, long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master RNG seed for simulate and power (default 0)
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate parameter curves with pointwise confidence intervals
    Estimate {
        /// Input CSV, long format: one row per transition or censoring
        #[arg(short, long, value_name = "FILE")]
        input: PathBuf,
        /// Write the table here instead of stdout
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
        /// Parameter name, or 'all' for every one the schema supports
        #[arg(long, value_name = "NAME")]
        param: Option<String>,
        /// Transition schema of the data
        #[arg(long, value_name = "NAME")]
        schema: Option<String>,
        /// Evaluation horizon
        #[arg(long, value_name = "T")]
        t0: Option<f64>,
        /// Confidence level for the intervals
        #[arg(long, value_name = "P")]
        level: Option<f64>,
        /// Cause index for cumulative incidence
        #[arg(long, value_name = "K")]
        cause: Option<usize>,
        /// Covariate vector for adjusted estimates, comma separated
        #[arg(long, value_delimiter = ',', value_name = "Z,..", allow_hyphen_values = true)]
        z0: Option<Vec<f64>>,
    },
    /// Compare two groups at fixed times
    Test {
        /// Input CSV, long format: one row per transition or censoring
        #[arg(short, long, value_name = "FILE")]
        input: PathBuf,
        /// Write the result table here; the summary stays on stdout
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
        /// Parameter name, or 'all' for every one the schema supports
        #[arg(long, value_name = "NAME")]
        param: Option<String>,
        /// Transition schema of the data
        #[arg(long, value_name = "NAME")]
        schema: Option<String>,
        /// Single comparison time
        #[arg(long, value_name = "T")]
        t0: Option<f64>,
        /// Comparison times, comma separated (overrides --t0)
        #[arg(long, value_delimiter = ',', value_name = "T,..")]
        times: Option<Vec<f64>>,
        /// Confidence level for the reported intervals
        #[arg(long, value_name = "P")]
        level: Option<f64>,
        /// Cause index for cumulative incidence
        #[arg(long, value_name = "K")]
        cause: Option<usize>,
        /// Test statistic: plugin, logrank, or greenwood
        #[arg(long, value_name = "NAME")]
        test: Option<String>,
        /// Covariate vector for adjusted comparisons, comma separated
        #[arg(long, value_delimiter = ',', value_name = "Z,..", allow_hyphen_values = true)]
        z0: Option<Vec<f64>>,
    },
    /// Draw a synthetic two-arm dataset from a hazard scenario
    Simulate {
        /// Write the dataset here instead of stdout
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
        /// Parameter whose true difference is calibrated (with --kappa)
        #[arg(long, value_name = "NAME")]
        param: Option<String>,
        /// Hazard shape: constant, crossing, or deviating
        #[arg(long, value_name = "NAME")]
        shape: Option<String>,
        /// Event structure: single-event, competing-risks, recurrent-events,
        /// or illness-death
        #[arg(long, value_name = "NAME")]
        family: Option<String>,
        /// End of follow-up
        #[arg(long, value_name = "T")]
        horizon: Option<f64>,
        /// Calibrate the group-2 hazard to this true parameter difference
        #[arg(long, value_name = "D", allow_hyphen_values = true)]
        kappa: Option<f64>,
        /// Time the calibrated difference refers to
        #[arg(long, value_name = "T")]
        t0: Option<f64>,
        /// Subjects per group
        #[arg(long, value_name = "N")]
        n: Option<usize>,
        /// Fraction of subjects censored early, in [0, 1)
        #[arg(long, value_name = "F")]
        censor: Option<f64>,
    },
    /// Monte Carlo rejection rates over a grid of true differences
    Power {
        /// Write the table here; per-point summaries stay on stdout
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
        /// Parameter being tested
        #[arg(long, value_name = "NAME")]
        param: Option<String>,
        /// Hazard shape: constant, crossing, or deviating
        #[arg(long, value_name = "NAME")]
        shape: Option<String>,
        /// Event structure; defaults to the one the parameter reads
        #[arg(long, value_name = "NAME")]
        family: Option<String>,
        /// End of follow-up
        #[arg(long, value_name = "T")]
        horizon: Option<f64>,
        /// True parameter differences, comma separated
        #[arg(long, value_delimiter = ',', value_name = "D,..", allow_hyphen_values = true)]
        kappas: Option<Vec<f64>>,
        /// Evaluation time of the tested parameter
        #[arg(long, value_name = "T")]
        t0: Option<f64>,
        /// Subjects per group
        #[arg(long, value_name = "N")]
        n: Option<usize>,
        /// Monte Carlo replications per point
        #[arg(long, value_name = "M")]
        replications: Option<usize>,
        /// Significance level of the tests
        #[arg(long, value_name = "P")]
        level: Option<f64>,
        /// Test statistic: plugin, logrank, or greenwood
        #[arg(long, value_name = "NAME")]
        test: Option<String>,
        /// Fraction of subjects censored early, in [0, 1)
        #[arg(long, value_name = "F")]
        censor: Option<f64>,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(cli.config.as_deref())?;
    let seed = cli.seed.or(cfg.scenario.seed).unwrap_or(0);
    match cli.command {
        Command::Estimate {
            input,
            output,
            param,
            schema,
            t0,
            level,
            cause,
            z0,
        } => run::estimate(
            &cfg,
            &EstimateArgs {
                input,
                output,
                param,
                schema,
                t0,
                level,
                cause,
                z0,
            },
        ),
        Command::Test {
            input,
            output,
            param,
            schema,
            t0,
            times,
            level,
            cause,
            test,
            z0,
        } => run::test(
            &cfg,
            &TestArgs {
                input,
                output,
                param,
                schema,
                t0,
                times,
                level,
                cause,
                test,
                z0,
            },
        ),
        Command::Simulate {
            output,
            param,
            shape,
            family,
            horizon,
            kappa,
            t0,
            n,
            censor,
        } => run::simulate(
            &cfg,
            &SimulateArgs {
                output,
                param,
                shape,
                family,
                horizon,
                kappa,
                t0,
                n,
                censor,
                seed,
            },
        ),
        Command::Power {
            output,
            param,
            shape,
            family,
            horizon,
            kappas,
            t0,
            n,
            replications,
            level,
            test,
            censor,
        } => run::power(
            &cfg,
            &PowerArgs {
                output,
                param,
                shape,
                family,
                horizon,
                kappas,
                t0,
                n,
                replications,
                level,
                test,
                censor,
                seed,
            },
        ),
    }
}

fn main() {
    // Restore default SIGPIPE handling so `survode ... | head` dies quietly
    // instead of panicking when the reader closes the pipe.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = dispatch(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
