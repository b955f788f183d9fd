//! Batch front end: space configs in, CSV reports out.
//!
//! Exit codes: 0 all certificates pass, 1 a certificate or bound failed,
//! 2 usage or parse error.

mod commands;
mod config;
mod report;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{Globals, Outcome, TunnelConstruction};
use propinquity::error::Error;

#[derive(Parser)]
#[command(
    name = "propinquity",
    version,
    about = "Dual Gromov-Hausdorff propinquity toolkit"
)]
struct Cli {
    /// Net resolution for bracketed measurements (default: 0.05 x diameter).
    #[arg(long, global = true)]
    net_resolution: Option<f64>,
    /// Seed for every randomized certificate.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Iteration budget for the subgradient solver.
    #[arg(long, global = true, default_value_t = 5000)]
    iters: usize,
    /// Feasibility tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Write the CSV report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstructionArg {
    Identity,
    DirectSum,
    Correspondence,
}

#[derive(Subcommand)]
enum Command {
    /// Run kernel, Leibniz and diameter certificates on a space config.
    Check { config: String },
    /// Monge-Kantorovich distance between two states of one space.
    Dist {
        config: String,
        #[arg(long)]
        state_a: String,
        #[arg(long)]
        state_b: String,
    },
    /// Build a tunnel between two spaces and measure reach, depth, length.
    Tunnel {
        config_a: String,
        config_b: String,
        #[arg(long, value_enum, default_value = "direct-sum")]
        construction: ConstructionArg,
        /// Scale of the correspondence morphism-difference atom.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Scale of the direct-sum morphism-difference atom.
        #[arg(long)]
        d_scale: Option<f64>,
    },
    /// Best journey bound between two spaces.
    Journey {
        config_a: String,
        config_b: String,
        /// Registry document to import before and export after the query.
        #[arg(long)]
        registry: Option<String>,
    },
    /// Circle subgroup convergence experiment.
    Converge {
        /// Ascending comma-separated orders, each dividing k-max.
        #[arg(long, value_delimiter = ',')]
        k_list: Vec<usize>,
        #[arg(long)]
        k_max: usize,
    },
    /// Truncated chain space over consecutively glued spaces.
    Chain {
        chain_config: String,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Exact Gromov-Hausdorff distance for tiny metric spaces.
    Gh { config_a: String, config_b: String },
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let globals = Globals {
        seed: cli.seed,
        iters: cli.iters,
        tol: cli.tol,
        net_resolution: cli.net_resolution,
    };
    let load = |path: &str| config::load_config(path).map_err(Error::Domain);
    match &cli.command {
        Command::Check { config } => commands::cmd_check(&load(config)?, &globals),
        Command::Dist {
            config,
            state_a,
            state_b,
        } => commands::cmd_dist(&load(config)?, state_a, state_b, &globals),
        Command::Tunnel {
            config_a,
            config_b,
            construction,
            epsilon,
            d_scale,
        } => {
            let c = match construction {
                ConstructionArg::Identity => TunnelConstruction::Identity,
                ConstructionArg::DirectSum => TunnelConstruction::DirectSum { d_scale: *d_scale },
                ConstructionArg::Correspondence => {
                    TunnelConstruction::Correspondence { epsilon: *epsilon }
                }
            };
            commands::cmd_tunnel(&load(config_a)?, &load(config_b)?, &c, &globals)
        }
        Command::Journey {
            config_a,
            config_b,
            registry,
        } => commands::cmd_journey(
            &load(config_a)?,
            &load(config_b)?,
            registry.as_deref(),
            &globals,
        ),
        Command::Converge { k_list, k_max } => commands::cmd_converge(k_list, *k_max, &globals),
        Command::Chain { chain_config, n } => {
            let chain = config::load_chain(chain_config).map_err(Error::Domain)?;
            commands::cmd_chain(&chain, *n, &globals)
        }
        Command::Gh { config_a, config_b } => {
            commands::cmd_gh(&load(config_a)?, &load(config_b)?, &globals)
        }
    }
}

fn emit(csv: &str, out: &Option<String>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = std::time::Instant::now();
    let result = run(&cli);
    let elapsed = started.elapsed();
    match result {
        Ok(Outcome::Pass(rep)) => {
            if emit(&rep.to_csv(), &cli.out).is_err() {
                return ExitCode::from(2);
            }
            eprintln!("ok in {:.3}s", elapsed.as_secs_f64());
            ExitCode::SUCCESS
        }
        Ok(Outcome::CertificateFail(rep)) => {
            if emit(&rep.to_csv(), &cli.out).is_err() {
                return ExitCode::from(2);
            }
            eprintln!("certificate failure in {:.3}s", elapsed.as_secs_f64());
            ExitCode::from(1)
        }
        Err(Error::Domain(msg)) | Err(Error::Structure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
