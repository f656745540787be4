use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use vwls_mdvi::design::{frank_wolfe, WeightingFunction};
use vwls_mdvi::harness::{
    read_records, run_experiment, solve, summarize, workers_from_env, write_records, write_summary,
    ExperimentConfig, MdpParams, SolveConfig,
};
use vwls_mdvi::linear_mdp::{oracle_weighting, LinearMdp};
use vwls_mdvi::mdvi::heuristic_counts;
use vwls_mdvi::registry::SolverRegistry;
use vwls_mdvi::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "mdvi",
    version,
    about = "Variance-weighted least-squares MDVI on linear MDPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multi-MDP experiments.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Optimal designs.
    #[command(subcommand)]
    Design(DesignCommand),
    /// Hard linear MDP instances.
    #[command(subcommand)]
    Mdp(MdpCommand),
    /// Run one solver on one hard MDP and print a JSON result.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Bound-shaped K, M and M_sigma with all unknown constants set to 1 (heuristic).
    Heuristic {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        horizon: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
    },
    /// List registered algorithm kinds.
    Algorithms,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Run every configured algorithm on every MDP and write the record CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to `output_path` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the summary CSV here.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Defaults to MDVI_WORKERS, then the core count.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Aggregate a record CSV into mean and standard error per checkpoint.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Weighting {
    One,
    Oracle,
}

#[derive(Subcommand)]
enum DesignCommand {
    /// Frank-Wolfe design for an MDP JSON file.
    Compute {
        #[arg(long)]
        mdp: PathBuf,
        #[arg(long, value_enum, default_value_t = Weighting::One)]
        f: Weighting,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MdpCommand {
    /// Generate a hard linear MDP as JSON.
    Generate {
        #[arg(long, default_value_t = 30)]
        num_actions: usize,
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 0.9)]
        gamma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Error> {
    let mut w = output(path)?;
    writeln!(w, "{text}")?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Error> {
    let registry = SolverRegistry::with_builtin();
    match cli.command {
        Command::Experiment(ExperimentCommand::Run {
            config,
            out,
            summary,
            workers,
        }) => {
            let config = ExperimentConfig::load(&config)?;
            let out = out
                .or_else(|| config.output_path.clone())
                .ok_or_else(|| Error::InvalidArgument("no --out and no output_path".into()))?;
            let result =
                run_experiment(&config, &registry, workers.unwrap_or_else(workers_from_env))?;
            write_records(&result.records, File::create(&out)?)?;
            if let Some(path) = summary {
                write_summary(&summarize(&result.records), File::create(path)?)?;
            }
            for (seed, label, message) in &result.failures {
                eprintln!("failed: mdp_seed={seed} algorithm={label}: {message}");
            }
            Ok(if result.failures.is_empty() {
                0
            } else {
                EXIT_PARTIAL
            })
        }
        Command::Experiment(ExperimentCommand::Summarize { input, out }) => {
            let records = read_records(File::open(input)?)?;
            write_summary(&summarize(&records), output(out.as_deref())?)?;
            Ok(0)
        }
        Command::Design(DesignCommand::Compute { mdp, f, eps, out }) => {
            let mdp = LinearMdp::from_json(&std::fs::read_to_string(mdp)?)?;
            let f = match f {
                Weighting::One => WeightingFunction::ones(&mdp),
                Weighting::Oracle => oracle_weighting(&mdp)?,
            };
            let design = frank_wolfe(&mdp, &f, eps, None)?;
            write_text(out.as_deref(), &design.to_json()?)?;
            Ok(0)
        }
        Command::Mdp(MdpCommand::Generate {
            num_actions,
            dim,
            gamma,
            seed,
            out,
        }) => {
            let mdp = MdpParams {
                num_actions,
                dim,
                gamma,
            }
            .build(seed)?;
            write_text(out.as_deref(), &mdp.to_json()?)?;
            Ok(0)
        }
        Command::Solve { config } => {
            let config = SolveConfig::load(&config)?;
            let (result, _) = solve(&config, &registry)?;
            write_text(None, &serde_json::to_string_pretty(&result)?)?;
            Ok(0)
        }
        Command::Heuristic {
            dim,
            horizon,
            eps,
            delta,
        } => {
            let counts = heuristic_counts(dim, horizon, eps, delta)?;
            eprintln!("heuristic: all unknown constants set to 1");
            write_text(None, &serde_json::to_string_pretty(&counts)?)?;
            Ok(0)
        }
        Command::Algorithms => {
            for kind in registry.kinds() {
                println!("{kind}\t{}", registry.get(kind)?.description());
            }
            Ok(0)
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) | Error::UnknownAlgorithm(_) | Error::Json(_) => EXIT_INVALID,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
