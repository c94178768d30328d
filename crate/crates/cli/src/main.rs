//! `zodual` command-line front end.
//!
//! Exit codes: 0 on success, 2 on configuration or parameter-validation
//! failure, 1 on runtime errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use zodual::graph::{generate_graph, GraphKind};
use zodual::harness::{self, ExperimentConfig, HarnessError};
use zodual::objectives::{synthesize_data, write_data_csv};

#[derive(Parser)]
#[command(name = "zodual", version, about = "Distributed zeroth-order primal-dual experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Ring,
    RandomConnected,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run { config: PathBuf },
    /// Run the experiment for several horizons T (batch ⌈√T⌉) and fit γ₁/T + const.
    Sweep {
        config: PathBuf,
        /// Comma-separated horizons, at least three distinct values.
        #[arg(long = "T", value_delimiter = ',', required = true)]
        horizons: Vec<usize>,
    },
    /// Print parameter thresholds and derived constants without running.
    Validate {
        config: PathBuf,
        /// Emit JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Print a generated topology as JSON.
    GenGraph {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 0.0)]
        extra_edge_prob: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic classification dataset as CSV (label, features).
    GenData {
        #[arg(long)]
        agents: usize,
        #[arg(long)]
        batch: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        flip_prob: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, Failure> {
    ExperimentConfig::from_path(path).map_err(|e| match e {
        HarnessError::Io(m) => Failure::Runtime(m),
        other => Failure::Validation(other.to_string()),
    })
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { config } => {
            let cfg = load(&config)?;
            let result = harness::run_experiment(&cfg)?;
            let s = &result.summary;
            for note in &s.notes {
                eprintln!("{note}");
            }
            println!("wrote {} trial(s) to {}", s.trials, s.output_dir.display());
            println!("rho = {:.6e}, c = {:.6e}, mu = {}, J = {}, T = {}", s.rho, s.c, s.mu, s.batch, s.total_iters);
            for m in &s.methods {
                println!(
                    "{:<20} final gap {:.6e}  final ||Ax|| {:.6e}  E[gap at u] {:.6e}",
                    m.method, m.final_gap, m.final_violation, m.expected_output_gap
                );
            }
            if let Some((dx, dl)) = s.max_mode_discrepancy {
                println!("mode discrepancy: primal {dx:.3e}, dual/rho {dl:.3e}");
            }
            Ok(())
        }
        Command::Sweep { config, horizons } => {
            let cfg = load(&config)?;
            let report = harness::sweep(&cfg, &horizons)?;
            println!("{:>8} {:>6} {:>16} {:>16}", "T", "J", "E[gap at u]", "fit");
            for k in 0..report.horizons.len() {
                println!(
                    "{:>8} {:>6} {:>16.6e} {:>16.6e}",
                    report.horizons[k], report.batches[k], report.expected_output_gaps[k], report.fit.fitted[k]
                );
            }
            println!(
                "gamma1 = {:.6e}, const = {:.6e}, relative residual = {:.3}",
                report.fit.gamma1_hat, report.fit.const_hat, report.fit.relative_residual
            );
            Ok(())
        }
        Command::Validate { config, json } => {
            let cfg = load(&config)?;
            let v = harness::validate(&cfg)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&v).expect("report serializes"));
            } else {
                print!("{}", harness::render_validation(&v));
            }
            if v.report.valid {
                Ok(())
            } else {
                Err(Failure::Validation("parameters do not satisfy the sufficient conditions".into()))
            }
        }
        Command::GenGraph { kind, nodes, extra_edge_prob, seed, out } => {
            let kind = match kind {
                Kind::Ring => GraphKind::Ring,
                Kind::RandomConnected => GraphKind::RandomConnected { extra_edge_prob },
            };
            let topo = generate_graph(kind, nodes, seed).map_err(|e| Failure::Validation(e.to_string()))?;
            let text = serde_json::to_string(&topo).expect("topology serializes");
            match out {
                Some(path) => std::fs::write(&path, text + "\n")
                    .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?,
                None => println!("{text}"),
            }
            Ok(())
        }
        Command::GenData { agents, batch, dim, seed, flip_prob, out } => {
            if agents == 0 || batch == 0 || dim == 0 {
                return Err(Failure::Validation("agents, batch and dim must be positive".into()));
            }
            if !(0.0..=1.0).contains(&flip_prob) {
                return Err(Failure::Validation("flip_prob must lie in [0, 1]".into()));
            }
            let data = synthesize_data(agents, batch, dim, seed, flip_prob);
            write_data_csv(&out, &data).map_err(|e| Failure::Runtime(e.to_string()))?;
            println!("wrote {} rows to {}", agents * batch, out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
