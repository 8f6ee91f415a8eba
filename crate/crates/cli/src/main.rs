use std::path::PathBuf;
use std::process::ExitCode;

use binn::benchmarks::BenchmarkName;
use binn_cli::commands::{eval, solve};
use binn_cli::config::{Overrides, RunConfig};
use binn_cli::{verify, CliError};
use clap::{Args, Parser, Subcommand};

/// Train boundary-integral networks on 2D potential and elasticity problems.
#[derive(Parser)]
#[command(name = "binn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on a problem and write checkpoint, loss, boundary, interior and metrics files.
    Solve(RunArgs),
    /// Run the deterministic oracle suite and print a pass/fail table.
    Verify,
    /// Evaluate a checkpoint at the points listed in a file.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// One `x1,x2` pair per line.
        #[arg(long)]
        points: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// flower, cylinder, beam, hertz or inclusion.
    #[arg(long)]
    problem: Option<BenchmarkName>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    width: Option<usize>,
    /// Gauss points per segment (even).
    #[arg(long)]
    ng: Option<usize>,
    /// Output directory (falls back to BINN_OUT_DIR, then ./binn-out).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Subdivide each segment this many times for interior evaluation.
    #[arg(long)]
    refine: Option<usize>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_path(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(&Overrides {
            problem: self.problem,
            iterations: self.iters,
            seed: self.seed,
            learning_rate: self.lr,
            width: self.width,
            n_g: self.ng,
            out: self.out.clone(),
            threads: self.threads,
            refine: self.refine,
        });
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => {
            let cfg = args.config()?;
            let m = solve(&cfg)?;
            let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4e}"));
            println!(
                "{}: {} iterations, final loss {:.4e}, boundary rel L2 {}, interior rel L2 {}, {:.1} s -> {}",
                m.problem,
                m.iterations,
                m.final_loss,
                fmt(m.boundary_rel_l2),
                fmt(m.interior_rel_l2),
                m.runtime_s,
                cfg.output_dir().display()
            );
            Ok(())
        }
        Command::Verify => {
            let rows = verify::run();
            print!("{}", verify::table(&rows));
            match rows.iter().filter(|(c, _)| !c.passed()).count() {
                0 => Ok(()),
                n => Err(CliError::Verify(n)),
            }
        }
        Command::Eval { run, checkpoint, points } => {
            let path = eval(&run.config()?, &checkpoint, &points)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
