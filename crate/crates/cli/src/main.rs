use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use parisi_cli::{compare, digest, parse_records, records_to_text, run, Command, Output, RunConfig, RunError};

const AFTER_HELP: &str = "\
Output: one key=value record per result, records separated by blank lines.
Stochastic outputs carry <key>_stderr and <key>_n.

CSV files (written to the output directory when one is set):
  guerra_N<N>.csv     t,mean,stderr,N,seed
  overlaps[_N<N>].csv sample,n,upper   (upper = strict upper triangle, ';'-separated)

Exit status: 0 success, 2 validation error, 3 numerical failure.";

#[derive(Debug, Parser)]
#[command(name = "parisi-lab", version, about = "Parisi functional laboratory", after_help = AFTER_HELP)]
struct Cli {
    /// Worker threads for the Monte Carlo loops (results do not depend on it)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory; overrides the `output` key of the config
    #[arg(long, global = true, env = "PARISI_LAB_OUTPUT_DIR")]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Parisi functional at fixed parameters
    Evaluate { config: PathBuf },
    /// Minimise the functional over m, q and k
    Optimize { config: PathBuf },
    /// Disorder-averaged free energy by exact enumeration
    Simulate { config: PathBuf },
    /// Quadrature against cascade Monte Carlo
    RpcCheck { config: PathBuf },
    /// Interpolation curve phi(t)
    Guerra { config: PathBuf },
    /// Cavity free-energy increment
    Ass { config: PathBuf },
    /// Ghirlanda-Guerra statistics
    Gg { config: PathBuf },
    /// Ultrametric fraction of overlap triples
    Ultra { config: PathBuf },
    /// Probability of overlaps below -epsilon
    Positivity { config: PathBuf },
    /// Gap between free-energy records and a Parisi record
    Compare { a: PathBuf, b: PathBuf },
}

fn read(path: &Path) -> Result<String, RunError> {
    std::fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

fn write_output(dir: &Path, name: &str, out: &Output) -> Result<(), RunError> {
    let io = |e: std::io::Error| RunError::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join(format!("{name}.txt")), records_to_text(&out.records)).map_err(io)?;
    for (file, content) in &out.files {
        std::fs::write(dir.join(file), content).map_err(io)?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), RunError> {
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(RunError::Config(parisi_cli::ConfigError::new("--workers", "must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| RunError::Io(e.to_string()))?;
    }
    let (command, path) = match cli.command {
        Sub::Compare { a, b } => {
            let parse = |p: &Path| parse_records(&read(p)?).map_err(|e| RunError::Io(format!("{}: {e}", p.display())));
            let out = Output { records: compare(&parse(&a)?, &parse(&b)?)?, files: Vec::new() };
            print!("{}", records_to_text(&out.records));
            if let Some(dir) = &cli.output {
                write_output(dir, "compare", &out)?;
            }
            return Ok(());
        }
        Sub::Evaluate { config } => (Command::Evaluate, config),
        Sub::Optimize { config } => (Command::Optimize, config),
        Sub::Simulate { config } => (Command::Simulate, config),
        Sub::RpcCheck { config } => (Command::RpcCheck, config),
        Sub::Guerra { config } => (Command::Guerra, config),
        Sub::Ass { config } => (Command::Ass, config),
        Sub::Gg { config } => (Command::Gg, config),
        Sub::Ultra { config } => (Command::Ultra, config),
        Sub::Positivity { config } => (Command::Positivity, config),
    };
    let text = read(&path)?;
    let cfg = RunConfig::parse(&text)?;
    let out = run(command, &cfg, &digest(command.name(), &text))?;
    print!("{}", records_to_text(&out.records));
    if let Some(dir) = cli.output.as_ref().or(cfg.output.as_ref()) {
        write_output(dir, command.name(), &out)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
