use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hstruct::runner::{run_config, Report, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "hstruct", version, about = "Counting, dimension and measure experiments on H-structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Directory receiving the report files.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        jobs: Option<usize>,
        /// Step budget for each counting job.
        #[arg(long)]
        budget: Option<u64>,
    },
}

fn write_report(dir: &Path, report: &Report) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for (name, text) in &report.files {
        fs::write(dir.join(name), text)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run { config, out, jobs, budget } = cli.command;
    let text = match fs::read_to_string(&config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config.display());
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        pool = pool.num_threads(n.max(1));
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let report = match pool.install(|| run_config(&text, budget)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    if let Err(e) = write_report(&out, &report) {
        eprintln!("error: cannot write reports to {}: {e}", out.display());
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    for f in &report.failures {
        eprintln!("FAIL {f}");
    }
    if report.budget_exceeded {
        eprintln!("budget exceeded");
    }
    ExitCode::from(report.exit_code() as u8)
}
