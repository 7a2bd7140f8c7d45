use cavity_phase_cli::{run_job, JobConfig, JobError};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cavity-phase", version, about = "Ground-state phase diagrams of atoms in a single-mode cavity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a job file and write its artifacts.
    Run {
        config: PathBuf,
        /// Worker threads for samples and sizes.
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory; overrides output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a job file without running it.
    Validate { config: PathBuf },
}

fn load(path: &PathBuf) -> Result<JobConfig, JobError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        JobError::Validation(vec![cavity_phase_cli::FieldError { field: path.display().to_string(), message: e.to_string() }])
    })?;
    let config = JobConfig::parse(&text).map_err(JobError::Validation)?;
    config.validate().map_err(JobError::Validation)?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => load(&config).map(|c| println!("{}: ok ({})", config.display(), c.kind.name())),
        Command::Run { config, workers, out } => load(&config).and_then(|c| {
            let dir = out.unwrap_or_else(|| PathBuf::from(c.out_dir.clone().unwrap_or_else(|| "out".into())));
            let m = run_job(&c, &dir, workers)?;
            for f in &m.files {
                println!("{}  {}", f.sha256, dir.join(&f.path).display());
            }
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
