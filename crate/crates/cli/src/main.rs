use std::fs::OpenOptions;
use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use qengine_cli::{run, Cli, CliError, CliResult};

fn execute(cli: &Cli) -> CliResult<()> {
    // check the destination before spending time on the simulation
    if let Some(path) = &cli.output {
        if path.exists() && !cli.force {
            return Err(CliError::Usage(format!(
                "{} already exists; pass --force to overwrite",
                path.display()
            )));
        }
    }

    let csv = match cli.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?
            .install(|| run(&cli.command))?,
        None => run(&cli.command)?,
    };

    match &cli.output {
        Some(path) => {
            let mut file = OpenOptions::new()
                .write(true)
                .create(true)
                .truncate(true)
                .open(path)?;
            file.write_all(csv.as_bytes())?;
            log::info!("wrote {}", path.display());
        }
        None => std::io::stdout().lock().write_all(csv.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qengine: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
