use std::io::Write;
use std::process::ExitCode;

use fdcache_cli::{execute, parse_args, render_summary, threads_from_env, CliError};

fn run() -> Result<(), CliError> {
    let spec = parse_args(std::env::args_os())?;
    if let Some(threads) = threads_from_env()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;
    }
    let output = execute(&spec)?;
    let file = std::fs::File::create(&spec.output_path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", spec.output_path.display())))?;
    fdcache_cli::write_csv(&output.rows, file)?;
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(render_summary(&spec, &output).as_bytes())?;
    writeln!(
        stdout,
        "wrote {} rows to {}",
        output.rows.len(),
        spec.output_path.display()
    )?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Clap(e)) => e.exit(),
        Err(e) => {
            eprintln!("fdcache: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
