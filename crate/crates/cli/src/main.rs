mod args;
mod commands;
mod error;
mod plot;
mod source;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn run(argv: Vec<String>) -> Result<(), CliError> {
    let argv = args::expand_config(argv)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string())),
    };
    match &cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Benchmark(a) => commands::benchmark(a),
        Command::Forecast(a) => commands::forecast(a),
        Command::Plot(a) => commands::plot(a),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(std::env::args().collect()) {
        let msg = e.message().trim_end();
        // clap renders its own prefix
        let msg = msg.strip_prefix("error: ").unwrap_or(msg);
        eprintln!("error: {msg}");
        std::process::exit(e.exit_code());
    }
}
