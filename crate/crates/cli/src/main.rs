use std::process::ExitCode;

use clap::Parser;
use itemgraph::Error;
use itemgraph_cli::commands::{execute, Cli, Command};

fn fail(error: &Error) -> ExitCode {
    eprintln!("{}", error.to_json());
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Serve(args) = &cli.command {
        let service = match itemgraph_cli::service_for(&cli, args) {
            Ok(service) => service,
            Err(error) => return fail(&error),
        };
        let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
        return match runtime.block_on(itemgraph_cli::serve(service, &args.addr)) {
            Ok(()) => ExitCode::SUCCESS,
            Err(error) => fail(&Error::from(error)),
        };
    }
    match execute(&cli) {
        Ok(output) => {
            if cli.json {
                println!("{}", output.json);
            } else if !output.text.is_empty() {
                println!("{}", output.text);
            }
            ExitCode::SUCCESS
        }
        Err(error) => fail(&error),
    }
}
