use clap::Parser;

use qfwi::cli;

fn main() {
    cli::configure_workers();
    let args = cli::Cli::parse();
    if let Err(e) = cli::run(args) {
        eprintln!("error: {}: {e}", e.category());
        std::process::exit(cli::exit_code(&e));
    }
}
