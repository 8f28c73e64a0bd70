use clap::Parser;

use clsbp::cli::{exit_code, run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {}: {e}", e.name());
        std::process::exit(exit_code(&e));
    }
}
