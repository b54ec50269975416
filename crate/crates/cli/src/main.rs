use clap::Parser;

use sqlab_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = sqlab_cli::run(&cli) {
        eprintln!("sqlab: {e}");
        std::process::exit(e.exit_code());
    }
}
