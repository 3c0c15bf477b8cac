use clap::Parser;
use planarstat_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    std::process::exit(planarstat_cli::main_with(&cli));
}
