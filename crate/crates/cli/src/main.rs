use clap::Parser;

fn main() {
    let cli = deckeval_cli::Cli::parse();
    std::process::exit(deckeval_cli::run(cli));
}
