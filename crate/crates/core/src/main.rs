use clap::Parser;

fn main() {
    let cli = contfrac::cli::Cli::parse();
    std::process::exit(contfrac::cli::execute(cli));
}
