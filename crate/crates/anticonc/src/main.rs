use clap::Parser;

fn main() {
    let cli = anticonc::cli::CliArgs::parse();
    std::process::exit(anticonc::cli::run(cli));
}
