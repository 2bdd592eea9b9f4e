use clap::Parser;

fn main() {
    let cli = eotk::Cli::parse();
    std::process::exit(eotk::run(&cli));
}
