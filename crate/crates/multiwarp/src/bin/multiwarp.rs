use clap::Parser;

fn main() {
    let cli = multiwarp::cli::Cli::parse();
    std::process::exit(multiwarp::cli::run(cli));
}
