use clap::Parser;
use exploratory_stopping::cli::{main_with, Cli};

fn main() {
    std::process::exit(main_with(Cli::parse()));
}
