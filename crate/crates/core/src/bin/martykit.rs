use clap::Parser;

use martykit::cli::{run, Args};

fn main() {
    let args = Args::parse();
    std::process::exit(run(&args));
}
