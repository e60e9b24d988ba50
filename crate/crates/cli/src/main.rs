use clap::Parser;
use priorimax::commands::{run, Cli};

fn main() {
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
