use clap::Parser;

use stomo::cli::{exit_code, run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            std::process::exit(outcome.code);
        }
        Err(e) => {
            eprintln!("stomo: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
