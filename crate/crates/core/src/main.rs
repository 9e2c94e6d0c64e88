use clap::Parser;

use currier::cli::{error_object, run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(err) => {
            eprintln!("{}", error_object(&err));
            std::process::exit(1);
        }
    }
}
