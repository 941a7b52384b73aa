use clap::Parser;
use morleycert::cli::{run, Config};

fn main() {
    let config = Config::parse();
    match run(&config) {
        Ok((_, rates)) => print!("{rates}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
