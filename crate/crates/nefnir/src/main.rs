use clap::Parser;

fn main() {
    let cli = nefnir::cli::Cli::parse();
    if let Err(err) = nefnir::cli::run(&cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
