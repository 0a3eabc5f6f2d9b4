use clap::Parser;

fn main() {
    let cli = cic::cli::Cli::parse();
    if let Err(e) = cic::cli::run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
