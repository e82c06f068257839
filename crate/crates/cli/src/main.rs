use clap::Parser;

fn main() {
    let cli = sightline_cli::Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match sightline_cli::run(cli, &mut out) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}
