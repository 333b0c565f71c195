use clap::Parser;
use sgb_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = sgb_cli::dispatch(&cli, &mut stdout.lock(), &mut stderr.lock());
    std::process::exit(code);
}
