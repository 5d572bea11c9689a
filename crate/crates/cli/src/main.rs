use clap::Parser;
use modtors_cli::{exit_code, run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(error) => {
            // clap distinguishes real usage errors from --help/--version.
            let code = if error.use_stderr() { 1 } else { 0 };
            let _ = error.print();
            std::process::exit(code);
        }
    };
    if let Err(error) = run(&cli) {
        eprintln!("error: {error}");
        std::process::exit(exit_code(&error));
    }
}
