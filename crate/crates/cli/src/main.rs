use clap::Parser;

use bloc_infer::Cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = bloc_infer::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
