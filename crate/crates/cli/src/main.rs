use clap::Parser;

use clp_cli::{run, CliConfig, EXIT_ERROR};

fn main() {
    let cfg = match CliConfig::try_parse() {
        Ok(cfg) => cfg,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            std::process::exit(EXIT_ERROR);
        }
        Err(e) => e.exit(),
    };
    let level = match cfg.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let code = match run(&cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    };
    std::process::exit(code);
}
