// `!(x <= t)` is used on purpose so NaN fails every threshold check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod exit;

use clap::Parser;

fn main() {
    env_logger::Builder::from_env(
        env_logger::Env::new()
            .filter_or("SPILLOVERFREE_LOG", "warn")
            .write_style("SPILLOVERFREE_LOG_STYLE"),
    )
    .init();
    let cli = match args::Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::EXIT_USAGE } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match commands::run(cli.command) {
        Ok(report) => print!("{}", report.render()),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit::exit_code(&e));
        }
    }
}
