use clap::{Parser, Subcommand};
use histlat::runner::{self, RunOptions};
use std::path::PathBuf;
use std::process::ExitCode;

/// Run named verification experiments on history-state lattices.
///
/// Exit codes: 0 all checks pass, 1 a check or experiment failed,
/// 2 the config is invalid. Config keys can be overridden from the
/// environment as HISTLAT__<SECTION>__<KEY>=value.
#[derive(Parser, Debug)]
#[command(name = "histlat", version)]
struct Cli {
    /// Print every experiment with its operation chain and parameters.
    #[arg(long)]
    list: bool,
    /// Output directory for CSV files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Seed for randomized property suites (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Option<Cmd>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run the experiments listed in a config.
    Run { config: PathBuf },
    /// Re-run the listed experiments over values of one parameter.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
}

fn fail(e: histlat::Error) -> ExitCode {
    eprintln!("histlat: {e}");
    ExitCode::from(runner::error_exit_code(&e) as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.list {
        print!("{}", runner::list_text());
        return ExitCode::SUCCESS;
    }
    let opt = RunOptions { out: cli.out, workers: cli.workers, seed: cli.seed };
    match cli.cmd {
        None => {
            eprintln!("histlat: nothing to do (use run, sweep or --list)");
            ExitCode::from(2)
        }
        Some(Cmd::Run { config }) => {
            let cfg = match runner::load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match runner::run(&cfg, &opt) {
                Ok(s) => {
                    for r in &s.results {
                        let status = match (&r.error, r.passed()) {
                            (Some(m), _) => format!("ERROR {m}"),
                            (None, true) => "pass".into(),
                            (None, false) => "FAIL".into(),
                        };
                        println!("{:<22} {:>3} checks  {status}", r.name, r.rows.len());
                    }
                    ExitCode::from(s.exit_code() as u8)
                }
                Err(e) => fail(e),
            }
        }
        Some(Cmd::Sweep { config, param, values }) => {
            let cfg = match runner::load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match runner::sweep(&cfg, &param, &values, &opt) {
                Ok(s) => {
                    for t in &s.trends {
                        println!("{:<22} {:<36} order {:>8.3} {}", t.experiment, t.check, t.order, t.monotone);
                    }
                    ExitCode::from(s.exit_code() as u8)
                }
                Err(e) => fail(e),
            }
        }
    }
}
