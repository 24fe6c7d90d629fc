use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use jpa_core::cli::{dispatch, parse_config, CliError, Command, DispatchOptions, DEFAULTS};
use jpa_core::time_domain::Method;

/// Josephson parametric amplifier simulator.
#[derive(Debug, Parser)]
#[command(name = "jpa", version)]
struct Args {
    /// Workflow to run.
    #[arg(value_enum, required_unless_present = "print_defaults")]
    command: Option<Command>,

    /// INI-style run configuration.
    #[arg(long, required_unless_present = "print_defaults")]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, default_value = "./out")]
    out: PathBuf,

    /// Also write SVG charts.
    #[arg(long)]
    svg: bool,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,

    /// Print the default configuration and exit.
    #[arg(long)]
    print_defaults: bool,

    /// Override the integrator selected in the configuration.
    #[arg(long, value_parser = ["dp45", "bdf2"])]
    solver: Option<String>,
}

fn main() -> ExitCode {
    // Usage errors share the configuration exit code.
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if args.print_defaults {
        print!("{DEFAULTS}");
        return ExitCode::SUCCESS;
    }
    let code = match run(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn run(args: &Args) -> Result<i32, CliError> {
    let path = args.config.as_ref().expect("required by clap");
    let text = std::fs::read_to_string(path)?;
    let cfg = parse_config(&text)?;
    let opts = DispatchOptions {
        out_dir: args.out.clone(),
        svg: args.svg,
        solver: args.solver.as_deref().map(|s| s.parse::<Method>().expect("checked by clap")),
    };
    let command = args.command.expect("required by clap");
    let go = || dispatch(command, &cfg, &opts, &mut std::io::stdout());
    let outcome = match args.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(go)?,
        None => go()?,
    };
    Ok(outcome.exit_code)
}
