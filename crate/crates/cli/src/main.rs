use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fluctua_cli::{run_config, run_suite, sweep, Axis, CliError, ScenarioConfig, Suite};

#[derive(Parser)]
#[command(
    name = "fluctua",
    version,
    about = "Dissipative dynamics of mesoscopic quantum fluctuations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario, write its CSV and print a JSON summary
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a scenario over a grid of parameter values
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `name=v1,v2,...`; repeat for a multi-dimensional grid
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Where to write the results table (stdout if omitted)
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a property/oracle suite: invariants, oracles or all
    Check { suite: String },
}

fn write(path: &PathBuf, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config } => {
            let config = ScenarioConfig::load(&config)?;
            let out = run_config(&config)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            if let Some(path) = &config.output {
                write(path, &out.to_csv())?;
            }
            println!(
                "{}",
                serde_json::to_string(&out.summary).expect("plain data")
            );
            Ok(0)
        }
        Command::Sweep {
            config,
            axes,
            workers,
            output,
        } => {
            let template = ScenarioConfig::load(&config)?;
            let axes = axes
                .iter()
                .map(|a| a.parse::<Axis>())
                .collect::<Result<Vec<_>, _>>()?;
            let result = sweep(&template, &axes, workers)?;
            for row in &result.rows {
                if let Err(e) = &row.outcome {
                    eprintln!("point {:?}: {e}", row.point);
                }
            }
            let csv = result.to_csv();
            match &output {
                Some(path) => write(path, &csv)?,
                None => print!("{csv}"),
            }
            Ok(result.exit_code())
        }
        Command::Check { suite } => {
            let suite: Suite = suite.parse()?;
            let checks = run_suite(suite);
            for c in &checks {
                println!("{}", c.line());
            }
            let failed = checks.iter().filter(|c| !c.pass()).count();
            println!("{} checks, {failed} failed", checks.len());
            Ok(if failed == 0 { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
