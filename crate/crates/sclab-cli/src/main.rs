use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use sclab_cli::{load_scenario, run, CliError, Format, Kind};

#[derive(Parser, Debug)]
#[command(name = "sclab", version, about = "Run a symplectic-connection scenario and report its checks")]
struct Args {
    /// Scenario kind; must match the file's `kind`.
    kind: Kind,
    #[arg(long)]
    scenario: PathBuf,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the tolerance of every upper-bound check.
    #[arg(long)]
    tol: Option<f64>,
}

fn execute(args: &Args) -> Result<bool, CliError> {
    let sc = load_scenario(&args.scenario)?;
    if sc.kind() != args.kind {
        return Err(CliError::KindMismatch { expected: args.kind.as_str(), found: sc.kind().as_str() });
    }
    if let Some(t) = args.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Schema { path: "--tol".into(), msg: "expected a positive number".into() });
        }
    }
    let report = run(&sc, args.seed, args.tol)?;
    let text = report.emit(args.format);
    match &args.out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io { path: p.display().to_string(), msg: e.to_string() })?,
        None => print!("{text}"),
    }
    for c in report.failures() {
        eprintln!("FAIL {}: {} (residual {:e}, {:?} {:e})", c.name, c.equation, c.residual, c.comparison, c.tolerance);
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let start = std::time::Instant::now();
    let code = match execute(&args) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {}: {e}", args.scenario.display());
            e.exit_code()
        }
    };
    eprintln!("elapsed {:.2}s", start.elapsed().as_secs_f64());
    ExitCode::from(code as u8)
}
