use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use biphoton::scenario::{self, Command, EngineChoice, Overrides};
use biphoton::timetag::analyze_timetags;
use biphoton::{Error, GateWindow};

#[derive(Parser, Debug)]
#[command(
    name = "biphoton",
    version,
    about = "Time-gated entangled photon pair simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Fidelity and retained fraction against gate width at fixed gate start.
    ScanWidth(RunArgs),
    /// Fidelity against gate start at fixed width.
    ScanDelay(RunArgs),
    /// Spectra and linewidths of truncated decays.
    Spectrum(RunArgs),
    /// Simulate coincidences and export them as a time-tag file.
    Simulate(RunArgs),
    /// Estimate correlations and fidelity from a time-tag file.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    pairs: Option<u64>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Time-tag file (`pair_id,tau_meas_ps,basis,outcome`).
    path: PathBuf,
    /// Gate start in ps; the gate is unbounded below when omitted.
    #[arg(long, allow_negative_numbers = true)]
    tau_g: Option<f64>,
    /// Gate width in ps; unbounded when omitted.
    #[arg(long)]
    width: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum EngineArg {
    Analytic,
    Mc,
}

fn run(cli: Cli) -> Result<(), Error> {
    let (command, args) = match cli.command {
        Cmd::ScanWidth(a) => (Command::ScanWidth, a),
        Cmd::ScanDelay(a) => (Command::ScanDelay, a),
        Cmd::Spectrum(a) => (Command::Spectrum, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Analyze(a) => {
            let tau_g = a.tau_g.unwrap_or(f64::NEG_INFINITY);
            let width = a.width.unwrap_or(f64::INFINITY);
            let gate = GateWindow::new(tau_g, width).map_err(|e| Error::Config {
                path: "--tau-g/--width".into(),
                message: e.to_string(),
            })?;
            let report = analyze_timetags(&a.path, gate)?;
            println!("{report}");
            return Ok(());
        }
    };
    let overrides = Overrides {
        seed: args.seed,
        pairs: args.pairs,
        output: args.out,
        engine: args.engine.map(|e| match e {
            EngineArg::Analytic => EngineChoice::Analytic,
            EngineArg::Mc => EngineChoice::MonteCarlo,
        }),
    };
    let config = scenario::load_config(&args.config)?.apply(&overrides)?;
    let output = scenario::run_scenario(command, &config)?;
    for file in output.files {
        println!("{}", file.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
