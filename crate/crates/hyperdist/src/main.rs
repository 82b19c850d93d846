//! Command-line entry point. Exit codes: 0 success, 1 failed checks or
//! runtime errors, 2 usage and config errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hyperdist::analytic::{ScenarioKind, ScenarioParams};
use hyperdist::cli::{
    analytic_point, config_is_event_mode, oracle_check, parse_config,
    parse_config_forcing_source, parse_event_config, rates_preset, render_rates,
    render_single_rate, run_event_mode, run_sweep_to_files, CliError, Source,
};
use hyperdist::oracle::ConversionModel;
use hyperdist::protocol::ProtocolVariant;
use hyperdist::rates::{RateParams, Scheme, STANDARD_FIBER_DB_PER_KM};

#[derive(Parser)]
#[command(
    name = "hyperdist",
    version,
    about = "Simulator and analysis tool for single-copy polarization-frequency \
             hyperentanglement distillation"
)]
struct Cli {
    /// Config file (key = value sections).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path for CSV results; a `<out>.meta` companion is written too.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base RNG seed; overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the closed-form fidelity, yield and gain at one point.
    Analytic(AnalyticArgs),
    /// Run the grid sweep described by --config and write CSV.
    Sweep,
    /// Verify the conversion table, unitarity and route equivalence.
    OracleCheck,
    /// Monte Carlo estimation: grid sweeps of shots, or an event stream
    /// when the config sets [montecarlo] mode = events.
    Montecarlo,
    /// Distillation-rate table and scheme ratios.
    Rates(RatesArgs),
}

#[derive(Args)]
struct AnalyticArgs {
    /// Scenario kind: s1, s2, s3, aux-s1, aux-s3.
    #[arg(long)]
    scenario: String,
    /// Initial polarization fidelity.
    #[arg(long = "Fp")]
    f_p: f64,
    /// Initial frequency fidelity (s1, s2, s3).
    #[arg(long = "Ff")]
    f_f: Option<f64>,
    /// Initial auxiliary fidelity (aux-s1, aux-s3).
    #[arg(long = "Fa")]
    f_a: Option<f64>,
    /// Phase-flip weight A (s3 kinds).
    #[arg(long = "A")]
    a: Option<f64>,
    /// Conversion efficiency; selects the finite-efficiency closed form.
    #[arg(long)]
    eta: Option<f64>,
    /// Protocol variant: standard or hadamard.
    #[arg(long, default_value = "standard")]
    variant: String,
}

#[derive(Args)]
struct RatesArgs {
    /// Comparison preset: paper-pet or paper-psm.
    #[arg(long, conflicts_with_all = ["scheme", "pairs_per_pulse"])]
    preset: Option<String>,
    /// Scheme for a single-row table: single-copy or two-copy.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long, default_value_t = 1e-3)]
    pairs_per_pulse: f64,
    #[arg(long, default_value_t = 76e6)]
    rep_rate_hz: f64,
    #[arg(long, default_value_t = 100.0)]
    fiber_length_km: f64,
    #[arg(long, default_value_t = STANDARD_FIBER_DB_PER_KM)]
    attenuation_db_per_km: f64,
    #[arg(long = "yield", default_value_t = 0.8)]
    yield_: f64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn read_config(path: &Option<PathBuf>) -> Result<String, CliError> {
    let path = path
        .as_ref()
        .ok_or_else(|| usage("--config is required for this subcommand"))?;
    Ok(fs::read_to_string(path)?)
}

fn write_or_print(out: &Option<PathBuf>, csv: &str, meta: Option<&str>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, csv)?;
            if let Some(meta) = meta {
                let mut meta_path = path.as_os_str().to_owned();
                meta_path.push(".meta");
                fs::write(PathBuf::from(meta_path), meta)?;
            }
            Ok(())
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn run_analytic(args: &AnalyticArgs, cli: &Cli) -> Result<(), CliError> {
    let kind = ScenarioKind::from_name(&args.scenario)
        .ok_or_else(|| usage(format!("unknown scenario `{}`", args.scenario)))?;
    let variant = ProtocolVariant::from_name(&args.variant)
        .ok_or_else(|| usage(format!("unknown variant `{}`", args.variant)))?;
    let f_other = if kind.uses_auxiliary_bitflip() {
        args.f_a.ok_or_else(|| usage("missing required flag: --Fa"))?
    } else {
        args.f_f.ok_or_else(|| usage("missing required flag: --Ff"))?
    };
    let a = match (kind.needs_a(), args.a) {
        (true, Some(a)) => a,
        (true, None) => return Err(usage("missing required flag: --A")),
        (false, Some(_)) => {
            return Err(usage(format!("--A applies to s3 kinds, not {}", kind.name())))
        }
        (false, None) => 0.0,
    };
    let params = ScenarioParams::new(kind, args.f_p, f_other, a)
        .map_err(|e| usage(e.to_string()))?;
    let model = match args.eta {
        None => ConversionModel::Ideal,
        Some(eta) => ConversionModel::ClosedFormEta { eta },
    };
    let (lines, csv) = analytic_point(&params, variant, &model)?;
    match &cli.out {
        Some(_) => write_or_print(&cli.out, &csv, None)?,
        None => {
            for line in lines {
                println!("{line}");
            }
        }
    }
    Ok(())
}

fn run_sweep(cli: &Cli) -> Result<(), CliError> {
    let text = read_config(&cli.config)?;
    let mut plan = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        plan.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| plan.out.as_ref().map(PathBuf::from))
        .ok_or_else(|| usage("no output path: pass --out or set `out` under [output]"))?;
    let rows = run_sweep_to_files(&plan, &out)?;
    eprintln!("wrote {rows} rows to {}", out.display());
    Ok(())
}

fn run_montecarlo(cli: &Cli) -> Result<(), CliError> {
    let text = read_config(&cli.config)?;
    if config_is_event_mode(&text) {
        let mut plan = parse_event_config(&text)?;
        if let Some(seed) = cli.seed {
            plan.seed = seed;
        }
        let (csv, meta) = run_event_mode(&plan)?;
        let out = cli
            .out
            .clone()
            .or_else(|| plan.out.as_ref().map(PathBuf::from));
        write_or_print(&out, &csv, Some(&meta))?;
        return Ok(());
    }
    // This subcommand is the estimator front end: run the grid with the
    // Monte Carlo source regardless of the config's `sources`.
    let mut plan = parse_config_forcing_source(&text, Source::Montecarlo)?;
    if let Some(seed) = cli.seed {
        plan.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| plan.out.as_ref().map(PathBuf::from))
        .ok_or_else(|| usage("no output path: pass --out or set `out` under [output]"))?;
    let rows = run_sweep_to_files(&plan, &out)?;
    eprintln!("wrote {rows} rows to {}", out.display());
    Ok(())
}

fn run_rates(args: &RatesArgs, cli: &Cli) -> Result<(), CliError> {
    let (csv, lines) = match (&args.preset, &args.scheme) {
        (Some(name), _) => {
            let (a, b) =
                rates_preset(name).ok_or_else(|| usage(format!("unknown preset `{name}`")))?;
            render_rates(&a, &b)?
        }
        (None, scheme) => {
            let scheme = match scheme.as_deref() {
                None | Some("single-copy") => Scheme::SingleCopy,
                Some("two-copy") => Scheme::TwoCopy,
                Some(other) => return Err(usage(format!("unknown scheme `{other}`"))),
            };
            let params = RateParams {
                scheme,
                pairs_per_pulse: args.pairs_per_pulse,
                rep_rate_hz: args.rep_rate_hz,
                fiber_length_km: args.fiber_length_km,
                attenuation_db_per_km: args.attenuation_db_per_km,
                yield_: args.yield_,
                conversion_efficiency: args.eta,
            };
            render_single_rate(&params)?
        }
    };
    for line in &lines {
        println!("{line}");
    }
    if cli.out.is_some() {
        write_or_print(&cli.out, &csv, None)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Analytic(args) => run_analytic(args, cli),
        Command::Sweep => run_sweep(cli),
        Command::OracleCheck => {
            let report = oracle_check();
            for line in &report.lines {
                println!("{line}");
            }
            if report.passed {
                Ok(())
            } else {
                Err(CliError::CheckFailed("oracle-check".to_string()))
            }
        }
        Command::Montecarlo => run_montecarlo(cli),
        Command::Rates(args) => run_rates(args, cli),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
