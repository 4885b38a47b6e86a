use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crystal_pr::bounds::{bounds_csv, bounds_table, dimension_gap, predicted_guarantee, IncidenceCase};
use crystal_pr::certify::{certify_basis, CertifyConfig, CertifyMode};
use crystal_pr::harness::{render_report, run_scan, ReportFormat, ScanConfig, ScanMode};
use crystal_pr::io::{measurements_to_csv, pretty, read_basis, read_measurements, read_signal, write_output};
use crystal_pr::model::{embed, sample_generic_basis_with_cap, sample_sparse_vector, Support, DEFAULT_CONDITION_CAP};
use crystal_pr::recover::{solve_fixed_support, solve_support_search, RecoveryConfig, RecoveryProblem, Target};
use crystal_pr::rng::{derive_seed, rng_from_seed};
use crystal_pr::signal::{measure_reduced, periodic_autocorrelation, power_spectrum, PowerSpectrum, ReducedMeasurement};
use crystal_pr::{Error, Field, Result};

#[derive(Parser)]
#[command(name = "crystal-pr", version, about = "Sparse phase retrieval from power spectra")]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Print a measurement of a signal.
    Spectrum {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "power")]
        what: What,
    },
    /// Sample bases and sparse signals.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Certify uniqueness for every M-sparse vector (or generic ones) in a basis.
    Certify(CertifyArgs),
    /// Recover a sparse signal from its measurements.
    Recover(RecoverArgs),
    /// Predicted guarantees and dimension gaps.
    Bounds(BoundsArgs),
    /// Monte Carlo scan over an (N, M) grid.
    Scan(ScanArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    Power,
    Autocorr,
    B,
}

#[derive(Subcommand)]
enum ModelCommand {
    SampleBasis {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "real")]
        field: Field,
        #[arg(long, default_value_t = DEFAULT_CONDITION_CAP)]
        condition_cap: f64,
    },
    /// Gaussian coefficients on a random (or given) support, embedded in the basis.
    SampleSignal {
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        m: usize,
        /// Comma-separated support indices.
        #[arg(long, value_delimiter = ',')]
        support: Option<Vec<usize>>,
    },
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    basis: PathBuf,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value = "every")]
    mode: CertifyMode,
    /// Must match the basis field when given.
    #[arg(long)]
    field: Option<Field>,
    #[arg(long, default_value_t = 200)]
    starts: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long)]
    allow_sampling: bool,
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long)]
    basis: PathBuf,
    /// `index,value` CSV of reduced b (real) or the power spectrum.
    #[arg(long)]
    measurements: PathBuf,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    field: Option<Field>,
    /// Solve on this support only.
    #[arg(long, value_delimiter = ',')]
    support: Option<Vec<usize>>,
    /// The measurements are the full power spectrum.
    #[arg(long)]
    power_spectrum: bool,
    #[arg(long, default_value_t = 50)]
    starts: usize,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    table: bool,
    #[arg(long, default_value_t = 8)]
    m_max: usize,
    #[arg(long, default_value_t = 64)]
    n_max: usize,
    #[arg(long, required_unless_present = "table")]
    n: Option<usize>,
    #[arg(long, required_unless_present = "table")]
    m: Option<usize>,
    #[arg(long, default_value = "real")]
    field: Field,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, default_value = "real")]
    field: Field,
    /// Comma-separated signal lengths.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    m_min: usize,
    #[arg(long, default_value_t = 64)]
    m_max: usize,
    /// Stop at M = floor(N/2) + k.
    #[arg(long)]
    m_above_half: Option<usize>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value = "recover")]
    mode: ScanMode,
    #[arg(long)]
    support_search: bool,
    /// Multistart count for recovery and for each certification search.
    #[arg(long, default_value_t = 50)]
    starts: usize,
    #[arg(long)]
    timing: bool,
}

fn json_only(format: Option<Format>) -> Result<()> {
    match format {
        Some(Format::Csv) => Err(Error::InvalidInput("this command only writes JSON".into())),
        _ => Ok(()),
    }
}

fn spectrum(cli: &Cli, input: &Path, what: What) -> Result<String> {
    let x = read_signal(input)?;
    let (values, imag): (Vec<f64>, Option<Vec<f64>>) = match what {
        What::Power => (power_spectrum(&x).values, None),
        What::B => (measure_reduced(&x)?.values, None),
        What::Autocorr => {
            let a = periodic_autocorrelation(&x);
            let re = a.values.iter().map(|z| z.re).collect();
            match a.field {
                Field::Real => (re, None),
                Field::Complex => (re, Some(a.values.iter().map(|z| z.im).collect())),
            }
        }
    };
    Ok(match (cli.format.unwrap_or(Format::Csv), imag) {
        (Format::Csv, None) => measurements_to_csv(&values),
        (Format::Csv, Some(im)) => {
            let mut out = String::from("index,re,im\n");
            for (i, (re, im)) in values.iter().zip(&im).enumerate() {
                out.push_str(&format!("{i},{re},{im}\n"));
            }
            out
        }
        (Format::Json, None) => pretty(&json!(values)),
        (Format::Json, Some(im)) => pretty(&json!(values.iter().zip(&im).map(|(r, i)| [*r, *i]).collect::<Vec<_>>())),
    })
}

fn model(cli: &Cli, cmd: &ModelCommand) -> Result<String> {
    json_only(cli.format)?;
    match cmd {
        ModelCommand::SampleBasis { n, field, condition_cap } => {
            Ok(pretty(&sample_generic_basis_with_cap(*n, *field, cli.seed, *condition_cap)?.to_json()))
        }
        ModelCommand::SampleSignal { basis, m, support } => {
            let basis = read_basis(basis)?;
            let n = basis.n();
            let s = match support {
                Some(idx) => {
                    let s = Support::from_unsorted(idx.clone(), n)?;
                    if s.m() != *m {
                        return Err(Error::InvalidInput(format!("support has {} indices, expected m = {m}", s.m())));
                    }
                    s
                }
                None => Support::random(n, *m, &mut rng_from_seed(derive_seed(cli.seed, &[0])))?,
            };
            let v = sample_sparse_vector(&s, basis.field(), derive_seed(cli.seed, &[1]))?;
            let x = embed(&v, &basis)?;
            Ok(pretty(&json!({ "sparse": v.to_json(), "signal": x })))
        }
    }
}

fn check_field(expected: Option<Field>, actual: Field) -> Result<()> {
    match expected {
        Some(f) if f != actual => Err(Error::FieldMismatch(format!("--field {f} but the basis is {actual}"))),
        _ => Ok(()),
    }
}

fn certify(cli: &Cli, args: &CertifyArgs) -> Result<String> {
    json_only(cli.format)?;
    let basis = read_basis(&args.basis)?;
    check_field(args.field, basis.field())?;
    let mut cfg = CertifyConfig { allow_sampling: args.allow_sampling, trials: args.trials, ..CertifyConfig::default() };
    cfg.search.starts = args.starts;
    cfg.search.seed = cli.seed;
    cfg.recovery.seed = cli.seed;
    Ok(pretty(&certify_basis(&basis, args.m, args.mode, &cfg)?.to_json()))
}

fn recover(cli: &Cli, args: &RecoverArgs) -> Result<String> {
    json_only(cli.format)?;
    let basis = read_basis(&args.basis)?;
    check_field(args.field, basis.field())?;
    let values = read_measurements(&args.measurements)?;
    let target = if args.power_spectrum || basis.field() == Field::Complex {
        Target::PowerSpectrum(PowerSpectrum { values })
    } else {
        Target::Reduced(ReducedMeasurement { values })
    };
    let n = basis.n();
    let problem = RecoveryProblem::new(basis, args.m, target)?;
    let cfg = RecoveryConfig { starts: args.starts, seed: cli.seed, ..RecoveryConfig::default() };
    let result = match &args.support {
        Some(idx) => {
            let s = Support::from_unsorted(idx.clone(), n)?;
            if s.m() != args.m {
                return Err(Error::InvalidInput(format!("support has {} indices, expected m = {}", s.m(), args.m)));
            }
            solve_fixed_support(&problem, &s, &cfg)?
        }
        None => solve_support_search(&problem, &cfg)?,
    };
    let mut out = result.to_json();
    out["signal"] = serde_json::to_value(crystal_pr::Signal::new(problem.field(), result.signal(problem.basis()))?)?;
    Ok(pretty(&out))
}

fn bounds(cli: &Cli, args: &BoundsArgs) -> Result<String> {
    let format = cli.format.unwrap_or(if args.table { Format::Csv } else { Format::Json });
    if args.table {
        let rows = bounds_table(args.m_max, args.n_max)?;
        return Ok(match format {
            Format::Csv => bounds_csv(&rows),
            Format::Json => pretty(&serde_json::to_value(rows)?),
        });
    }
    let (n, m) = (args.n.unwrap_or_default(), args.m.unwrap_or_default());
    let verdict = predicted_guarantee(n, m, args.field)?;
    let gaps = match args.field {
        Field::Real => json!({
            "real_single": dimension_gap(m, n, 0, IncidenceCase::RealSingle)?,
            "real_pair": dimension_gap(m, n, 0, IncidenceCase::RealPair)?,
        }),
        Field::Complex => json!({ "complex_pair": dimension_gap(m, n, 0, IncidenceCase::ComplexPair)? }),
    };
    match format {
        Format::Json => Ok(pretty(&json!({ "n": n, "m": m, "field": args.field, "verdict": verdict, "gaps": gaps }))),
        Format::Csv => Err(Error::InvalidInput("single-cell bounds are JSON only; use --table for CSV".into())),
    }
}

fn scan(cli: &Cli, args: &ScanArgs) -> Result<String> {
    let mut cfg = ScanConfig {
        n_values: args.n.clone(),
        m_min: args.m_min,
        m_max: args.m_max,
        m_above_half: args.m_above_half,
        field: args.field,
        trials: args.trials,
        seed: cli.seed,
        mode: args.mode,
        support_search: args.support_search,
        timing: args.timing,
        ..ScanConfig::default()
    };
    cfg.recovery.starts = args.starts;
    cfg.certify.search.starts = args.starts;
    let cells = run_scan(&cfg)?;
    render_report(&cells, match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => ReportFormat::Csv,
        Format::Json => ReportFormat::Json,
    })
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    let output = match &cli.command {
        Command::Spectrum { input, what } => spectrum(cli, input, *what)?,
        Command::Model(cmd) => model(cli, cmd)?,
        Command::Certify(args) => certify(cli, args)?,
        Command::Recover(args) => recover(cli, args)?,
        Command::Bounds(args) => bounds(cli, args)?,
        Command::Scan(args) => scan(cli, args)?,
    };
    write_output(cli.out.as_deref(), &output)
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
