use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use commdp::accountant::{
    amplify_poisson, amplify_shuffle, closed_form_epsilon, compose_advanced, default_orders,
    gaussian_sigma, rdp_subsampled_gaussian_epsilon, rdp_to_dp, shuffle_eps0_bound,
    shuffle_rdp_curve, CalibrationMethod,
};
use commdp::harness::{
    fmt_g12, json_row, run_sweep_with, write_csv_header, write_csv_row, Accounting,
    ExperimentConfig, Protocol,
};
use commdp::{Error, NoiseCalibration, PrivacyBudget};
use serde_json::{Map, Value};

#[derive(Parser)]
#[command(
    name = "commdp",
    version,
    about = "Communication-constrained private estimation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the number of trials per grid point.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Override the protocol seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Override the calibration method.
    #[arg(long, global = true, value_enum)]
    accounting: Option<AccountingArg>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum AccountingArg {
    ClosedForm,
    Rdp,
}

impl From<AccountingArg> for Accounting {
    fn from(a: AccountingArg) -> Self {
        match a {
            AccountingArg::ClosedForm => Accounting::ClosedForm,
            AccountingArg::Rdp => Accounting::Rdp,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Mean estimation sweep (csgm, csgm-preselect, l2-pipeline, gaussian-baseline).
    Mean(RunArgs),
    /// Frequency estimation sweep (rhr).
    Freq(RunArgs),
    /// Shuffle-model sweep (shuffled-sqkr, sqkr-ldp-baseline).
    Shuffle(RunArgs),
    /// Budget queries against the accountant.
    Accountant {
        #[command(subcommand)]
        query: Query,
    },
    /// Sweep any protocol from a config file.
    Sweep,
}

/// Inline experiment parameters, used when no `--config` is given or to
/// override fields of it.
#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    protocol: Option<Protocol>,
    #[arg(short, long)]
    n: Option<usize>,
    #[arg(short, long)]
    d: Option<usize>,
    #[arg(short, long)]
    b: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Comma-separated ε grid.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    rounds: Option<usize>,
}

#[derive(Subcommand)]
enum Query {
    /// Gaussian mechanism variance σ² for sensitivity Δ.
    Sigma {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        sensitivity: f64,
    },
    /// Poisson-subsampling amplification of an (ε, δ) mechanism.
    AmplifyPoisson {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        gamma: f64,
    },
    /// Advanced composition of k (ε, δ) mechanisms.
    Compose {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        delta_tilde: f64,
    },
    /// Noise for `coords` subsampled Gaussian releases meeting (ε, δ).
    Calibrate {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 1)]
        coords: usize,
        #[arg(long, default_value_t = 1.0)]
        sensitivity: f64,
        /// Also report the per-mean variance for this many clients.
        #[arg(long)]
        clients: Option<usize>,
    },
    /// Closed-form and RDP ε of a given noise level.
    Account {
        #[arg(long)]
        sigma2_sum: f64,
        #[arg(long, default_value_t = 1.0)]
        sensitivity: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 1)]
        coords: usize,
        #[arg(long)]
        delta: f64,
    },
    /// Central ε of `rounds` shuffled rounds of ε₀-LDP reports from n clients.
    Shuffle {
        #[arg(long)]
        eps0: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
    },
}

enum Failure {
    Config(String),
    AllInfeasible,
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Range(_) | Error::Infeasible(_) | Error::Dimension(_) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::AllInfeasible) => {
            eprintln!("error: calibration infeasible at every grid point");
            ExitCode::from(3)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let common = cli.common;
    match cli.command {
        Command::Sweep => {
            if common.config.is_none() {
                return Err(Failure::Config("sweep needs --config".into()));
            }
            sweep(build_config(&common, None)?, &common)
        }
        Command::Mean(args) => run_family(&common, args, "mean", |p| {
            matches!(
                p,
                Protocol::Csgm
                    | Protocol::CsgmPreselect
                    | Protocol::L2Pipeline
                    | Protocol::GaussianBaseline
            )
        }),
        Command::Freq(args) => run_family(&common, args, "freq", |p| p == Protocol::Rhr),
        Command::Shuffle(args) => run_family(&common, args, "shuffle", |p| {
            matches!(p, Protocol::ShuffledSqkr | Protocol::SqkrLdpBaseline)
        }),
        Command::Accountant { query } => accountant(query, &common),
    }
}

fn run_family(
    common: &Common,
    args: RunArgs,
    name: &str,
    allowed: fn(Protocol) -> bool,
) -> Result<(), Failure> {
    let config = build_config(common, Some(args))?;
    if !allowed(config.protocol) {
        return Err(Failure::Config(format!(
            "protocol {} is not handled by `{name}`",
            config.protocol.name()
        )));
    }
    sweep(config, common)
}

fn build_config(common: &Common, args: Option<RunArgs>) -> Result<ExperimentConfig, Failure> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path).map_err(|e| match e {
            Error::Io(m) => Failure::Config(format!("{}: {m}", path.display())),
            e => Failure::Config(e.to_string()),
        })?,
        None => {
            let a = args
                .as_ref()
                .ok_or_else(|| Failure::Config("--config is required".into()))?;
            let (Some(protocol), Some(n), Some(d), Some(eps)) =
                (a.protocol, a.n, a.d, a.eps.clone())
            else {
                return Err(Failure::Config(
                    "without --config, --protocol, -n, -d and --eps are required".into(),
                ));
            };
            ExperimentConfig::new(protocol, n, d, eps, a.delta.unwrap_or(1e-5))
        }
    };
    if let Some(a) = args {
        if let Some(p) = a.protocol {
            config.protocol = p;
        }
        config.n = a.n.unwrap_or(config.n);
        config.d = a.d.unwrap_or(config.d);
        if a.b.is_some() {
            config.b = a.b;
            config.gamma = None;
        }
        if a.gamma.is_some() {
            config.gamma = a.gamma;
            config.b = None;
        }
        if let Some(e) = a.eps {
            config.eps_grid = e;
        }
        config.delta = a.delta.unwrap_or(config.delta);
        config.rounds = a.rounds.or(config.rounds);
    }
    config.trials = common.trials.unwrap_or(config.trials);
    config.protocol_seed = common.seed.unwrap_or(config.protocol_seed);
    if let Some(a) = common.accounting {
        config.accounting = a.into();
    }
    config.validate()?;
    Ok(config)
}

fn open_out(common: &Common) -> Result<Box<dyn Write>, Failure> {
    Ok(match &common.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn sweep(config: ExperimentConfig, common: &Common) -> Result<(), Failure> {
    let mut out = open_out(common)?;
    let format = common.format;
    match format {
        Format::Csv => write_csv_header(&mut out)?,
        Format::Json => write!(out, "[")?,
    }
    out.flush()?;
    let mut first = true;
    let rows = run_sweep_with(&config, |row| {
        match format {
            Format::Csv => write_csv_row(&mut out, row)?,
            Format::Json => {
                let sep = if first { "\n" } else { ",\n" };
                let text = serde_json::to_string(&json_row(row))?;
                write!(out, "{sep}  {text}")?;
            }
        }
        first = false;
        out.flush()?;
        Ok(())
    })?;
    if format == Format::Json {
        writeln!(out, "\n]")?;
    }
    out.flush()?;
    if rows.iter().all(|r| r.infeasible) {
        return Err(Failure::AllInfeasible);
    }
    Ok(())
}

fn accountant(query: Query, common: &Common) -> Result<(), Failure> {
    let mut fields: Vec<(&str, Value)> = Vec::new();
    let mut num = |k: &'static str, v: f64| fields.push((k, Value::String(fmt_g12(v))));
    match query {
        Query::Sigma {
            eps,
            delta,
            sensitivity,
        } => {
            num(
                "sigma2",
                gaussian_sigma(sensitivity, PrivacyBudget::new(eps, delta)?)?,
            );
        }
        Query::AmplifyPoisson { eps, delta, gamma } => {
            let b = amplify_poisson(eps, delta, gamma)?;
            num("eps", b.eps);
            num("delta", b.delta);
        }
        Query::Compose {
            eps,
            delta,
            k,
            delta_tilde,
        } => {
            let b = compose_advanced(eps, delta, k, delta_tilde)?;
            num("eps", b.eps);
            num("delta", b.delta);
        }
        Query::Calibrate {
            eps,
            delta,
            gamma,
            coords,
            sensitivity,
            clients,
        } => {
            let method = common
                .accounting
                .map_or(CalibrationMethod::ClosedForm, |a| {
                    Accounting::from(a).method()
                });
            let mut cal = NoiseCalibration::resolve(
                method,
                PrivacyBudget::new(eps, delta)?,
                gamma,
                coords,
                sensitivity,
            )?;
            if let Some(n) = clients {
                cal = cal.for_clients(n);
            }
            num("sigma2_sum", cal.sigma2_sum);
            if clients.is_some() {
                num("sigma2_mean", cal.sigma2_mean);
            }
            num("eps1", cal.eps1);
            num("delta1", cal.delta1);
            num("eps2", cal.eps2);
            num("delta2", cal.delta2);
        }
        Query::Account {
            sigma2_sum,
            sensitivity,
            gamma,
            coords,
            delta,
        } => {
            num(
                "eps_closed",
                closed_form_epsilon(sigma2_sum, sensitivity, gamma, coords, delta)?,
            );
            let z = sigma2_sum.sqrt() / sensitivity;
            num(
                "eps_rdp",
                rdp_subsampled_gaussian_epsilon(gamma, z, coords, delta, &default_orders())?,
            );
        }
        Query::Shuffle {
            eps0,
            n,
            delta,
            rounds,
        } => {
            if rounds == 0 {
                return Err(Failure::Config("rounds must be positive".into()));
            }
            num("eps0_max", shuffle_eps0_bound(n, delta));
            let delta1 = delta / (2.0 * rounds as f64);
            let closed = amplify_shuffle(eps0, n, delta1)
                .and_then(|a| compose_advanced(a, delta1, rounds, delta / 2.0))
                .map_or(f64::INFINITY, |b| b.eps);
            num("eps_closed", closed);
            let curve = shuffle_rdp_curve(eps0, n, &default_orders())?;
            num("eps_rdp", rdp_to_dp(&curve.scaled(rounds), delta)?);
        }
    }
    let mut out = open_out(common)?;
    match common.format {
        Format::Csv => {
            let keys: Vec<&str> = fields.iter().map(|f| f.0).collect();
            let vals: Vec<&str> = fields.iter().map(|f| f.1.as_str().unwrap_or("")).collect();
            writeln!(out, "{}\n{}", keys.join(","), vals.join(","))?;
        }
        Format::Json => {
            let obj: Map<String, Value> = fields
                .into_iter()
                .map(|(k, v)| {
                    let s = v.as_str().unwrap_or("");
                    let n = s.parse::<f64>().ok().and_then(serde_json::Number::from_f64);
                    (k.to_string(), n.map_or(Value::Null, Value::Number))
                })
                .collect();
            writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&Value::Object(obj)).expect("json")
            )?;
        }
    }
    out.flush()?;
    Ok(())
}
