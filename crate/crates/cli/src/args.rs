use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::Parser;
use lasso_mimo::admm::AdmmConfig;
use lasso_mimo::detect::{Detector, DetectorParams};
use lasso_mimo::model::Modulation;
use lasso_mimo::sim::Campaign;
use lasso_mimo::Error;
use serde::Deserialize;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "LASSO_MIMO_WORKERS";

pub const TAU_WARNING: &str = "tau ≥ half symbol spacing: stage 2 degenerate";

const MAX_SNR_POINTS: usize = 10_000;

#[derive(Debug, Clone, Default, Parser)]
#[command(name = "lasso-mimo", version, allow_negative_numbers = true)]
#[command(about = "Monte Carlo BER campaigns for LASSO-ADMM MIMO detection")]
pub struct Args {
    /// Transmit antennas
    #[arg(long)]
    pub nt: Option<usize>,
    /// Receive antennas
    #[arg(long)]
    pub nr: Option<usize>,
    /// Modulation: qpsk, 16qam or 64qam
    #[arg(long = "mod", value_name = "MOD")]
    pub modulation: Option<String>,
    /// SNR grid in dB as start:step:stop, a single value, or a comma list of either
    #[arg(long, allow_hyphen_values = true)]
    pub snr: Option<String>,
    /// Comma-separated detectors from lasso, 2lasso, mmse, zf, ml
    #[arg(long)]
    pub detectors: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Gray-zone threshold of the two-stage detector
    #[arg(long)]
    pub tau: Option<f64>,
    /// ADMM tolerance
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Bits per SNR point before stopping is allowed
    #[arg(long)]
    pub min_bits: Option<u64>,
    /// Hard trial cap per SNR point
    #[arg(long)]
    pub max_trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default from LASSO_MIMO_WORKERS, else all cores)
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output CSV path; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat key = value config file, or a CSV written by an earlier run
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// More log output (repeatable)
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only warnings and errors
    #[arg(short, long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SnrSpec {
    Text(String),
    List(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DetectorSpec {
    Text(String),
    List(Vec<String>),
}

/// Contents of a `--config` file. Keys mirror the long flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub nt: Option<usize>,
    pub nr: Option<usize>,
    #[serde(rename = "mod")]
    pub modulation: Option<String>,
    pub snr: Option<SnrSpec>,
    pub detectors: Option<DetectorSpec>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub rho: Option<f64>,
    pub tau: Option<f64>,
    pub eps: Option<f64>,
    pub max_iter: Option<usize>,
    pub min_bits: Option<u64>,
    pub max_trials: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub campaign: Campaign,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub log_level: log::LevelFilter,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub flag: Option<&'static str>,
    pub message: String,
}

impl CliError {
    fn flag(flag: &'static str, message: impl Into<String>) -> Self {
        Self { flag: Some(flag), message: message.into() }
    }

    fn other(message: impl Into<String>) -> Self {
        Self { flag: None, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.flag {
            Some(flag) => write!(f, "invalid value for --{flag}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for CliError {}

/// Parses one SNR item list such as `0:2:16`, `10`, `inf` or `4,8:4:16`.
pub fn parse_snr(spec: &str) -> Result<Vec<f64>, String> {
    let mut points = Vec::new();
    for item in spec.split(',').map(str::trim) {
        let parts: Vec<&str> = item.split(':').collect();
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("'{s}' is not a number"));
        match parts.as_slice() {
            [v] => points.push(num(v)?),
            [start, step, stop] => {
                let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
                if !(start.is_finite() && step.is_finite() && stop.is_finite()) {
                    return Err(format!("range '{item}' must be finite"));
                }
                if step <= 0.0 || stop < start {
                    return Err(format!("range '{item}' needs step > 0 and stop ≥ start"));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                if points.len() + count > MAX_SNR_POINTS {
                    return Err(format!("more than {MAX_SNR_POINTS} points"));
                }
                points.extend((0..count).map(|k| start + k as f64 * step));
            }
            _ => return Err(format!("'{item}' is neither a value nor start:step:stop")),
        }
    }
    if let Some(bad) = points.iter().find(|v| v.is_nan() || **v == f64::NEG_INFINITY) {
        return Err(format!("{bad} dB is not a usable SNR"));
    }
    Ok(points)
}

/// Parses a comma-separated detector list. An empty string gives an empty list.
pub fn parse_detectors(spec: &str) -> Result<Vec<Detector>, String> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Detector>().map_err(|e| e.to_string()))
        .collect()
}

/// Reads a config file. A file whose lines start with `#!` (the metadata
/// block of an emitted CSV) contributes only those lines.
pub fn load_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::flag("config", format!("{}: {e}", path.display())))?;
    let embedded: Vec<&str> = text.lines().filter_map(|l| l.strip_prefix("#!")).collect();
    let body = if embedded.is_empty() { text.clone() } else { embedded.join("\n") };
    toml::from_str(&body).map_err(|e| CliError::flag("config", format!("{}: {e}", path.display())))
}

pub fn parse_args<I, T>(argv: I) -> Result<Settings, ArgsError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = Args::try_parse_from(argv).map_err(ArgsError::Clap)?;
    let env_workers = std::env::var(WORKERS_ENV).ok();
    resolve(args, env_workers.as_deref()).map_err(ArgsError::Invalid)
}

#[derive(Debug)]
pub enum ArgsError {
    Clap(clap::Error),
    Invalid(CliError),
}

/// Layers flags over the config file over defaults.
pub fn resolve(args: Args, env_workers: Option<&str>) -> Result<Settings, CliError> {
    let file = match &args.config {
        Some(path) => load_config(path)?,
        None => FileConfig::default(),
    };
    let defaults = Campaign::default();
    let mut warnings = Vec::new();

    let nt = args.nt.or(file.nt).unwrap_or(defaults.nt);
    let nr = args.nr.or(file.nr).unwrap_or(defaults.nr);
    if nt == 0 {
        return Err(CliError::flag("nt", "must be at least 1"));
    }
    if nr == 0 {
        return Err(CliError::flag("nr", "must be at least 1"));
    }

    let modulation = match args.modulation.or(file.modulation) {
        Some(s) => s.parse::<Modulation>().map_err(|e| CliError::flag("mod", e.to_string()))?,
        None => defaults.modulation,
    };

    let snr_points = match (args.snr, file.snr) {
        (Some(s), _) | (None, Some(SnrSpec::Text(s))) => parse_snr(&s).map_err(|e| CliError::flag("snr", e))?,
        (None, Some(SnrSpec::List(v))) => v,
        (None, None) => defaults.snr_points.clone(),
    };
    if snr_points.is_empty() {
        return Err(CliError::flag("snr", "no SNR points"));
    }
    if snr_points.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
        return Err(CliError::flag("snr", "NaN or -inf point"));
    }

    let detectors = match (args.detectors, file.detectors) {
        (Some(s), _) | (None, Some(DetectorSpec::Text(s))) => parse_detectors(&s),
        (None, Some(DetectorSpec::List(v))) => parse_detectors(&v.join(",")),
        (None, None) => Ok(defaults.detectors.clone()),
    }
    .map_err(|e| CliError::flag("detectors", e))?;
    for (i, d) in detectors.iter().enumerate() {
        if detectors[..i].contains(d) {
            return Err(CliError::flag("detectors", format!("{d} listed twice")));
        }
    }

    let base = DetectorParams::default();
    let positive = |v: Option<f64>, flag: &'static str, default: f64| -> Result<f64, CliError> {
        let v = v.unwrap_or(default);
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(CliError::flag(flag, format!("{v} is not a positive finite number")))
        }
    };
    let lambda = positive(args.lambda.or(file.lambda), "lambda", base.lambda)?;
    let mu = positive(args.mu.or(file.mu), "mu", base.mu)?;
    let rho = positive(args.rho.or(file.rho), "rho", base.admm.rho)?;
    let tau = positive(args.tau.or(file.tau), "tau", base.tau)?;
    let eps = positive(args.eps.or(file.eps), "eps", base.admm.eps)?;
    let max_iter = args.max_iter.or(file.max_iter).unwrap_or(base.admm.max_iter);
    if max_iter == 0 {
        return Err(CliError::flag("max-iter", "must be at least 1"));
    }
    if tau >= 1.0 {
        warnings.push(TAU_WARNING.to_string());
    }

    let min_bits = args.min_bits.or(file.min_bits).unwrap_or(defaults.min_bits);
    if min_bits < 1000 {
        return Err(CliError::flag("min-bits", format!("{min_bits} is below 1000")));
    }
    let max_trials = args.max_trials.or(file.max_trials).unwrap_or(defaults.max_trials);
    if max_trials == 0 {
        return Err(CliError::flag("max-trials", "must be at least 1"));
    }
    let seed = args.seed.or(file.seed).unwrap_or(defaults.seed);
    if seed > i64::MAX as u64 {
        return Err(CliError::flag("seed", format!("{seed} exceeds {}", i64::MAX)));
    }

    let env_workers = match env_workers {
        Some(s) => Some(
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::other(format!("invalid value for {WORKERS_ENV}: '{s}'")))?,
        ),
        None => None,
    };
    let workers = args
        .workers
        .or(file.workers)
        .or(env_workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(CliError::flag("workers", "must be at least 1"));
    }

    let campaign = Campaign {
        nt,
        nr,
        modulation,
        detectors,
        snr_points,
        min_bits,
        max_trials,
        seed,
        params: DetectorParams { lambda, mu, admm: AdmmConfig { rho, eps, max_iter }, tau },
    };
    campaign.validate().map_err(|e| match e {
        Error::SearchSpaceTooLarge(_) => CliError::flag("detectors", format!("ml: {e}")),
        _ => CliError::other(e.to_string()),
    })?;

    let log_level = match (args.quiet, args.verbose) {
        (true, _) => log::LevelFilter::Warn,
        (false, 0) => log::LevelFilter::Info,
        (false, 1) => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };

    Ok(Settings { campaign, workers, out: args.out.or(file.out), log_level, warnings })
}
