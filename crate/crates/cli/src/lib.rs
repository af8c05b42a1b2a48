//! Command-line front end for `lasso-mimo` BER campaigns.
//!
//! Settings come from flags, then an optional `--config` file, then
//! defaults. Results are CSV with a commented metadata block that doubles
//! as a config file for repeating the run.

pub mod args;
pub mod output;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use lasso_mimo::sim::run_campaign_with;
use log::{error, info, warn};

pub use args::{parse_args, resolve, Args, ArgsError, CliError, FileConfig, Settings};
pub use output::{emit_results, format_row, HEADER};

fn open_output(settings: &Settings) -> io::Result<Box<dyn Write>> {
    Ok(match &settings.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn out_name(settings: &Settings) -> String {
    settings.out.as_ref().map_or_else(|| "stdout".to_string(), |p| p.display().to_string())
}

/// Runs a campaign as configured and reports the exit status.
pub fn run(settings: &Settings) -> ExitCode {
    for w in &settings.warnings {
        warn!("{w}");
    }
    let campaign = &settings.campaign;
    let name = out_name(settings);
    let mut out = match open_output(settings) {
        Ok(w) => w,
        Err(e) => {
            error!("cannot open {name}: {e}");
            return ExitCode::FAILURE;
        }
    };
    let created = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let head = output::write_metadata(&mut out, campaign, &created)
        .and_then(|_| output::write_header(&mut out))
        .and_then(|_| out.flush());
    if let Err(e) = head {
        error!("writing {name}: {e}");
        return ExitCode::FAILURE;
    }
    info!(
        "{}x{} {}, {} SNR points, detectors [{}], {} workers",
        campaign.nt,
        campaign.nr,
        campaign.modulation,
        campaign.snr_points.len(),
        campaign.detectors.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
        settings.workers
    );

    let mut io_error = None;
    let result = run_campaign_with(campaign, settings.workers, |points| {
        for p in points {
            info!(
                "{} dB {}: ber {:.3e} ± {:.1e} ({} bits, {} errors)",
                p.snr_db, p.detector, p.ber, p.ci95, p.bits_sent, p.bit_errors
            );
            if p.failures > 0 {
                warn!("{} dB {}: {} failed trials", p.snr_db, p.detector, p.failures);
            }
        }
        if io_error.is_none() {
            io_error = output::write_rows(&mut out, points, campaign).err();
        }
    });
    match (result, io_error) {
        (Ok(_), None) => ExitCode::SUCCESS,
        (_, Some(e)) => {
            error!("writing {name}: {e}");
            ExitCode::FAILURE
        }
        (Err(e), None) => {
            error!("campaign stopped: {e}");
            ExitCode::FAILURE
        }
    }
}

pub fn main_with_args<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let settings = match parse_args(argv) {
        Ok(s) => s,
        Err(ArgsError::Clap(e)) => e.exit(),
        Err(ArgsError::Invalid(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    env_logger::Builder::new()
        .filter_level(settings.log_level)
        .parse_default_env()
        .format_timestamp(None)
        .init();
    run(&settings)
}
