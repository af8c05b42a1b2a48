use std::io::{self, Write};

use lasso_mimo::sim::{BerPoint, Campaign};

pub const HEADER: &str = "snr_db,detector,nt,nr,mod,bits,bit_errors,ber,ci95,avg_iters,avg_ms,nonconverged";

/// Writes the commented metadata block. Lines prefixed `#!` form a config
/// file that `--config` reads back to repeat the campaign.
pub fn write_metadata<W: Write>(w: &mut W, campaign: &Campaign, created: &str) -> io::Result<()> {
    let c = campaign.constellation();
    let p = &campaign.params;
    let snr: Vec<String> = campaign.snr_points.iter().map(|v| format!("{v:?}")).collect();
    let detectors: Vec<String> = campaign.detectors.iter().map(ToString::to_string).collect();
    writeln!(w, "# lasso-mimo {} BER campaign", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "# created = {created}")?;
    writeln!(w, "# snr_db = 10*log10(Nt*Es/sigma2), sigma2 = complex noise variance per receive antenna")?;
    writeln!(w, "# Es = {:?} (mean |s|^2 of the unnormalized {} alphabet)", c.symbol_energy(), campaign.modulation)?;
    writeln!(w, "# repeat with: lasso-mimo --config <this file>")?;
    writeln!(w, "#! nt = {}", campaign.nt)?;
    writeln!(w, "#! nr = {}", campaign.nr)?;
    writeln!(w, "#! mod = \"{}\"", campaign.modulation)?;
    writeln!(w, "#! snr = [{}]", snr.join(", "))?;
    writeln!(w, "#! detectors = \"{}\"", detectors.join(","))?;
    writeln!(w, "#! lambda = {:?}", p.lambda)?;
    writeln!(w, "#! mu = {:?}", p.mu)?;
    writeln!(w, "#! rho = {:?}", p.admm.rho)?;
    writeln!(w, "#! tau = {:?}", p.tau)?;
    writeln!(w, "#! eps = {:?}", p.admm.eps)?;
    writeln!(w, "#! max_iter = {}", p.admm.max_iter)?;
    writeln!(w, "#! min_bits = {}", campaign.min_bits)?;
    writeln!(w, "#! max_trials = {}", campaign.max_trials)?;
    writeln!(w, "#! seed = {}", campaign.seed)
}

pub fn write_header<W: Write>(w: &mut W) -> io::Result<()> {
    writeln!(w, "{HEADER}")
}

/// One CSV row. Floats use the shortest representation that parses back to
/// the same value.
pub fn format_row(p: &BerPoint, campaign: &Campaign) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{:.6},{}",
        p.snr_db,
        p.detector,
        campaign.nt,
        campaign.nr,
        campaign.modulation,
        p.bits_sent,
        p.bit_errors,
        p.ber,
        p.ci95,
        p.avg_admm_iters,
        p.avg_solve_ms,
        p.nonconverged_count,
    )
}

pub fn write_rows<W: Write>(w: &mut W, points: &[BerPoint], campaign: &Campaign) -> io::Result<()> {
    for p in points {
        writeln!(w, "{}", format_row(p, campaign))?;
    }
    w.flush()
}

/// Metadata, header and rows in one go.
pub fn emit_results<W: Write>(w: &mut W, points: &[BerPoint], campaign: &Campaign, created: &str) -> io::Result<()> {
    write_metadata(w, campaign, created)?;
    write_header(w)?;
    write_rows(w, points, campaign)
}
