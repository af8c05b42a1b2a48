//! Monte Carlo bit-error-rate campaigns.
//!
//! A trial draws a fresh Rayleigh channel, one random bit vector and one
//! noise realization, then runs every requested detector on the same
//! received vector. Trial `t` at SNR `s` always uses the same random stream,
//! derived from `(seed, s, t)`, so campaign results do not depend on how
//! many workers execute the trials.
//!
//! SNR is the average received SNR per receive antenna, `SNR = Nt·Es/σ²`.

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::detect::{Detector, DetectorParams, ML_SEARCH_LIMIT};
use crate::model::{
    demap_symbols, draw_channel, map_bits, noise_variance, realize, to_real, unstack, Constellation, Modulation,
};
use crate::{Error, Result};

/// Trials evaluated between stopping checks.
const BATCH: u64 = 32;
/// Errors required before a point may stop once `min_bits` are sent.
pub const MIN_ERRORS: u64 = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub nt: usize,
    pub nr: usize,
    pub modulation: Modulation,
    pub detectors: Vec<Detector>,
    /// SNR points in dB; `inf` gives a noiseless channel.
    pub snr_points: Vec<f64>,
    pub min_bits: u64,
    pub max_trials: u64,
    pub seed: u64,
    pub params: DetectorParams,
}

impl Default for Campaign {
    fn default() -> Self {
        Self {
            nt: 16,
            nr: 16,
            modulation: Modulation::Qpsk,
            detectors: vec![Detector::Lasso, Detector::TwoLasso, Detector::Mmse],
            snr_points: (0..=8).map(|i| 2.0 * i as f64).collect(),
            min_bits: 100_000,
            max_trials: 1_000_000,
            seed: 1,
            params: DetectorParams::default(),
        }
    }
}

impl Campaign {
    pub fn validate(&self) -> Result<()> {
        if self.nt == 0 || self.nr == 0 {
            return Err(Error::InvalidParameter("antenna counts must be at least 1".into()));
        }
        if self.snr_points.is_empty() {
            return Err(Error::InvalidParameter("no SNR points".into()));
        }
        if let Some(s) = self.snr_points.iter().find(|s| s.is_nan() || **s == f64::NEG_INFINITY) {
            return Err(Error::InvalidParameter(format!("SNR point {s}")));
        }
        if self.min_bits < 1000 {
            return Err(Error::InvalidParameter(format!("min_bits must be at least 1000, got {}", self.min_bits)));
        }
        if self.max_trials == 0 {
            return Err(Error::InvalidParameter("max_trials must be at least 1".into()));
        }
        for (i, d) in self.detectors.iter().enumerate() {
            if self.detectors[..i].contains(d) {
                return Err(Error::InvalidParameter(format!("detector {d} listed twice")));
            }
        }
        if self.detectors.contains(&Detector::Ml) {
            let space = (self.modulation.order() as f64).powi(self.nt as i32);
            if space > ML_SEARCH_LIMIT {
                return Err(Error::SearchSpaceTooLarge(space));
            }
        }
        self.params.validate()
    }

    pub fn constellation(&self) -> Constellation {
        Constellation::from(self.modulation)
    }

    pub fn bits_per_trial(&self) -> u64 {
        (2 * self.nt * self.constellation().bits_per_pam()) as u64
    }

    fn trial_rng(&self, snr_db: f64, trial: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&snr_db.to_bits().to_le_bytes());
        key[16..24].copy_from_slice(b"lassomim");
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(trial);
        rng
    }
}

/// Outcome of one detector on one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorOutcome {
    pub bit_errors: u64,
    pub iters: usize,
    pub converged: bool,
    /// The detector returned an error; all bits are counted as wrong.
    pub failed: bool,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub bits: u64,
    /// One entry per detector, in the order requested.
    pub detectors: Vec<DetectorOutcome>,
}

/// Runs one trial of `campaign` at `snr_db` for every campaign detector.
pub fn run_trial(campaign: &Campaign, snr_db: f64, trial: u64) -> Result<TrialOutcome> {
    run_trial_for(campaign, &campaign.detectors, snr_db, trial)
}

fn run_trial_for(campaign: &Campaign, detectors: &[Detector], snr_db: f64, trial: u64) -> Result<TrialOutcome> {
    let c = campaign.constellation();
    let mut rng = campaign.trial_rng(snr_db, trial);
    let noise_var = noise_variance(snr_db, campaign.nt, &c);
    let channel = draw_channel(campaign.nt, campaign.nr, noise_var, &mut rng)?;
    let bits: Vec<u8> = (0..campaign.bits_per_trial()).map(|_| rng.random_range(0..2u8)).collect();
    let x = map_bits(&bits, &c)?;
    let y = realize(&channel, &unstack(&x), &mut rng)?;
    let rm = to_real(&channel, &y)?;

    let detectors = detectors
        .iter()
        .map(|d| match d.detect(&rm, &c, &campaign.params) {
            Ok(res) => {
                let decided = demap_symbols(&res.x_hat, &c)?;
                Ok(DetectorOutcome {
                    bit_errors: decided.iter().zip(&bits).filter(|(a, b)| a != b).count() as u64,
                    iters: res.total_iters(),
                    converged: res.all_converged(),
                    failed: false,
                    elapsed: res.elapsed,
                })
            }
            Err(e) => {
                log::warn!("{d} failed on trial {trial} at {snr_db} dB: {e}");
                Ok(DetectorOutcome {
                    bit_errors: bits.len() as u64,
                    iters: 0,
                    converged: false,
                    failed: true,
                    elapsed: Duration::ZERO,
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialOutcome { bits: bits.len() as u64, detectors })
}

/// Aggregated result of one detector at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub detector: Detector,
    pub trials: u64,
    pub bits_sent: u64,
    pub bit_errors: u64,
    pub ber: f64,
    /// Half-width of the 95% normal-approximation binomial interval.
    pub ci95: f64,
    pub avg_admm_iters: f64,
    pub avg_solve_ms: f64,
    /// Trials whose ADMM solves hit `max_iter`, plus failed trials.
    pub nonconverged_count: u64,
    pub failures: u64,
}

impl BerPoint {
    pub fn lower(&self) -> f64 {
        (self.ber - self.ci95).max(0.0)
    }

    pub fn upper(&self) -> f64 {
        self.ber + self.ci95
    }
}

/// 95% normal-approximation half-width for `errors` out of `n`.
pub fn binomial_ci95(errors: u64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = errors as f64 / n as f64;
    1.96 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Per-detector, per-trial record of one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorTrace {
    pub detector: Detector,
    /// Bit errors of trials `0..len`.
    pub errors: Vec<u64>,
    pub elapsed: Vec<Duration>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub points: Vec<BerPoint>,
    pub traces: Vec<DetectorTrace>,
}

#[derive(Debug, Clone)]
struct Accumulator {
    detector: Detector,
    done: bool,
    bits: u64,
    errors: u64,
    iters: u64,
    nonconverged: u64,
    failures: u64,
    elapsed: Duration,
    trace: DetectorTrace,
}

impl Accumulator {
    fn new(detector: Detector) -> Self {
        Self {
            detector,
            done: false,
            bits: 0,
            errors: 0,
            iters: 0,
            nonconverged: 0,
            failures: 0,
            elapsed: Duration::ZERO,
            trace: DetectorTrace { detector, errors: Vec::new(), elapsed: Vec::new() },
        }
    }

    fn add(&mut self, bits: u64, o: &DetectorOutcome) {
        self.bits += bits;
        self.errors += o.bit_errors;
        self.iters += o.iters as u64;
        self.elapsed += o.elapsed;
        if o.failed {
            self.failures += 1;
        }
        if o.failed || !o.converged {
            self.nonconverged += 1;
        }
        self.trace.errors.push(o.bit_errors);
        self.trace.elapsed.push(o.elapsed);
    }

    fn detector_active(&self, active: &[Detector]) -> bool {
        active.contains(&self.detector)
    }

    fn trials(&self) -> u64 {
        self.trace.errors.len() as u64
    }

    fn point(&self, snr_db: f64) -> BerPoint {
        let trials = self.trials().max(1) as f64;
        let ber = if self.bits == 0 { 0.0 } else { self.errors as f64 / self.bits as f64 };
        BerPoint {
            snr_db,
            detector: self.detector,
            trials: self.trials(),
            bits_sent: self.bits,
            bit_errors: self.errors,
            ber,
            ci95: binomial_ci95(self.errors, self.bits),
            avg_admm_iters: self.iters as f64 / trials,
            avg_solve_ms: self.elapsed.as_secs_f64() * 1e3 / trials,
            nonconverged_count: self.nonconverged,
            failures: self.failures,
        }
    }
}

/// Runs every detector at one SNR point until each has sent `min_bits` and
/// seen [`MIN_ERRORS`] errors, or has used `max_trials` trials.
pub fn run_point(campaign: &Campaign, snr_db: f64, pool: &rayon::ThreadPool) -> Result<PointResult> {
    let mut accs: Vec<Accumulator> = campaign.detectors.iter().copied().map(Accumulator::new).collect();
    let mut next = 0u64;
    while accs.iter().any(|a| !a.done) {
        let active: Vec<Detector> = accs.iter().filter(|a| !a.done).map(|a| a.detector).collect();
        let end = (next + BATCH).min(campaign.max_trials);
        let outcomes = pool.install(|| {
            (next..end)
                .into_par_iter()
                .map(|t| run_trial_for(campaign, &active, snr_db, t))
                .collect::<Result<Vec<_>>>()
        })?;
        for outcome in &outcomes {
            // outcome.detectors follows `active`, which is the not-done subset in order
            let live = accs.iter_mut().filter(|a| a.detector_active(&active));
            for (acc, o) in live.zip(&outcome.detectors) {
                if acc.done {
                    continue;
                }
                acc.add(outcome.bits, o);
                acc.done = (acc.bits >= campaign.min_bits && acc.errors >= MIN_ERRORS)
                    || acc.trials() >= campaign.max_trials;
            }
        }
        next = end;
        if next >= campaign.max_trials {
            accs.iter_mut().for_each(|a| a.done = true);
        }
    }
    Ok(PointResult {
        points: accs.iter().map(|a| a.point(snr_db)).collect(),
        traces: accs.into_iter().map(|a| a.trace).collect(),
    })
}

/// Runs the whole campaign on `workers` threads, calling `on_point` after
/// each SNR point completes.
pub fn run_campaign_with<F>(campaign: &Campaign, workers: usize, mut on_point: F) -> Result<Vec<BerPoint>>
where
    F: FnMut(&[BerPoint]),
{
    campaign.validate()?;
    if campaign.detectors.is_empty() {
        return Ok(Vec::new());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let mut all = Vec::new();
    for &snr in &campaign.snr_points {
        let res = run_point(campaign, snr, &pool)?;
        on_point(&res.points);
        all.extend(res.points);
    }
    Ok(all)
}

pub fn run_campaign(campaign: &Campaign, workers: usize) -> Result<Vec<BerPoint>> {
    run_campaign_with(campaign, workers, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(detectors: Vec<Detector>) -> Campaign {
        Campaign {
            nt: 2,
            nr: 2,
            detectors,
            snr_points: vec![6.0],
            min_bits: 1000,
            max_trials: 400,
            seed: 42,
            ..Default::default()
        }
    }

    #[test]
    fn trial_is_deterministic() {
        let c = small(vec![Detector::Lasso, Detector::Mmse]);
        let a = run_trial(&c, 6.0, 17).unwrap();
        let b = run_trial(&c, 6.0, 17).unwrap();
        let errs = |t: &TrialOutcome| t.detectors.iter().map(|d| d.bit_errors).collect::<Vec<_>>();
        assert_eq!(errs(&a), errs(&b));
        assert_eq!(a.bits, 4);
    }

    #[test]
    fn trial_streams_differ() {
        let c = small(vec![Detector::Mmse]);
        let mut r0 = c.trial_rng(6.0, 0);
        let mut r1 = c.trial_rng(6.0, 1);
        let mut r2 = c.trial_rng(7.0, 0);
        let (a, b, d): (u64, u64, u64) = (r0.random(), r1.random(), r2.random());
        assert!(a != b && a != d);
    }

    #[test]
    fn noiseless_ml_trial_is_error_free() {
        let c = small(vec![Detector::Ml]);
        for t in 0..50 {
            let o = run_trial(&c, f64::INFINITY, t).unwrap();
            assert_eq!(o.detectors[0].bit_errors, 0);
        }
    }

    #[test]
    fn empty_detector_list() {
        let c = small(vec![]);
        assert!(run_campaign(&c, 2).unwrap().is_empty());
    }

    #[test]
    fn stopping_rule() {
        let c = Campaign { min_bits: 1000, max_trials: 10_000, ..small(vec![Detector::Mmse]) };
        let p = &run_campaign(&c, 2).unwrap()[0];
        assert!(p.bits_sent >= 1000 && p.bit_errors >= MIN_ERRORS);
        // one trial fewer would not have satisfied both conditions
        assert_eq!(p.ber, p.bit_errors as f64 / p.bits_sent as f64);
        assert_eq!(p.trials * 4, p.bits_sent);

        let capped = Campaign { max_trials: 50, ..c };
        let p = &run_campaign(&capped, 2).unwrap()[0];
        assert_eq!(p.trials, 50);
    }

    #[test]
    fn results_do_not_depend_on_workers() {
        let c = Campaign {
            snr_points: vec![4.0, 8.0],
            ..small(vec![Detector::Lasso, Detector::TwoLasso, Detector::Mmse])
        };
        let counts = |w| {
            run_campaign(&c, w)
                .unwrap()
                .iter()
                .map(|p| (p.trials, p.bits_sent, p.bit_errors, p.nonconverged_count))
                .collect::<Vec<_>>()
        };
        assert_eq!(counts(1), counts(8));
    }

    #[test]
    fn validation() {
        assert!(small(vec![Detector::Ml]).validate().is_ok());
        assert!(Campaign { snr_points: vec![], ..small(vec![]) }.validate().is_err());
        assert!(Campaign { min_bits: 999, ..small(vec![]) }.validate().is_err());
        assert!(small(vec![Detector::Mmse, Detector::Mmse]).validate().is_err());
        let big_ml = Campaign { nt: 16, ..small(vec![Detector::Ml]) };
        assert!(matches!(big_ml.validate(), Err(Error::SearchSpaceTooLarge(_))));
    }

    #[test]
    fn ci_half_width() {
        assert_eq!(binomial_ci95(0, 0), 0.0);
        assert_eq!(binomial_ci95(0, 100), 0.0);
        let w = binomial_ci95(100, 10_000);
        assert!((w - 1.96 * (0.01f64 * 0.99 / 10_000.0).sqrt()).abs() < 1e-15);
    }
}
