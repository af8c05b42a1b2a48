//! Detectors operating on the real-valued system model.
//!
//! [`detect_lasso`] solves the sparse-coding LASSO once and quantizes `S·z`.
//! [`detect_two_lasso`] accepts every soft estimate that lies within τ of a
//! constellation point, cancels those symbols from the received vector and
//! solves a smaller LASSO for the remaining gray-zone symbols. MMSE, ZF and
//! exhaustive ML are provided as baselines and oracles.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::{Cholesky, DVector};

use crate::admm::{self, AdmmConfig};
use crate::model::{Constellation, RealSystemModel};
use crate::sparse::{build_sparse_problem, reduce_problem, ActiveSet};
use crate::{Error, Result};

/// Largest ML search space [`detect_ml_bruteforce`] will enumerate.
pub const ML_SEARCH_LIMIT: f64 = (1u64 << 20) as f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    /// Sparsity weight λ (the LASSO uses λ′ = λ/2).
    pub lambda: f64,
    /// Selection-constraint penalty μ.
    pub mu: f64,
    pub admm: AdmmConfig,
    /// Gray-zone threshold τ.
    pub tau: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self { lambda: 10.0, mu: 1e6, admm: AdmmConfig::default(), tau: 0.6 }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        self.admm.validate()?;
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Detector {
    Lasso,
    TwoLasso,
    Mmse,
    Zf,
    Ml,
}

impl Detector {
    pub const ALL: [Detector; 5] =
        [Detector::Lasso, Detector::TwoLasso, Detector::Mmse, Detector::Zf, Detector::Ml];

    pub fn name(self) -> &'static str {
        match self {
            Detector::Lasso => "lasso",
            Detector::TwoLasso => "2lasso",
            Detector::Mmse => "mmse",
            Detector::Zf => "zf",
            Detector::Ml => "ml",
        }
    }

    pub fn detect(self, rm: &RealSystemModel, c: &Constellation, p: &DetectorParams) -> Result<DetectionResult> {
        match self {
            Detector::Lasso => detect_lasso(rm, c, p),
            Detector::TwoLasso => detect_two_lasso(rm, c, p),
            Detector::Mmse => detect_mmse(rm, c, rm.noise_var),
            Detector::Zf => detect_mmse(rm, c, 0.0),
            Detector::Ml => detect_ml_bruteforce(rm, c),
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lasso" => Ok(Detector::Lasso),
            "2lasso" | "two-lasso" | "twolasso" => Ok(Detector::TwoLasso),
            "mmse" => Ok(Detector::Mmse),
            "zf" => Ok(Detector::Zf),
            "ml" => Ok(Detector::Ml),
            other => Err(Error::InvalidParameter(format!("unknown detector '{other}'"))),
        }
    }
}

/// Which pass produced a symbol decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    First,
    Second,
    /// Non-iterative detectors.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// Detected real symbols, all in the alphabet.
    pub x_hat: Vec<f64>,
    pub stage: Vec<Stage>,
    /// ADMM iterations per stage that ran.
    pub iters: Vec<usize>,
    pub converged: Vec<bool>,
    pub elapsed: Duration,
}

impl DetectionResult {
    fn linear(x_hat: Vec<f64>, start: Instant) -> Self {
        let n = x_hat.len();
        Self {
            x_hat,
            stage: vec![Stage::NotApplicable; n],
            iters: Vec::new(),
            converged: Vec::new(),
            elapsed: start.elapsed(),
        }
    }

    pub fn total_iters(&self) -> usize {
        self.iters.iter().sum()
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|c| *c)
    }
}

/// Nearest alphabet symbol; ties go to the smaller symbol.
pub fn quantize(v: f64, c: &Constellation) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::NonFinite("quantize"));
    }
    let mut best = c.alphabet()[0];
    let mut best_d = (v - best).abs();
    for &s in &c.alphabet()[1..] {
        let d = (v - s).abs();
        if d < best_d {
            best = s;
            best_d = d;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GrayZone {
    Detected(f64),
    Deferred,
}

/// Accepts `v` if it lies within τ of one of its two bracketing symbols,
/// otherwise defers it. Values beyond the outermost symbols are always
/// accepted at the nearest extreme.
pub fn classify_gray_zone(v: f64, c: &Constellation, tau: f64) -> Result<GrayZone> {
    if !v.is_finite() {
        return Err(Error::NonFinite("gray zone classification"));
    }
    let a = c.alphabet();
    if v <= a[0] {
        return Ok(GrayZone::Detected(a[0]));
    }
    if v >= a[a.len() - 1] {
        return Ok(GrayZone::Detected(a[a.len() - 1]));
    }
    let r = a.partition_point(|s| *s <= v);
    let (left, right) = (a[r - 1], a[r]);
    Ok(if (v - left).abs() <= tau {
        GrayZone::Detected(left)
    } else if (right - v).abs() <= tau {
        GrayZone::Detected(right)
    } else {
        GrayZone::Deferred
    })
}

pub fn detect_lasso(rm: &RealSystemModel, c: &Constellation, p: &DetectorParams) -> Result<DetectionResult> {
    let start = Instant::now();
    p.validate()?;
    let sp = build_sparse_problem(rm, c, p.lambda, p.mu)?;
    let (z, st) = admm::solve(&sp, &p.admm)?;
    let x = sp.symbols_of(&z);
    let x_hat = x.iter().map(|&v| quantize(v, c)).collect::<Result<Vec<_>>>()?;
    Ok(DetectionResult {
        stage: vec![Stage::First; x_hat.len()],
        x_hat,
        iters: vec![st.k],
        converged: vec![st.converged],
        elapsed: start.elapsed(),
    })
}

pub fn detect_two_lasso(rm: &RealSystemModel, c: &Constellation, p: &DetectorParams) -> Result<DetectionResult> {
    let start = Instant::now();
    p.validate()?;
    let n = rm.n_symbols();
    let sp = build_sparse_problem(rm, c, p.lambda, p.mu)?;
    let (z, st) = admm::solve(&sp, &p.admm)?;
    let x1 = sp.symbols_of(&z);

    let mut active = ActiveSet::new(n);
    for (i, &v) in x1.iter().enumerate() {
        if let GrayZone::Detected(s) = classify_gray_zone(v, c, p.tau)? {
            active.detect(i, s);
        }
    }

    let mut x_hat = vec![0.0; n];
    let mut stage = vec![Stage::First; n];
    for (&i, &v) in &active.detected {
        x_hat[i] = v;
    }
    let mut iters = vec![st.k];
    let mut converged = vec![st.converged];

    if !active.undetected.is_empty() {
        let sp2 = reduce_problem(rm, &active, c, p.lambda, p.mu)?;
        let (z2, st2) = admm::solve(&sp2, &p.admm)?;
        let x2 = sp2.symbols_of(&z2);
        for (&i, &v) in sp2.symbols.iter().zip(x2.iter()) {
            x_hat[i] = quantize(v, c)?;
            stage[i] = Stage::Second;
        }
        iters.push(st2.k);
        converged.push(st2.converged);
    }

    Ok(DetectionResult { x_hat, stage, iters, converged, elapsed: start.elapsed() })
}

/// Linear MMSE `(HᵀH + (σ²/Es)·I)⁻¹Hᵀy` followed by quantization. The real
/// model carries σ²/2 noise and Es/2 energy per component, so the ratio is
/// unchanged. `noise_var = 0` gives zero forcing.
pub fn detect_mmse(rm: &RealSystemModel, c: &Constellation, noise_var: f64) -> Result<DetectionResult> {
    let start = Instant::now();
    if !noise_var.is_finite() || noise_var < 0.0 {
        return Err(Error::InvalidParameter(format!("noise variance {noise_var}")));
    }
    let mut gram = rm.h.tr_mul(&rm.h);
    let reg = noise_var / c.symbol_energy();
    for i in 0..gram.nrows() {
        gram[(i, i)] += reg;
    }
    let chol = Cholesky::new(gram).ok_or(Error::Singular)?;
    let x = chol.solve(&rm.h.tr_mul(&rm.y));
    let x_hat = x.iter().map(|&v| quantize(v, c)).collect::<Result<Vec<_>>>()?;
    Ok(DetectionResult::linear(x_hat, start))
}

/// Exhaustive minimization of ‖y − Hx‖² over χ^{2Nt}.
pub fn detect_ml_bruteforce(rm: &RealSystemModel, c: &Constellation) -> Result<DetectionResult> {
    let start = Instant::now();
    let n = rm.n_symbols();
    let m = c.size();
    let space = (m as f64).powi(n as i32);
    if space > ML_SEARCH_LIMIT {
        return Err(Error::SearchSpaceTooLarge(space));
    }
    let a = c.alphabet();
    let mut digits = vec![0usize; n];
    let mut x = DVector::from_element(n, a[0]);
    let mut r = &rm.y - &rm.h * &x;
    let mut best = x.clone();
    let mut best_obj = r.norm_squared();

    // odometer over the alphabet indices, updating the residual one column at a time
    loop {
        let mut j = 0;
        while j < n {
            let old = a[digits[j]];
            digits[j] = (digits[j] + 1) % m;
            let new = a[digits[j]];
            r.axpy(old - new, &rm.h.column(j), 1.0);
            x[j] = new;
            if digits[j] != 0 {
                break;
            }
            j += 1;
        }
        if j == n {
            break;
        }
        let obj = r.norm_squared();
        if obj < best_obj {
            best_obj = obj;
            best.copy_from(&x);
        }
    }
    Ok(DetectionResult::linear(best.as_slice().to_vec(), start))
}
