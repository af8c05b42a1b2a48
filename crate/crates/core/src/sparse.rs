//! Sparse-coding form of the detection problem.
//!
//! Every real symbol `x(i)` is written as `s₁α₁ + … + s_mα_m` over its own
//! block of coefficients, so `x = Sα`. A valid symbol has a one-hot block,
//! which gives the constraint `Bα = 1`. Relaxing ‖α‖₀ to ‖α‖₁ and folding
//! the constraint into the data term with weight μ yields the standard LASSO
//!
//! ```text
//! min ½‖ȳ − H̄α‖² + λ′‖α‖₁,   ȳ = [y; √μ·1],   H̄ = [HS; √μ·B],   λ′ = λ/2.
//! ```

use std::collections::BTreeMap;

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::model::{Constellation, RealSystemModel};
use crate::{Error, Result};

/// The stacked LASSO system for a set of real symbols.
#[derive(Debug, Clone)]
pub struct SparseProblem {
    /// Block-diagonal symbol matrix, one row `(s₁ … s_m)` per symbol.
    pub s: DMatrix<f64>,
    /// Block-diagonal matrix of ones, one row of m ones per symbol.
    pub b: DMatrix<f64>,
    /// `H·S`.
    pub h_tilde: DMatrix<f64>,
    /// `[y; √μ·1]`.
    pub y_bar: DVector<f64>,
    /// `[H·S; √μ·B]`.
    pub h_bar: DMatrix<f64>,
    pub lambda_prime: f64,
    pub mu: f64,
    /// Original (0-based) real-symbol index of every block, in column order.
    pub symbols: Vec<usize>,
    /// PAM alphabet size m, the width of each block.
    pub block: usize,
}

impl SparseProblem {
    pub fn n_vars(&self) -> usize {
        self.s.ncols()
    }

    pub fn n_symbols(&self) -> usize {
        self.symbols.len()
    }

    /// Soft symbol estimate `S·α`.
    pub fn symbols_of(&self, alpha: &DVector<f64>) -> DVector<f64> {
        &self.s * alpha
    }

    /// One-hot coefficient vector selecting `x(i)` in every block.
    pub fn one_hot(&self, x: &[f64], c: &Constellation) -> Result<DVector<f64>> {
        if x.len() != self.n_symbols() {
            return Err(Error::Dimension(format!(
                "{} symbols for {} blocks",
                x.len(),
                self.n_symbols()
            )));
        }
        let mut alpha = DVector::zeros(self.n_vars());
        for (blk, &v) in x.iter().enumerate() {
            let idx = c.index_of(v).ok_or(Error::NotInAlphabet(v))?;
            alpha[blk * self.block + idx] = 1.0;
        }
        Ok(alpha)
    }

    /// LASSO objective `½‖ȳ − H̄α‖² + λ′‖α‖₁`.
    pub fn objective(&self, alpha: &DVector<f64>) -> f64 {
        0.5 * (&self.y_bar - &self.h_bar * alpha).norm_squared() + self.lambda_prime * alpha.lp_norm(1)
    }
}

/// Partition of the real symbols into those still to be detected and those
/// already fixed to a constellation point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActiveSet {
    pub undetected: Vec<usize>,
    pub detected: BTreeMap<usize, f64>,
}

impl ActiveSet {
    /// All `n` symbols undetected.
    pub fn new(n: usize) -> Self {
        Self { undetected: (0..n).collect(), detected: BTreeMap::new() }
    }

    /// Moves symbol `i` to the detected set with value `value`.
    pub fn detect(&mut self, i: usize, value: f64) {
        if let Some(pos) = self.undetected.iter().position(|&u| u == i) {
            self.undetected.remove(pos);
        }
        self.detected.insert(i, value);
    }
}

pub fn build_sparse_problem(
    rm: &RealSystemModel,
    c: &Constellation,
    lambda: f64,
    mu: f64,
) -> Result<SparseProblem> {
    let symbols = (0..rm.n_symbols()).collect();
    assemble(&rm.h, &rm.y, symbols, c, lambda, mu)
}

/// Stage-2 system over the undetected symbols, with the contribution of the
/// detected ones cancelled from `y`. An empty detected set returns the full
/// problem.
pub fn reduce_problem(
    rm: &RealSystemModel,
    active: &ActiveSet,
    c: &Constellation,
    lambda: f64,
    mu: f64,
) -> Result<SparseProblem> {
    let n = rm.n_symbols();
    if active.undetected.is_empty() {
        return Err(Error::NothingToDetect);
    }
    if active.undetected.len() + active.detected.len() != n
        || active.undetected.iter().any(|i| *i >= n || active.detected.contains_key(i))
    {
        return Err(Error::Dimension("active set does not partition the symbols".into()));
    }
    let mut y = rm.y.clone();
    for (&i, &v) in &active.detected {
        if !c.contains(v) {
            return Err(Error::NotInAlphabet(v));
        }
        y.axpy(-v, &rm.h.column(i), 1.0);
    }
    let h = rm.h.select_columns(&active.undetected);
    assemble(&h, &y, active.undetected.clone(), c, lambda, mu)
}

fn assemble(
    h: &DMatrix<f64>,
    y: &DVector<f64>,
    symbols: Vec<usize>,
    c: &Constellation,
    lambda: f64,
    mu: f64,
) -> Result<SparseProblem> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    if h.nrows() != y.len() || h.ncols() != symbols.len() {
        return Err(Error::Dimension(format!(
            "channel {}x{} with {} observations and {} symbols",
            h.nrows(),
            h.ncols(),
            y.len(),
            symbols.len()
        )));
    }
    let lambda_prime = lambda / 2.0;
    if mu <= 100.0 * lambda_prime {
        warn!("mu = {mu} is not much larger than lambda' = {lambda_prime}; the selection constraint will be loose");
    }

    let n_sym = symbols.len();
    let m = c.size();
    let n_vars = n_sym * m;
    let mut s = DMatrix::zeros(n_sym, n_vars);
    let mut b = DMatrix::zeros(n_sym, n_vars);
    for blk in 0..n_sym {
        for (j, &sym) in c.alphabet().iter().enumerate() {
            s[(blk, blk * m + j)] = sym;
            b[(blk, blk * m + j)] = 1.0;
        }
    }
    let h_tilde = h * &s;

    let rows = h.nrows();
    let root_mu = mu.sqrt();
    let mut h_bar = DMatrix::zeros(rows + n_sym, n_vars);
    h_bar.rows_mut(0, rows).copy_from(&h_tilde);
    h_bar.rows_mut(rows, n_sym).copy_from(&(&b * root_mu));
    let mut y_bar = DVector::from_element(rows + n_sym, root_mu);
    y_bar.rows_mut(0, rows).copy_from(y);

    Ok(SparseProblem { s, b, h_tilde, y_bar, h_bar, lambda_prime, mu, symbols, block: m })
}
