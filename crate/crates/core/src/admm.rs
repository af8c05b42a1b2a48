//! ADMM solver for `min ½‖ȳ − H̄α‖² + λ′‖α‖₁`.
//!
//! The problem is split as `f(α) + g(z)` subject to `α = z` and iterated in
//! scaled-dual form (η is the running sum of residuals):
//!
//! ```text
//! α ← (H̄ᵀH̄ + ρI)⁻¹ (H̄ᵀȳ + ρ(z − η))
//! z ← soft(α + η, λ′/ρ)
//! η ← η + α − z
//! ```
//!
//! `H̄ᵀH̄ + ρI` is factored once per solve. Iteration stops once
//! ‖ηᵏ − ηᵏ⁻¹‖ = ‖αᵏ − zᵏ‖ drops below ε.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::sparse::SparseProblem;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmConfig {
    /// Augmented Lagrangian weight ρ.
    pub rho: f64,
    /// Stopping tolerance on ‖ηᵏ − ηᵏ⁻¹‖.
    pub eps: f64,
    pub max_iter: usize,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self { rho: 10.0, eps: 1e-4, max_iter: 500 }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {}", self.eps)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Iterates and diagnostics of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub alpha: DVector<f64>,
    pub z: DVector<f64>,
    pub eta: DVector<f64>,
    /// Iterations performed.
    pub k: usize,
    /// ‖α − z‖₂ at the last iterate.
    pub primal_residual: f64,
    /// ‖ηᵏ − ηᵏ⁻¹‖₂ at the last iterate.
    pub dual_change: f64,
    /// ρ‖zᵏ − zᵏ⁻¹‖₂ at the last iterate.
    pub dual_residual: f64,
    /// False when the solve stopped at `max_iter`.
    pub converged: bool,
}

impl AdmmState {
    fn zeros(n: usize) -> Self {
        Self {
            alpha: DVector::zeros(n),
            z: DVector::zeros(n),
            eta: DVector::zeros(n),
            k: 0,
            primal_residual: 0.0,
            dual_change: 0.0,
            dual_residual: 0.0,
            converged: false,
        }
    }
}

/// Cholesky factor of `H̄ᵀH̄ + ρI`.
#[derive(Debug, Clone)]
pub struct CachedFactor {
    chol: Cholesky<f64, Dyn>,
}

impl CachedFactor {
    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    /// Solves `(H̄ᵀH̄ + ρI) v = rhs` in place.
    pub fn solve_mut(&self, rhs: &mut DVector<f64>) {
        self.chol.solve_mut(rhs);
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }
}

pub fn factorize(h_bar: &DMatrix<f64>, rho: f64) -> Result<CachedFactor> {
    if h_bar.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("factorize"));
    }
    let n = h_bar.ncols();
    let mut normal = h_bar.tr_mul(h_bar);
    for i in 0..n {
        normal[(i, i)] += rho;
    }
    Cholesky::new(normal).map(|chol| CachedFactor { chol }).ok_or(Error::Singular)
}

/// Exact minimizer of `½‖ȳ − H̄α‖² + (ρ/2)‖α − z + η‖²`, given `H̄ᵀȳ`.
pub fn alpha_update(
    factor: &CachedFactor,
    hty: &DVector<f64>,
    z: &DVector<f64>,
    eta: &DVector<f64>,
    rho: f64,
) -> Result<DVector<f64>> {
    let n = factor.dim();
    if hty.len() != n || z.len() != n || eta.len() != n {
        return Err(Error::Dimension(format!("alpha update on {n} variables")));
    }
    let mut alpha = DVector::zeros(n);
    alpha_update_into(factor, hty, z, eta, rho, &mut alpha);
    if alpha.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("alpha update"));
    }
    Ok(alpha)
}

fn alpha_update_into(
    factor: &CachedFactor,
    hty: &DVector<f64>,
    z: &DVector<f64>,
    eta: &DVector<f64>,
    rho: f64,
    out: &mut DVector<f64>,
) {
    for i in 0..out.len() {
        out[i] = hty[i] + rho * (z[i] - eta[i]);
    }
    factor.solve_mut(out);
}

/// `sign(v)·max(|v| − κ, 0)`.
#[inline]
pub fn soft_threshold(v: f64, kappa: f64) -> f64 {
    if v > kappa {
        v - kappa
    } else if v < -kappa {
        v + kappa
    } else {
        0.0
    }
}

/// Elementwise `z_i = soft(α_i + η_i, λ′/ρ)`.
pub fn z_update(alpha: &DVector<f64>, eta: &DVector<f64>, rho: f64, lambda_prime: f64) -> DVector<f64> {
    let kappa = lambda_prime / rho;
    alpha.zip_map(eta, |a, e| soft_threshold(a + e, kappa))
}

/// Runs ADMM on the stacked problem from a zero start. Returns the sparse
/// iterate `z` together with the full state.
pub fn solve(sp: &SparseProblem, cfg: &AdmmConfig) -> Result<(DVector<f64>, AdmmState)> {
    solve_lasso(&sp.h_bar, &sp.y_bar, sp.lambda_prime, cfg)
}

/// [`solve`] for an arbitrary LASSO `min ½‖y − Aα‖² + λ′‖α‖₁`.
pub fn solve_lasso(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda_prime: f64,
    cfg: &AdmmConfig,
) -> Result<(DVector<f64>, AdmmState)> {
    cfg.validate()?;
    if a.nrows() != y.len() {
        return Err(Error::Dimension(format!("{} rows against {} observations", a.nrows(), y.len())));
    }
    if lambda_prime.is_nan() || lambda_prime < 0.0 {
        return Err(Error::InvalidParameter(format!("lambda' must be nonnegative, got {lambda_prime}")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("observations"));
    }
    let factor = factorize(a, cfg.rho)?;
    let hty = a.tr_mul(y);
    let n = a.ncols();
    let kappa = lambda_prime / cfg.rho;

    let mut st = AdmmState::zeros(n);
    while st.k < cfg.max_iter {
        st.k += 1;
        alpha_update_into(&factor, &hty, &st.z, &st.eta, cfg.rho, &mut st.alpha);
        let mut change = 0.0;
        let mut z_step = 0.0;
        for i in 0..n {
            let v = st.alpha[i] + st.eta[i];
            let zi = soft_threshold(v, kappa);
            let r = st.alpha[i] - zi;
            z_step += (zi - st.z[i]) * (zi - st.z[i]);
            st.z[i] = zi;
            st.eta[i] += r;
            change += r * r;
        }
        st.dual_change = change.sqrt();
        st.primal_residual = st.dual_change;
        st.dual_residual = cfg.rho * z_step.sqrt();
        if !st.dual_change.is_finite() {
            return Err(Error::NonFinite("admm iterate"));
        }
        if st.dual_change < cfg.eps && st.dual_residual < cfg.eps {
            st.converged = true;
            break;
        }
    }
    Ok((st.z.clone(), st))
}
