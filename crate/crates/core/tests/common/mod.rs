#![allow(dead_code)]

use lasso_mimo::model::{draw_channel, realize, to_real, unstack, Constellation, RealSystemModel};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_symbols(rng: &mut ChaCha8Rng, n: usize, c: &Constellation) -> Vec<f64> {
    (0..n).map(|_| c.alphabet()[rng.random_range(0..c.size())]).collect()
}

/// Random Rayleigh instance; returns the real model and the transmitted real symbols.
pub fn instance(
    rng: &mut ChaCha8Rng,
    nt: usize,
    nr: usize,
    noise_var: f64,
    c: &Constellation,
) -> (RealSystemModel, Vec<f64>) {
    let ch = draw_channel(nt, nr, noise_var, rng).unwrap();
    let x = random_symbols(rng, 2 * nt, c);
    let y = realize(&ch, &unstack(&x), rng).unwrap();
    (to_real(&ch, &y).unwrap(), x)
}

pub fn residual(rm: &RealSystemModel, x: &[f64]) -> f64 {
    (&rm.y - &rm.h * DVector::from_column_slice(x)).norm_squared()
}

/// Exact LASSO minimizer of `½‖y − Aα‖² + λ′‖α‖₁` by enumerating every sign
/// pattern, solving the smooth problem on its support and keeping the best
/// sign-consistent candidate. Only usable for a handful of variables.
pub fn lasso_by_enumeration(a: &DMatrix<f64>, y: &DVector<f64>, lambda_prime: f64) -> (DVector<f64>, f64) {
    let n = a.ncols();
    let objective = |v: &DVector<f64>| 0.5 * (y - a * v).norm_squared() + lambda_prime * v.lp_norm(1);
    let mut best = DVector::zeros(n);
    let mut best_obj = objective(&best);
    let patterns = 3usize.pow(n as u32);
    for code in 0..patterns {
        let mut signs = vec![0.0; n];
        let mut c = code;
        for s in signs.iter_mut() {
            *s = [0.0, 1.0, -1.0][c % 3];
            c /= 3;
        }
        let support: Vec<usize> = (0..n).filter(|&i| signs[i] != 0.0).collect();
        if support.is_empty() {
            continue;
        }
        let sub = a.select_columns(&support);
        let rhs = sub.tr_mul(y) - DVector::from_iterator(support.len(), support.iter().map(|&i| lambda_prime * signs[i]));
        let Some(sol) = (sub.tr_mul(&sub)).lu().solve(&rhs) else { continue };
        if support.iter().zip(sol.iter()).any(|(&i, v)| v * signs[i] <= 0.0) {
            continue;
        }
        let mut cand = DVector::zeros(n);
        for (&i, v) in support.iter().zip(sol.iter()) {
            cand[i] = *v;
        }
        let obj = objective(&cand);
        if obj < best_obj {
            best_obj = obj;
            best = cand;
        }
    }
    (best, best_obj)
}

/// Exhaustive ML in the complex domain over the QAM grid.
pub fn complex_ml(h: &DMatrix<Complex64>, y: &DVector<Complex64>, c: &Constellation) -> Vec<f64> {
    let nt = h.ncols();
    let points: Vec<Complex64> = c
        .alphabet()
        .iter()
        .flat_map(|&re| c.alphabet().iter().map(move |&im| Complex64::new(re, im)))
        .collect();
    let total = points.len().pow(nt as u32);
    let mut best = (f64::INFINITY, Vec::new());
    for code in 0..total {
        let mut k = code;
        let x = DVector::from_fn(nt, |_, _| {
            let p = points[k % points.len()];
            k /= points.len();
            p
        });
        let d = (y - h * &x).norm_squared();
        if d < best.0 {
            let mut real: Vec<f64> = x.iter().map(|v| v.re).collect();
            real.extend(x.iter().map(|v| v.im));
            best = (d, real);
        }
    }
    best.1
}
