use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::Constellation;
use crate::{Error, Result};

/// Complex flat-fading model `ỹ = H̃x̃ + ñ` with i.i.d. CN(0, 1) channel
/// gains and CN(0, σ²) noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSystemModel {
    /// Nr × Nt channel matrix.
    pub h: DMatrix<Complex64>,
    /// Complex noise variance σ² per receive antenna.
    pub noise_var: f64,
}

impl ComplexSystemModel {
    pub fn new(h: DMatrix<Complex64>, noise_var: f64) -> Result<Self> {
        if h.nrows() == 0 || h.ncols() == 0 {
            return Err(Error::Dimension("channel needs at least one antenna on each side".into()));
        }
        if noise_var.is_nan() || noise_var < 0.0 {
            return Err(Error::InvalidParameter(format!("noise variance {noise_var}")));
        }
        Ok(Self { h, noise_var })
    }

    pub fn nt(&self) -> usize {
        self.h.ncols()
    }

    pub fn nr(&self) -> usize {
        self.h.nrows()
    }
}

/// Real-valued equivalent `y = Hx + v` of a [`ComplexSystemModel`].
///
/// `H = [Re H̃, -Im H̃; Im H̃, Re H̃]`, `y = [Re ỹ; Im ỹ]`, and `x` stacks the
/// real parts of the transmitted symbols above their imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSystemModel {
    /// 2Nr × 2Nt real channel.
    pub h: DMatrix<f64>,
    /// Received vector of length 2Nr.
    pub y: DVector<f64>,
    /// Complex noise variance σ²; each real component carries σ²/2.
    pub noise_var: f64,
}

impl RealSystemModel {
    pub fn new(h: DMatrix<f64>, y: DVector<f64>, noise_var: f64) -> Result<Self> {
        if h.nrows() != y.len() {
            return Err(Error::Dimension(format!(
                "channel has {} rows but received vector has {} entries",
                h.nrows(),
                y.len()
            )));
        }
        Ok(Self { h, y, noise_var })
    }

    /// Number of real transmitted symbols, 2Nt.
    pub fn n_symbols(&self) -> usize {
        self.h.ncols()
    }

    pub fn noise_var_real(&self) -> f64 {
        self.noise_var / 2.0
    }
}

/// Complex noise variance that gives the requested average received SNR per
/// receive antenna, using `SNR = Nt·Es/σ²`.
pub fn noise_variance(snr_db: f64, nt: usize, c: &Constellation) -> f64 {
    nt as f64 * c.symbol_energy() / 10f64.powf(snr_db / 10.0)
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let scale = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

pub fn draw_channel<R: Rng + ?Sized>(
    nt: usize,
    nr: usize,
    noise_var: f64,
    rng: &mut R,
) -> Result<ComplexSystemModel> {
    // column-major fill keeps the draw order stable across nalgebra versions
    let mut entries = Vec::with_capacity(nt * nr);
    for _ in 0..nt * nr {
        entries.push(complex_normal(rng, 1.0));
    }
    ComplexSystemModel::new(DMatrix::from_vec(nr, nt, entries), noise_var)
}

/// Transmits `x` over the channel: `ỹ = H̃x̃ + ñ`.
pub fn realize<R: Rng + ?Sized>(
    model: &ComplexSystemModel,
    x: &DVector<Complex64>,
    rng: &mut R,
) -> Result<DVector<Complex64>> {
    if x.len() != model.nt() {
        return Err(Error::Dimension(format!(
            "transmit vector has {} entries for {} antennas",
            x.len(),
            model.nt()
        )));
    }
    let mut y = &model.h * x;
    if model.noise_var > 0.0 {
        for yi in y.iter_mut() {
            *yi += complex_normal(rng, model.noise_var);
        }
    }
    Ok(y)
}

pub fn to_real(model: &ComplexSystemModel, y: &DVector<Complex64>) -> Result<RealSystemModel> {
    let (nr, nt) = model.h.shape();
    if y.len() != nr {
        return Err(Error::Dimension(format!(
            "received vector has {} entries for {nr} antennas",
            y.len()
        )));
    }
    let h = DMatrix::from_fn(2 * nr, 2 * nt, |i, j| {
        let g = model.h[(i % nr, j % nt)];
        match (i < nr, j < nt) {
            (true, true) | (false, false) => g.re,
            (true, false) => -g.im,
            (false, true) => g.im,
        }
    });
    let y = DVector::from_fn(2 * nr, |i, _| if i < nr { y[i].re } else { y[i - nr].im });
    RealSystemModel::new(h, y, model.noise_var)
}

/// Stacks a complex vector as `[Re; Im]`.
pub fn stack(v: &DVector<Complex64>) -> DVector<f64> {
    let n = v.len();
    DVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

/// Inverse of [`stack`].
pub fn unstack(x: &[f64]) -> DVector<Complex64> {
    let n = x.len() / 2;
    DVector::from_fn(n, |i, _| Complex64::new(x[i], x[n + i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_constellation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn real_channel(h: DMatrix<Complex64>) -> DMatrix<f64> {
        let model = ComplexSystemModel::new(h, 0.0).unwrap();
        let y = DVector::zeros(model.nr());
        to_real(&model, &y).unwrap().h
    }

    #[test]
    fn scalar_channels() {
        let h = real_channel(DMatrix::from_element(1, 1, Complex64::i()));
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let h = real_channel(DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)));
        assert_eq!(h, DMatrix::identity(2, 2));
    }

    #[test]
    fn block_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = draw_channel(3, 5, 0.0, &mut rng).unwrap();
        let h = real_channel(model.h.clone());
        assert_eq!(h.shape(), (10, 6));
        for i in 0..5 {
            for j in 0..3 {
                let g = model.h[(i, j)];
                assert_eq!(h[(i, j)], g.re);
                assert_eq!(h[(i, j + 3)], -g.im);
                assert_eq!(h[(i + 5, j)], g.im);
                assert_eq!(h[(i + 5, j + 3)], g.re);
            }
        }
    }

    #[test]
    fn real_product_matches_complex_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let nt = rng.random_range(1..5);
            let nr = rng.random_range(1..5);
            let model = draw_channel(nt, nr, 0.0, &mut rng).unwrap();
            let x = DVector::from_fn(nt, |_, _| complex_normal(&mut rng, 1.0));
            let y = realize(&model, &x, &mut rng).unwrap();
            let rm = to_real(&model, &y).unwrap();
            assert!((stack(&y) - &rm.y).norm() == 0.0);
            assert!((stack(&y) - &rm.h * stack(&x)).norm() < 1e-12);
        }
    }

    #[test]
    fn noiseless_realization_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = draw_channel(4, 4, 0.0, &mut rng).unwrap();
        let x = unstack(&[1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0, -1.0]);
        let y = realize(&model, &x, &mut rng).unwrap();
        assert_eq!(y, &model.h * &x);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let a = draw_channel(4, 6, 1.0, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        let b = draw_channel(4, 6, 1.0, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn channel_entries_have_unit_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut acc = 0.0;
        let draws = 100_000;
        for _ in 0..draws / 4 {
            let m = draw_channel(2, 2, 0.0, &mut rng).unwrap();
            acc += m.h.iter().map(|g| g.norm_sqr()).sum::<f64>();
        }
        let mean = acc / draws as f64;
        assert!((0.99..=1.01).contains(&mean), "mean |h|^2 = {mean}");
    }

    #[test]
    fn noise_matches_requested_snr() {
        let c = make_constellation(4).unwrap();
        let nt = 4;
        let snr_db = 10.0;
        let var = noise_variance(snr_db, nt, &c);
        assert!((var - 0.8).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let model = ComplexSystemModel::new(DMatrix::zeros(1, nt), var).unwrap();
        let x = DVector::zeros(nt);
        let samples = 100_000;
        let power: f64 = (0..samples)
            .map(|_| realize(&model, &x, &mut rng).unwrap()[0].norm_sqr())
            .sum::<f64>()
            / samples as f64;
        let measured = nt as f64 * c.symbol_energy() / power;
        let target = 10f64.powf(snr_db / 10.0);
        assert!((measured / target - 1.0).abs() < 0.02, "snr {measured} vs {target}");
    }

    #[test]
    fn dimension_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = draw_channel(2, 3, 0.0, &mut rng).unwrap();
        assert!(realize(&model, &DVector::zeros(3), &mut rng).is_err());
        assert!(to_real(&model, &DVector::zeros(2)).is_err());
        assert!(ComplexSystemModel::new(DMatrix::zeros(0, 2), 0.0).is_err());
    }
}
