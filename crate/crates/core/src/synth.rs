//! Synthetic two-class curves whose class signal sits on a few wavelet detail
//! coefficients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::CurveDataset;
use crate::scalar::Scalar;
use crate::wavelet::{WaveletBasis, WaveletFamily};

/// Generator parameters. Support indices are 0-based positions in the
/// coefficient layout and must fall in the detail block `[2^j0, d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_per_class: usize,
    pub d: usize,
    pub family: WaveletFamily,
    pub j0: usize,
    pub true_support: Vec<usize>,
    /// Class-1 mean shift on each support coordinate.
    pub effect_sizes: Vec<f64>,
    /// Standard deviation of white noise added to the sampled curves.
    pub noise_sd: f64,
    /// Nuisance coefficient variance is `background_decay^s`, with `s = 0` on
    /// the scale block and `s = j - j0 + 1` on detail level `j`.
    pub background_decay: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    /// 100 curves per class on 256 points, signal on five localized db4
    /// detail coefficients at levels 4 to 6.
    fn default() -> Self {
        Self {
            n_per_class: 100,
            d: 256,
            family: WaveletFamily::default(),
            j0: 3,
            true_support: vec![20, 40, 41, 81, 82],
            effect_sizes: vec![0.7; 5],
            noise_sd: 0.5,
            background_decay: 0.6,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn basis(&self) -> Result<WaveletBasis<f64>> {
        WaveletBasis::new(self.family, self.j0, self.d)
    }

    pub fn validate(&self) -> Result<WaveletBasis<f64>> {
        let basis = self.basis()?;
        if self.n_per_class == 0 {
            return Err(Error::InvalidParameter("n_per_class must be >= 1".into()));
        }
        if self.true_support.len() != self.effect_sizes.len() {
            return Err(Error::Dimension {
                what: "effect sizes",
                expected: self.true_support.len(),
                found: self.effect_sizes.len(),
            });
        }
        let lo = basis.n_scale();
        for (k, &i) in self.true_support.iter().enumerate() {
            if i < lo || i >= self.d {
                return Err(Error::InvalidParameter(format!(
                    "support index {i} is outside the detail block [{lo}, {})",
                    self.d
                )));
            }
            if self.true_support[..k].contains(&i) {
                return Err(Error::InvalidParameter(format!(
                    "support index {i} repeated"
                )));
            }
        }
        if self.effect_sizes.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter(
                "effect sizes must be finite".into(),
            ));
        }
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "noise_sd must be finite and >= 0, got {}",
                self.noise_sd
            )));
        }
        if !(self.background_decay > 0.0 && self.background_decay < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "background_decay must lie in (0, 1), got {}",
                self.background_decay
            )));
        }
        Ok(basis)
    }

    /// Planted class-1 coefficient shift, zero off the support.
    pub fn planted_coefficients(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.d];
        for (&i, &e) in self.true_support.iter().zip(&self.effect_sizes) {
            c[i] = e;
        }
        c
    }
}

/// `n_per_class` class-0 curves followed by `n_per_class` class-1 curves.
pub fn generate_dataset(spec: &SynthSpec) -> Result<CurveDataset<f64>> {
    let basis = spec.validate()?;
    let d = spec.d;
    let shift = spec.planted_coefficients();
    let sd: Vec<f64> = (0..d)
        .map(|i| {
            let s = if i < basis.n_scale() {
                0
            } else {
                basis.level_of(i) - spec.j0 + 1
            };
            spec.background_decay.powi(s as i32).sqrt()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = 2 * spec.n_per_class;
    let mut curves = Matrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    let mut coef = vec![0.0; d];
    for i in 0..n {
        let y = u8::from(i >= spec.n_per_class);
        for j in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            coef[j] = sd[j] * z + if y == 1 { shift[j] } else { 0.0 };
        }
        let x = basis.inverse_slice(&coef)?;
        for (out, v) in curves.row_mut(i).iter_mut().zip(x) {
            let e: f64 = rng.sample(StandardNormal);
            *out = v + spec.noise_sd * e;
        }
        labels.push(y);
    }
    CurveDataset::new(curves, labels)
}

/// Sampled function whose wavelet coefficients are the planted shift.
pub fn generate_beta(spec: &SynthSpec) -> Result<Vec<f64>> {
    let basis = spec.validate()?;
    basis.inverse_slice(&spec.planted_coefficients())
}

/// Sample positions where at least one planted atom is nonzero.
pub fn planted_time_support(spec: &SynthSpec) -> Result<Vec<bool>> {
    let basis = spec.validate()?;
    let mut mask = vec![false; spec.d];
    for &i in &spec.true_support {
        for (m, v) in mask.iter_mut().zip(basis.atom(i)?) {
            *m |= v != 0.0;
        }
    }
    Ok(mask)
}

/// Fraction of `Σ v²` carried by the positions flagged in `mask`.
pub fn mass_fraction<T: Scalar>(v: &[T], mask: &[bool]) -> T {
    let total: T = v.iter().map(|&x| x * x).sum();
    if total == T::zero() {
        return T::zero();
    }
    let inside: T = v
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&x, _)| x * x)
        .sum();
    inside / total
}

/// Splits each class so its first `train_per_class` members form the training set.
pub fn split_per_class<T: Scalar>(
    data: &CurveDataset<T>,
    train_per_class: usize,
) -> Result<(CurveDataset<T>, CurveDataset<T>)> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut seen = [0usize; 2];
    for (i, &y) in data.labels().iter().enumerate() {
        let slot = &mut seen[usize::from(y)];
        if *slot < train_per_class {
            train.push(i);
        } else {
            test.push(i);
        }
        *slot += 1;
    }
    if seen.iter().any(|&c| c <= train_per_class) {
        return Err(Error::InvalidParameter(format!(
            "every class needs more than {train_per_class} members to split, found {seen:?}"
        )));
    }
    Ok((data.subset(&train), data.subset(&test)))
}
