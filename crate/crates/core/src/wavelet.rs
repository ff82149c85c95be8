//! Orthonormal periodic discrete wavelet transform.
//!
//! Coefficients are laid out coarse to fine: positions `0..2^j0` hold the
//! scale (father wavelet) coefficients at level `j0`, and level `j >= j0`
//! detail coefficients occupy positions `2^j..2^(j+1)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::filters;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Filter family, Daubechies filters indexed by their number of vanishing moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaveletFamily {
    Haar,
    /// Daubechies with 2 to 10 vanishing moments (`2 * n` taps).
    Daubechies(u8),
}

impl Default for WaveletFamily {
    fn default() -> Self {
        WaveletFamily::Daubechies(4)
    }
}

impl WaveletFamily {
    /// Every supported family, shortest filter first.
    pub fn all() -> Vec<Self> {
        std::iter::once(WaveletFamily::Haar)
            .chain((2..=10).map(WaveletFamily::Daubechies))
            .collect()
    }

    pub fn vanishing_moments(self) -> usize {
        match self {
            WaveletFamily::Haar => 1,
            WaveletFamily::Daubechies(n) => n as usize,
        }
    }

    fn taps(self) -> Result<&'static [f64]> {
        Ok(match self {
            WaveletFamily::Haar => &filters::HAAR,
            WaveletFamily::Daubechies(2) => &filters::DB2,
            WaveletFamily::Daubechies(3) => &filters::DB3,
            WaveletFamily::Daubechies(4) => &filters::DB4,
            WaveletFamily::Daubechies(5) => &filters::DB5,
            WaveletFamily::Daubechies(6) => &filters::DB6,
            WaveletFamily::Daubechies(7) => &filters::DB7,
            WaveletFamily::Daubechies(8) => &filters::DB8,
            WaveletFamily::Daubechies(9) => &filters::DB9,
            WaveletFamily::Daubechies(10) => &filters::DB10,
            WaveletFamily::Daubechies(n) => {
                return Err(Error::InvalidBasis(format!(
                    "Daubechies filters are available for 2..=10 vanishing moments, got {n}"
                )))
            }
        })
    }
}

impl fmt::Display for WaveletFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WaveletFamily::Haar => write!(f, "haar"),
            WaveletFamily::Daubechies(n) => write!(f, "db{n}"),
        }
    }
}

impl FromStr for WaveletFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "haar" || lower == "db1" {
            return Ok(WaveletFamily::Haar);
        }
        let family = lower
            .strip_prefix("db")
            .and_then(|n| n.parse::<u8>().ok())
            .map(WaveletFamily::Daubechies)
            .ok_or_else(|| Error::InvalidBasis(format!("unknown wavelet family '{s}'")))?;
        family.taps()?;
        Ok(family)
    }
}

/// A filter pair together with the signal length and coarsest retained scale.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBasis<T> {
    family: WaveletFamily,
    lowpass: Vec<T>,
    highpass: Vec<T>,
    j0: usize,
    d: usize,
}

impl<T: Scalar> WaveletBasis<T> {
    /// Builds the transform for signals of length `d` (a power of two) with
    /// `2^j0 < d` scale coefficients.
    pub fn new(family: WaveletFamily, j0: usize, d: usize) -> Result<Self> {
        if d < 2 || !d.is_power_of_two() {
            return Err(Error::InvalidBasis(format!(
                "signal length d = {d} must be a power of two >= 2"
            )));
        }
        if j0 >= usize::BITS as usize || (1usize << j0) >= d {
            return Err(Error::InvalidBasis(format!(
                "coarsest scale j0 = {j0} requires 2^j0 < d = {d}"
            )));
        }
        let lowpass: Vec<T> = family.taps()?.iter().map(|&h| T::c(h)).collect();
        let len = lowpass.len();
        let highpass = (0..len)
            .map(|k| {
                let h = lowpass[len - 1 - k];
                if k % 2 == 0 {
                    h
                } else {
                    -h
                }
            })
            .collect();
        Ok(Self {
            family,
            lowpass,
            highpass,
            j0,
            d,
        })
    }

    pub fn family(&self) -> WaveletFamily {
        self.family
    }

    pub fn lowpass(&self) -> &[T] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[T] {
        &self.highpass
    }

    pub fn j0(&self) -> usize {
        self.j0
    }

    pub fn len(&self) -> usize {
        self.d
    }

    pub fn is_empty(&self) -> bool {
        self.d == 0
    }

    /// Number of scale coefficients, `2^j0`.
    pub fn n_scale(&self) -> usize {
        1 << self.j0
    }

    /// Dyadic level of a coefficient position; scale coefficients report `j0`.
    pub fn level_of(&self, index: usize) -> usize {
        if index < self.n_scale() {
            self.j0
        } else {
            (usize::BITS - 1 - index.leading_zeros()) as usize
        }
    }

    fn check_len(&self, what: &'static str, found: usize) -> Result<()> {
        if found != self.d {
            return Err(Error::Dimension {
                what,
                expected: self.d,
                found,
            });
        }
        Ok(())
    }

    /// `theta = W x`.
    pub fn dwt_forward(&self, x: &[T]) -> Result<CoefficientVector<T>> {
        self.check_len("signal", x.len())?;
        let mut out = vec![T::zero(); self.d];
        let mut approx = x.to_vec();
        let mut next = vec![T::zero(); self.d / 2];
        let mut m = self.d;
        let stop = self.n_scale();
        while m > stop {
            let half = m / 2;
            for k in 0..half {
                let mut s = T::zero();
                let mut t = T::zero();
                for (n, (&h, &g)) in self.lowpass.iter().zip(&self.highpass).enumerate() {
                    let a = approx[(2 * k + n) % m];
                    s += h * a;
                    t += g * a;
                }
                next[k] = s;
                out[half + k] = t;
            }
            approx[..half].copy_from_slice(&next[..half]);
            m = half;
        }
        out[..m].copy_from_slice(&approx[..m]);
        Ok(CoefficientVector {
            values: out,
            j0: self.j0,
        })
    }

    /// `x = Wᵀ theta`.
    pub fn dwt_inverse(&self, theta: &CoefficientVector<T>) -> Result<Vec<T>> {
        if theta.j0 != self.j0 {
            return Err(Error::InvalidBasis(format!(
                "coefficients use j0 = {} but the basis has j0 = {}",
                theta.j0, self.j0
            )));
        }
        self.inverse_slice(&theta.values)
    }

    /// Inverse transform of a raw coefficient slice laid out for this basis.
    pub fn inverse_slice(&self, theta: &[T]) -> Result<Vec<T>> {
        self.check_len("coefficient vector", theta.len())?;
        let mut m = self.n_scale();
        let mut approx = vec![T::zero(); self.d];
        approx[..m].copy_from_slice(&theta[..m]);
        let mut next = vec![T::zero(); self.d];
        while m < self.d {
            let m2 = 2 * m;
            next[..m2].iter_mut().for_each(|v| *v = T::zero());
            for k in 0..m {
                let a = approx[k];
                let det = theta[m + k];
                for (n, (&h, &g)) in self.lowpass.iter().zip(&self.highpass).enumerate() {
                    next[(2 * k + n) % m2] += h * a + g * det;
                }
            }
            approx[..m2].copy_from_slice(&next[..m2]);
            m = m2;
        }
        Ok(approx)
    }

    /// The explicit `d x d` matrix `W`, built column by column from unit vectors.
    pub fn transform_matrix(&self) -> Matrix<T> {
        let mut w = Matrix::zeros(self.d, self.d);
        let mut e = vec![T::zero(); self.d];
        for j in 0..self.d {
            e[j] = T::one();
            let col = self
                .dwt_forward(&e)
                .expect("unit vector has the basis length");
            for (i, &v) in col.values.iter().enumerate() {
                w[(i, j)] = v;
            }
            e[j] = T::zero();
        }
        w
    }

    /// Sampled basis function attached to coefficient position `index`.
    pub fn atom(&self, index: usize) -> Result<Vec<T>> {
        if index >= self.d {
            return Err(Error::Dimension {
                what: "coefficient index",
                expected: self.d,
                found: index,
            });
        }
        let mut e = vec![T::zero(); self.d];
        e[index] = T::one();
        self.inverse_slice(&e)
    }
}

/// Wavelet coefficients of one signal.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector<T> {
    values: Vec<T>,
    j0: usize,
}

impl<T: Scalar> CoefficientVector<T> {
    /// Wraps raw coefficients; the length must be a power of two exceeding `2^j0`.
    pub fn new(values: Vec<T>, j0: usize) -> Result<Self> {
        let d = values.len();
        if d < 2 || !d.is_power_of_two() || (1usize << j0) >= d {
            return Err(Error::InvalidBasis(format!(
                "coefficient vector of length {d} is incompatible with j0 = {j0}"
            )));
        }
        Ok(Self { values, j0 })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    pub fn j0(&self) -> usize {
        self.j0
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scale(&self) -> &[T] {
        &self.values[..1 << self.j0]
    }

    pub fn detail(&self) -> &[T] {
        &self.values[1 << self.j0..]
    }
}
