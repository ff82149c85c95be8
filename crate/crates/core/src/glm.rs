//! Logistic functional linear model on wavelet coefficients.
//!
//! By orthonormality of the transform, `θᵢᵀω` equals the discretised inner
//! product of the curve with the discriminant function sampled on the same grid.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, solve_spd, Matrix};
use crate::scalar::Scalar;

/// Wavelet coefficients of `n` curves with their binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCoefficients<T> {
    theta: Matrix<T>,
    labels: Vec<u8>,
    j0: usize,
}

impl<T: Scalar> LabeledCoefficients<T> {
    pub fn new(theta: Matrix<T>, labels: Vec<u8>, j0: usize) -> Result<Self> {
        let (n, d) = (theta.nrows(), theta.ncols());
        if labels.len() != n {
            return Err(Error::Dimension {
                what: "labels",
                expected: n,
                found: labels.len(),
            });
        }
        if n < 2 || d < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 observations and 2 coefficients, got n = {n}, d = {d}"
            )));
        }
        if (1usize << j0.min(63)) >= d {
            return Err(Error::InvalidParameter(format!(
                "2^j0 must be smaller than d = {d} (j0 = {j0})"
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::InvalidParameter(format!(
                "labels must be 0 or 1, found {bad}"
            )));
        }
        if theta.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        Ok(Self { theta, labels, j0 })
    }

    pub fn theta(&self) -> &Matrix<T> {
        &self.theta
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn j0(&self) -> usize {
        self.j0
    }

    pub fn n(&self) -> usize {
        self.theta.nrows()
    }

    pub fn d(&self) -> usize {
        self.theta.ncols()
    }

    /// Count of unpenalised scale coefficients, `2^j0`.
    pub fn n_scale(&self) -> usize {
        1 << self.j0
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.labels.iter().filter(|&&y| y == 1).count();
        (self.labels.len() - ones, ones)
    }

    /// Errors unless both classes are present.
    pub fn require_both_classes(&self) -> Result<()> {
        match self.class_counts() {
            (0, _) | (_, 0) => Err(Error::SingleClass),
            _ => Ok(()),
        }
    }

    /// Observations at `idx`, in order. Fails if fewer than two remain.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        Self::new(
            self.theta.select_rows(idx),
            idx.iter().map(|&i| self.labels[i]).collect(),
            self.j0,
        )
    }
}

/// Coefficient vector `ω` (wavelet-domain β) and an unpenalised intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModelState<T> {
    pub omega: Vec<T>,
    pub intercept: T,
}

impl<T: Scalar> LinearModelState<T> {
    pub fn zeros(d: usize) -> Self {
        Self {
            omega: vec![T::zero(); d],
            intercept: T::zero(),
        }
    }

    fn check(&self, d: usize) -> Result<()> {
        if self.omega.len() != d {
            return Err(Error::Dimension {
                what: "coefficient vector omega",
                expected: d,
                found: self.omega.len(),
            });
        }
        Ok(())
    }
}

/// `intercept + θᵀω`.
pub fn linear_predictor<T: Scalar>(state: &LinearModelState<T>, theta_row: &[T]) -> Result<T> {
    state.check(theta_row.len())?;
    Ok(state.intercept + dot(&state.omega, theta_row))
}

/// Logistic link `1 / (1 + e^-η)`, evaluated without overflow and kept strictly inside (0, 1).
pub fn link_logistic<T: Scalar>(eta: T) -> T {
    let p = if eta >= T::zero() {
        T::one() / (T::one() + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (T::one() + e)
    };
    p.max(T::min_positive_value())
        .min(T::one() - T::epsilon() / T::c(2.0))
}

/// `log(1 + e^η)` without overflow.
#[inline]
pub(crate) fn softplus<T: Scalar>(eta: T) -> T {
    eta.max(T::zero()) + (-eta.abs()).exp().ln_1p()
}

/// Per-observation negative log-likelihood `log(1 + e^η) - yη`.
#[inline]
pub(crate) fn nll_term<T: Scalar>(eta: T, y: u8) -> T {
    if y == 1 {
        softplus(-eta)
    } else {
        softplus(eta)
    }
}

/// Linear predictors `Xβ + b` for every row.
pub(crate) fn predictors<T: Scalar>(x: &Matrix<T>, beta: &[T], b: T) -> Vec<T> {
    x.rows_iter().map(|r| b + dot(r, beta)).collect()
}

pub(crate) fn nll_from_eta<T: Scalar>(eta: &[T], y: &[u8]) -> T {
    eta.iter()
        .zip(y)
        .fold(T::zero(), |acc, (&e, &yi)| acc + nll_term(e, yi))
}

/// Gradient `(Xᵀ(p - y), Σ(p - y))` for given predictors.
pub(crate) fn gradient_from_eta<T: Scalar>(x: &Matrix<T>, eta: &[T], y: &[u8]) -> (Vec<T>, T) {
    let resid: Vec<T> = eta
        .iter()
        .zip(y)
        .map(|(&e, &yi)| link_logistic(e) - T::from_u8(yi).unwrap())
        .collect();
    let g0 = resid.iter().copied().sum();
    (x.tr_mul_vec(&resid), g0)
}

/// `-Σ [yᵢ log pᵢ + (1 - yᵢ) log(1 - pᵢ)]`, computed in log-sum-exp form so it is
/// finite for every finite input.
pub fn neg_log_likelihood<T: Scalar>(
    state: &LinearModelState<T>,
    data: &LabeledCoefficients<T>,
) -> Result<T> {
    state.check(data.d())?;
    let eta = predictors(&data.theta, &state.omega, state.intercept);
    Ok(nll_from_eta(&eta, &data.labels))
}

/// Gradient of [`neg_log_likelihood`]: `(Σ (pᵢ - yᵢ) θᵢ, Σ (pᵢ - yᵢ))`.
pub fn nll_gradient<T: Scalar>(
    state: &LinearModelState<T>,
    data: &LabeledCoefficients<T>,
) -> Result<(Vec<T>, T)> {
    state.check(data.d())?;
    let eta = predictors(&data.theta, &state.omega, state.intercept);
    Ok(gradient_from_eta(&data.theta, &eta, &data.labels))
}

/// Result of a Newton/IRLS fit on an explicit design.
#[derive(Debug, Clone, PartialEq)]
pub struct IrlsFit<T> {
    pub coef: Vec<T>,
    pub intercept: T,
    pub iterations: usize,
    pub gradient_norm: T,
    /// Negative log-likelihood after each accepted step, starting point included.
    pub objective_trace: Vec<T>,
}

/// Options for [`irls_design`].
#[derive(Debug, Clone, Copy)]
pub struct IrlsOptions<T> {
    pub max_iter: usize,
    /// Stop once the sup-norm of the gradient is at most this.
    pub tol: T,
    /// Report separation once any coefficient exceeds this magnitude.
    pub separation_bound: Option<T>,
}

/// Unpenalised logistic MLE with intercept on the design `x` (`n x p`, `p` may be 0).
///
/// Newton steps on the weighted normal equations with Armijo backtracking.
pub fn irls_design<T: Scalar>(
    x: &Matrix<T>,
    labels: &[u8],
    opts: IrlsOptions<T>,
    init: Option<(&[T], T)>,
) -> Result<IrlsFit<T>> {
    let (n, p) = (x.nrows(), x.ncols());
    if labels.len() != n {
        return Err(Error::Dimension {
            what: "labels",
            expected: n,
            found: labels.len(),
        });
    }
    let ones = labels.iter().filter(|&&y| y == 1).count();
    if ones == 0 || ones == n {
        return Err(Error::SingleClass);
    }
    let (mut beta, mut b) = match init {
        Some((c, b0)) => {
            if c.len() != p {
                return Err(Error::Dimension {
                    what: "initial coefficients",
                    expected: p,
                    found: c.len(),
                });
            }
            (c.to_vec(), b0)
        }
        None => {
            let ybar = T::from_usize_lossy(ones) / T::from_usize_lossy(n);
            (vec![T::zero(); p], (ybar / (T::one() - ybar)).ln())
        }
    };

    let mut eta = predictors(x, &beta, b);
    let mut f = nll_from_eta(&eta, labels);
    let mut trace = vec![f];
    let mut grad_norm = T::infinity();
    for it in 0..opts.max_iter {
        let probs: Vec<T> = eta.iter().map(|&e| link_logistic(e)).collect();
        let resid: Vec<T> = probs
            .iter()
            .zip(labels)
            .map(|(&pi, &yi)| pi - T::from_u8(yi).unwrap())
            .collect();
        let mut grad = x.tr_mul_vec(&resid);
        grad.push(resid.iter().copied().sum());
        grad_norm = norm_inf(&grad);
        if grad_norm <= opts.tol {
            return Ok(IrlsFit {
                coef: beta,
                intercept: b,
                iterations: it,
                gradient_norm: grad_norm,
                objective_trace: trace,
            });
        }

        // Hessian of the augmented design [X 1] with weights p(1-p).
        let dim = p + 1;
        let mut h = Matrix::zeros(dim, dim);
        for (r, &pi) in x.rows_iter().zip(&probs) {
            let w = pi * (T::one() - pi);
            for a in 0..p {
                let wa = w * r[a];
                for c in a..p {
                    h[(a, c)] += wa * r[c];
                }
                h[(a, p)] += wa;
            }
            h[(p, p)] += w;
        }
        for a in 0..dim {
            for c in 0..a {
                h[(a, c)] = h[(c, a)];
            }
        }
        let delta = solve_spd(&h, &grad, "weighted normal equations")?;
        let decrease = dot(&grad, &delta);

        let mut step = T::one();
        let slack = T::c(4.0) * T::epsilon() * f.abs();
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<T> = beta
                .iter()
                .zip(&delta)
                .map(|(&c, &dc)| c - step * dc)
                .collect();
            let tb = b - step * delta[p];
            let teta = predictors(x, &trial, tb);
            let tf = nll_from_eta(&teta, labels);
            if tf <= f - T::c(1e-4) * step * decrease + slack {
                beta = trial;
                b = tb;
                eta = teta;
                f = tf;
                trace.push(f);
                accepted = true;
                break;
            }
            step *= T::c(0.5);
        }
        if !accepted {
            break;
        }
        if let Some(bound) = opts.separation_bound {
            let m = norm_inf(&beta);
            if m > bound {
                return Err(Error::Separation {
                    max_abs: m.as_f64(),
                });
            }
        }
    }
    Err(Error::NonConvergence {
        solver: "irls",
        iterations: opts.max_iter,
        residual: grad_norm.as_f64(),
        last_omega: beta.iter().map(|v| v.as_f64()).collect(),
        last_intercept: b.as_f64(),
    })
}

/// Unpenalised maximum-likelihood fit of `(ω, intercept)`; the λ = 0 reference.
pub fn irls_fit<T: Scalar>(
    data: &LabeledCoefficients<T>,
    max_iter: usize,
    tol: T,
) -> Result<LinearModelState<T>> {
    let fit = irls_design(
        &data.theta,
        &data.labels,
        IrlsOptions {
            max_iter,
            tol,
            separation_bound: None,
        },
        None,
    )?;
    Ok(LinearModelState {
        omega: fit.coef,
        intercept: fit.intercept,
    })
}
